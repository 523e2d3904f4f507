#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "wfuse/fock.hpp"
#include "wfuse/protocol.hpp"
#include "wfuse/witness.hpp"

namespace wfuse {

using Json = nlohmann::json;

/// Full-precision decimal rendering; round-trips the double exactly.
inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// State serialization: mode count plus [occupation string, re, im] triples.
// ---------------------------------------------------------------------------

inline Json to_json(const PureState& s) {
  Json amps = Json::array();
  for (const auto& [k, a] : s.amplitudes())
    amps.push_back({k.to_string(), a.real(), a.imag()});
  return {{"mode_count", s.mode_count()}, {"amplitudes", amps}};
}

inline Json to_json(const MixedState& s) {
  Json branches = Json::array();
  for (const auto& b : s.branches())
    branches.push_back({{"weight", b.weight}, {"state", to_json(b.state)}});
  return {{"mode_count", s.mode_count()}, {"branches", branches}};
}

// ---------------------------------------------------------------------------
// StateSummary
// ---------------------------------------------------------------------------

inline Json to_json(const StateSummary& s) {
  Json j{{"p0", s.p0}, {"p1", s.p1}, {"p2", s.p2}, {"F", s.fidelity}};
  if (s.errors)
    j["err"] = {{"p0", s.errors->p0},
                {"p1", s.errors->p1},
                {"p2", s.errors->p2},
                {"F", s.errors->fidelity}};
  return j;
}

inline double require_number(const Json& j, const std::string& field) {
  if (!j.contains(field))
    throw std::invalid_argument("missing field \"" + field + "\"");
  if (!j.at(field).is_number())
    throw std::invalid_argument("field \"" + field + "\" must be a number");
  return j.at(field).get<double>();
}

inline StateSummary summary_from_json(const Json& j) {
  StateSummary s;
  s.p0 = require_number(j, "p0");
  s.p1 = require_number(j, "p1");
  s.p2 = require_number(j, "p2");
  s.fidelity = require_number(j, "F");
  if (j.contains("err")) {
    const Json& e = j.at("err");
    s.errors = SummaryErrors{require_number(e, "p0"), require_number(e, "p1"),
                             require_number(e, "p2"), require_number(e, "F")};
  }
  return s;
}

// ---------------------------------------------------------------------------
// ProtocolConfig: JSON keys mirror the struct fields one to one.
// ---------------------------------------------------------------------------

inline PortModel port_model_from_string(const std::string& s) {
  if (s == "one" || s == "one_port") return PortModel::one_port;
  if (s == "two" || s == "two_ports") return PortModel::two_ports;
  throw std::invalid_argument("field \"ports\" must be \"one\" or \"two\"");
}

inline ClickModel click_model_from_string(const std::string& s) {
  if (s == "linearized") return ClickModel::linearized;
  if (s == "exact") return ClickModel::exact;
  throw std::invalid_argument("field \"click\" must be \"linearized\" or \"exact\"");
}

inline Json to_json(const ProtocolConfig& c) {
  return {{"p", c.p},
          {"eta", c.eta},
          {"tau_us", c.tau_us},
          {"t_attempt_ns", c.t_attempt_ns},
          {"attempt_cap", c.attempt_cap},
          {"n_module", c.n_module},
          {"ports", c.ports == PortModel::two_ports ? "two" : "one"},
          {"click", c.click == ClickModel::exact ? "exact" : "linearized"},
          {"duty_overhead_ns", c.duty_overhead_ns},
          {"decay_shape",
           c.decay_shape == DecayShape::gaussian ? "gaussian" : "exponential"},
          {"decay_channel",
           c.decay_channel == DecayChannel::loss ? "loss" : "dephasing"},
          {"overrun", c.overrun == OverrunPolicy::restart ? "restart" : "hold"}};
}

inline ProtocolConfig protocol_config_from_json(const Json& j) {
  ProtocolConfig c;
  if (j.contains("p")) c.p = require_number(j, "p");
  if (j.contains("eta")) c.eta = require_number(j, "eta");
  if (j.contains("tau_us")) c.tau_us = require_number(j, "tau_us");
  if (j.contains("t_attempt_ns")) c.t_attempt_ns = require_number(j, "t_attempt_ns");
  if (j.contains("attempt_cap"))
    c.attempt_cap = static_cast<int>(require_number(j, "attempt_cap"));
  if (j.contains("n_module"))
    c.n_module = static_cast<int>(require_number(j, "n_module"));
  if (j.contains("duty_overhead_ns"))
    c.duty_overhead_ns = require_number(j, "duty_overhead_ns");
  if (j.contains("ports"))
    c.ports = port_model_from_string(j.at("ports").get<std::string>());
  if (j.contains("click"))
    c.click = click_model_from_string(j.at("click").get<std::string>());
  if (j.contains("decay_shape")) {
    std::string s = j.at("decay_shape").get<std::string>();
    if (s == "exponential")
      c.decay_shape = DecayShape::exponential;
    else if (s == "gaussian")
      c.decay_shape = DecayShape::gaussian;
    else
      throw std::invalid_argument(
          "field \"decay_shape\" must be \"exponential\" or \"gaussian\"");
  }
  if (j.contains("decay_channel")) {
    std::string s = j.at("decay_channel").get<std::string>();
    if (s == "dephasing")
      c.decay_channel = DecayChannel::dephasing;
    else if (s == "loss")
      c.decay_channel = DecayChannel::loss;
    else
      throw std::invalid_argument(
          "field \"decay_channel\" must be \"dephasing\" or \"loss\"");
  }
  if (j.contains("overrun")) {
    std::string s = j.at("overrun").get<std::string>();
    if (s == "hold")
      c.overrun = OverrunPolicy::hold;
    else if (s == "restart")
      c.overrun = OverrunPolicy::restart;
    else
      throw std::invalid_argument("field \"overrun\" must be \"hold\" or \"restart\"");
  }
  return c;
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace wfuse
