#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "wfuse/fusion.hpp"
#include "wfuse/rng.hpp"
#include "wfuse/witness.hpp"

namespace wfuse {

enum class DecayShape { exponential, gaussian };

/// How stored-memory decoherence acts on the waiting W state.
/// dephasing randomizes the inter-cell phases (populations and therefore
/// click rates are preserved); loss removes the excitation outright.
enum class DecayChannel { dephasing, loss };

/// What happens when stage 2 exhausts its attempt cap: hold keeps the first
/// W state and opens another window; restart discards it and re-prepares.
enum class OverrunPolicy { hold, restart };

struct ProtocolConfig {
  double p = 0.0015;            // herald probability per attempt, one module
  double eta = 0.3;             // end-to-end retrieval + detection efficiency
  double tau_us = 428.0;        // memory 1/e coherence time
  double t_attempt_ns = 650.0;  // duration of one excitation attempt
  int attempt_cap = 300;        // max attempts per stage-2 window
  int n_module = 3;             // W-state size per module
  PortModel ports = PortModel::one_port;
  ClickModel click = ClickModel::linearized;
  double duty_overhead_ns = 0.0;  // fixed time per cycle (cleaning, AOD moves)
  DecayShape decay_shape = DecayShape::exponential;
  DecayChannel decay_channel = DecayChannel::dephasing;
  OverrunPolicy overrun = OverrunPolicy::hold;

  void validate() const {
    if (p <= 0.0 || p > 1.0)
      throw std::invalid_argument("herald probability must lie in (0, 1]");
    if (eta <= 0.0 || eta > 1.0)
      throw std::invalid_argument("efficiency must lie in (0, 1]");
    if (tau_us <= 0.0) throw std::invalid_argument("coherence time must be positive");
    if (t_attempt_ns <= 0.0)
      throw std::invalid_argument("attempt duration must be positive");
    if (attempt_cap < 1) throw std::invalid_argument("attempt cap must be >= 1");
    if (n_module < 2) throw std::invalid_argument("module W size must be >= 2");
    if (duty_overhead_ns < 0.0)
      throw std::invalid_argument("overhead must be non-negative");
  }

  DetectionModel detection() const { return {eta, ports, click, 1.0, false}; }

  double decay_factor(double wait_ns) const {
    double x = wait_ns * 1e-3 / tau_us;
    return decay_shape == DecayShape::exponential ? std::exp(-x) : std::exp(-x * x);
  }
};

struct RateEstimate {
  double coincidences_per_hour = 0.0;
  double rate_stderr = 0.0;
  double mean_cycle_time_s = 0.0;
  double herald2_success_fraction = 0.0;
  double effective_fidelity = 0.0;
  double fidelity_stderr = 0.0;
};

namespace detail {

struct FusionDraw {
  bool click = false;      // click on a monitored port
  bool readout = false;    // verification photon detected
  double post_fidelity = 0.0;  // vs the port-matched fused W target
};

/// Fusion + verification readout for one cycle. `coherent` selects the
/// interference picture for module A's photon, `present` whether module A
/// still holds its excitation (loss channel).
inline FusionDraw draw_fusion(const ProtocolConfig& cfg, bool present,
                              bool coherent, Rng& rng) {
  double n = cfg.n_module;
  bool two = cfg.ports == PortModel::two_ports;
  FusionDraw out;
  if (present && coherent) {
    // exact branch probabilities of expand_fusion
    double u = rng.uniform();
    double p_sep = (n - 1.0) * (n - 1.0) / (n * n);
    double p_pair = 1.0 / (n * n);
    if (u < p_sep) return out;
    if (u < p_sep + p_pair) {
      // photon pair, vacuum post state
      for (int i = 0; i < 2; ++i) {
        bool port1 = rng.bernoulli(0.5);
        if ((port1 || two) && rng.bernoulli(cfg.eta)) out.click = true;
      }
      return out;
    }
    bool plus = rng.bernoulli(0.5);  // fused sign == exit port
    if ((plus || two) && rng.bernoulli(cfg.eta)) {
      out.click = true;
      out.post_fidelity = 1.0;
      out.readout = rng.bernoulli(cfg.eta);
    }
    return out;
  }

  // module A dephased (localized excitation) or lost
  bool a_exc = present && rng.bernoulli(1.0 / n);
  bool b_exc = rng.bernoulli(1.0 / n);
  if (!a_exc && !b_exc) return out;
  if (a_exc && b_exc) {
    for (int i = 0; i < 2; ++i) {
      bool port1 = rng.bernoulli(0.5);
      if ((port1 || two) && rng.bernoulli(cfg.eta)) out.click = true;
    }
    return out;
  }
  // one photon, no phase reference: 50:50 port routing
  bool port1 = rng.bernoulli(0.5);
  if ((port1 || two) && rng.bernoulli(cfg.eta)) {
    out.click = true;
    if (a_exc) {
      // A's excitation was consumed; B keeps a coherent W_{N-1}
      out.post_fidelity = 0.5;
      out.readout = rng.bernoulli(cfg.eta);
    } else {
      // B's photon consumed; A keeps a localized excitation
      out.post_fidelity = 0.5 / (n - 1.0);
      out.readout = rng.bernoulli(cfg.eta);
    }
  }
  return out;
}

struct Accumulator {
  double time_ns = 0.0;
  std::uint64_t coincidences = 0;
  std::uint64_t heralds = 0;
  std::uint64_t windows = 0;
  double fidelity_sum = 0.0;
};

inline RateEstimate reduce(const std::vector<Accumulator>& batches,
                           std::uint64_t n_cycles) {
  Accumulator total;
  for (const auto& b : batches) {
    total.time_ns += b.time_ns;
    total.coincidences += b.coincidences;
    total.heralds += b.heralds;
    total.windows += b.windows;
    total.fidelity_sum += b.fidelity_sum;
  }
  RateEstimate est;
  est.coincidences_per_hour =
      3600.0 * static_cast<double>(total.coincidences) / (total.time_ns * 1e-9);
  est.mean_cycle_time_s = total.time_ns * 1e-9 / static_cast<double>(n_cycles);
  est.herald2_success_fraction =
      static_cast<double>(n_cycles) / static_cast<double>(total.windows);
  est.effective_fidelity =
      total.heralds == 0 ? 0.0
                         : total.fidelity_sum / static_cast<double>(total.heralds);

  double mean_rate = 0.0, mean_f = 0.0;
  std::size_t nb = batches.size(), nf = 0;
  std::vector<double> rates(nb), fids;
  for (std::size_t i = 0; i < nb; ++i) {
    rates[i] = 3600.0 * static_cast<double>(batches[i].coincidences) /
               (batches[i].time_ns * 1e-9);
    mean_rate += rates[i];
    if (batches[i].heralds > 0) {
      fids.push_back(batches[i].fidelity_sum /
                     static_cast<double>(batches[i].heralds));
      mean_f += fids.back();
      ++nf;
    }
  }
  mean_rate /= static_cast<double>(nb);
  double var = 0.0;
  for (double r : rates) var += (r - mean_rate) * (r - mean_rate);
  est.rate_stderr = nb > 1 ? std::sqrt(var / (static_cast<double>(nb) *
                                              static_cast<double>(nb - 1)))
                           : 0.0;
  if (nf > 1) {
    mean_f /= static_cast<double>(nf);
    double varf = 0.0;
    for (double f : fids) varf += (f - mean_f) * (f - mean_f);
    est.fidelity_stderr = std::sqrt(
        varf / (static_cast<double>(nf) * static_cast<double>(nf - 1)));
  }
  return est;
}

}  // namespace detail

/// Monte-Carlo rate of the memory-enhanced protocol: stage 1 heralds the
/// first W state, stage 2 attempts the second in capped windows while the
/// first decoheres, then fusion and verification readout. One trial is one
/// completed cycle; per-trial streams follow substream_seed(seed, trial).
inline RateEstimate simulate_memory_enhanced(const ProtocolConfig& cfg,
                                             std::uint64_t n_trials,
                                             std::uint64_t rng_seed) {
  cfg.validate();
  if (n_trials == 0) throw std::invalid_argument("need at least one trial");
  double t_att = cfg.t_attempt_ns;
  std::size_t n_batches = n_trials < 100 ? 1 : 100;
  std::vector<detail::Accumulator> batches(n_batches);

  for (std::uint64_t trial = 0; trial < n_trials; ++trial) {
    Rng rng(substream_seed(rng_seed, trial));
    detail::Accumulator& acc = batches[trial % n_batches];

    double wait_ns = 0.0;
    if (cfg.overrun == OverrunPolicy::hold) {
      std::uint64_t k1 = rng.geometric(cfg.p);
      std::uint64_t k2 = rng.geometric(cfg.p);
      std::uint64_t cap = static_cast<std::uint64_t>(cfg.attempt_cap);
      acc.windows += (k2 + cap - 1) / cap;
      acc.time_ns += static_cast<double>(k1 + k2) * t_att + cfg.duty_overhead_ns;
      wait_ns = static_cast<double>(k2) * t_att;
    } else {
      for (;;) {
        std::uint64_t k1 = rng.geometric(cfg.p);
        std::uint64_t k2 = rng.geometric(cfg.p);
        ++acc.windows;
        if (k2 > static_cast<std::uint64_t>(cfg.attempt_cap)) {
          acc.time_ns +=
              static_cast<double>(k1 + static_cast<std::uint64_t>(cfg.attempt_cap)) *
                  t_att +
              cfg.duty_overhead_ns;
          continue;  // discard the first W state, re-prepare
        }
        acc.time_ns += static_cast<double>(k1 + k2) * t_att + cfg.duty_overhead_ns;
        wait_ns = static_cast<double>(k2) * t_att;
        break;
      }
    }

    double d = cfg.decay_factor(wait_ns);
    bool survived = rng.bernoulli(d);
    bool present = cfg.decay_channel == DecayChannel::loss ? survived : true;
    bool coherent = cfg.decay_channel == DecayChannel::dephasing ? survived : true;

    auto draw = detail::draw_fusion(cfg, present, coherent, rng);
    if (draw.click) {
      ++acc.heralds;
      acc.fidelity_sum += draw.post_fidelity;
      if (draw.readout) ++acc.coincidences;
    }
  }
  return detail::reduce(batches, n_trials);
}

/// Monte-Carlo rate of the memory-less baseline: both modules must herald
/// in the same slot (probability p^2); a slot costs the same wall time as
/// the p -> 1 enhanced cycle so the comparison isolates the memory effect.
inline RateEstimate simulate_memoryless(const ProtocolConfig& cfg,
                                        std::uint64_t n_trials,
                                        std::uint64_t rng_seed) {
  cfg.validate();
  if (n_trials == 0) throw std::invalid_argument("need at least one trial");
  double slot_ns = 2.0 * cfg.t_attempt_ns + cfg.duty_overhead_ns;
  std::size_t n_batches = n_trials < 100 ? 1 : 100;
  std::vector<detail::Accumulator> batches(n_batches);

  for (std::uint64_t trial = 0; trial < n_trials; ++trial) {
    Rng rng(substream_seed(rng_seed, trial));
    detail::Accumulator& acc = batches[trial % n_batches];
    std::uint64_t slots = rng.geometric(cfg.p * cfg.p);
    acc.time_ns += static_cast<double>(slots) * slot_ns;
    acc.windows += slots;
    auto draw = detail::draw_fusion(cfg, true, true, rng);
    if (draw.click) {
      ++acc.heralds;
      acc.fidelity_sum += draw.post_fidelity;
      if (draw.readout) ++acc.coincidences;
    }
  }
  // herald2_success_fraction reduces to the empirical joint slot probability
  return detail::reduce(batches, n_trials);
}

// ---------------------------------------------------------------------------
// Closed-form expectations
// ---------------------------------------------------------------------------

namespace detail {

/// E[decay factor at k attempts], k geometric(p), optionally truncated to
/// k <= cap (conditioned on success within the cap).
inline double expected_decay(const ProtocolConfig& cfg, bool capped) {
  double p = cfg.p;
  double t_over_tau = cfg.t_attempt_ns * 1e-3 / cfg.tau_us;
  if (cfg.decay_shape == DecayShape::exponential) {
    double y = std::exp(-t_over_tau);
    double x = (1.0 - p) * y;
    if (!capped) return p * y / (1.0 - x);
    double q = 1.0 - std::pow(1.0 - p, cfg.attempt_cap);
    return (p / (1.0 - p)) * x * (1.0 - std::pow(x, cfg.attempt_cap)) /
           (1.0 - x) / q;
  }
  // gaussian: direct summation; the truncated tail has negligible decay
  // factor or negligible weight, so it contributes ~0 to the expectation
  double sum = 0.0;
  double w = p;  // p (1-p)^{k-1}
  std::uint64_t limit = capped ? static_cast<std::uint64_t>(cfg.attempt_cap)
                               : 50'000'000ULL;
  for (std::uint64_t k = 1; k <= limit; ++k) {
    double g = std::exp(-(k * t_over_tau) * (k * t_over_tau));
    sum += w * g;
    if (w < 1e-18 || g < 1e-18) break;
    w *= (1.0 - p);
  }
  return capped ? sum / (1.0 - std::pow(1.0 - p, cfg.attempt_cap)) : sum;
}

struct ClickTerms {
  double herald;       // P(>= 1 click) per fusion-reaching cycle
  double coincidence;  // fusion click AND readout click
  double fid_num;      // click-weighted fidelity numerator
};

/// Realized click probability of the photon pair (a herald event happens
/// at most once per cycle, so the linearized 2*eta_port bookkeeping of
/// herald_probability does not apply to event counts).
inline double realized_pair_click(const ProtocolConfig& cfg) {
  double per_photon = cfg.ports == PortModel::two_ports ? cfg.eta : cfg.eta / 2.0;
  return 1.0 - (1.0 - per_photon) * (1.0 - per_photon);
}

inline ClickTerms coherent_terms(const ProtocolConfig& cfg) {
  double n = cfg.n_module, eta = cfg.eta;
  double mult = cfg.ports == PortModel::two_ports ? 2.0 : 1.0;
  double single = mult * (n - 1.0) / (n * n) * eta;
  double pair = realized_pair_click(cfg) / (n * n);
  return {single + pair, single * eta, single};
}

inline ClickTerms dephased_terms(const ProtocolConfig& cfg) {
  double n = cfg.n_module, eta = cfg.eta;
  double monitored = cfg.ports == PortModel::two_ports ? eta : eta / 2.0;
  double p_single = (1.0 / n) * ((n - 1.0) / n);  // each of (a,not b),(not a,b)
  double herald = 2.0 * p_single * monitored + realized_pair_click(cfg) / (n * n);
  double coincidence = 2.0 * p_single * monitored * eta;
  double fid_num =
      p_single * monitored * (0.5 + 0.5 / (n - 1.0));
  return {herald, coincidence, fid_num};
}

inline ClickTerms lost_terms(const ProtocolConfig& cfg) {
  double n = cfg.n_module, eta = cfg.eta;
  double monitored = cfg.ports == PortModel::two_ports ? eta : eta / 2.0;
  return {(1.0 / n) * monitored, 0.0, 0.0};
}

}  // namespace detail

struct AnalyticRates {
  RateEstimate enhanced;
  RateEstimate memoryless;
  double enhancement_factor = 0.0;
};

/// Closed-form counterparts of the two simulators; agrees with Monte Carlo
/// within statistical error by construction of the shared event model.
inline AnalyticRates analytic_rates(const ProtocolConfig& cfg) {
  cfg.validate();
  double p = cfg.p;
  double t_att = cfg.t_attempt_ns;
  double q = 1.0 - std::pow(1.0 - p, cfg.attempt_cap);

  double cycle_ns, e_decay;
  if (cfg.overrun == OverrunPolicy::hold) {
    cycle_ns = t_att * (1.0 / p + 1.0 / p) + cfg.duty_overhead_ns;
    e_decay = detail::expected_decay(cfg, false);
  } else {
    cycle_ns = (t_att * (1.0 + q) / p + cfg.duty_overhead_ns) / q;
    e_decay = detail::expected_decay(cfg, true);
  }

  auto coh = detail::coherent_terms(cfg);
  detail::ClickTerms degraded = cfg.decay_channel == DecayChannel::dephasing
                                    ? detail::dephased_terms(cfg)
                                    : detail::lost_terms(cfg);
  double herald = e_decay * coh.herald + (1.0 - e_decay) * degraded.herald;
  double coincidence =
      e_decay * coh.coincidence + (1.0 - e_decay) * degraded.coincidence;
  double fid_num = e_decay * coh.fid_num + (1.0 - e_decay) * degraded.fid_num;

  AnalyticRates out;
  out.enhanced.coincidences_per_hour = 3600.0 * coincidence / (cycle_ns * 1e-9);
  out.enhanced.mean_cycle_time_s = cycle_ns * 1e-9;
  out.enhanced.herald2_success_fraction = q;
  out.enhanced.effective_fidelity = herald > 0.0 ? fid_num / herald : 0.0;

  double slot_ns = 2.0 * t_att + cfg.duty_overhead_ns;
  double ml_cycle_ns = slot_ns / (p * p);
  out.memoryless.coincidences_per_hour =
      3600.0 * coh.coincidence / (ml_cycle_ns * 1e-9);
  out.memoryless.mean_cycle_time_s = ml_cycle_ns * 1e-9;
  out.memoryless.herald2_success_fraction = p * p;
  out.memoryless.effective_fidelity =
      coh.herald > 0.0 ? coh.fid_num / coh.herald : 0.0;

  out.enhancement_factor = out.memoryless.coincidences_per_hour > 0.0
                               ? out.enhanced.coincidences_per_hour /
                                     out.memoryless.coincidences_per_hour
                               : 0.0;
  return out;
}

/// Heralded DLCZ source model: excitation ladder with weight chi^n per
/// n-excitation component, heralded on one detected signal photon with a
/// background click floor. Returns the populations and W fidelity of the
/// heralded state (the single-excitation component is an ideal W state).
inline StateSummary heralded_source_state(double chi, double eta,
                                          double background) {
  if (chi <= 0.0 || chi >= 1.0)
    throw std::invalid_argument("excitation parameter must lie in (0, 1)");
  if (eta <= 0.0 || eta > 1.0)
    throw std::invalid_argument("efficiency must lie in (0, 1]");
  if (background < 0.0 || background >= 1.0)
    throw std::invalid_argument("background must lie in [0, 1)");
  double w[3] = {1.0, chi, chi * chi};
  double joint[3];
  double z = 0.0;
  for (int n = 0; n < 3; ++n) {
    double click = 1.0 - std::pow(1.0 - eta, n) * (1.0 - background);
    joint[n] = w[n] * click;
    z += joint[n];
  }
  if (z <= 0.0) throw std::invalid_argument("heralding probability is zero");
  StateSummary s;
  s.p0 = joint[0] / z;
  s.p1 = joint[1] / z;
  s.p2 = joint[2] / z;
  s.fidelity = s.p1;
  return s;
}

// ---------------------------------------------------------------------------
// Sweep driver
// ---------------------------------------------------------------------------

struct SweepPoint {
  double p = 0.0;
  RateEstimate enhanced;
  RateEstimate memoryless;
  double enhancement_factor = 0.0;
};

/// Logarithmic sweep over p. Points run in parallel; per-point seeds are
/// derived from the master seed, so the output is independent of the
/// thread count.
inline std::vector<SweepPoint> run_sweep(ProtocolConfig cfg, double p_min,
                                         double p_max, std::size_t points,
                                         std::uint64_t trials,
                                         std::uint64_t seed,
                                         unsigned threads = 0) {
  if (!(p_min < p_max) || points < 2)
    throw std::invalid_argument("sweep needs p_min < p_max and >= 2 points");
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<SweepPoint> out(points);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= points) return;
      double t = static_cast<double>(i) / static_cast<double>(points - 1);
      ProtocolConfig pc = cfg;
      pc.p = p_min * std::pow(p_max / p_min, t);
      SweepPoint& pt = out[i];
      pt.p = pc.p;
      pt.enhanced = simulate_memory_enhanced(pc, trials, substream_seed(seed, 2 * i));
      pt.memoryless = simulate_memoryless(pc, trials, substream_seed(seed, 2 * i + 1));
      pt.enhancement_factor =
          pt.memoryless.coincidences_per_hour > 0.0
              ? pt.enhanced.coincidences_per_hour / pt.memoryless.coincidences_per_hour
              : 0.0;
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 0; i + 1 < threads && i + 1 < points; ++i)
    pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

/// Least-squares slope of log(rate) against log(p).
inline double fit_loglog_slope(const std::vector<double>& p,
                               const std::vector<double>& rate) {
  if (p.size() != rate.size() || p.size() < 2)
    throw std::invalid_argument("slope fit needs >= 2 matched points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0 || rate[i] <= 0.0)
      throw std::invalid_argument("slope fit needs positive values");
    double x = std::log(p[i]), y = std::log(rate[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace wfuse
