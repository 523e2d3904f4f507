#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wfuse/io.hpp"

namespace fs = std::filesystem;
using namespace wfuse;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string config_path;
  unsigned threads = 0;
};

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

class ManifestWriter {
 public:
  ManifestWriter(std::string command, const GlobalOpts& g)
      : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
    manifest_["schema_version"] = kSchemaVersion;
    manifest_["artifact_version"] = kVersion;
    manifest_["command"] = command_;
    manifest_["seed"] = g.seed;
    out_dir_ = g.out_dir;
  }

  void set_config(Json cfg) { manifest_["config"] = std::move(cfg); }

  fs::path emit(const std::string& name, const std::string& text) {
    fs::path p = fs::path(out_dir_) / name;
    write_text_file(p, text);
    manifest_["outputs"].push_back(p.string());
    return p;
  }

  void finish() {
    auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_);
    manifest_["wall_seconds"] = dt.count();
    write_text_file(fs::path(out_dir_) / (command_ + "_manifest.json"),
                    manifest_.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::string out_dir_;
  Json manifest_ = Json::object();
  std::chrono::steady_clock::time_point start_;
};

std::string csv_row(const std::vector<std::string>& cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ',';
    row += cells[i];
  }
  row += '\n';
  return row;
}

int cmd_fuse(const GlobalOpts& g, int n, double eta, const std::string& ports,
             const std::string& click) {
  DetectionModel det;
  det.eta = eta;
  det.ports = port_model_from_string(ports);
  det.click = click_model_from_string(click);
  det.validate();

  ManifestWriter manifest("fuse", g);
  manifest.set_config({{"n", n},
                       {"eta", eta},
                       {"ports", ports},
                       {"click", click}});

  auto outcomes = expand_fusion(static_cast<std::size_t>(n));
  MixedState cond = conditional_fused_state(static_cast<std::size_t>(n), det);
  double vacuum_fraction = 0.0;
  for (const auto& b : cond.branches()) {
    auto pops = populations(MixedState(b.state));
    if (pops[0] > 0.5) vacuum_fraction += b.weight;
  }

  double nn = n;
  double per_photon = det.pair_photon_click();
  double pair_click = det.click == ClickModel::linearized
                          ? 2.0 * per_photon
                          : 1.0 - (1.0 - per_photon) * (1.0 - per_photon);
  std::string csv = csv_row({"N", "branch", "probability_predetect",
                             "probability_heralded", "vacuum_fraction"});
  for (const auto& o : outcomes) {
    double heralded = 0.0;
    switch (o.branch) {
      case FusionBranch::separated: heralded = 0.0; break;
      case FusionBranch::vacuum: heralded = o.probability * pair_click; break;
      case FusionBranch::fused_plus: heralded = o.probability * det.eta; break;
      case FusionBranch::fused_minus:
        heralded = det.ports == PortModel::two_ports ? o.probability * det.eta : 0.0;
        break;
    }
    csv += csv_row({std::to_string(n), to_string(o.branch),
                    format_g17(o.probability), format_g17(heralded),
                    format_g17(vacuum_fraction)});
  }
  manifest.emit("fuse_branches.csv", csv);

  Json state_json{{"schema_version", kSchemaVersion},
                  {"herald_probability", herald_probability(n, det)},
                  {"conditional_state", to_json(cond)},
                  {"populations", populations(cond)},
                  {"vacuum_fraction", vacuum_fraction}};
  manifest.emit("fuse_state.json", state_json.dump(2) + "\n");
  manifest.finish();
  return 0;
}

int cmd_witness(const GlobalOpts& g, const std::string& summary_path, int n,
                int k, double scan_resolution, std::uint64_t resamples,
                std::size_t hist_bins) {
  Json sj = load_json_file(summary_path);
  StateSummary summary = summary_from_json(sj);
  summary.validate();

  ManifestWriter manifest("witness", g);
  manifest.set_config({{"summary", to_json(summary)},
                       {"n", n},
                       {"k", k},
                       {"scan_resolution", scan_resolution},
                       {"resamples", resamples}});

  auto [params, expectation] = optimize_witness(summary, n, k, scan_resolution);
  auto report = is_valid_witness(params);

  Json out{{"schema_version", kSchemaVersion},
           {"alpha", params.alpha},
           {"beta", params.beta},
           {"gamma", params.gamma},
           {"n", n},
           {"k", k},
           {"expectation", expectation},
           {"valid", report.valid},
           {"argmin", {{"theta1", report.theta1},
                       {"theta2", report.theta2},
                       {"l", report.l},
                       {"min_value", report.min_value}}}};

  if (summary.errors && resamples > 0) {
    auto dist = witness_distribution(params, summary, resamples, g.seed, hist_bins);
    out["negative_fraction"] = dist.negative_fraction;
    std::string csv = csv_row({"bin_left", "bin_right", "count"});
    for (const auto& b : dist.histogram)
      csv += csv_row({format_g17(b.left), format_g17(b.right),
                      std::to_string(b.count)});
    manifest.emit("witness_hist.csv", csv);
  }
  manifest.emit("witness_report.json", out.dump(2) + "\n");
  manifest.finish();
  std::cout << "alpha=" << format_g17(params.alpha)
            << " beta=" << format_g17(params.beta)
            << " gamma=" << format_g17(params.gamma)
            << " expectation=" << format_g17(expectation) << "\n";
  return 0;
}

Json rate_to_json(const RateEstimate& r) {
  return {{"coincidences_per_hour", r.coincidences_per_hour},
          {"rate_stderr", r.rate_stderr},
          {"mean_cycle_time_s", r.mean_cycle_time_s},
          {"herald2_success_fraction", r.herald2_success_fraction},
          {"effective_fidelity", r.effective_fidelity},
          {"fidelity_stderr", r.fidelity_stderr}};
}

ProtocolConfig load_config(const GlobalOpts& g) {
  ProtocolConfig cfg;
  if (!g.config_path.empty()) cfg = protocol_config_from_json(load_json_file(g.config_path));
  cfg.validate();
  return cfg;
}

int cmd_rates(const GlobalOpts& g, std::uint64_t trials) {
  ProtocolConfig cfg = load_config(g);
  ManifestWriter manifest("rates", g);
  manifest.set_config(to_json(cfg));

  auto enhanced = simulate_memory_enhanced(cfg, trials, substream_seed(g.seed, 0));
  auto memoryless = simulate_memoryless(cfg, trials, substream_seed(g.seed, 1));
  auto analytic = analytic_rates(cfg);

  Json out{{"schema_version", kSchemaVersion},
           {"trials", trials},
           {"enhanced", rate_to_json(enhanced)},
           {"memoryless", rate_to_json(memoryless)},
           {"analytic_enhanced", rate_to_json(analytic.enhanced)},
           {"analytic_memoryless", rate_to_json(analytic.memoryless)},
           {"enhancement_factor",
            memoryless.coincidences_per_hour > 0.0
                ? enhanced.coincidences_per_hour / memoryless.coincidences_per_hour
                : 0.0},
           {"analytic_enhancement_factor", analytic.enhancement_factor}};
  manifest.emit("rates.json", out.dump(2) + "\n");
  manifest.finish();
  return 0;
}

int cmd_sweep(const GlobalOpts& g, double p_min, double p_max, std::size_t points,
              std::uint64_t trials) {
  ProtocolConfig cfg = load_config(g);
  ManifestWriter manifest("sweep", g);
  Json cj = to_json(cfg);
  cj["p_min"] = p_min;
  cj["p_max"] = p_max;
  cj["points"] = points;
  cj["trials"] = trials;
  manifest.set_config(cj);

  if (trials < 100000)
    std::cerr << "warning: " << trials
              << " trials per point may be too few for tight error bars\n";

  auto sweep = wfuse::run_sweep(cfg, p_min, p_max, points, trials, g.seed, g.threads);

  std::string csv = csv_row({"p", "rate_enhanced", "rate_enhanced_stderr",
                             "rate_memoryless", "rate_memoryless_stderr",
                             "enhancement_factor", "mean_cycle_time_s",
                             "herald2_fraction"});
  std::vector<double> ps, re, rm;
  for (const auto& pt : sweep) {
    csv += csv_row({format_g17(pt.p), format_g17(pt.enhanced.coincidences_per_hour),
                    format_g17(pt.enhanced.rate_stderr),
                    format_g17(pt.memoryless.coincidences_per_hour),
                    format_g17(pt.memoryless.rate_stderr),
                    format_g17(pt.enhancement_factor),
                    format_g17(pt.enhanced.mean_cycle_time_s),
                    format_g17(pt.enhanced.herald2_success_fraction)});
    ps.push_back(pt.p);
    re.push_back(pt.enhanced.coincidences_per_hour);
    rm.push_back(pt.memoryless.coincidences_per_hour);
  }
  manifest.emit("sweep.csv", csv);
  manifest.finish();
  std::cout << "slope_enhanced=" << format_g17(fit_loglog_slope(ps, re))
            << " slope_memoryless=" << format_g17(fit_loglog_slope(ps, rm)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"W-state fusion simulator and analysis toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master RNG seed")->capture_default_str();
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
  app.add_option("--config", g.config_path, "protocol config JSON path");
  app.add_option("--threads", g.threads,
                 "worker threads (0 = available parallelism)");

  int n = 3;
  double eta = 1.0;
  std::string ports = "one", click = "linearized";
  auto* fuse = app.add_subcommand("fuse", "beamsplitter fusion branch table");
  fuse->add_option("--n", n, "W-state size per module")->required();
  fuse->add_option("--eta", eta, "retrieval+detection efficiency")
      ->capture_default_str();
  fuse->add_option("--ports", ports, "detected outputs: one|two")
      ->capture_default_str();
  fuse->add_option("--click", click, "double-click model: linearized|exact")
      ->capture_default_str();

  std::string summary_path;
  int wn = 4, wk = 4;
  double scan_resolution = 1e-3;
  std::uint64_t resamples = 100000;
  std::size_t hist_bins = 40;
  auto* witness = app.add_subcommand("witness", "optimize an entanglement witness");
  witness->add_option("--summary", summary_path, "StateSummary JSON path")->required();
  witness->add_option("--n", wn, "system size N")->required();
  witness->add_option("--k", wk, "claimed entanglement depth")->required();
  witness->add_option("--scan-resolution", scan_resolution, "parameter lattice step")
      ->capture_default_str();
  witness->add_option("--resamples", resamples, "Gaussian resampling draws")
      ->capture_default_str();
  witness->add_option("--hist-bins", hist_bins, "histogram bin count")
      ->capture_default_str();

  std::uint64_t trials = 1000000;
  auto* rates = app.add_subcommand("rates", "rates at a single operating point");
  rates->add_option("--trials", trials, "Monte-Carlo cycles")->capture_default_str();

  double p_min = 1e-4, p_max = 1e-2;
  std::size_t points = 9;
  std::uint64_t sweep_trials = 1000000;
  auto* sweep = app.add_subcommand("sweep", "rate-vs-p scaling sweep");
  sweep->add_option("--p-min", p_min, "lowest herald probability")
      ->capture_default_str();
  sweep->add_option("--p-max", p_max, "highest herald probability")
      ->capture_default_str();
  sweep->add_option("--points", points, "sweep points (log spaced)")
      ->capture_default_str();
  sweep->add_option("--trials", sweep_trials, "Monte-Carlo cycles per point")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage/validation errors exit 2
  }

  if (const char* env = std::getenv("WFUSE_SEED")) {
    try {
      g.seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "error: WFUSE_SEED must be an unsigned integer\n";
      return 2;
    }
  }

  try {
    std::filesystem::create_directories(g.out_dir);
    if (fuse->parsed()) return cmd_fuse(g, n, eta, ports, click);
    if (witness->parsed())
      return cmd_witness(g, summary_path, wn, wk, scan_resolution, resamples,
                         hist_bins);
    if (rates->parsed()) return cmd_rates(g, trials);
    if (sweep->parsed()) return cmd_sweep(g, p_min, p_max, points, sweep_trials);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const scan_too_coarse& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
