#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wfuse/fock.hpp"
#include "wfuse/rng.hpp"

namespace wfuse {

enum class PortModel { one_port, two_ports };
enum class ClickModel { linearized, exact };

/// End-to-end retrieval + detection model for the fusion idler photons.
struct DetectionModel {
  double eta = 1.0;
  PortModel ports = PortModel::one_port;
  ClickModel click = ClickModel::linearized;
  double visibility = 1.0;  // which-port contrast of the interference
  bool sign_blind = false;  // hypothetical detector that cannot resolve +/-

  void validate() const {
    if (eta < 0.0 || eta > 1.0)
      throw std::invalid_argument("detection efficiency must lie in [0, 1]");
    if (visibility < 0.0 || visibility > 1.0)
      throw std::invalid_argument("visibility must lie in [0, 1]");
  }

  /// Per-photon click probability for a photon of the double-excitation
  /// pair, with the 50:50 port routing folded in.
  double pair_photon_click() const {
    return ports == PortModel::two_ports ? eta : eta / 2.0;
  }
};

enum class FusionBranch { separated, vacuum, fused_plus, fused_minus };

inline std::string to_string(FusionBranch b) {
  switch (b) {
    case FusionBranch::separated: return "separated";
    case FusionBranch::vacuum: return "vacuum";
    case FusionBranch::fused_plus: return "fused_plus";
    case FusionBranch::fused_minus: return "fused_minus";
  }
  return "?";
}

struct FusionOutcome {
  FusionBranch branch;
  double probability;    // pre-detection branch probability
  MixedState post_state; // state of the 2(N-1) remaining modes
};

namespace detail {

/// (|W_{N-1}>|Vac> +/- |Vac>|W_{N-1}>)/sqrt2 over 2(N-1) modes,
/// A-remaining modes first.
inline PureState fused_w_state(std::size_t n, int sign) {
  PureState w = make_w_state(n - 1);
  PureState vac = PureState::vacuum(n - 1);
  constexpr Complex inv_sqrt2 = 0.70710678118654752440;
  return superpose({{inv_sqrt2, tensor(w, vac)},
                    {Complex(sign) * inv_sqrt2, tensor(vac, w)}});
}

}  // namespace detail

/// The four heralding branches of interfering one mode from each of two
/// |W_N> states on a 50:50 beamsplitter. Probabilities are exact and sum
/// to 1; post states follow the recursive W decomposition.
inline std::vector<FusionOutcome> expand_fusion(std::size_t n) {
  if (n < 2) throw std::invalid_argument("fusion needs W states with N >= 2");
  double nn = static_cast<double>(n);
  std::size_t rem = 2 * (n - 1);

  PureState w_rem = make_w_state(n - 1);
  MixedState separated(tensor(w_rem, w_rem));
  MixedState vacuum(PureState::vacuum(rem));

  std::vector<FusionOutcome> out;
  out.push_back({FusionBranch::separated, (nn - 1.0) * (nn - 1.0) / (nn * nn),
                 std::move(separated)});
  out.push_back({FusionBranch::vacuum, 1.0 / (nn * nn), std::move(vacuum)});
  out.push_back({FusionBranch::fused_plus, (nn - 1.0) / (nn * nn),
                 MixedState(detail::fused_w_state(n, +1))});
  out.push_back({FusionBranch::fused_minus, (nn - 1.0) / (nn * nn),
                 MixedState(detail::fused_w_state(n, -1))});
  return out;
}

/// Probability that the fusion produces a detector click.
///
/// Single-photon branches click with probability eta into the monitored
/// port(s). The double-excitation branch is modeled as two photons that
/// independently route and detect: the linearized model books its click
/// weight as the expected click count 2*eta_port, the exact model as
/// 1 - (1 - eta_port)^2.
inline double herald_probability(std::size_t n, const DetectionModel& det) {
  if (n < 2) throw std::invalid_argument("fusion needs W states with N >= 2");
  det.validate();
  double nn = static_cast<double>(n);
  if (det.click == ClickModel::linearized) {
    // reduces to eta/N (one port) or 2 eta/N (two ports) exactly
    return det.ports == PortModel::two_ports ? 2.0 * det.eta / nn : det.eta / nn;
  }
  double ep = det.pair_photon_click();
  double single = (det.ports == PortModel::two_ports ? 2.0 : 1.0) *
                  (nn - 1.0) / (nn * nn) * det.eta;
  double pair = (1.0 - (1.0 - ep) * (1.0 - ep)) / (nn * nn);
  return single + pair;
}

/// State of the remaining 2(N-1) modes conditioned on a fusion click.
///
/// Default conditioning is a port-1 click, which resolves the +/- sign of
/// the fused W state; with sign_blind the click port is not used and the
/// two signs are mixed. Linearized model: (N-1)/N on the fused W state and
/// 1/N on vacuum, independent of eta.
inline MixedState conditional_fused_state(std::size_t n, const DetectionModel& det) {
  if (n < 2) throw std::invalid_argument("fusion needs W states with N >= 2");
  det.validate();
  double nn = static_cast<double>(n);
  // condition on any click only for a sign-blind two-port detector;
  // otherwise on a click in port 1
  bool any_click = det.sign_blind && det.ports == PortModel::two_ports;
  double per_photon = any_click ? det.eta : det.eta / 2.0;
  double w_fused = (nn - 1.0) / (nn * nn) * det.eta * (any_click ? 2.0 : 1.0);
  double w_vac = det.click == ClickModel::linearized
                     ? 2.0 * per_photon / (nn * nn)
                     : (1.0 - (1.0 - per_photon) * (1.0 - per_photon)) / (nn * nn);

  std::size_t rem = 2 * (n - 1);
  double total = w_fused + w_vac;
  if (total == 0.0) return MixedState::empty(rem);
  MixedState out(rem);
  double v = det.visibility;
  // probability the sign label matches the click port
  double p_plus = det.sign_blind ? 0.5 : (1.0 + v) / 2.0;
  out.add_branch(w_fused / total * p_plus, detail::fused_w_state(n, +1));
  if (p_plus < 1.0)
    out.add_branch(w_fused / total * (1.0 - p_plus), detail::fused_w_state(n, -1));
  out.add_branch(w_vac / total, PureState::vacuum(rem));
  return out;
}

struct FusionSample {
  bool heralded = false;
  int clicks = 0;            // detector click events (a photon pair can give 2)
  FusionBranch branch = FusionBranch::separated;
  MixedState post_state{0};
};

/// One Monte-Carlo fusion of two arbitrary states. The joint state is run
/// through the beamsplitter; the photon-number sector of the two output
/// ports is drawn exactly, then each output photon is detected with
/// probability eta (routing of a bunched pair is drawn per photon, which
/// reproduces both click models of herald_probability in expectation).
inline FusionSample sample_fusion(const PureState& state_a, const PureState& state_b,
                                  std::size_t fuse_mode_a, std::size_t fuse_mode_b,
                                  const DetectionModel& det, std::uint64_t rng_seed) {
  det.validate();
  if (fuse_mode_a >= state_a.mode_count() || fuse_mode_b >= state_b.mode_count())
    throw std::invalid_argument("fuse mode index out of range");
  for (const auto& [k, a] : state_a.amplitudes())
    if (k[fuse_mode_a] > 1)
      throw std::invalid_argument("fuse mode carries a double excitation");
  for (const auto& [k, a] : state_b.amplitudes())
    if (k[fuse_mode_b] > 1)
      throw std::invalid_argument("fuse mode carries a double excitation");

  Rng rng(rng_seed);
  PureState joint = apply_beamsplitter(tensor(state_a, state_b), fuse_mode_a,
                                       state_a.mode_count() + fuse_mode_b);
  std::size_t pa = fuse_mode_a;
  std::size_t pb = state_a.mode_count() + fuse_mode_b;

  // photon-number measurement of the two ports: sector probabilities and
  // the conditional remaining-mode states
  struct Sector {
    int na, nb;
    double prob = 0.0;
    PureState state{0};
  };
  std::vector<Sector> sectors;
  auto sector_of = [&](int na, int nb) -> Sector& {
    for (auto& s : sectors)
      if (s.na == na && s.nb == nb) return s;
    sectors.push_back({na, nb, 0.0, PureState(joint.mode_count() - 2)});
    return sectors.back();
  };
  for (const auto& [k, a] : joint.amplitudes()) {
    Sector& s = sector_of(k[pa], k[pb]);
    s.prob += std::norm(a);
    s.state.add(k.without(pa, pb), a);
  }

  double u = rng.uniform();
  double acc = 0.0;
  const Sector* drawn = &sectors.back();
  for (const auto& s : sectors) {
    acc += s.prob;
    if (u < acc) {
      drawn = &s;
      break;
    }
  }

  FusionSample out;
  out.post_state = MixedState(PureState(drawn->state).normalize());
  int n_photons = drawn->na + drawn->nb;
  if (n_photons == 0) {
    out.branch = FusionBranch::separated;
    return out;
  }
  if (n_photons == 1) {
    bool port1 = drawn->na == 1;
    if (det.visibility < 1.0 && rng.uniform() > (1.0 + det.visibility) / 2.0)
      port1 = !port1;  // contrast loss flips the port label
    out.branch = port1 ? FusionBranch::fused_plus : FusionBranch::fused_minus;
    bool monitored = port1 || det.ports == PortModel::two_ports;
    if (monitored && rng.bernoulli(det.eta)) out.clicks = 1;
  } else {
    out.branch = FusionBranch::vacuum;
    // two photons, independent routing and detection
    for (int i = 0; i < 2; ++i) {
      bool port1 = rng.bernoulli(0.5);
      bool monitored = port1 || det.ports == PortModel::two_ports;
      if (monitored && rng.bernoulli(det.eta)) ++out.clicks;
    }
  }
  out.heralded = out.clicks > 0;
  return out;
}

}  // namespace wfuse
