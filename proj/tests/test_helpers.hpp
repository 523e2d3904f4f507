#pragma once

#include <vector>

#include "wfuse/fock.hpp"
#include "wfuse/rng.hpp"

namespace wfuse::testing {

/// All occupation kets over `modes` modes with at most two excitations.
inline std::vector<OccupationState> basis_states(std::size_t modes) {
  std::vector<OccupationState> out;
  out.push_back(OccupationState::vacuum(modes));
  for (std::size_t i = 0; i < modes; ++i) {
    out.push_back(OccupationState::single(modes, i));
    std::vector<std::uint8_t> two(modes, 0);
    two[i] = 2;
    out.push_back(OccupationState(two));
    for (std::size_t j = i + 1; j < modes; ++j) {
      std::vector<std::uint8_t> pair(modes, 0);
      pair[i] = pair[j] = 1;
      out.push_back(OccupationState(pair));
    }
  }
  return out;
}

inline PureState random_pure_state(Rng& rng, std::size_t modes) {
  PureState s(modes);
  for (const auto& k : basis_states(modes))
    if (rng.bernoulli(0.6))
      s.set(k, Complex(rng.uniform() - 0.5, rng.uniform() - 0.5));
  if (s.empty()) s.set(OccupationState::vacuum(modes), 1.0);
  return s.normalize();
}

inline MixedState random_mixed_state(Rng& rng, std::size_t modes,
                                     std::size_t max_branches = 4) {
  std::size_t nb = 1 + rng.below(max_branches);
  MixedState s(modes);
  std::vector<double> w(nb);
  double total = 0.0;
  for (auto& x : w) {
    x = rng.uniform() + 1e-3;
    total += x;
  }
  for (std::size_t i = 0; i < nb; ++i)
    s.add_branch(w[i] / total, random_pure_state(rng, modes));
  return s;
}

/// Ket amplitudes equal within tol, both directions.
inline bool states_match(const PureState& a, const PureState& b,
                         double tol = 1e-12) {
  if (a.mode_count() != b.mode_count()) return false;
  for (const auto& [k, amp] : a.amplitudes())
    if (std::abs(amp - b.amplitude(k)) > tol) return false;
  for (const auto& [k, amp] : b.amplitudes())
    if (std::abs(amp - a.amplitude(k)) > tol) return false;
  return true;
}

}  // namespace wfuse::testing
