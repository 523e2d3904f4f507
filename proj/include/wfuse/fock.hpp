#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "wfuse/common.hpp"

namespace wfuse {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// OccupationState: one basis ket over M modes, 0/1/2 excitations per mode,
// at most 2 excitations in total.
// ---------------------------------------------------------------------------

class OccupationState {
 public:
  OccupationState() = default;

  explicit OccupationState(std::vector<std::uint8_t> occupations)
      : occ_(std::move(occupations)) {
    if (total() > 2)
      throw truncation_error("occupation state exceeds two total excitations");
  }

  /// Vacuum over `modes` modes.
  static OccupationState vacuum(std::size_t modes) {
    return OccupationState(std::vector<std::uint8_t>(modes, 0));
  }

  /// Single excitation in mode `j`.
  static OccupationState single(std::size_t modes, std::size_t j) {
    std::vector<std::uint8_t> v(modes, 0);
    v.at(j) = 1;
    return OccupationState(std::move(v));
  }

  std::size_t mode_count() const { return occ_.size(); }

  int total() const {
    return std::accumulate(occ_.begin(), occ_.end(), 0);
  }

  std::uint8_t operator[](std::size_t j) const { return occ_[j]; }

  const std::vector<std::uint8_t>& occupations() const { return occ_; }

  /// Ket with the occupations of `other` appended.
  OccupationState append(const OccupationState& other) const {
    std::vector<std::uint8_t> v = occ_;
    v.insert(v.end(), other.occ_.begin(), other.occ_.end());
    return OccupationState(std::move(v));  // re-checks the truncation bound
  }

  /// Ket with modes `a` and `b` replaced by the given occupations.
  OccupationState with(std::size_t a, std::uint8_t na, std::size_t b,
                       std::uint8_t nb) const {
    std::vector<std::uint8_t> v = occ_;
    v.at(a) = na;
    v.at(b) = nb;
    return OccupationState(std::move(v));
  }

  /// Ket with modes `a` and `b` deleted (a != b).
  OccupationState without(std::size_t a, std::size_t b) const {
    std::vector<std::uint8_t> v;
    v.reserve(occ_.size() - 2);
    for (std::size_t j = 0; j < occ_.size(); ++j)
      if (j != a && j != b) v.push_back(occ_[j]);
    return OccupationState(std::move(v));
  }

  std::string to_string() const {
    std::string s;
    s.reserve(occ_.size());
    for (auto n : occ_) s.push_back(static_cast<char>('0' + n));
    return s;
  }

  friend bool operator==(const OccupationState&, const OccupationState&) = default;
  friend auto operator<=>(const OccupationState& a, const OccupationState& b) {
    return a.occ_ <=> b.occ_;
  }

 private:
  std::vector<std::uint8_t> occ_;
};

// ---------------------------------------------------------------------------
// PureState: sparse complex amplitudes keyed by occupation kets. std::map
// keys keep iteration order deterministic, which the serialization and the
// bit-exact CLI outputs rely on.
// ---------------------------------------------------------------------------

class PureState {
 public:
  using AmplitudeMap = std::map<OccupationState, Complex>;

  explicit PureState(std::size_t mode_count) : modes_(mode_count) {}

  static PureState vacuum(std::size_t modes) {
    PureState s(modes);
    s.set(OccupationState::vacuum(modes), 1.0);
    return s;
  }

  /// |0..1_j..0>
  static PureState single(std::size_t modes, std::size_t j) {
    PureState s(modes);
    s.set(OccupationState::single(modes, j), 1.0);
    return s;
  }

  std::size_t mode_count() const { return modes_; }
  const AmplitudeMap& amplitudes() const { return amps_; }
  bool empty() const { return amps_.empty(); }

  Complex amplitude(const OccupationState& k) const {
    auto it = amps_.find(k);
    return it == amps_.end() ? Complex(0.0) : it->second;
  }

  void set(const OccupationState& k, Complex a) {
    if (k.mode_count() != modes_)
      throw std::invalid_argument("ket mode count does not match state");
    if (std::abs(a) == 0.0)
      amps_.erase(k);
    else
      amps_[k] = a;
  }

  void add(const OccupationState& k, Complex a) {
    if (k.mode_count() != modes_)
      throw std::invalid_argument("ket mode count does not match state");
    auto [it, inserted] = amps_.try_emplace(k, a);
    if (!inserted) it->second += a;
  }

  double norm2() const {
    double n = 0.0;
    for (const auto& [k, a] : amps_) n += std::norm(a);
    return n;
  }

  PureState& normalize() {
    double n = std::sqrt(norm2());
    if (n == 0.0) throw std::invalid_argument("cannot normalize a zero state");
    for (auto& [k, a] : amps_) a /= n;
    return *this;
  }

  PureState& prune(double eps = 1e-15) {
    std::erase_if(amps_, [eps](const auto& kv) { return std::abs(kv.second) <= eps; });
    return *this;
  }

  bool is_normalized(double tol = kAmplitudeTol) const {
    return std::abs(norm2() - 1.0) <= tol;
  }

 private:
  std::size_t modes_;
  AmplitudeMap amps_;
};

/// <a|b>
inline Complex inner_product(const PureState& a, const PureState& b) {
  if (a.mode_count() != b.mode_count())
    throw std::invalid_argument("inner product of states with different mode counts");
  // iterate the smaller map
  const PureState& small = a.amplitudes().size() <= b.amplitudes().size() ? a : b;
  const PureState& large = (&small == &a) ? b : a;
  Complex r = 0.0;
  for (const auto& [k, amp] : small.amplitudes()) {
    Complex other = large.amplitude(k);
    r += (&small == &a) ? std::conj(amp) * other : std::conj(other) * amp;
  }
  return r;
}

/// Linear combination sum_i coeff_i |state_i>, not normalized.
inline PureState superpose(
    const std::vector<std::pair<Complex, PureState>>& terms) {
  if (terms.empty()) throw std::invalid_argument("superpose needs at least one term");
  PureState out(terms.front().second.mode_count());
  for (const auto& [c, s] : terms) {
    if (s.mode_count() != out.mode_count())
      throw std::invalid_argument("superpose terms differ in mode count");
    for (const auto& [k, a] : s.amplitudes()) out.add(k, c * a);
  }
  out.prune(0.0);
  return out;
}

// ---------------------------------------------------------------------------
// MixedState: weighted ensemble of pure states.
// ---------------------------------------------------------------------------

class MixedState {
 public:
  struct Branch {
    double weight;
    PureState state;
  };

  explicit MixedState(std::size_t mode_count) : modes_(mode_count) {}

  /// Single-branch (pure) ensemble.
  MixedState(const PureState& s) : modes_(s.mode_count()) {  // NOLINT(google-explicit-constructor)
    branches_.push_back({1.0, s});
  }

  /// Empty-branch marker, produced by projections with probability zero.
  static MixedState empty(std::size_t modes) { return MixedState(modes); }

  void add_branch(double weight, PureState state) {
    if (weight < 0.0) throw std::invalid_argument("branch weight must be >= 0");
    if (state.mode_count() != modes_)
      throw std::invalid_argument("branch mode count does not match ensemble");
    branches_.push_back({weight, std::move(state)});
  }

  std::size_t mode_count() const { return modes_; }
  const std::vector<Branch>& branches() const { return branches_; }
  bool empty() const { return branches_.empty(); }

  double total_weight() const {
    double w = 0.0;
    for (const auto& b : branches_) w += b.weight;
    return w;
  }

  MixedState& normalize_weights() {
    double w = total_weight();
    if (w == 0.0) throw std::invalid_argument("cannot normalize zero-weight ensemble");
    for (auto& b : branches_) b.weight /= w;
    return *this;
  }

 private:
  std::size_t modes_;
  std::vector<Branch> branches_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// |W_N> with per-mode phases: sum_j e^{i phi_j}/sqrt(N) |0..1_j..0>.
inline PureState make_w_state(std::size_t n, const std::vector<double>& phases) {
  if (n == 0) throw std::invalid_argument("W state needs at least one mode");
  if (phases.size() != n)
    throw std::invalid_argument("phase list length must equal mode count");
  PureState s(n);
  double amp = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j)
    s.set(OccupationState::single(n, j),
          std::polar(amp, phases[j]));
  return s;
}

/// |W_N> with all phases zero.
inline PureState make_w_state(std::size_t n) {
  return make_w_state(n, std::vector<double>(n, 0.0));
}

/// Tensor product; throws truncation_error if any product ket would carry
/// more than two excitations.
inline PureState tensor(const PureState& a, const PureState& b) {
  PureState out(a.mode_count() + b.mode_count());
  for (const auto& [ka, aa] : a.amplitudes()) {
    for (const auto& [kb, ab] : b.amplitudes()) {
      if (ka.total() + kb.total() > 2)
        throw truncation_error("tensor product exceeds two total excitations");
      out.set(ka.append(kb), aa * ab);
    }
  }
  return out;
}

/// tr[P_n |s><s|] and the projected (renormalized) ket.
inline std::pair<double, MixedState> project_excitations(const PureState& s, int n) {
  if (n < 0 || n > 2) throw std::invalid_argument("projector index must be 0, 1, or 2");
  PureState proj(s.mode_count());
  double p = 0.0;
  for (const auto& [k, a] : s.amplitudes()) {
    if (k.total() == n) {
      proj.set(k, a);
      p += std::norm(a);
    }
  }
  if (p == 0.0) return {0.0, MixedState::empty(s.mode_count())};
  proj.normalize();
  return {p, MixedState(proj)};
}

/// tr[P_n rho] and the renormalized projected ensemble.
inline std::pair<double, MixedState> project_excitations(const MixedState& s, int n) {
  if (n < 0 || n > 2) throw std::invalid_argument("projector index must be 0, 1, or 2");
  MixedState out(s.mode_count());
  double p = 0.0;
  for (const auto& b : s.branches()) {
    auto [pb, mb] = project_excitations(b.state, n);
    if (pb == 0.0) continue;
    p += b.weight * pb;
    out.add_branch(b.weight * pb, mb.branches().front().state);
  }
  if (p == 0.0) return {0.0, MixedState::empty(s.mode_count())};
  out.normalize_weights();
  return {p, out};
}

/// (p0, p1, p2) with p_n = tr[P_n rho].
inline std::array<double, 3> populations(const MixedState& s) {
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (const auto& b : s.branches())
    for (const auto& [k, a] : b.state.amplitudes())
      p[static_cast<std::size_t>(k.total())] += b.weight * std::norm(a);
  return p;
}

/// F = <target| rho |target>.
inline double fidelity(const MixedState& s, const PureState& target) {
  if (s.mode_count() != target.mode_count())
    throw std::invalid_argument("fidelity of states with different mode counts");
  double f = 0.0;
  for (const auto& b : s.branches())
    f += b.weight * std::norm(inner_product(target, b.state));
  return f;
}

/// Coefficients of |W_N> = c1 |1>|Vac_{N-1}> + c2 |0>|W_{N-1}>.
inline std::pair<double, double> decompose_w(std::size_t n) {
  if (n < 2) throw std::invalid_argument("W decomposition needs N >= 2");
  double nn = static_cast<double>(n);
  return {1.0 / std::sqrt(nn), std::sqrt(nn - 1.0) / std::sqrt(nn)};
}

/// 50:50 beamsplitter on modes (a, b): a -> (a+b)/sqrt2, b -> (a-b)/sqrt2,
/// acting on the creation operators of the two modes.
inline PureState apply_beamsplitter(const PureState& s, std::size_t mode_a,
                                    std::size_t mode_b) {
  if (mode_a >= s.mode_count() || mode_b >= s.mode_count() || mode_a == mode_b)
    throw std::invalid_argument("beamsplitter modes out of range or equal");
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double half = 0.5;
  PureState out(s.mode_count());
  for (const auto& [k, amp] : s.amplitudes()) {
    int na = k[mode_a], nb = k[mode_b];
    auto put = [&](std::uint8_t ra, std::uint8_t rb, double c) {
      out.add(k.with(mode_a, ra, mode_b, rb), amp * c);
    };
    if (na == 0 && nb == 0) {
      put(0, 0, 1.0);
    } else if (na == 1 && nb == 0) {
      put(1, 0, inv_sqrt2);
      put(0, 1, inv_sqrt2);
    } else if (na == 0 && nb == 1) {
      put(1, 0, inv_sqrt2);
      put(0, 1, -inv_sqrt2);
    } else if (na == 1 && nb == 1) {
      // a+b+ -> (a+^2 - b+^2)/2 : Hong-Ou-Mandel bunching
      put(2, 0, inv_sqrt2);
      put(0, 2, -inv_sqrt2);
    } else if (na == 2 && nb == 0) {
      put(2, 0, half);
      put(1, 1, inv_sqrt2);
      put(0, 2, half);
    } else {  // na == 0, nb == 2
      put(2, 0, half);
      put(1, 1, -inv_sqrt2);
      put(0, 2, half);
    }
  }
  out.prune(0.0);
  return out;
}

}  // namespace wfuse
