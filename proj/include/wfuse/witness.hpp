#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "wfuse/common.hpp"
#include "wfuse/rng.hpp"

namespace wfuse {

inline constexpr double kHalfPi = 1.57079632679489661923;

// ---------------------------------------------------------------------------
// Parameter and summary types
// ---------------------------------------------------------------------------

/// Witness family alpha P0 + beta P1 + gamma P2 - |W_N><W_N| certifying
/// entanglement depth k.
struct WitnessParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  int n = 0;
  int k = 0;

  void validate() const {
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
      throw std::invalid_argument("witness parameters must be non-negative");
    if (k <= 2 || k > n)
      throw std::invalid_argument("entanglement depth must satisfy 2 < k <= N");
    if (3 * k <= 2 * n)
      throw unsupported_regime("witness certification requires k > 2N/3");
  }
};

struct SummaryErrors {
  double p0 = 0.0, p1 = 0.0, p2 = 0.0, fidelity = 0.0;
};

/// Measured (or simulated) populations and W-state fidelity of a prepared
/// state; the boundary type between state preparation and certification.
struct StateSummary {
  double p0 = 0.0, p1 = 0.0, p2 = 0.0;
  double fidelity = 0.0;
  std::optional<SummaryErrors> errors;

  void validate(double tol = 0.01) const {
    for (double p : {p0, p1, p2})
      if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("populations must lie in [0, 1]");
    if (std::abs(p0 + p1 + p2 - 1.0) > tol)
      throw std::invalid_argument("populations must sum to 1");
    if (fidelity < 0.0 || fidelity > 1.0)
      throw std::invalid_argument("fidelity must lie in [0, 1]");
  }
};

/// Two-block split of N modes into sizes l and N-l with N-l <= l < k.
struct PartitionSpec {
  int l = 0;

  void validate(int n, int k) const {
    if (l <= 0 || l >= n || n - l > l || l >= k)
      throw std::invalid_argument("partition must satisfy N-l <= l < k, l < N");
  }
};

inline std::vector<PartitionSpec> admissible_partitions(int n, int k) {
  std::vector<PartitionSpec> out;
  for (int l = (n + 1) / 2; l < n && l < k; ++l) out.push_back({l});
  return out;
}

// ---------------------------------------------------------------------------
// The closed-form witness expectation on two-block product states
// ---------------------------------------------------------------------------

/// <W_k> on (cos t1 |g> + sin t1 |W_l>) (x) (cos t2 |g> + sin t2 |W_{N-l}>).
inline double f_theta(double theta1, double theta2, const WitnessParams& w,
                      const PartitionSpec& part) {
  double c1 = std::cos(2.0 * theta1), c2 = std::cos(2.0 * theta2);
  double s1 = std::sin(2.0 * theta1), s2 = std::sin(2.0 * theta2);
  double l = part.l, n = w.n;
  return 0.25 * (w.alpha * (1.0 + c1) * (1.0 + c2) +
                 2.0 * w.beta * (1.0 - c1 * c2) +
                 w.gamma * (1.0 - c1) * (1.0 - c2) -
                 (1.0 + c1) * (1.0 - c2) +
                 (2.0 * l / n) * (c1 - c2) -
                 (2.0 * std::sqrt(l * (n - l)) / n) * s1 * s2);
}

namespace detail {

/// Populations and fidelity of the two-block product state as affine
/// coefficients: <W> = alpha*A + beta*B + gamma*C - D with A+B+C = 1.
struct ProductPoint {
  double a, b, c, d;
};

inline ProductPoint product_point(double theta1, double theta2, int n, int l) {
  double c1 = std::cos(2.0 * theta1), c2 = std::cos(2.0 * theta2);
  double s1 = std::sin(2.0 * theta1), s2 = std::sin(2.0 * theta2);
  double ln = static_cast<double>(l);
  double nn = static_cast<double>(n);
  return {(1.0 + c1) * (1.0 + c2) / 4.0,
          (1.0 - c1 * c2) / 2.0,
          (1.0 - c1) * (1.0 - c2) / 4.0,
          ((1.0 + c1) * (1.0 - c2) - (2.0 * ln / nn) * (c1 - c2) +
           (2.0 * std::sqrt(ln * (nn - ln)) / nn) * s1 * s2) /
              4.0};
}

/// Nelder-Mead on [0, pi/2]^2, evaluation clamped to the box.
template <typename F>
std::array<double, 3> nelder_mead_2d(F&& f, double x0, double y0, double tol,
                                     int max_iter = 400) {
  auto clamp = [](double v) { return std::clamp(v, 0.0, kHalfPi); };
  struct Vertex {
    double x, y, v;
  };
  double h = 0.02;
  std::array<Vertex, 3> s{{{x0, y0, 0.0},
                           {clamp(x0 + h), y0, 0.0},
                           {x0, clamp(y0 + h), 0.0}}};
  if (s[1].x == s[0].x) s[1].x = clamp(x0 - h);
  if (s[2].y == s[0].y) s[2].y = clamp(y0 - h);
  for (auto& v : s) v.v = f(clamp(v.x), clamp(v.y));

  for (int it = 0; it < max_iter; ++it) {
    std::sort(s.begin(), s.end(),
              [](const Vertex& a, const Vertex& b) { return a.v < b.v; });
    if (std::abs(s[2].v - s[0].v) < tol &&
        std::abs(s[2].x - s[0].x) + std::abs(s[2].y - s[0].y) < 1e-10)
      break;
    double cx = (s[0].x + s[1].x) / 2.0, cy = (s[0].y + s[1].y) / 2.0;
    auto eval = [&](double t) -> Vertex {
      double x = clamp(cx + t * (cx - s[2].x)), y = clamp(cy + t * (cy - s[2].y));
      return {x, y, f(x, y)};
    };
    Vertex r = eval(1.0);
    if (r.v < s[0].v) {
      Vertex e = eval(2.0);
      s[2] = e.v < r.v ? e : r;
    } else if (r.v < s[1].v) {
      s[2] = r;
    } else {
      Vertex c = eval(r.v < s[2].v ? 0.5 : -0.5);
      if (c.v < std::min(r.v, s[2].v)) {
        s[2] = c;
      } else {
        for (int i = 1; i < 3; ++i) {
          s[i].x = clamp((s[i].x + s[0].x) / 2.0);
          s[i].y = clamp((s[i].y + s[0].y) / 2.0);
          s[i].v = f(s[i].x, s[i].y);
        }
      }
    }
  }
  std::sort(s.begin(), s.end(),
            [](const Vertex& a, const Vertex& b) { return a.v < b.v; });
  return {s[0].x, s[0].y, s[0].v};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Validity certification
// ---------------------------------------------------------------------------

struct ValidityReport {
  bool valid = false;
  double min_value = 0.0;
  double theta1 = 0.0, theta2 = 0.0;
  int l = 0;
};

/// Certifies that <W_k> >= -refine_tolerance over every two-block product
/// state: coarse theta grid per admissible partition, then Nelder-Mead
/// refinement from the best cell.
inline ValidityReport is_valid_witness(const WitnessParams& w,
                                       int grid_resolution = 201,
                                       double refine_tolerance = 1e-9) {
  w.validate();
  if (grid_resolution < 2) throw std::invalid_argument("grid resolution too small");
  auto parts = admissible_partitions(w.n, w.k);
  if (parts.empty())
    throw unsupported_regime("no admissible two-block partition for (N, k)");

  ValidityReport best;
  best.min_value = std::numeric_limits<double>::infinity();
  for (const auto& part : parts) {
    double step = kHalfPi / (grid_resolution - 1);
    double grid_min = std::numeric_limits<double>::infinity();
    double gx = 0.0, gy = 0.0;
    for (int i = 0; i < grid_resolution; ++i) {
      for (int j = 0; j < grid_resolution; ++j) {
        double v = f_theta(i * step, j * step, w, part);
        if (v < grid_min) {
          grid_min = v;
          gx = i * step;
          gy = j * step;
        }
      }
    }
    auto refined = detail::nelder_mead_2d(
        [&](double x, double y) { return f_theta(x, y, w, part); }, gx, gy,
        refine_tolerance * 1e-3);
    double v = std::min(grid_min, refined[2]);
    if (v < best.min_value) {
      best.min_value = v;
      best.theta1 = refined[2] <= grid_min ? refined[0] : gx;
      best.theta2 = refined[2] <= grid_min ? refined[1] : gy;
      best.l = part.l;
    }
  }
  best.valid = best.min_value >= -refine_tolerance;
  return best;
}

/// tr[rho W] = alpha p0 + beta p1 + gamma p2 - F.
inline double evaluate_witness(const WitnessParams& w, const StateSummary& s) {
  return w.alpha * s.p0 + w.beta * s.p1 + w.gamma * s.p2 - s.fidelity;
}

// ---------------------------------------------------------------------------
// Parameter scan
// ---------------------------------------------------------------------------

/// Scans (alpha, beta, gamma) on a lattice of the given step within [0,1]^3
/// for the valid witness minimizing the expectation on `summary`.
///
/// The scan exploits monotonicity: validity is upward-closed in each
/// parameter, so for each (alpha, beta) only the minimal feasible gamma is
/// evaluated, and lattice cells that cannot beat the incumbent expectation
/// are skipped. Candidates are confirmed with is_valid_witness before they
/// are accepted; a rejected candidate contributes its violating product
/// state to the constraint set (cutting plane) and the cell is retried.
/// Safe to partition across workers by disjoint (alpha, beta) sub-grids
/// with a final reduction on the minimum expectation.
inline std::pair<WitnessParams, double> optimize_witness(
    const StateSummary& summary, int n, int k, double scan_resolution = 1e-3,
    int theta_samples = 81, double refine_tolerance = 1e-9) {
  summary.validate();
  if (scan_resolution <= 0.0 || scan_resolution > 1.0)
    throw std::invalid_argument("scan resolution must lie in (0, 1]");
  auto parts = admissible_partitions(n, k);
  if (parts.empty())
    throw unsupported_regime("no admissible two-block partition for (N, k)");

  // constraint samples alpha*A + beta*B + gamma*C >= D on a theta grid;
  // boundary theta (C = 0) reduces to beta >= l/N which is handled below
  std::vector<double> ca, cb, cc, cd;
  double beta_floor = 0.0;
  for (const auto& part : parts) {
    beta_floor = std::max(beta_floor, static_cast<double>(part.l) / n);
    double step = kHalfPi / (theta_samples - 1);
    for (int i = 1; i < theta_samples; ++i) {
      for (int j = 1; j < theta_samples; ++j) {
        auto pt = detail::product_point(i * step, j * step, n, part.l);
        if (pt.c <= 1e-12) continue;
        ca.push_back(pt.a);
        cb.push_back(pt.b);
        cc.push_back(pt.c);
        cd.push_back(pt.d);
      }
    }
  }

  std::vector<double> lattice;
  for (double v = 0.0; v <= 1.0 + 1e-12; v += scan_resolution)
    lattice.push_back(std::min(v, 1.0));

  auto gamma_required = [&](double a, double b) {
    double g = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) {
      double need = cd[i] - a * ca[i] - b * cb[i];
      if (need > g * cc[i]) g = need / cc[i];
    }
    return g;
  };
  auto ceil_to_lattice = [&](double v) {
    if (v > 1.0 + 1e-12) return std::numeric_limits<double>::infinity();
    double idx = std::ceil(v / scan_resolution - 1e-9);
    return std::min(idx * scan_resolution, 1.0);
  };

  WitnessParams best_params;
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  {
    // seed the incumbent with the top lattice corner when it is valid
    double top = lattice.back();
    WitnessParams corner{top, top, top, n, k};
    if (is_valid_witness(corner, 101, refine_tolerance).valid) {
      best = evaluate_witness(corner, summary);
      best_params = corner;
      found = true;
    }
  }
  for (double a : lattice) {
    if (found && a * summary.p0 - summary.fidelity >= best) break;
    for (double b : lattice) {
      if (b < beta_floor - refine_tolerance) continue;
      double base = a * summary.p0 + b * summary.p1 - summary.fidelity;
      if (found && base >= best) break;
      double g = ceil_to_lattice(std::max(0.0, gamma_required(a, b)));
      bool accepted = false;
      while (g <= 1.0 + 1e-12) {
        double obj = base + g * summary.p2;
        if (found && obj >= best) break;
        WitnessParams cand{a, b, std::min(g, 1.0), n, k};
        auto report = is_valid_witness(cand, 201, refine_tolerance);
        if (report.valid) {
          best = obj;
          best_params = cand;
          found = true;
          accepted = true;
          break;
        }
        // cutting plane: remember the violating product state
        auto pt = detail::product_point(report.theta1, report.theta2, n, report.l);
        if (pt.c > 1e-12) {
          ca.push_back(pt.a);
          cb.push_back(pt.b);
          cc.push_back(pt.c);
          cd.push_back(pt.d);
          double g2 = ceil_to_lattice(std::max(0.0, gamma_required(a, b)));
          g = g2 > g ? g2 : g + scan_resolution;
        } else {
          break;  // violation independent of gamma; cell infeasible
        }
      }
      (void)accepted;
    }
  }
  if (!found)
    throw scan_too_coarse("no valid witness on the parameter lattice at this step");
  return {best_params, best};
}

// ---------------------------------------------------------------------------
// Statistical resampling
// ---------------------------------------------------------------------------

struct HistogramBin {
  double left = 0.0, right = 0.0;
  std::uint64_t count = 0;
};

struct WitnessDistribution {
  double negative_fraction = 0.0;
  std::vector<HistogramBin> histogram;
};

/// Gaussian-resamples (p0, p1, p2, F) from the summary's standard errors,
/// clips populations to >= 0 and renormalizes them, and evaluates the
/// witness on each draw. Deterministic for a fixed seed.
inline WitnessDistribution witness_distribution(const WitnessParams& w,
                                                const StateSummary& summary,
                                                std::size_t n_resamples,
                                                std::uint64_t seed,
                                                std::size_t n_bins = 40) {
  if (!summary.errors)
    throw std::invalid_argument("summary carries no standard errors");
  if (n_resamples == 0) throw std::invalid_argument("need at least one resample");
  const SummaryErrors& e = *summary.errors;

  Rng rng(seed);
  std::vector<double> values;
  values.reserve(n_resamples);
  std::size_t negatives = 0;
  for (std::size_t i = 0; i < n_resamples; ++i) {
    double p0 = std::max(0.0, summary.p0 + e.p0 * rng.normal());
    double p1 = std::max(0.0, summary.p1 + e.p1 * rng.normal());
    double p2 = std::max(0.0, summary.p2 + e.p2 * rng.normal());
    double f = summary.fidelity + e.fidelity * rng.normal();
    double sum = p0 + p1 + p2;
    if (sum > 0.0) {
      p0 /= sum;
      p1 /= sum;
      p2 /= sum;
    }
    double v = w.alpha * p0 + w.beta * p1 + w.gamma * p2 - f;
    values.push_back(v);
    if (v < 0.0) ++negatives;
  }

  WitnessDistribution out;
  out.negative_fraction =
      static_cast<double>(negatives) / static_cast<double>(n_resamples);
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) hi = lo + 1e-12;
  double width = (hi - lo) / static_cast<double>(n_bins);
  out.histogram.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    out.histogram[b].left = lo + width * static_cast<double>(b);
    out.histogram[b].right = lo + width * static_cast<double>(b + 1);
  }
  for (double v : values) {
    auto b = std::min(n_bins - 1,
                      static_cast<std::size_t>((v - lo) / width));
    ++out.histogram[b].count;
  }
  return out;
}

}  // namespace wfuse
