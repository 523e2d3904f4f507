#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "test_helpers.hpp"
#include "wfuse/fock.hpp"
#include "wfuse/witness.hpp"

using namespace wfuse;

namespace {

// published optima for the four-partite witness (atomic and photonic states);
// printed to four decimals, so exactness statements carry a 5e-5 allowance
const WitnessParams kAtomicParams{0.0977, 0.7775, 1.0, 4, 4};
const WitnessParams kPhotonicParams{0.3854, 0.7525, 0.4101, 4, 4};
constexpr double kRoundingTol = 5e-5;

PureState two_block_product(double theta1, double theta2, int n, int l) {
  auto block = [](double theta, int size) {
    return superpose({{std::cos(theta), PureState::vacuum(size)},
                      {std::sin(theta), make_w_state(size)}});
  };
  return tensor(block(theta1, l), block(theta2, n - l));
}

PureState permute_modes(const PureState& s, const std::vector<std::size_t>& perm) {
  PureState out(s.mode_count());
  for (const auto& [k, a] : s.amplitudes()) {
    std::vector<std::uint8_t> occ(s.mode_count());
    for (std::size_t j = 0; j < perm.size(); ++j) occ[perm[j]] = k[j];
    out.set(OccupationState(occ), a);
  }
  return out;
}

double witness_value_fock(const WitnessParams& w, const PureState& state) {
  MixedState rho(state);
  auto p = populations(rho);
  double f = fidelity(rho, make_w_state(w.n));
  return w.alpha * p[0] + w.beta * p[1] + w.gamma * p[2] - f;
}

}  // namespace

TEST_CASE("witness parameter invariants") {
  CHECK_THROWS_AS((WitnessParams{-0.1, 1, 1, 4, 4}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((WitnessParams{1, 1, 1, 4, 2}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((WitnessParams{1, 1, 1, 4, 5}.validate()), std::invalid_argument);
  // k <= 2N/3: outside the two-block reduction
  CHECK_THROWS_AS((WitnessParams{1, 1, 1, 6, 4}.validate()), unsupported_regime);
  CHECK_NOTHROW(kAtomicParams.validate());
  CHECK(admissible_partitions(4, 4).size() == 2);
  CHECK(admissible_partitions(3, 3).size() == 1);
  CHECK(admissible_partitions(3, 3).front().l == 2);
}

TEST_CASE("state summary invariants") {
  StateSummary s{0.1, 0.8, 0.1, 0.7};
  CHECK_NOTHROW(s.validate());
  CHECK_THROWS_AS((StateSummary{0.5, 0.2, 0.1, 0.7}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS((StateSummary{0.1, 0.8, 0.1, 1.2}.validate()),
                  std::invalid_argument);
}

TEST_CASE("f_theta closed-form anchor points") {
  WitnessParams w{0.3, 0.7, 0.9, 4, 4};
  PartitionSpec part{3};
  CHECK(f_theta(0.0, 0.0, w, part) == Catch::Approx(w.alpha).margin(1e-15));
  CHECK(f_theta(0.0, kHalfPi, w, part) ==
        Catch::Approx(w.beta - 1.0 + 3.0 / 4.0).margin(1e-12));

  WitnessParams ones{1.0, 1.0, 1.0, 4, 4};
  CHECK(f_theta(kHalfPi / 2.0, kHalfPi / 2.0, ones, PartitionSpec{2}) ==
        Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("f_theta agrees with the state-algebra route on random inputs") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = rng.bernoulli(0.5) ? 3 : 4;
    auto parts = admissible_partitions(n, n);
    int l = parts[rng.below(parts.size())].l;
    double t1 = rng.uniform() * kHalfPi;
    double t2 = rng.uniform() * kHalfPi;
    WitnessParams w{rng.uniform(), rng.uniform(), rng.uniform(), n, n};
    double closed = f_theta(t1, t2, w, PartitionSpec{l});
    double algebra = witness_value_fock(w, two_block_product(t1, t2, n, l));
    CHECK(closed == Catch::Approx(algebra).margin(1e-12));
  }
}

TEST_CASE("f_theta swap symmetry holds at the balanced partition") {
  WitnessParams w{0.4, 0.8, 0.6, 4, 4};
  PartitionSpec half{2};
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    double t1 = rng.uniform() * kHalfPi;
    double t2 = rng.uniform() * kHalfPi;
    CHECK(f_theta(t1, t2, w, half) ==
          Catch::Approx(f_theta(t2, t1, w, half)).margin(1e-12));
  }
}

TEST_CASE("all-ones witness is valid with margin 1 - max fidelity") {
  auto report = is_valid_witness(WitnessParams{1, 1, 1, 4, 4});
  CHECK(report.valid);
  CHECK(report.min_value == Catch::Approx(0.25).margin(1e-9));

  auto report3 = is_valid_witness(WitnessParams{1, 1, 1, 3, 3});
  CHECK(report3.valid);
  CHECK(report3.min_value == Catch::Approx(1.0 / 3.0).margin(1e-9));
}

TEST_CASE("zero witness is invalid and the argmin exposes the violation") {
  auto report = is_valid_witness(WitnessParams{0, 0, 0, 3, 3});
  CHECK_FALSE(report.valid);
  CHECK(report.min_value == Catch::Approx(-2.0 / 3.0).margin(1e-9));
  // the product state |100> already violates it
  CHECK(witness_value_fock(WitnessParams{0, 0, 0, 3, 3}, PureState::single(3, 0)) ==
        Catch::Approx(-1.0 / 3.0).margin(1e-12));
}

TEST_CASE("published parameters are valid within publication rounding") {
  // the four-decimal rounding of the published values leaves a residual
  // minimum of order -1e-6, below the exact-validity floor
  auto exact = is_valid_witness(kAtomicParams);
  CHECK_FALSE(exact.valid);
  CHECK(exact.min_value > -kRoundingTol);

  CHECK(is_valid_witness(kAtomicParams, 201, kRoundingTol).valid);
  CHECK(is_valid_witness(kPhotonicParams, 201, kRoundingTol).valid);
}

TEST_CASE("witness validity is monotone in each parameter") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    WitnessParams w{rng.uniform(), rng.uniform(), rng.uniform(), 4, 4};
    double base = is_valid_witness(w, 61).min_value;
    for (int axis = 0; axis < 3; ++axis) {
      WitnessParams up = w;
      (axis == 0 ? up.alpha : axis == 1 ? up.beta : up.gamma) += 0.25;
      CHECK(is_valid_witness(up, 61).min_value >= base - 1e-9);
    }
  }
}

TEST_CASE("brute-force state oracle agrees with certification") {
  Rng rng(404);
  struct Case {
    WitnessParams w;
    bool expect_valid;
    double tol;
  };
  std::vector<Case> cases = {
      {{1, 1, 1, 3, 3}, true, 1e-8},
      {{1, 1, 1, 4, 4}, true, 1e-8},
      {kAtomicParams, true, kRoundingTol},
      {kPhotonicParams, true, kRoundingTol},
      {{0, 0, 0, 3, 3}, false, 1e-8},
      {{0.0, 0.3, 0.0, 4, 4}, false, 1e-8},
  };
  for (const auto& c : cases) {
    CHECK(is_valid_witness(c.w, 201, c.tol).valid == c.expect_valid);
    int n = c.w.n;
    auto parts = admissible_partitions(n, c.w.k);
    double worst = 1e9;
    const int trials = c.expect_valid ? 20000 : 4000;
    for (int t = 0; t < trials; ++t) {
      int l = parts[rng.below(parts.size())].l;
      double t1 = rng.uniform() * kHalfPi;
      double t2 = rng.uniform() * kHalfPi;
      auto state = two_block_product(t1, t2, n, l);
      if (t % 7 == 0) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t j = perm.size(); j > 1; --j)
          std::swap(perm[j - 1], perm[rng.below(j)]);
        state = permute_modes(state, perm);
      }
      worst = std::min(worst, witness_value_fock(c.w, state));
    }
    if (c.expect_valid) {
      CHECK(worst >= -c.tol);
    } else {
      CHECK(worst < -1e-3);  // the oracle finds a real violation
    }
  }
}

TEST_CASE("evaluate_witness is the affine population expression") {
  StateSummary s{0.397, 0.5, 0.103, 0.6};
  CHECK(evaluate_witness(WitnessParams{1, 1, 1, 4, 4}, s) ==
        Catch::Approx(1.0 - 0.6).margin(1e-15));
  CHECK(evaluate_witness(kAtomicParams, s) ==
        Catch::Approx(0.0977 * 0.397 + 0.7775 * 0.5 + 1.0 * 0.103 - 0.6)
            .margin(1e-15));

  // exact fused-model summary: frozen value -0.3473/3
  StateSummary model{1.0 / 3.0, 2.0 / 3.0, 0.0, 2.0 / 3.0};
  CHECK(evaluate_witness(kAtomicParams, model) ==
        Catch::Approx(-0.3473 / 3.0).margin(1e-12));
}

TEST_CASE("optimize_witness certifies the ideal tripartite W state") {
  StateSummary ideal{0.0, 1.0, 0.0, 1.0};
  auto [params, expectation] = optimize_witness(ideal, 3, 3, 0.02);
  CHECK(expectation == Catch::Approx(params.beta - 1.0).margin(1e-12));
  CHECK(expectation < 0.0);
  CHECK(params.beta == Catch::Approx(0.68).margin(1e-9));
  CHECK(is_valid_witness(params).valid);
}

TEST_CASE("optimize_witness on the exact fused-model summary beats -0.11") {
  StateSummary model{1.0 / 3.0, 2.0 / 3.0, 0.0, 2.0 / 3.0};
  auto [params, expectation] = optimize_witness(model, 4, 4, 0.02);
  CHECK(expectation <= -0.11);
  CHECK(is_valid_witness(params).valid);
}

TEST_CASE("optimize_witness matches the published photonic optimum's quality") {
  StateSummary photonic{0.067, 0.925, 0.008, 0.83};
  auto [params, expectation] = optimize_witness(photonic, 4, 4, 0.02);
  CHECK(is_valid_witness(params).valid);
  CHECK(expectation <= evaluate_witness(kPhotonicParams, photonic) + 1e-9);
}

TEST_CASE("optimize_witness reports no certification for separable summaries") {
  StateSummary separable{1.0, 0.0, 0.0, 0.0};
  auto [params, expectation] = optimize_witness(separable, 3, 3, 0.02);
  CHECK(params.alpha == 0.0);
  CHECK(expectation == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("optimize_witness rejects a uselessly coarse lattice") {
  StateSummary model{1.0 / 3.0, 2.0 / 3.0, 0.0, 2.0 / 3.0};
  CHECK_THROWS_AS(optimize_witness(model, 4, 4, 0.7), scan_too_coarse);
}

TEST_CASE("witness_distribution limits") {
  StateSummary certain{0.0, 1.0, 0.0, 1.0};
  certain.errors = SummaryErrors{0, 0, 0, 0};
  WitnessParams good{0.1, 0.8, 0.1, 3, 3};
  auto dist = witness_distribution(good, certain, 1000, 1);
  CHECK(dist.negative_fraction == 1.0);  // expectation 0.8 - 1 < 0

  WitnessParams ones{1, 1, 1, 3, 3};
  StateSummary positive{0.2, 0.7, 0.1, 0.5};
  positive.errors = SummaryErrors{0, 0, 0, 0};
  CHECK(witness_distribution(ones, positive, 1000, 1).negative_fraction == 0.0);

  StateSummary no_errors{0.2, 0.7, 0.1, 0.5};
  CHECK_THROWS_AS(witness_distribution(ones, no_errors, 10, 1),
                  std::invalid_argument);
}

TEST_CASE("witness_distribution is symmetric around a zero expectation") {
  // errors on F only: the resampled value is 0 - gaussian, symmetric
  StateSummary s{0.0, 1.0, 0.0, 1.0};
  s.errors = SummaryErrors{0, 0, 0, 0.05};
  WitnessParams ones{1, 1, 1, 3, 3};
  REQUIRE(evaluate_witness(ones, s) == 0.0);
  auto dist = witness_distribution(ones, s, 100000, 12345);
  CHECK(dist.negative_fraction == Catch::Approx(0.5).margin(0.01));

  std::uint64_t total = 0;
  for (const auto& b : dist.histogram) total += b.count;
  CHECK(total == 100000);

  auto again = witness_distribution(ones, s, 100000, 12345);
  CHECK(again.negative_fraction == dist.negative_fraction);
  CHECK(again.histogram.size() == dist.histogram.size());
  CHECK(again.histogram.front().count == dist.histogram.front().count);
}
