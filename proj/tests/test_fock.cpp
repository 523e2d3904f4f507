#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"
#include "wfuse/fock.hpp"
#include "wfuse/io.hpp"

using namespace wfuse;
using wfuse::testing::basis_states;
using wfuse::testing::random_mixed_state;
using wfuse::testing::random_pure_state;
using wfuse::testing::states_match;

namespace {

MixedState fused_model_mixture() {
  // 2/3 |W4><W4| + 1/3 vacuum
  MixedState s(4);
  s.add_branch(2.0 / 3.0, make_w_state(4));
  s.add_branch(1.0 / 3.0, PureState::vacuum(4));
  return s;
}

}  // namespace

TEST_CASE("occupation states enforce the two-excitation truncation") {
  CHECK_NOTHROW(OccupationState({1, 1, 0}));
  CHECK_NOTHROW(OccupationState({2, 0}));
  CHECK_THROWS_AS(OccupationState({1, 1, 1}), truncation_error);
  CHECK_THROWS_AS(OccupationState({2, 1}), truncation_error);
}

TEST_CASE("make_w_state produces uniform single-excitation amplitudes") {
  auto w3 = make_w_state(3);
  REQUIRE(w3.amplitudes().size() == 3);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(std::abs(w3.amplitude(OccupationState::single(3, j)) -
                   Complex(1.0 / std::sqrt(3.0))) < 1e-15);

  auto w1 = make_w_state(1, {0.0});
  CHECK(std::abs(w1.amplitude(OccupationState::single(1, 0)) - Complex(1.0)) <
        1e-15);

  auto w4 = make_w_state(4);
  for (std::size_t j = 0; j < 4; ++j)
    CHECK(std::abs(w4.amplitude(OccupationState::single(4, j)) - Complex(0.5)) <
          1e-15);

  CHECK_THROWS_AS(make_w_state(0, {}), std::invalid_argument);
  CHECK_THROWS_AS(make_w_state(3, {0.0}), std::invalid_argument);
}

TEST_CASE("make_w_state applies the requested phases") {
  double phi = 0.7;
  auto w = make_w_state(2, {0.0, phi});
  auto a1 = w.amplitude(OccupationState::single(2, 1));
  CHECK(std::abs(a1 - std::polar(1.0 / std::sqrt(2.0), phi)) < 1e-15);
  CHECK(w.is_normalized());
}

TEST_CASE("tensor products multiply amplitudes and concatenate modes") {
  auto one = PureState::single(1, 0);
  auto zero = PureState::vacuum(1);
  auto t = tensor(one, zero);
  CHECK(t.mode_count() == 2);
  CHECK(std::abs(t.amplitude(OccupationState({1, 0})) - Complex(1.0)) < 1e-15);

  auto w2w2 = tensor(make_w_state(2), make_w_state(2));
  REQUIRE(w2w2.amplitudes().size() == 4);
  for (const auto& [k, a] : w2w2.amplitudes()) CHECK(std::abs(a - Complex(0.5)) < 1e-15);

  auto padded = tensor(make_w_state(3), PureState::vacuum(3));
  CHECK(std::abs(padded.amplitude(OccupationState({1, 0, 0, 0, 0, 0})) -
                 Complex(1.0 / std::sqrt(3.0))) < 1e-15);

  auto pair = tensor(PureState::single(1, 0), PureState::single(1, 0));
  CHECK_THROWS_AS(tensor(pair, one), truncation_error);
}

TEST_CASE("project_excitations returns tr[P_n rho] and the renormalized part") {
  auto [p1, proj1] = project_excitations(make_w_state(3), 1);
  CHECK(p1 == Catch::Approx(1.0).margin(1e-12));
  CHECK(states_match(proj1.branches().front().state, make_w_state(3)));

  auto [p0, vac] = project_excitations(fused_model_mixture(), 0);
  CHECK(p0 == Catch::Approx(1.0 / 3.0).margin(1e-12));
  CHECK(states_match(vac.branches().front().state, PureState::vacuum(4)));

  PureState two(2);
  two.set(OccupationState({1, 1}), 1.0);
  auto [p2, proj2] = project_excitations(two, 2);
  CHECK(p2 == Catch::Approx(1.0).margin(1e-12));
  CHECK(states_match(proj2.branches().front().state, two));

  auto [pnone, empty] = project_excitations(make_w_state(3), 2);
  CHECK(pnone == 0.0);
  CHECK(empty.empty());

  CHECK_THROWS_AS(project_excitations(make_w_state(3), 3), std::invalid_argument);
}

TEST_CASE("populations of reference states") {
  auto p = populations(MixedState(make_w_state(3)));
  CHECK(p[0] == 0.0);
  CHECK(p[1] == Catch::Approx(1.0).margin(1e-12));
  CHECK(p[2] == 0.0);

  p = populations(fused_model_mixture());
  CHECK(p[0] == Catch::Approx(1.0 / 3.0).margin(1e-12));
  CHECK(p[1] == Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK(p[2] == 0.0);

  MixedState mix(2);
  PureState pair(2);
  pair.set(OccupationState({1, 1}), 1.0);
  mix.add_branch(0.5, PureState::vacuum(2));
  mix.add_branch(0.5, pair);
  p = populations(mix);
  CHECK(p[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(p[1] == 0.0);
  CHECK(p[2] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("fidelity against pure targets") {
  CHECK(fidelity(MixedState(make_w_state(3)), make_w_state(3)) ==
        Catch::Approx(1.0).margin(1e-12));
  CHECK(fidelity(fused_model_mixture(), make_w_state(4)) ==
        Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK(fidelity(MixedState(PureState::single(3, 0)), make_w_state(3)) ==
        Catch::Approx(1.0 / 3.0).margin(1e-12));
  CHECK_THROWS_AS(fidelity(MixedState(make_w_state(3)), make_w_state(4)),
                  std::invalid_argument);
}

TEST_CASE("decompose_w coefficients") {
  auto [c1, c2] = decompose_w(3);
  CHECK(c1 == Catch::Approx(1.0 / std::sqrt(3.0)).margin(1e-15));
  CHECK(c2 == Catch::Approx(std::sqrt(2.0) / std::sqrt(3.0)).margin(1e-15));

  auto [d1, d2] = decompose_w(2);
  CHECK(d1 == Catch::Approx(d2).margin(1e-15));

  auto [e1, e2] = decompose_w(4);
  CHECK(e1 == Catch::Approx(0.5).margin(1e-15));
  CHECK(e2 == Catch::Approx(std::sqrt(3.0) / 2.0).margin(1e-15));

  CHECK(c1 * c1 + c2 * c2 == Catch::Approx(1.0).margin(1e-15));
  CHECK_THROWS_AS(decompose_w(1), std::invalid_argument);
}

TEST_CASE("recursive decomposition rebuilds the W state for N in [2,8]") {
  for (std::size_t n = 2; n <= 8; ++n) {
    auto [c_single, c_rest] = decompose_w(n);
    auto rebuilt = superpose(
        {{c_single, tensor(PureState::single(1, 0), PureState::vacuum(n - 1))},
         {c_rest, tensor(PureState::vacuum(1), make_w_state(n - 1))}});
    CHECK(states_match(rebuilt, make_w_state(n), 1e-12));
  }
}

TEST_CASE("normalization and projector completeness on random states") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t modes = 1 + rng.below(5);
    auto mixed = random_mixed_state(rng, modes);
    auto p = populations(mixed);
    CHECK(p[0] + p[1] + p[2] == Catch::Approx(1.0).margin(1e-12));

    auto target = random_pure_state(rng, modes);
    double f = fidelity(mixed, target);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0 + 1e-12);
  }
}

TEST_CASE("beamsplitter is unitary and bunches photon pairs") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_pure_state(rng, 4);
    auto t = apply_beamsplitter(s, 1, 3);
    CHECK(t.norm2() == Catch::Approx(1.0).margin(1e-12));
  }

  // Hong-Ou-Mandel: |11> -> (|20> - |02>)/sqrt2
  PureState in(2);
  in.set(OccupationState({1, 1}), 1.0);
  auto out = apply_beamsplitter(in, 0, 1);
  CHECK(std::abs(out.amplitude(OccupationState({2, 0})) -
                 Complex(1.0 / std::sqrt(2.0))) < 1e-15);
  CHECK(std::abs(out.amplitude(OccupationState({0, 2})) -
                 Complex(-1.0 / std::sqrt(2.0))) < 1e-15);
  CHECK(std::abs(out.amplitude(OccupationState({1, 1}))) < 1e-15);

  // applying the splitter twice is the identity up to mode relabeling
  auto w = make_w_state(2);
  auto twice = apply_beamsplitter(apply_beamsplitter(w, 0, 1), 0, 1);
  CHECK(states_match(twice, w, 1e-12));
}

TEST_CASE("state serialization lists occupation strings with amplitudes") {
  auto j = to_json(make_w_state(3));
  CHECK(j["mode_count"] == 3);
  REQUIRE(j["amplitudes"].size() == 3);
  CHECK(j["amplitudes"][0][0] == "001");
  CHECK(j["amplitudes"][0][1].get<double>() ==
        Catch::Approx(1.0 / std::sqrt(3.0)));
  CHECK(j["amplitudes"][0][2].get<double>() == 0.0);

  auto jm = to_json(fused_model_mixture());
  CHECK(jm["branches"].size() == 2);
}
