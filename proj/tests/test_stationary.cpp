#include <doctest.h>

#include <cmath>

#include "mfg/errors.hpp"
#include "mfg/stationary.hpp"
#include "mfg/transport.hpp"
#include "mfg/philox.hpp"
#include "oracles.hpp"

using namespace mfg;

TEST_CASE("induced chain") {
  const auto model = oracles::random_validated_model(3, 2, 13);

  SUBCASE("single action returns the kernel slice") {
    auto one_action = model;
    one_action.n_actions = 1;
    for (auto& per_state : one_action.kernel.probs) per_state.resize(1);
    const auto v = StationaryControl::deterministic({0, 0, 0}, 1);
    const Matrix chain = induced_chain(one_action, v);
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y)
        CHECK(chain(x, y) == doctest::Approx(one_action.kernel.probs[x][0][y]));
  }

  SUBCASE("uniform control averages the slices") {
    const auto v = StationaryControl::uniform(3, 2);
    const Matrix chain = induced_chain(model, v);
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y)
        CHECK(chain(x, y) == doctest::Approx(0.5 * (model.kernel.probs[x][0][y] +
                                                    model.kernel.probs[x][1][y])));
  }

  SUBCASE("random control: stochastic rows, entrywise direct sum") {
    const auto v = oracles::random_control(3, 2, 21, 0);
    const Matrix chain = induced_chain(model, v);
    for (int x = 0; x < 3; ++x) {
      double row_sum = 0.0;
      for (int y = 0; y < 3; ++y) {
        double direct = 0.0;
        for (int u = 0; u < 2; ++u) direct += v.prob(x, u) * model.kernel.probs[x][u][y];
        CHECK(chain(x, y) == doctest::Approx(direct).epsilon(1e-14));
        row_sum += chain(x, y);
      }
      CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("invariant measures") {
  SUBCASE("one absorbing state") {
    Matrix p(1, 1);
    p(0, 0) = 1.0;
    CHECK(invariant_measure(p)[0] == doctest::Approx(1.0));
  }

  SUBCASE("two-state closed form") {
    Matrix p(2, 2);
    p(0, 0) = 0.7;
    p(0, 1) = 0.3;
    p(1, 0) = 0.6;
    p(1, 1) = 0.4;
    const Measure eta = invariant_measure(p);
    CHECK(eta[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(eta[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  SUBCASE("matches power iteration on a random chain") {
    const auto model = oracles::random_validated_model(4, 2, 3);
    const Matrix chain = induced_chain(model, oracles::random_control(4, 2, 3, 1));
    const Measure eta = invariant_measure(chain);
    const auto powered = oracles::power_iteration(chain, 10000);
    for (int x = 0; x < 4; ++x) CHECK(eta[x] == doctest::Approx(powered[x]).epsilon(1e-8));
  }

  SUBCASE("balance residual is tiny") {
    const auto model = oracles::random_validated_model(5, 3, 8);
    const Matrix chain = induced_chain(model, oracles::random_control(5, 3, 8, 2));
    const Measure eta = invariant_measure(chain);
    for (int y = 0; y < 5; ++y) {
      double acc = -eta[y];
      for (int x = 0; x < 5; ++x) acc += eta[x] * chain(x, y);
      CHECK(std::abs(acc) <= 1e-10);
    }
  }

  SUBCASE("reducible chain is flagged") {
    Matrix p(4, 4);
    p(0, 0) = 0.5;
    p(0, 1) = 0.5;
    p(1, 0) = 0.5;
    p(1, 1) = 0.5;
    p(2, 2) = 0.5;
    p(2, 3) = 0.5;
    p(3, 2) = 0.5;
    p(3, 3) = 0.5;
    CHECK_THROWS_AS(invariant_measure(p), NonUniqueInvariantError);
  }

  SUBCASE("transient states are fine") {
    Matrix p(3, 3);
    p(0, 1) = 1.0;          // 0 is transient
    p(1, 1) = 0.5;
    p(1, 2) = 0.5;
    p(2, 1) = 0.5;
    p(2, 2) = 0.5;
    const Measure eta = invariant_measure(p);
    CHECK(eta[0] == doctest::Approx(0.0));
    CHECK(eta[1] == doctest::Approx(0.5));
  }
}

TEST_CASE("control mixing realizes measure mixtures") {
  const auto model = oracles::random_validated_model(3, 2, 19);

  SUBCASE("theta = 1 returns the first control on its support") {
    const auto v1 = oracles::random_control(3, 2, 19, 5);
    const auto v2 = oracles::random_control(3, 2, 19, 6);
    const MixResult mixed = mix_controls(v1, v2, 1.0, model);
    const Measure eta1 = invariant_measure(induced_chain(model, v1));
    CHECK(transport::tv_distance(mixed.measure, eta1) <= 1e-12);
    for (int x = 0; x < 3; ++x)
      if (eta1[x] > 0)
        for (int u = 0; u < 2; ++u) CHECK(mixed.control.prob(x, u) == doctest::Approx(v1.prob(x, u)));
  }

  SUBCASE("identical controls are a fixed point for any theta") {
    const auto v = oracles::random_control(3, 2, 19, 7);
    const MixResult mixed = mix_controls(v, v, 0.37, model);
    for (int x = 0; x < 3; ++x)
      for (int u = 0; u < 2; ++u)
        CHECK(mixed.control.prob(x, u) == doctest::Approx(v.prob(x, u)).epsilon(1e-12));
    CHECK(mixed.certificate_tv <= 1e-9);
  }

  SUBCASE("deterministic blend certifies both sides") {
    const auto v1 = StationaryControl::deterministic({0, 1, 0}, 2);
    const auto v2 = StationaryControl::deterministic({1, 0, 1}, 2);
    const MixResult mixed = mix_controls(v1, v2, 0.5, model);
    CHECK(mixed.certificate_tv <= 1e-9);
    const Measure direct = invariant_measure(induced_chain(model, mixed.control));
    CHECK(transport::tv_distance(direct, mixed.measure) <= 1e-9);
  }

  SUBCASE("one hundred random triples on three models") {
    for (std::uint64_t m = 0; m < 3; ++m) {
      const auto mdl = oracles::random_validated_model(3 + static_cast<int>(m), 2, 40 + m);
      for (std::uint64_t t = 0; t < 34; ++t) {
        const auto v1 = oracles::random_control(mdl.n_states(), 2, 50 + m, t);
        const auto v2 = oracles::random_control(mdl.n_states(), 2, 60 + m, t);
        const double theta = mfg::rng::uniform01(70 + m, static_cast<std::uint32_t>(t), 0, 0, 0);
        CHECK(mix_controls(v1, v2, theta, mdl).certificate_tv <= 1e-9);
      }
    }
  }
}

TEST_CASE("occupation measures") {
  const auto model = oracles::random_validated_model(3, 2, 23);

  SUBCASE("deterministic control concentrates on its graph") {
    const auto v = StationaryControl::deterministic({1, 0, 1}, 2);
    const OccupationMeasure occ = occupation(model, v);
    const Measure eta = invariant_measure(induced_chain(model, v));
    for (int x = 0; x < 3; ++x) {
      CHECK(occ.joint(x, v.row(x)[1] == 1.0 ? 1 : 0) == doctest::Approx(eta[x]));
    }
  }

  SUBCASE("single state: joint is the action row") {
    MfgModel one;
    one.space.n_states = 1;
    one.space.metric = Matrix(1, 1);
    one.space.anchor = 0;
    one.n_actions = 2;
    one.kernel.probs = {{{1.0}, {1.0}}};
    one.cost = make_affine_cost(Matrix(1, 2), Matrix(1, 1));
    one.lyapunov.v_fn = {1.0};
    one.lyapunov.small_set = {0};
    one.lyapunov.beta1 = 0.5;
    one.lyapunov.beta2 = 1.0;
    one.lyapunov.minor_measure = Measure::dirac(1, 0);
    one.lyapunov.gamma = 0.5;
    const StationaryControl v({{0.3, 0.7}});
    const OccupationMeasure occ = occupation(one, v);
    CHECK(occ.joint(0, 0) == doctest::Approx(0.3));
    CHECK(occ.joint(0, 1) == doctest::Approx(0.7));
  }

  SUBCASE("marginal equals the invariant measure") {
    const auto v = oracles::random_control(3, 2, 23, 2);
    const OccupationMeasure occ = occupation(model, v);
    const Measure eta = invariant_measure(induced_chain(model, v));
    for (int x = 0; x < 3; ++x) {
      double marginal = 0.0;
      for (int u = 0; u < 2; ++u) marginal += occ.joint(x, u);
      CHECK(marginal == doctest::Approx(eta[x]).epsilon(1e-12));
    }
  }
}

TEST_CASE("control distance") {
  const auto a = StationaryControl::deterministic({0, 1}, 2);
  const auto b = StationaryControl::deterministic({1, 1}, 2);
  CHECK(control_distance(a, a) == doctest::Approx(0.0));
  CHECK(control_distance(a, b) == doctest::Approx(1.0));
  const StationaryControl c({{0.5, 0.5}, {0.0, 1.0}});
  CHECK(control_distance(a, c) == doctest::Approx(0.5));
  CHECK(control_distance(a, c) == doctest::Approx(control_distance(c, a)));
}

TEST_CASE("long-run averages") {
  SUBCASE("constant cost returns the constant") {
    auto model = oracles::random_validated_model(3, 2, 29);
    Matrix r1(3, 2);
    for (int x = 0; x < 3; ++x)
      for (int u = 0; u < 2; ++u) r1(x, u) = 2.5;
    model.cost = make_affine_cost(r1, Matrix(3, 3));
    const double avg =
        long_run_average(model, oracles::random_control(3, 2, 29, 1), Measure::uniform(3));
    CHECK(avg == doctest::Approx(2.5).epsilon(1e-12));
  }

  SUBCASE("single state mixes action costs") {
    MfgModel model;
    model.space.n_states = 1;
    model.space.metric = Matrix(1, 1);
    model.space.anchor = 0;
    model.n_actions = 2;
    model.kernel.probs = {{{1.0}, {1.0}}};
    Matrix r1(1, 2);
    r1(0, 0) = 1.0;
    r1(0, 1) = 3.0;
    model.cost = make_affine_cost(r1, Matrix(1, 1));
    model.lyapunov.v_fn = {1.0};
    model.lyapunov.small_set = {0};
    model.lyapunov.beta1 = 0.5;
    model.lyapunov.beta2 = 1.0;
    model.lyapunov.minor_measure = Measure::dirac(1, 0);
    model.lyapunov.gamma = 0.5;
    const StationaryControl v({{0.25, 0.75}});
    CHECK(long_run_average(model, v, Measure::dirac(1, 0)) ==
          doctest::Approx(0.25 * 1.0 + 0.75 * 3.0));
  }

  SUBCASE("ergodic theorem: closed form matches the simulated time average") {
    const auto model = oracles::random_validated_model(2, 2, 37);
    const auto v = oracles::random_control(2, 2, 37, 3);
    const Measure mu = Measure::uniform(2);
    const double exact = long_run_average(model, v, mu);
    const auto [mc, se] = oracles::mc_long_run_average(model, v, mu, 0, 1000000, 99);
    CHECK(std::abs(mc - exact) <= 3.0 * se + 1e-6);
  }
}
