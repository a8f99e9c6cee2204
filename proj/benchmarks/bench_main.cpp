#include <benchmark/benchmark.h>

#include "mfg/ergodic.hpp"
#include "mfg/meanfield.hpp"
#include "mfg/nperson.hpp"
#include "mfg/philox.hpp"
#include "mfg/splitchain.hpp"
#include "mfg/transport.hpp"

namespace {

mfg::Matrix line_metric(int n) {
  mfg::Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = std::abs(i - j);
  return m;
}

// smoothed random model with every state in the small set
mfg::MfgModel random_model(int n, int na, std::uint64_t seed) {
  mfg::MfgModel model;
  model.space.n_states = n;
  model.space.metric = line_metric(n);
  model.space.anchor = 0;
  model.n_actions = na;
  model.kernel.probs.resize(n);
  for (int x = 0; x < n; ++x) {
    model.kernel.probs[x].resize(na);
    for (int u = 0; u < na; ++u) {
      std::vector<double> row(n);
      double total = 0.0;
      for (int y = 0; y < n; ++y) {
        row[y] = 0.05 + mfg::rng::uniform01(seed, x, u, y, 0xB1u);
        total += row[y];
      }
      for (double& v : row) v = 0.8 * v / total;
      row[x] += 0.2;
      model.kernel.probs[x][u] = row;
    }
  }
  mfg::Matrix r1(n, na), phi(n, n);
  for (int x = 0; x < n; ++x) {
    for (int u = 0; u < na; ++u) r1(x, u) = mfg::rng::uniform01(seed, x, u, 0, 0xB2u);
    phi(x, x) = 1.0;
  }
  model.cost = mfg::make_affine_cost(r1, phi);
  model.lyapunov.v_fn.assign(n, 1.0);
  model.lyapunov.small_set.resize(n);
  for (int x = 0; x < n; ++x) model.lyapunov.small_set[x] = x;
  model.lyapunov.beta1 = 0.5;
  model.lyapunov.beta2 = 1.0;
  model.lyapunov.minor_measure = mfg::Measure::uniform(n);
  model.lyapunov.gamma = 0.05;
  return model;
}

void bm_wasserstein(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const mfg::Matrix metric = line_metric(n);
  std::vector<double> a(n), b(n);
  double ta = 0.0, tb = 0.0;
  for (int i = 0; i < n; ++i) {
    a[i] = 1.0 + (i % 7);
    b[i] = 1.0 + ((i * 3) % 5);
    ta += a[i];
    tb += b[i];
  }
  for (int i = 0; i < n; ++i) {
    a[i] /= ta;
    b[i] /= tb;
  }
  const mfg::Measure mu1{a}, mu2{b};
  for (auto _ : state)
    benchmark::DoNotOptimize(mfg::transport::wasserstein(mu1, mu2, 1.0, metric).distance);
}
BENCHMARK(bm_wasserstein)->Arg(16)->Arg(64)->Arg(128);

void bm_rvi(benchmark::State& state) {
  const auto model = random_model(static_cast<int>(state.range(0)), 3, 11);
  const auto mu = mfg::Measure::uniform(model.n_states());
  for (auto _ : state) benchmark::DoNotOptimize(mfg::solve_ergodic_rvi(model, mu).rho);
}
BENCHMARK(bm_rvi)->Arg(5)->Arg(20)->Arg(50);

void bm_mfg_solve(benchmark::State& state) {
  const auto model = random_model(static_cast<int>(state.range(0)), 2, 17);
  const auto mu0 = mfg::Measure::uniform(model.n_states());
  for (auto _ : state) benchmark::DoNotOptimize(mfg::solve_mfg(model, mu0).solution.rho);
}
BENCHMARK(bm_mfg_solve)->Arg(4)->Arg(10);

void bm_nash_sweep(benchmark::State& state) {
  const auto model = random_model(2, 2, 23);
  const int n_players = static_cast<int>(state.range(0));
  const auto initial = mfg::asymmetric_initials(model, n_players);
  mfg::CostBackend backend;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        mfg::solve_nash(model, n_players, initial, backend).profile.certified);
}
BENCHMARK(bm_nash_sweep)->Arg(3)->Arg(8);

void bm_split_kernel(benchmark::State& state) {
  const auto model = random_model(static_cast<int>(state.range(0)), 2, 31);
  const auto control = mfg::StationaryControl::uniform(model.n_states(), model.n_actions);
  const auto spec = mfg::make_split_spec(model, control);
  for (auto _ : state) benchmark::DoNotOptimize(mfg::split_kernel(spec).rows());
}
BENCHMARK(bm_split_kernel)->Arg(4)->Arg(10)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
