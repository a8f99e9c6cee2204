#include "mfg/nperson.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "mfg/errors.hpp"
#include "mfg/philox.hpp"
#include "mfg/transport.hpp"

namespace mfg {
namespace {

Measure mean_of_others(const std::vector<Measure>& pi, int player) {
  const int n = pi[0].size();
  const int count = static_cast<int>(pi.size()) - 1;
  std::vector<double> acc(n, 0.0);
  for (std::size_t j = 0; j < pi.size(); ++j) {
    if (static_cast<int>(j) == player) continue;
    for (int y = 0; y < n; ++y) acc[y] += pi[j][y] / count;
  }
  return Measure(std::move(acc));
}

IntegratedCost enumerate_cost(const MfgModel& model, int player, const std::vector<Measure>& pi,
                              const CostBackend& backend) {
  const int n = model.n_states();
  const int n_opponents = static_cast<int>(pi.size()) - 1;
  double tuples = 1.0;
  for (int j = 0; j < n_opponents; ++j) tuples *= n;
  if (tuples > backend.enumeration_budget)
    throw BackendError("enumerate backend: tuple count exceeds budget");

  std::vector<int> opponents;
  for (std::size_t j = 0; j < pi.size(); ++j)
    if (static_cast<int>(j) != player) opponents.push_back(static_cast<int>(j));

  IntegratedCost out;
  out.value = Matrix(n, model.n_actions);
  out.std_error = Matrix(n, model.n_actions);

  std::vector<int> tuple(n_opponents, 0);
  while (true) {
    double weight = 1.0;
    for (int j = 0; j < n_opponents; ++j) weight *= pi[opponents[j]][tuple[j]];
    if (weight > 0.0) {
      const Measure emp = transport::empirical(tuple, n);
      for (int x = 0; x < n; ++x)
        for (int u = 0; u < model.n_actions; ++u)
          out.value(x, u) += weight * model.cost(x, u, emp);
    }
    int pos = 0;
    while (pos < n_opponents && ++tuple[pos] == n) tuple[pos++] = 0;
    if (pos == n_opponents) break;
  }
  return out;
}

IntegratedCost monte_carlo_cost(const MfgModel& model, int player, const std::vector<Measure>& pi,
                                const CostBackend& backend) {
  const int n = model.n_states();
  const int na = model.n_actions;
  const long samples = backend.sample_count;
  if (samples < 2) throw BackendError("monte-carlo backend needs at least 2 samples");

  std::vector<int> opponents;
  for (std::size_t j = 0; j < pi.size(); ++j)
    if (static_cast<int>(j) != player) opponents.push_back(static_cast<int>(j));

  // fixed-size chunks merged in chunk order: results are independent of the
  // worker count by construction
  constexpr long kChunk = 1024;
  const long n_chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> chunk_sum(n_chunks), chunk_sumsq(n_chunks);

  auto run_chunk = [&](long c) {
    std::vector<double>& sum = chunk_sum[c];
    std::vector<double>& sumsq = chunk_sumsq[c];
    sum.assign(static_cast<std::size_t>(n) * na, 0.0);
    sumsq.assign(static_cast<std::size_t>(n) * na, 0.0);
    std::vector<int> draw(opponents.size());
    const long lo = c * kChunk;
    const long hi = std::min(samples, lo + kChunk);
    for (long s = lo; s < hi; ++s) {
      for (std::size_t j = 0; j < opponents.size(); ++j) {
        const double u01 = rng::uniform01(backend.seed, static_cast<std::uint32_t>(s),
                                          static_cast<std::uint32_t>(j),
                                          static_cast<std::uint32_t>(player), 0x4d43u);
        draw[j] = rng::sample_discrete(pi[opponents[j]].mass(), u01);
      }
      const Measure emp = transport::empirical(draw, n);
      for (int x = 0; x < n; ++x)
        for (int u = 0; u < na; ++u) {
          const double v = model.cost(x, u, emp);
          sum[static_cast<std::size_t>(x) * na + u] += v;
          sumsq[static_cast<std::size_t>(x) * na + u] += v * v;
        }
    }
  };

  const int workers = std::max(1, backend.threads);
  if (workers == 1) {
    for (long c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    std::atomic_long next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (long c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) run_chunk(c);
      });
    for (auto& t : pool) t.join();
  }

  IntegratedCost out;
  out.value = Matrix(n, na);
  out.std_error = Matrix(n, na);
  for (int x = 0; x < n; ++x)
    for (int u = 0; u < na; ++u) {
      const std::size_t idx = static_cast<std::size_t>(x) * na + u;
      double sum = 0.0, sumsq = 0.0;
      for (long c = 0; c < n_chunks; ++c) {
        sum += chunk_sum[c][idx];
        sumsq += chunk_sumsq[c][idx];
      }
      const double mean = sum / samples;
      const double var = std::max(0.0, (sumsq - sum * mean) / (samples - 1));
      out.value(x, u) = mean;
      out.std_error(x, u) = std::sqrt(var / samples);
    }
  return out;
}

}  // namespace

IntegratedCost integrated_cost(const MfgModel& model, int player, const std::vector<Measure>& pi,
                               const CostBackend& backend) {
  if (pi.size() < 2) throw ModelError("integrated cost needs at least 2 players");
  if (player < 0 || player >= static_cast<int>(pi.size()))
    throw ModelError("player index out of range");
  if (backend.enumeration_budget <= 0.0 || backend.sample_count <= 0)
    throw ModelError("backend budgets must be positive");
  for (const Measure& m : pi)
    if (m.size() != model.n_states()) throw ModelError("measure/state-space mismatch");

  switch (backend.mode) {
    case CostBackendMode::affine_exact: {
      if (model.cost.kind != CostKind::tabular_affine)
        throw BackendError("affine-exact backend requires a tabular-affine cost");
      // linearity collapses the expected empirical measure to the plain mean
      const Measure mbar = mean_of_others(pi, player);
      IntegratedCost out;
      out.value = freeze_cost(model, mbar);
      out.std_error = Matrix(model.n_states(), model.n_actions);
      return out;
    }
    case CostBackendMode::enumerate:
      return enumerate_cost(model, player, pi, backend);
    case CostBackendMode::monte_carlo:
      return monte_carlo_cost(model, player, pi, backend);
  }
  throw BackendError("unknown backend mode");
}

std::pair<Measure, ErgodicSolution> player_best_response(const MfgModel& model, int player,
                                                         const std::vector<Measure>& pi,
                                                         const CostBackend& backend,
                                                         const RviOptions& rvi) {
  const IntegratedCost ic = integrated_cost(model, player, pi, backend);
  ErgodicSolution sol = solve_ergodic_rvi_frozen(model, ic.value, rvi);
  Measure eta = invariant_measure(induced_chain(model, sol.selector));
  return {std::move(eta), std::move(sol)};
}

NashSolveResult solve_nash(const MfgModel& model, int n_players,
                           const std::vector<Measure>& initial, const CostBackend& backend,
                           const NashOptions& opts) {
  if (n_players < 2) throw ModelError("N-person game needs at least 2 players");
  if (static_cast<int>(initial.size()) != n_players)
    throw ModelError("need one initial measure per player");
  model.validate_dimensions();

  NashSolveResult result;
  std::vector<Measure> pis = initial;
  bool converged = false;
  int rounds = 0;

  for (int k = 0; k < opts.max_rounds; ++k) {
    const double lambda = opts.damping.at(k);
    double max_step = 0.0;
    double max_defect = 0.0;
    double max_rho = -std::numeric_limits<double>::infinity();

    std::vector<Measure> staged = pis;  // only read in Jacobi mode
    for (int i = 0; i < n_players; ++i) {
      const std::vector<Measure>& env = opts.jacobi ? staged : pis;
      auto [eta_i, sol_i] = player_best_response(model, i, env, backend, opts.rvi);
      max_defect = std::max(max_defect, transport::tv_distance(pis[i], eta_i));
      max_rho = std::max(max_rho, sol_i.rho);
      Measure updated = mix(eta_i, pis[i], lambda);
      max_step = std::max(max_step, transport::tv_distance(pis[i], updated));
      pis[i] = std::move(updated);
    }
    result.trace.push_back({k, max_step, max_rho, lambda});
    rounds = k + 1;
    if (max_defect <= opts.tol) {
      converged = true;
      break;
    }
  }

  // assemble the profile at the converged environment: each player's control
  // is the best response, each measure its exact invariant
  NashProfile profile;
  profile.n_players = n_players;
  profile.converged = converged;
  profile.rounds = rounds;
  for (int i = 0; i < n_players; ++i) {
    auto [eta_i, sol_i] = player_best_response(model, i, pis, backend, opts.rvi);
    profile.controls.push_back(sol_i.selector);
    profile.measures.push_back(eta_i);
    profile.values.push_back(sol_i.value);
    profile.rhos.push_back(sol_i.rho);
  }

  const NashCheck check = verify_nash(model, profile, backend, opts);
  profile.residuals.resize(n_players);
  for (int i = 0; i < n_players; ++i) {
    profile.residuals[i].invariance_tv = check.invariance_tv[i];
    profile.residuals[i].deviation_gap = check.deviation_gap[i];
  }
  profile.certified = converged && check.certified;
  result.profile = std::move(profile);
  return result;
}

NashCheck verify_nash(const MfgModel& model, const NashProfile& profile,
                      const CostBackend& backend, const NashOptions& opts) {
  NashCheck check;
  const int n_players = profile.n_players;
  check.invariance_tv.resize(n_players);
  check.deviation_gap.resize(n_players);

  double n_policies = 1.0;
  for (int x = 0; x < model.n_states(); ++x) n_policies *= model.n_actions;
  check.deviations_enumerated = n_policies <= static_cast<double>(opts.deviation_budget);

  bool ok = true;
  for (int i = 0; i < n_players; ++i) {
    const Measure eta = invariant_measure(induced_chain(model, profile.controls[i]));
    check.invariance_tv[i] = transport::tv_distance(profile.measures[i], eta);

    const IntegratedCost ic = integrated_cost(model, i, profile.measures, backend);
    const double achieved = long_run_average_frozen(model, profile.controls[i], ic.value);

    double best_dev;
    if (check.deviations_enumerated) {
      best_dev = std::numeric_limits<double>::infinity();
      std::vector<int> actions(model.n_states(), 0);
      while (true) {
        const auto policy = StationaryControl::deterministic(actions, model.n_actions);
        best_dev =
            std::min(best_dev, long_run_average_frozen(model, policy, ic.value));
        int pos = 0;
        while (pos < model.n_states() && ++actions[pos] == model.n_actions) actions[pos++] = 0;
        if (pos == model.n_states()) break;
      }
    } else {
      const ErgodicSolution br = solve_ergodic_rvi_frozen(model, ic.value, opts.rvi);
      best_dev = br.rho;
    }
    // negative gap = some deviation beats the profile by that much
    check.deviation_gap[i] = best_dev - achieved;

    // monte-carlo uncertainty widens the certification slack
    double mc_slack = 0.0;
    if (backend.mode == CostBackendMode::monte_carlo) {
      for (int x = 0; x < model.n_states(); ++x)
        for (int u = 0; u < model.n_actions; ++u)
          mc_slack = std::max(mc_slack, 4.0 * ic.std_error(x, u));
    }
    if (check.invariance_tv[i] > opts.tol_invariance ||
        check.deviation_gap[i] < -(opts.tol_deviation + mc_slack))
      ok = false;
  }
  check.certified = ok;
  return check;
}

std::vector<Measure> asymmetric_initials(const MfgModel& model, int n_players, double spread) {
  const int n = model.n_states();
  const int anchor = model.anchor();
  int far = 0;
  for (int y = 0; y < n; ++y)
    if (model.space.metric(anchor, y) > model.space.metric(anchor, far)) far = y;
  if (far == anchor) far = (anchor + 1) % n;

  std::vector<Measure> out;
  for (int i = 0; i < n_players; ++i) {
    const double t = n_players == 1 ? 0.5 : static_cast<double>(i) / (n_players - 1);
    std::vector<double> mass(n, (1.0 - spread) / n);
    mass[anchor] += spread * (1.0 - t);
    mass[far] += spread * t;
    out.push_back(Measure(std::move(mass)));
  }
  return out;
}

ConvergenceTable convergence_study(const MfgModel& model, const std::vector<int>& n_list,
                                   const MfgSolution& mfg_sol, const CostBackend& backend,
                                   const NashOptions& opts) {
  if (!mfg_sol.certified) throw ModelError("convergence study needs a certified MFG solution");
  for (std::size_t k = 1; k < n_list.size(); ++k)
    if (n_list[k] <= n_list[k - 1]) throw ModelError("N list must increase");

  ConvergenceTable table;
  for (int n_players : n_list) {
    const auto initial = asymmetric_initials(model, n_players);
    const NashSolveResult run = solve_nash(model, n_players, initial, backend, opts);
    const NashProfile& p = run.profile;

    ConvergenceRow row;
    row.n_players = n_players;
    row.certified = p.certified;
    for (int i = 0; i < n_players; ++i) {
      row.gap_rho = std::max(row.gap_rho, std::abs(p.rhos[i] - mfg_sol.rho));
      row.gap_pi = std::max(row.gap_pi, transport::tv_distance(p.measures[i], mfg_sol.eta));
      for (int j = i + 1; j < n_players; ++j) {
        row.spread_rho = std::max(row.spread_rho, std::abs(p.rhos[i] - p.rhos[j]));
        row.spread_pi =
            std::max(row.spread_pi, transport::tv_distance(p.measures[i], p.measures[j]));
        double dv = 0.0;
        for (int x = 0; x < model.n_states(); ++x)
          dv = std::max(dv, std::abs(p.values[i][x] - p.values[j][x]));
        row.spread_value = std::max(row.spread_value, dv);
      }
    }

    // uniqueness surrogate: flag any frozen-cost argmin tie at the profile
    for (int i = 0; i < n_players && row.certified; ++i) {
      const IntegratedCost ic = integrated_cost(model, i, p.measures, backend);
      std::vector<double> q(model.n_actions);
      for (int x = 0; x < model.n_states(); ++x) {
        for (int u = 0; u < model.n_actions; ++u) {
          double acc = 0.0;
          for (int y = 0; y < model.n_states(); ++y)
            acc += model.kernel.row(x, u)[y] * p.values[i][y];
          q[u] = ic.value(x, u) + acc;
        }
        std::sort(q.begin(), q.end());
        if (model.n_actions > 1 && q[1] - q[0] <= 1e-9) table.selector_unique = false;
      }
    }
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace mfg
