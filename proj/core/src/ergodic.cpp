#include "mfg/ergodic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mfg/errors.hpp"

namespace mfg {

Matrix freeze_cost(const MfgModel& model, const Measure& mu) {
  Matrix frozen(model.n_states(), model.n_actions);
  for (int x = 0; x < model.n_states(); ++x)
    for (int u = 0; u < model.n_actions; ++u) frozen(x, u) = model.cost(x, u, mu);
  return frozen;
}

int argmin_lowest(std::span<const double> values, double tie_eps) {
  double best = values[0];
  for (double v : values) best = std::min(best, v);
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] <= best + tie_eps) return static_cast<int>(i);
  return 0;
}

namespace {

// Q(x, u) = cost(x, u) + discount * sum_y P(y|x,u) value(y)
double action_value(const MfgModel& model, const Matrix& cost, std::span<const double> value,
                    int x, int u, double discount) {
  const auto row = model.kernel.row(x, u);
  double acc = 0.0;
  for (int y = 0; y < model.n_states(); ++y) acc += row[y] * value[y];
  return cost(x, u) + discount * acc;
}

std::vector<int> greedy_actions(const MfgModel& model, const Matrix& cost,
                                std::span<const double> value, double discount) {
  std::vector<int> actions(model.n_states());
  std::vector<double> q(model.n_actions);
  for (int x = 0; x < model.n_states(); ++x) {
    for (int u = 0; u < model.n_actions; ++u) q[u] = action_value(model, cost, value, x, u, discount);
    actions[x] = argmin_lowest(q);
  }
  return actions;
}

std::vector<double> evaluate_discounted_policy(const MfgModel& model, const Matrix& cost,
                                               const std::vector<int>& actions, double alpha) {
  const int n = model.n_states();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b(n);
  for (int x = 0; x < n; ++x) {
    const auto row = model.kernel.row(x, actions[x]);
    for (int y = 0; y < n; ++y) a(x, y) -= alpha * row[y];
    b(x) = cost(x, actions[x]);
  }
  Eigen::VectorXd v = a.partialPivLu().solve(b);
  return {v.data(), v.data() + n};
}

}  // namespace

DiscountedSolution solve_discounted_frozen(const MfgModel& model, const Matrix& frozen_cost,
                                           double alpha, const DiscountedOptions& opts) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ModelError("alpha must lie in (0,1)");
  const int n = model.n_states();

  // Howard policy iteration with exact evaluation; terminates at the exact
  // discounted optimum for finite action sets.
  std::vector<int> policy(n, 0);
  std::vector<double> value = evaluate_discounted_policy(model, frozen_cost, policy, alpha);
  int iterations = 0;
  for (; iterations < opts.max_iter; ++iterations) {
    std::vector<int> improved = policy;
    bool changed = false;
    std::vector<double> q(model.n_actions);
    for (int x = 0; x < n; ++x) {
      for (int u = 0; u < model.n_actions; ++u)
        q[u] = action_value(model, frozen_cost, value, x, u, alpha);
      // switch only on strict improvement to rule out tie cycling
      if (q[argmin_lowest(q)] < q[policy[x]] - 1e-13) {
        improved[x] = argmin_lowest(q);
        changed = true;
      }
    }
    if (!changed) break;
    policy = std::move(improved);
    value = evaluate_discounted_policy(model, frozen_cost, policy, alpha);
  }
  if (iterations >= opts.max_iter)
    throw IterationError("discounted policy iteration exceeded max_iter");

  DiscountedSolution out;
  out.alpha = alpha;
  out.iterations = iterations;
  out.value = value;
  out.selector = StationaryControl::deterministic(
      greedy_actions(model, frozen_cost, value, alpha), model.n_actions);
  double residual = 0.0;
  std::vector<double> q(model.n_actions);
  for (int x = 0; x < n; ++x) {
    for (int u = 0; u < model.n_actions; ++u)
      q[u] = action_value(model, frozen_cost, value, x, u, alpha);
    residual = std::max(residual, std::abs(value[x] - *std::min_element(q.begin(), q.end())));
  }
  out.bellman_residual = residual;
  return out;
}

DiscountedSolution solve_discounted(const MfgModel& model, const Measure& mu, double alpha,
                                    const DiscountedOptions& opts) {
  return solve_discounted_frozen(model, freeze_cost(model, mu), alpha, opts);
}

ErgodicSolution solve_ergodic_rvi_frozen(const MfgModel& model, const Matrix& frozen_cost,
                                         const RviOptions& opts) {
  const int n = model.n_states();
  const int anchor = model.anchor();
  std::vector<double> value(n, 0.0);
  if (opts.initial_value) {
    if (static_cast<int>(opts.initial_value->size()) != n)
      throw ModelError("initial value length mismatch");
    value = *opts.initial_value;
    const double v0 = value[anchor];
    for (double& v : value) v -= v0;
  }

  std::vector<double> applied(n), q(model.n_actions);
  double rho = 0.0;
  int iter = 0;
  bool converged = false;
  for (; iter < opts.max_iter; ++iter) {
    for (int x = 0; x < n; ++x) {
      for (int u = 0; u < model.n_actions; ++u)
        q[u] = action_value(model, frozen_cost, value, x, u, 1.0);
      applied[x] = *std::min_element(q.begin(), q.end());
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int x = 0; x < n; ++x) {
      const double d = applied[x] - value[x];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    rho = 0.5 * (lo + hi);
    const double span = hi - lo;
    if (opts.trace) opts.trace->push_back({iter, span, rho});
    const double shift = applied[anchor];
    for (int x = 0; x < n; ++x) value[x] = applied[x] - shift;
    if (span <= opts.tol_span) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw IterationError(
        "relative value iteration did not converge; consider the vanishing-discount solver");

  ErgodicSolution out;
  out.iterations = iter;
  out.rho = rho;
  out.value = value;
  out.selector =
      StationaryControl::deterministic(greedy_actions(model, frozen_cost, value, 1.0), model.n_actions);

  double residual = 0.0;
  for (int x = 0; x < n; ++x) {
    for (int u = 0; u < model.n_actions; ++u)
      q[u] = action_value(model, frozen_cost, value, x, u, 1.0);
    residual =
        std::max(residual, std::abs(value[x] + rho - *std::min_element(q.begin(), q.end())));
  }
  out.bellman_residual = residual;
  out.certified = residual <= opts.tol_bellman;
  return out;
}

ErgodicSolution solve_ergodic_rvi(const MfgModel& model, const Measure& mu,
                                  const RviOptions& opts) {
  return solve_ergodic_rvi_frozen(model, freeze_cost(model, mu), opts);
}

namespace {

// Neville polynomial extrapolation to t = 0.
double extrapolate_to_zero(std::span<const double> t, std::span<const double> f) {
  const int m = static_cast<int>(t.size());
  std::vector<double> p(f.begin(), f.end());
  for (int level = 1; level < m; ++level)
    for (int i = 0; i < m - level; ++i)
      p[i] = (t[i + level] * p[i] - t[i] * p[i + 1]) / (t[i + level] - t[i]);
  return p[0];
}

struct DiscountedPoint {
  double t = 0.0;                 // 1 - alpha
  std::vector<double> vbar;       // anchored discounted value
  double rho_hat = 0.0;           // (1 - alpha) * V(anchor)
  std::vector<int> actions;       // greedy actions, lowest-index ties
};

}  // namespace

ErgodicSolution solve_ergodic_vanishing_discount_frozen(const MfgModel& model,
                                                        const Matrix& frozen_cost,
                                                        std::span<const double> alphas,
                                                        const VanishingDiscountOptions& opts) {
  if (alphas.empty()) throw ModelError("alpha sequence must be nonempty");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0 && alphas[i] < 1.0)) throw ModelError("alphas must lie in (0,1)");
    if (i > 0 && alphas[i] <= alphas[i - 1]) throw ModelError("alphas must increase");
  }
  if (alphas.back() < 0.999) throw ModelError("alpha sequence must reach at least 0.999");

  const int n = model.n_states();
  const int anchor = model.anchor();

  auto solve_point = [&](double alpha) {
    DiscountedSolution d = solve_discounted_frozen(model, frozen_cost, alpha, opts.discounted);
    DiscountedPoint pt;
    pt.t = 1.0 - alpha;
    pt.rho_hat = (1.0 - alpha) * d.value[anchor];
    pt.vbar.resize(n);
    for (int x = 0; x < n; ++x) pt.vbar[x] = d.value[x] - d.value[anchor];
    pt.actions = greedy_actions(model, frozen_cost, d.value, alpha);
    return pt;
  };

  std::vector<DiscountedPoint> points;
  points.reserve(alphas.size());
  for (double alpha : alphas) points.push_back(solve_point(alpha));

  // trailing run of alphas sharing the minimizing selector; the limit is
  // smooth in (1 - alpha) along such a run
  auto run_start = [&] {
    std::size_t first = points.size() - 1;
    while (first > 0 && points[first - 1].actions == points.back().actions) --first;
    return first;
  };

  // if the selector flips right before the largest alpha, the run is too
  // short to extrapolate; subdivide the last interval (log-spaced, staying
  // inside the given alpha range) until it stabilizes or the budget ends
  for (int refine = 0; refine < 8; ++refine) {
    const std::size_t first = run_start();
    if (points.size() - first >= 3 || first == 0) break;
    const double t_new = std::sqrt(points[first - 1].t * points[first].t);
    DiscountedPoint pt = solve_point(1.0 - t_new);
    points.insert(points.begin() + static_cast<long>(first), std::move(pt));
  }

  const std::size_t run = std::min<std::size_t>(points.size() - run_start(), 4);
  const std::size_t lo = points.size() - run;

  auto estimate = [&](std::size_t from, std::size_t count) {
    std::vector<double> t(count);
    for (std::size_t k = 0; k < count; ++k) t[k] = points[from + k].t;
    std::vector<double> rho_nodes(count), v_nodes(count);
    for (std::size_t k = 0; k < count; ++k) rho_nodes[k] = points[from + k].rho_hat;
    std::pair<std::vector<double>, double> out;
    out.second = extrapolate_to_zero(t, rho_nodes);
    out.first.resize(n);
    for (int x = 0; x < n; ++x) {
      for (std::size_t k = 0; k < count; ++k) v_nodes[k] = points[from + k].vbar[x];
      out.first[x] = extrapolate_to_zero(t, v_nodes);
    }
    return out;
  };

  auto [v_limit, rho_limit] = estimate(lo, run);
  bool sequence_converged = false;
  if (run >= 2) {
    auto [v_prev, rho_prev] = estimate(lo, run - 1);
    double diff = std::abs(rho_limit - rho_prev);
    for (int x = 0; x < n; ++x) diff = std::max(diff, std::abs(v_limit[x] - v_prev[x]));
    sequence_converged = diff <= opts.tol_vd;
    if (opts.trace)
      opts.trace->push_back({static_cast<int>(points.size()), diff, rho_limit});
  }

  ErgodicSolution out;
  out.iterations = static_cast<int>(points.size());
  out.rho = rho_limit;
  out.value = std::move(v_limit);
  out.value[anchor] = 0.0;
  out.selector = StationaryControl::deterministic(points.back().actions, model.n_actions);

  double residual = 0.0;
  std::vector<double> q(model.n_actions);
  for (int x = 0; x < n; ++x) {
    for (int u = 0; u < model.n_actions; ++u)
      q[u] = action_value(model, frozen_cost, out.value, x, u, 1.0);
    residual = std::max(residual,
                        std::abs(out.value[x] + out.rho - *std::min_element(q.begin(), q.end())));
  }
  out.bellman_residual = residual;
  out.certified = sequence_converged && residual <= opts.tol_bellman;
  return out;
}

ErgodicSolution solve_ergodic_vanishing_discount(const MfgModel& model, const Measure& mu,
                                                 std::span<const double> alphas,
                                                 const VanishingDiscountOptions& opts) {
  return solve_ergodic_vanishing_discount_frozen(model, freeze_cost(model, mu), alphas, opts);
}

EquationReport verify_ergodic_equation_frozen(const MfgModel& model, const Matrix& frozen_cost,
                                              const ErgodicSolution& sol) {
  const int n = model.n_states();
  EquationReport report;
  report.residual.resize(n);
  report.selector_gap.resize(n);
  std::vector<double> q(model.n_actions);
  for (int x = 0; x < n; ++x) {
    for (int u = 0; u < model.n_actions; ++u)
      q[u] = action_value(model, frozen_cost, sol.value, x, u, 1.0);
    const double best = *std::min_element(q.begin(), q.end());
    report.residual[x] = std::abs(sol.value[x] + sol.rho - best);
    double chosen = 0.0;
    for (int u = 0; u < model.n_actions; ++u) chosen += sol.selector.prob(x, u) * q[u];
    report.selector_gap[x] = chosen - best;
  }
  report.max_residual = *std::max_element(report.residual.begin(), report.residual.end());
  report.max_selector_gap =
      *std::max_element(report.selector_gap.begin(), report.selector_gap.end());
  return report;
}

EquationReport verify_ergodic_equation(const MfgModel& model, const Measure& mu,
                                       const ErgodicSolution& sol) {
  return verify_ergodic_equation_frozen(model, freeze_cost(model, mu), sol);
}

namespace {

// expected (cost - rho) accumulated until the chain enters `ball`, plus V at
// the entry state, for a fixed deterministic policy on the exterior
std::vector<double> first_return_values(const MfgModel& model, const Matrix& frozen_cost,
                                        const std::vector<int>& outside,
                                        const std::vector<int>& exterior_actions, double rho,
                                        std::span<const double> value,
                                        const std::vector<char>& in_ball) {
  const int m = static_cast<int>(outside.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    const int x = outside[i];
    const auto row = model.kernel.row(x, exterior_actions[i]);
    double c = frozen_cost(x, exterior_actions[i]) - rho;
    for (int j = 0; j < m; ++j) a(i, j) -= row[outside[j]];
    for (int y = 0; y < model.n_states(); ++y)
      if (in_ball[y]) c += row[y] * value[y];
    b(i) = c;
  }
  Eigen::VectorXd w = a.partialPivLu().solve(b);
  return {w.data(), w.data() + m};
}

}  // namespace

FirstReturnReport verify_first_return_representation(const MfgModel& model, const Measure& mu,
                                                     const ErgodicSolution& sol,
                                                     const std::vector<int>& ball,
                                                     long policy_budget) {
  if (ball.empty()) throw ModelError("ball must be nonempty");
  const int n = model.n_states();
  std::vector<char> in_ball(n, 0);
  for (int x : ball) {
    if (x < 0 || x >= n) throw ModelError("ball state out of range");
    in_ball[x] = 1;
  }
  if (!in_ball[model.anchor()]) throw ModelError("ball must contain the anchor state");

  FirstReturnReport report;
  report.residual.assign(n, 0.0);

  std::vector<int> outside;
  for (int x = 0; x < n; ++x)
    if (!in_ball[x]) outside.push_back(x);
  if (outside.empty()) {  // immediate-return degenerate case
    report.enumerated = true;
    return report;
  }

  const Matrix frozen = freeze_cost(model, mu);
  const int m = static_cast<int>(outside.size());
  double n_policies = 1.0;
  for (int i = 0; i < m; ++i) n_policies *= model.n_actions;
  const bool enumerate = n_policies <= static_cast<double>(policy_budget);

  std::vector<double> best(m, std::numeric_limits<double>::infinity());
  if (enumerate) {
    std::vector<int> actions(m, 0);
    while (true) {
      const auto w =
          first_return_values(model, frozen, outside, actions, sol.rho, sol.value, in_ball);
      for (int i = 0; i < m; ++i) best[i] = std::min(best[i], w[i]);
      ++report.policies_checked;
      int pos = 0;
      while (pos < m && ++actions[pos] == model.n_actions) actions[pos++] = 0;
      if (pos == m) break;
    }
    report.enumerated = true;
  } else {
    // one-sided: the solution's own selector must already attain V
    std::vector<int> actions(m);
    for (int i = 0; i < m; ++i) {
      const auto row = sol.selector.row(outside[i]);
      int amax = 0;
      for (int u = 1; u < model.n_actions; ++u)
        if (row[u] > row[amax]) amax = u;
      actions[i] = amax;
    }
    best = first_return_values(model, frozen, outside, actions, sol.rho, sol.value, in_ball);
    report.policies_checked = 1;
    report.enumerated = false;
  }

  for (int i = 0; i < m; ++i)
    report.residual[outside[i]] = std::abs(sol.value[outside[i]] - best[i]);
  report.max_residual = *std::max_element(report.residual.begin(), report.residual.end());
  return report;
}

SelectorReport verify_selector_characterization(const MfgModel& model, const Measure& mu,
                                                const ErgodicSolution& sol,
                                                const StationaryControl& candidate, double tol) {
  const Matrix frozen = freeze_cost(model, mu);
  const Measure eta = invariant_measure(induced_chain(model, candidate));

  SelectorReport report;
  report.gap = long_run_average_frozen(model, candidate, frozen) - sol.rho;

  std::vector<double> q(model.n_actions);
  for (int x = 0; x < model.n_states(); ++x) {
    for (int u = 0; u < model.n_actions; ++u)
      q[u] = action_value(model, frozen, sol.value, x, u, 1.0);
    double chosen = 0.0;
    for (int u = 0; u < model.n_actions; ++u) chosen += candidate.prob(x, u) * q[u];
    const double res = chosen - (sol.value[x] + sol.rho);
    if (eta[x] > 1e-12)
      report.max_residual_on_support = std::max(report.max_residual_on_support, res);
    else
      report.max_residual_off_support = std::max(report.max_residual_off_support, res);
  }
  report.equivalent =
      (std::abs(report.gap) <= tol) == (std::abs(report.max_residual_on_support) <= tol);
  return report;
}

}  // namespace mfg
