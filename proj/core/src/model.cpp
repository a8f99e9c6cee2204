#include "mfg/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfg/errors.hpp"
#include "mfg/transport.hpp"

namespace mfg {

namespace {
constexpr double kDriftTol = 1e-10;  // slack allowed on analytic inequalities
}

void StateSpace::validate() const {
  if (n_states <= 0) throw ModelError("state space must have at least one state");
  if (metric.rows() != n_states || metric.cols() != n_states)
    throw ModelError("metric dimension mismatch");
  if (anchor < 0 || anchor >= n_states) throw ModelError("anchor out of range");
  for (int i = 0; i < n_states; ++i) {
    if (metric(i, i) != 0.0) throw ModelError("metric diagonal must be zero");
    for (int j = 0; j < n_states; ++j) {
      if (metric(i, j) < 0.0) throw ModelError("metric entries must be nonnegative");
      if (metric(i, j) != metric(j, i)) throw ModelError("metric must be symmetric");
      if (i != j && metric(i, j) <= 0.0) throw ModelError("distinct states need positive distance");
    }
  }
  for (int i = 0; i < n_states; ++i)
    for (int j = 0; j < n_states; ++j)
      for (int k = 0; k < n_states; ++k)
        if (metric(i, j) > metric(i, k) + metric(k, j) + 1e-12)
          throw ModelError("metric violates the triangle inequality");
}

void ControlledKernel::validate() const {
  if (probs.empty()) throw ModelError("kernel has no states");
  const int n = n_states();
  const int na = n_actions();
  if (na == 0) throw ModelError("kernel has no actions");
  for (int x = 0; x < n; ++x) {
    if (static_cast<int>(probs[x].size()) != na)
      throw ModelError("kernel action count differs across states");
    for (int u = 0; u < na; ++u) {
      const auto& row = probs[x][u];
      if (static_cast<int>(row.size()) != n) throw ModelError("kernel row length mismatch");
      double total = 0.0;
      for (double v : row) {
        if (!(v >= 0.0)) throw ModelError("kernel probabilities must be nonnegative");
        total += v;
      }
      if (std::abs(total - 1.0) > probability_tol)
        throw ModelError("kernel row must sum to 1 within 1e-12");
    }
  }
}

bool LyapunovData::in_small_set(int x) const {
  return std::binary_search(small_set.begin(), small_set.end(), x);
}

void LyapunovData::validate(int n_states) const {
  if (static_cast<int>(v_fn.size()) != n_states) throw ModelError("lyapunov v length mismatch");
  for (double v : v_fn)
    if (!(v >= 1.0)) throw ModelError("lyapunov function must be >= 1");
  if (small_set.empty()) throw ModelError("small set must be nonempty");
  if (!std::is_sorted(small_set.begin(), small_set.end()))
    throw ModelError("small set indices must be sorted");
  for (int x : small_set)
    if (x < 0 || x >= n_states) throw ModelError("small set index out of range");
  if (beta1 <= 0.0 || beta2 <= 0.0) throw ModelError("drift constants must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ModelError("gamma must lie in (0,1)");
  if (minor_measure.size() != n_states) throw ModelError("minorizing measure length mismatch");
  double inside = 0.0;
  for (int x : small_set) inside += minor_measure[x];
  if (std::abs(inside - 1.0) > probability_tol)
    throw ModelError("minorizing measure must be supported in the small set");
}

double CostFunction::operator()(int x, int u, const Measure& mu) const {
  switch (kind) {
    case CostKind::tabular_affine: {
      double acc = r1(x, u);
      for (int y = 0; y < phi.cols(); ++y) acc += phi(x, y) * mu[y];
      return acc;
    }
    case CostKind::interaction_kernel: {
      double z = 0.0;
      for (int y = 0; y < phi.cols(); ++y) z += phi(x, y) * mu[y];
      return outer(x, u, z);
    }
    case CostKind::general:
      return evaluator(x, u, mu);
  }
  throw ModelError("cost function has no kind");
}

CostFunction make_affine_cost(Matrix r1, Matrix phi) {
  const int n = phi.rows();
  if (phi.cols() != n) throw ModelError("phi must be square");
  if (r1.rows() != n) throw ModelError("r1/phi state dimension mismatch");
  for (int x = 0; x < n; ++x) {
    double min_phi = phi(x, 0);
    for (int y = 1; y < n; ++y) min_phi = std::min(min_phi, phi(x, y));
    for (int u = 0; u < r1.cols(); ++u) {
      if (!std::isfinite(r1(x, u))) throw ModelError("r1 entries must be finite");
      if (r1(x, u) + min_phi < 0.0)
        throw ModelError("affine cost negative at a simplex vertex");
    }
  }
  CostFunction cost;
  cost.kind = CostKind::tabular_affine;
  cost.r1 = std::move(r1);
  cost.phi = std::move(phi);
  return cost;
}

CostFunction make_interaction_cost(Matrix phi, std::function<double(int, int, double)> outer) {
  if (phi.rows() != phi.cols()) throw ModelError("phi must be square");
  CostFunction cost;
  cost.kind = CostKind::interaction_kernel;
  cost.phi = std::move(phi);
  cost.outer = std::move(outer);
  return cost;
}

CostFunction make_general_cost(std::function<double(int, int, const Measure&)> fn) {
  CostFunction cost;
  cost.kind = CostKind::general;
  cost.evaluator = std::move(fn);
  return cost;
}

void MfgModel::validate_dimensions() const {
  space.validate();
  kernel.validate();
  if (kernel.n_states() != space.n_states) throw ModelError("kernel/state-space mismatch");
  if (kernel.n_actions() != n_actions) throw ModelError("kernel/action-count mismatch");
  lyapunov.validate(space.n_states);
  if (cost.kind == CostKind::general && !cost.evaluator)
    throw ModelError("general cost has no evaluator");
  if (p_order < 1.0) throw ModelError("p order must be >= 1");
  if (q_order < 1.0 || q_order > p_order) throw ModelError("q order must lie in [1, p]");
}

DriftReport check_drift(const MfgModel& model, bool relax_separation) {
  model.validate_dimensions();
  const int n = model.n_states();
  const auto& lyap = model.lyapunov;

  DriftReport report;
  report.slack.assign(n, 0.0);
  report.per_state_pass = true;

  for (int x = 0; x < n; ++x) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int u = 0; u < model.n_actions; ++u) {
      double expect = 0.0;
      const auto row = model.kernel.row(x, u);
      for (int y = 0; y < n; ++y) expect += lyap.v_fn[y] * row[y];
      worst = std::max(worst, expect);
    }
    const double lhs = worst - lyap.v_fn[x];
    const double slack = lyap.in_small_set(x) ? lhs - lyap.beta2 : lhs + lyap.beta1 * lyap.v_fn[x];
    report.slack[x] = slack;
    if (slack > kDriftTol) report.per_state_pass = false;
  }
  report.worst_slack = *std::max_element(report.slack.begin(), report.slack.end());

  double sup_inside = 0.0;
  double inf_outside = std::numeric_limits<double>::infinity();
  for (int x = 0; x < n; ++x) {
    if (lyap.in_small_set(x))
      sup_inside = std::max(sup_inside, lyap.v_fn[x]);
    else
      inf_outside = std::min(inf_outside, lyap.v_fn[x]);
  }
  report.inf_v_outside = inf_outside;
  report.separation_required = std::max(sup_inside, 2.0 * lyap.beta2 / lyap.beta1);
  // vacuous when every state is in the small set
  report.separation_pass = inf_outside >= report.separation_required - kDriftTol;
  report.separation_relaxed = relax_separation;

  report.pass = report.per_state_pass && (report.separation_pass || relax_separation);
  return report;
}

MinorReport check_minorization(const MfgModel& model) {
  model.validate_dimensions();
  const auto& lyap = model.lyapunov;

  MinorReport report;
  report.declared_gamma = lyap.gamma;
  double gamma_star = std::numeric_limits<double>::infinity();
  for (int x : lyap.small_set) {
    for (int u = 0; u < model.n_actions; ++u) {
      const auto row = model.kernel.row(x, u);
      for (int y = 0; y < model.n_states(); ++y) {
        if (lyap.minor_measure[y] <= 0.0) continue;
        const double ratio = row[y] / lyap.minor_measure[y];
        if (ratio < gamma_star) {
          gamma_star = ratio;
          report.arg_x = x;
          report.arg_u = u;
          report.arg_y = y;
        }
      }
    }
  }
  report.gamma_star = gamma_star;
  report.pass = gamma_star > 0.0 && gamma_star >= lyap.gamma - 1e-12;
  return report;
}

RegularityReport check_cost_regularity(const MfgModel& model,
                                       const std::vector<std::pair<Measure, Measure>>& trials) {
  if (trials.empty()) throw ModelError("check_cost_regularity: trial set must be nonempty");
  model.validate_dimensions();
  const int n = model.n_states();
  const double q = model.q_order;
  const double qprime = (q - 1.0) / q;

  RegularityReport report;
  report.pairs_used = static_cast<int>(trials.size());

  auto moment = [&](const Measure& mu) {
    double acc = 0.0;
    for (int y = 0; y < n; ++y)
      acc += std::pow(model.space.metric(y, model.anchor()), q) * mu[y];
    return acc;
  };

  for (const auto& [mu1, mu2] : trials) {
    const double dq = transport::wasserstein(mu1, mu2, q, model.space.metric).distance;
    if (dq <= 0.0) continue;  // identical measures contribute nothing
    const double factor = std::pow(1.0 + moment(mu1) + moment(mu2), qprime);
    for (int x = 0; x < n; ++x)
      for (int u = 0; u < model.n_actions; ++u) {
        const double diff = std::abs(model.cost(x, u, mu1) - model.cost(x, u, mu2));
        report.max_lipschitz_ratio = std::max(report.max_lipschitz_ratio, diff / (factor * dq));
      }
  }

  // Drop-one perturbation on deterministic quantile point lists drawn from
  // each trial measure: N * |r(emp_N) - r(emp_{N-1})| should stay bounded.
  constexpr int kDropOneN = 16;
  auto quantile_points = [&](const Measure& mu) {
    std::vector<int> pts(kDropOneN);
    for (int i = 0; i < kDropOneN; ++i) {
      const double target = (i + 0.5) / kDropOneN;
      double acc = 0.0;
      int chosen = n - 1;
      for (int y = 0; y < n; ++y) {
        acc += mu[y];
        if (target <= acc) {
          chosen = y;
          break;
        }
      }
      pts[i] = chosen;
    }
    return pts;
  };

  for (const auto& [mu1, mu2] : trials) {
    for (const Measure* mu : {&mu1, &mu2}) {
      const auto pts = quantile_points(*mu);
      const auto emp_full = transport::empirical(pts, n);
      const auto emp_less =
          transport::empirical(std::vector<int>(pts.begin(), pts.end() - 1), n);
      for (int x = 0; x < n; ++x)
        for (int u = 0; u < model.n_actions; ++u) {
          const double diff = std::abs(model.cost(x, u, emp_full) - model.cost(x, u, emp_less));
          report.max_dropone_scaled = std::max(report.max_dropone_scaled, kDropOneN * diff);
        }
    }
  }
  return report;
}

}  // namespace mfg
