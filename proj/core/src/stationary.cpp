#include "mfg/stationary.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "mfg/errors.hpp"
#include "mfg/transport.hpp"

namespace mfg {

StationaryControl::StationaryControl(std::vector<std::vector<double>> action_probs)
    : rows_(std::move(action_probs)) {
  if (rows_.empty()) throw ModelError("control must cover at least one state");
  const auto na = rows_[0].size();
  for (const auto& row : rows_) {
    if (row.size() != na) throw ModelError("control rows must share the action count");
    double total = 0.0;
    for (double v : row) {
      if (!(v >= 0.0)) throw ModelError("control probabilities must be nonnegative");
      total += v;
    }
    if (std::abs(total - 1.0) > probability_tol)
      throw ModelError("control row must sum to 1 within 1e-12");
  }
}

StationaryControl StationaryControl::deterministic(const std::vector<int>& actions,
                                                   int n_actions) {
  std::vector<std::vector<double>> rows(actions.size(), std::vector<double>(n_actions, 0.0));
  for (std::size_t x = 0; x < actions.size(); ++x) {
    if (actions[x] < 0 || actions[x] >= n_actions) throw ModelError("action index out of range");
    rows[x][actions[x]] = 1.0;
  }
  return StationaryControl(std::move(rows));
}

StationaryControl StationaryControl::uniform(int n_states, int n_actions) {
  return StationaryControl(std::vector<std::vector<double>>(
      n_states, std::vector<double>(n_actions, 1.0 / n_actions)));
}

bool StationaryControl::is_deterministic() const {
  for (const auto& row : rows_)
    for (double v : row)
      if (v != 0.0 && v != 1.0) return false;
  return true;
}

Matrix induced_chain(const MfgModel& model, const StationaryControl& v) {
  const int n = model.n_states();
  if (v.n_states() != n || v.n_actions() != model.n_actions)
    throw ModelError("control/model dimension mismatch");
  Matrix chain(n, n);
  for (int x = 0; x < n; ++x)
    for (int u = 0; u < model.n_actions; ++u) {
      const double w = v.prob(x, u);
      if (w == 0.0) continue;
      const auto row = model.kernel.row(x, u);
      for (int y = 0; y < n; ++y) chain(x, y) += w * row[y];
    }
  return chain;
}

namespace {

// Number of terminal strongly connected components of the support graph;
// each one is a recurrent class.
int count_recurrent_classes(const Matrix& chain) {
  const int n = chain.rows();
  // Tarjan SCC, iterative.
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  int next_index = 0, n_comps = 0;

  struct Frame {
    int v;
    int child;
  };
  for (int start = 0; start < n; ++start) {
    if (index[start] != -1) continue;
    std::vector<Frame> call{{start, 0}};
    index[start] = low[start] = next_index++;
    stack.push_back(start);
    on_stack[start] = 1;
    while (!call.empty()) {
      auto& [v, child] = call.back();
      if (child < n) {
        const int w = child++;
        if (chain(v, w) <= 0.0) continue;
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      } else {
        if (low[v] == index[v]) {
          while (true) {
            const int w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            comp[w] = n_comps;
            if (w == v) break;
          }
          ++n_comps;
        }
        call.pop_back();
        if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      }
    }
  }

  // terminal components: no edge leaving the component
  std::vector<char> terminal(n_comps, 1);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (chain(x, y) > 0.0 && comp[x] != comp[y]) terminal[comp[x]] = 0;
  int count = 0;
  for (char t : terminal) count += t;
  return count;
}

}  // namespace

Measure invariant_measure(const Matrix& chain) {
  const int n = chain.rows();
  if (chain.cols() != n) throw ModelError("chain must be square");
  if (count_recurrent_classes(chain) != 1)
    throw NonUniqueInvariantError("chain has multiple recurrent classes");

  // Solve eta^T P = eta^T with the last equation replaced by normalization.
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(j, i) = chain(i, j) - (i == j ? 1.0 : 0.0);
  for (int i = 0; i < n; ++i) a(n - 1, i) = 1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::VectorXd eta = a.partialPivLu().solve(b);

  std::vector<double> mass(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    mass[i] = std::max(eta(i), 0.0);  // clip FP dust on transient states
    total += mass[i];
  }
  for (double& m : mass) m /= total;

  // residual check on the balance equations
  double residual = 0.0;
  for (int j = 0; j < n; ++j) {
    double acc = -mass[j];
    for (int i = 0; i < n; ++i) acc += mass[i] * chain(i, j);
    residual = std::max(residual, std::abs(acc));
  }
  if (residual > 1e-10) throw IterationError("invariant solve residual above 1e-10");
  return Measure(std::move(mass));
}

MixResult mix_controls(const StationaryControl& v1, const StationaryControl& v2, double theta,
                       const MfgModel& model) {
  if (theta < 0.0 || theta > 1.0) throw ModelError("theta must lie in [0,1]");
  const Measure eta1 = invariant_measure(induced_chain(model, v1));
  const Measure eta2 = invariant_measure(induced_chain(model, v2));

  const int n = model.n_states();
  const int na = model.n_actions;
  std::vector<std::vector<double>> rows(n, std::vector<double>(na, 0.0));
  for (int x = 0; x < n; ++x) {
    const double denom = theta * eta1[x] + (1.0 - theta) * eta2[x];
    if (denom > 0.0) {
      for (int u = 0; u < na; ++u)
        rows[x][u] =
            (theta * eta1[x] * v1.prob(x, u) + (1.0 - theta) * eta2[x] * v2.prob(x, u)) / denom;
      // guard against FP drift off the simplex
      double total = 0.0;
      for (double p : rows[x]) total += p;
      for (double& p : rows[x]) p /= total;
    } else {
      for (int u = 0; u < na; ++u) rows[x][u] = v1.prob(x, u);
    }
  }

  MixResult out;
  out.control = StationaryControl(std::move(rows));
  out.measure = mix(eta1, eta2, theta);
  const Measure recomputed = invariant_measure(induced_chain(model, out.control));
  out.certificate_tv = transport::tv_distance(out.measure, recomputed);
  return out;
}

OccupationMeasure occupation(const MfgModel& model, const StationaryControl& v) {
  const Measure eta = invariant_measure(induced_chain(model, v));
  Matrix joint(model.n_states(), model.n_actions);
  for (int x = 0; x < model.n_states(); ++x)
    for (int u = 0; u < model.n_actions; ++u) joint(x, u) = eta[x] * v.prob(x, u);
  return {std::move(joint)};
}

double long_run_average(const MfgModel& model, const StationaryControl& v, const Measure& mu) {
  const Measure eta = invariant_measure(induced_chain(model, v));
  double acc = 0.0;
  for (int x = 0; x < model.n_states(); ++x) {
    if (eta[x] == 0.0) continue;
    for (int u = 0; u < model.n_actions; ++u) {
      const double w = v.prob(x, u);
      if (w == 0.0) continue;
      acc += eta[x] * w * model.cost(x, u, mu);
    }
  }
  return acc;
}

double long_run_average_frozen(const MfgModel& model, const StationaryControl& v,
                               const Matrix& frozen_cost) {
  const Measure eta = invariant_measure(induced_chain(model, v));
  double acc = 0.0;
  for (int x = 0; x < model.n_states(); ++x)
    for (int u = 0; u < model.n_actions; ++u) acc += eta[x] * v.prob(x, u) * frozen_cost(x, u);
  return acc;
}

double control_distance(const StationaryControl& v1, const StationaryControl& v2) {
  if (v1.n_states() != v2.n_states() || v1.n_actions() != v2.n_actions())
    throw ModelError("control dimension mismatch");
  double worst = 0.0;
  for (int x = 0; x < v1.n_states(); ++x) {
    double tv = 0.0;
    for (int u = 0; u < v1.n_actions(); ++u) tv += std::abs(v1.prob(x, u) - v2.prob(x, u));
    worst = std::max(worst, 0.5 * tv);
  }
  return worst;
}

}  // namespace mfg
