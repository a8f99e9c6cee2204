#pragma once

#include <vector>

#include "mfg/matrix.hpp"
#include "mfg/measure.hpp"
#include "mfg/model.hpp"

namespace mfg {

/// Randomized stationary Markov control: one action distribution per state.
/// One-hot rows are exactly the deterministic controls.
class StationaryControl {
 public:
  StationaryControl() = default;
  explicit StationaryControl(std::vector<std::vector<double>> action_probs);

  /// Deterministic control from a per-state action choice.
  static StationaryControl deterministic(const std::vector<int>& actions, int n_actions);
  static StationaryControl uniform(int n_states, int n_actions);

  int n_states() const { return static_cast<int>(rows_.size()); }
  int n_actions() const { return rows_.empty() ? 0 : static_cast<int>(rows_[0].size()); }
  std::span<const double> row(int x) const { return rows_[x]; }
  double prob(int x, int u) const { return rows_[x][u]; }

  /// True when every row is one-hot.
  bool is_deterministic() const;

  bool operator==(const StationaryControl&) const = default;

 private:
  std::vector<std::vector<double>> rows_;
};

/// Joint stationary state-action distribution eta (*) v.
struct OccupationMeasure {
  Matrix joint;  // [state][action], sums to 1; state marginal is the invariant measure
};

/// Row x = sum_u v(u|x) P(.|x,u). Rows sum to one by construction.
Matrix induced_chain(const MfgModel& model, const StationaryControl& v);

/// Unique stationary distribution of a row-stochastic matrix, by direct
/// linear solve (one balance equation replaced by normalization).
/// Throws NonUniqueInvariantError when the chain has several recurrent
/// classes (detected on the support graph, not from numerics).
Measure invariant_measure(const Matrix& chain);

struct MixResult {
  StationaryControl control;
  Measure measure;            // theta*eta1 + (1-theta)*eta2
  double certificate_tv = 0;  // TV between the mixture and the mixed control's invariant
};

/// The convex-mixing construction: builds the control whose invariant measure
/// is exactly theta*eta_{v1} + (1-theta)*eta_{v2}, and certifies it by
/// recomputing that invariant from scratch. On states carrying no mixture
/// mass the row is copied from v1 (any choice leaves the invariant intact).
MixResult mix_controls(const StationaryControl& v1, const StationaryControl& v2, double theta,
                       const MfgModel& model);

/// joint[x][u] = eta_v(x) * v(u|x).
OccupationMeasure occupation(const MfgModel& model, const StationaryControl& v);

/// Closed-form long-run average cost sum_{x,u} r(x,u,mu) eta_v(x) v(u|x).
double long_run_average(const MfgModel& model, const StationaryControl& v, const Measure& mu);

/// Same, for an already-frozen cost matrix [state][action].
double long_run_average_frozen(const MfgModel& model, const StationaryControl& v,
                               const Matrix& frozen_cost);

/// Distance between controls: max over states of the total variation between
/// the action distributions. The finite stand-in for a control-space metric;
/// pointwise convergence of controls is exactly convergence in this distance.
double control_distance(const StationaryControl& v1, const StationaryControl& v2);

}  // namespace mfg
