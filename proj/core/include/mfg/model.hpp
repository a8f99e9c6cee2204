#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mfg/matrix.hpp"
#include "mfg/measure.hpp"

namespace mfg {

/// Finite metric state space with a distinguished anchor state (the "0" used
/// for value normalization and moment factors).
struct StateSpace {
  int n_states = 0;
  Matrix metric;   // symmetric, zero diagonal, positive off-diagonal
  int anchor = 0;

  /// Throws ModelError on any metric-axiom violation (incl. triangle inequality).
  void validate() const;
};

/// Controlled transition kernel: probs[x][u] is a probability row over states.
struct ControlledKernel {
  std::vector<std::vector<std::vector<double>>> probs;

  int n_states() const { return static_cast<int>(probs.size()); }
  int n_actions() const { return probs.empty() ? 0 : static_cast<int>(probs[0].size()); }
  std::span<const double> row(int x, int u) const { return probs[x][u]; }

  void validate() const;
};

/// Foster-Lyapunov data: function, small set, drift constants, minorizing
/// measure and its gamma.
struct LyapunovData {
  std::vector<double> v_fn;       // >= 1 everywhere
  std::vector<int> small_set;     // sorted state indices
  double beta1 = 0.0;
  double beta2 = 0.0;
  Measure minor_measure;          // supported inside small_set
  double gamma = 0.0;             // in (0, 1)

  bool in_small_set(int x) const;
  void validate(int n_states) const;
};

enum class CostKind { tabular_affine, interaction_kernel, general };

/// Running cost r(x, u, mu). The affine kind keeps its (r1, phi) data so the
/// exact fast paths (mean-field linearity) stay available. Value semantics
/// throughout; evaluation dispatches on the kind.
struct CostFunction {
  CostKind kind = CostKind::general;

  // tabular_affine: r(x,u,mu) = r1(x,u) + sum_y phi(x,y) mu[y]
  // interaction_kernel: r(x,u,mu) = outer(x, u, sum_y phi(x,y) mu[y])
  Matrix r1;    // [state][action]
  Matrix phi;   // [state][state]
  std::function<double(int, int, double)> outer;

  // general kind only
  std::function<double(int, int, const Measure&)> evaluator;

  // optional growth-bound data (g0, g1 vectors over states)
  std::vector<double> g0, g1;

  double operator()(int x, int u, const Measure& mu) const;
};

/// r(x, u, mu) = r1[x][u] + sum_y phi[x][y] mu[y]. Nonnegativity is enforced
/// at the simplex vertices, which is where the affine form is extremal.
CostFunction make_affine_cost(Matrix r1, Matrix phi);

/// r(x, u, mu) = outer(x, u, sum_y phi[x][y] mu[y]); the interaction-kernel
/// family. Nonnegativity is the caller's responsibility (checked on use).
CostFunction make_interaction_cost(Matrix phi, std::function<double(int, int, double)> outer);

/// Fully general cost for in-process experiments; never loadable from files.
CostFunction make_general_cost(std::function<double(int, int, const Measure&)> fn);

/// The complete game model. Immutable after construction + validation.
struct MfgModel {
  StateSpace space;
  int n_actions = 0;
  ControlledKernel kernel;
  CostFunction cost;
  LyapunovData lyapunov;
  double p_order = 1.0;
  double q_order = 1.0;

  int n_states() const { return space.n_states; }
  int anchor() const { return space.anchor; }

  /// Dimension and type-level invariants; the analytic checks live below.
  void validate_dimensions() const;
};

// ---------------------------------------------------------------------------
// standing-assumption checks

struct DriftReport {
  bool pass = false;
  bool per_state_pass = false;
  bool separation_pass = false;
  bool separation_relaxed = false;          // check skipped on request, flagged
  std::vector<double> slack;                // per state; <= 0 means satisfied
  double worst_slack = 0.0;
  double inf_v_outside = 0.0;               // inf of V over the small-set complement
  double separation_required = 0.0;         // max(sup_C V, 2 beta2/beta1)
};

/// Verifies the drift inequality state by state with the declared constants,
/// plus the separation clause on V outside the small set (vacuous when the
/// complement is empty). `relax_separation` skips that clause but flags it.
DriftReport check_drift(const MfgModel& model, bool relax_separation = false);

struct MinorReport {
  bool pass = false;
  double gamma_star = 0.0;   // max feasible gamma
  double declared_gamma = 0.0;
  int arg_x = -1, arg_u = -1, arg_y = -1;  // attaining triple
};

/// gamma* = min over small-set states x, actions u and atoms y of
/// P(y|x,u)/nu(y); pass iff gamma* >= declared gamma > 0.
MinorReport check_minorization(const MfgModel& model);

struct RegularityReport {
  double max_lipschitz_ratio = 0.0;   // empirical kappa over the trial set
  double max_dropone_scaled = 0.0;    // max N*|r(emp_N) - r(emp_{N-1})|
  int pairs_used = 0;
};

/// Empirical Lipschitz-in-measure diagnostic against the Wasserstein-q
/// distance, plus the drop-one empirical-measure perturbation bound.
RegularityReport check_cost_regularity(const MfgModel& model,
                                       const std::vector<std::pair<Measure, Measure>>& trials);

}  // namespace mfg
