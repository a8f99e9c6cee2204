#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mfg/model.hpp"
#include "mfg/stationary.hpp"

namespace mfg {

/// Frozen running cost r_mu(x, u) as a [state][action] matrix.
Matrix freeze_cost(const MfgModel& model, const Measure& mu);

/// Lowest-index argmin with a small tolerance so ties resolve identically in
/// every solver; selectors stay comparable across methods.
int argmin_lowest(std::span<const double> values, double tie_eps = 1e-12);

struct SolverTraceRow {
  int iter = 0;
  double residual = 0.0;
  double rho_estimate = 0.0;
};

struct DiscountedSolution {
  std::vector<double> value;
  double alpha = 0.0;
  StationaryControl selector;       // deterministic, lowest-index ties
  double bellman_residual = 0.0;
  int iterations = 0;
};

struct ErgodicSolution {
  std::vector<double> value;        // anchored: value[anchor] == 0
  double rho = 0.0;
  StationaryControl selector;       // deterministic, lowest-index ties
  double bellman_residual = 0.0;    // sup-norm residual of the average-cost equation
  bool certified = false;
  int iterations = 0;
};

struct DiscountedOptions {
  int max_iter = 10000;
};

struct RviOptions {
  double tol_span = 1e-10;          // span-seminorm stopping rule
  double tol_bellman = 1e-8;        // certification residual
  int max_iter = 200000;
  std::optional<std::vector<double>> initial_value;  // defaults to zero
  std::vector<SolverTraceRow>* trace = nullptr;
};

struct VanishingDiscountOptions {
  double tol_vd = 1e-7;             // agreement between successive limit estimates
  double tol_bellman = 1e-8;
  DiscountedOptions discounted;
  std::vector<SolverTraceRow>* trace = nullptr;
};

/// Exact alpha-discounted solve (policy iteration with exact evaluation).
/// Throws ModelError for alpha outside (0,1), IterationError past max_iter.
DiscountedSolution solve_discounted(const MfgModel& model, const Measure& mu, double alpha,
                                    const DiscountedOptions& opts = {});
DiscountedSolution solve_discounted_frozen(const MfgModel& model, const Matrix& frozen_cost,
                                           double alpha, const DiscountedOptions& opts = {});

/// Relative value iteration with anchor normalization and span stopping.
ErgodicSolution solve_ergodic_rvi(const MfgModel& model, const Measure& mu,
                                  const RviOptions& opts = {});
ErgodicSolution solve_ergodic_rvi_frozen(const MfgModel& model, const Matrix& frozen_cost,
                                         const RviOptions& opts = {});

/// Vanishing-discount route: exact discounted solves along the alpha
/// sequence, then the alpha -> 1 limit of (V^a - V^a(anchor), (1-a)V^a(anchor))
/// is taken by polynomial extrapolation in (1 - alpha) across the trailing
/// alphas that share a minimizing selector. Reports a non-certified solution
/// when the sequence did not settle.
ErgodicSolution solve_ergodic_vanishing_discount(const MfgModel& model, const Measure& mu,
                                                 std::span<const double> alphas,
                                                 const VanishingDiscountOptions& opts = {});
ErgodicSolution solve_ergodic_vanishing_discount_frozen(const MfgModel& model,
                                                        const Matrix& frozen_cost,
                                                        std::span<const double> alphas,
                                                        const VanishingDiscountOptions& opts = {});

struct EquationReport {
  std::vector<double> residual;       // per-state average-cost equation residual
  double max_residual = 0.0;
  std::vector<double> selector_gap;   // per-state optimality gap of the selector
  double max_selector_gap = 0.0;
};

/// Residuals of the average-cost optimality equation for a given solution.
EquationReport verify_ergodic_equation(const MfgModel& model, const Measure& mu,
                                       const ErgodicSolution& sol);
EquationReport verify_ergodic_equation_frozen(const MfgModel& model, const Matrix& frozen_cost,
                                              const ErgodicSolution& sol);

struct FirstReturnReport {
  std::vector<double> residual;   // per state; zero on the ball
  double max_residual = 0.0;
  bool enumerated = false;        // true when all policies were enumerated
  long policies_checked = 0;
};

/// Checks the first-return representation of the relative value function
/// against a target set ("ball") containing the anchor: outside the ball,
/// V(x) must equal the best expected (cost - rho) sum until return, plus V at
/// the return state. Expectations are absorbing-chain linear solves; all
/// deterministic policies on the exterior are enumerated when the budget
/// allows, otherwise only the solution's own selector (flagged one-sided).
FirstReturnReport verify_first_return_representation(const MfgModel& model, const Measure& mu,
                                                     const ErgodicSolution& sol,
                                                     const std::vector<int>& ball,
                                                     long policy_budget = 4096);

struct SelectorReport {
  double gap = 0.0;                      // candidate long-run average minus rho
  double max_residual_on_support = 0.0;  // pointwise selector residual where eta > 0
  double max_residual_off_support = 0.0; // informational
  bool equivalent = false;               // (gap ~ 0) holds iff (support residual ~ 0)
};

/// Optimality of a candidate control is equivalent to being a minimizing
/// selector almost surely under its own invariant measure; reports both sides.
SelectorReport verify_selector_characterization(const MfgModel& model, const Measure& mu,
                                                const ErgodicSolution& sol,
                                                const StationaryControl& candidate,
                                                double tol = 1e-8);

}  // namespace mfg
