#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mfg/ergodic.hpp"
#include "mfg/meanfield.hpp"
#include "mfg/model.hpp"

namespace mfg {

enum class CostBackendMode { affine_exact, enumerate, monte_carlo };

/// Evaluation strategy for the integrated empirical-measure cost.
struct CostBackend {
  CostBackendMode mode = CostBackendMode::affine_exact;
  long sample_count = 4000;        // monte-carlo draws
  std::uint64_t seed = 0;          // monte-carlo addressing seed
  double enumeration_budget = 1e6; // max product tuples for enumerate mode
  int threads = 1;                 // monte-carlo workers; never affects results
};

struct IntegratedCost {
  Matrix value;      // [state][action]
  Matrix std_error;  // zero except in monte-carlo mode
};

/// E[ r(x, u, empirical(Y_j, j != player)) ] with Y_j ~ pi_j independent.
/// affine_exact collapses the expectation by linearity (affine costs only);
/// enumerate sums every tuple exactly; monte_carlo is a seeded sample mean
/// with reported standard errors.
IntegratedCost integrated_cost(const MfgModel& model, int player,
                               const std::vector<Measure>& pi, const CostBackend& backend);

/// Ergodic best response of one player against the others' invariant
/// measures; returns the minimizing selector's invariant measure.
std::pair<Measure, ErgodicSolution> player_best_response(const MfgModel& model, int player,
                                                         const std::vector<Measure>& pi,
                                                         const CostBackend& backend,
                                                         const RviOptions& rvi = {});

struct PlayerResiduals {
  double invariance_tv = 0.0;
  double deviation_gap = 0.0;  // best deviation average minus achieved; >= -tol at a Nash point
};

struct NashProfile {
  int n_players = 0;
  std::vector<StationaryControl> controls;
  std::vector<Measure> measures;            // measures[i] = invariant of controls[i]
  std::vector<std::vector<double>> values;  // anchored relative values per player
  std::vector<double> rhos;
  std::vector<PlayerResiduals> residuals;
  bool converged = false;
  bool certified = false;
  int rounds = 0;
};

struct NashTraceRow {
  int round = 0;
  double max_tv_step = 0.0;
  double max_rho = 0.0;
  double lambda = 0.0;
};

struct NashOptions {
  DampingSchedule damping = DampingSchedule::harmonic();
  int max_rounds = 300;
  double tol = 1e-9;            // per-player best-response defect
  double tol_invariance = 1e-8;
  double tol_deviation = 1e-6;
  bool jacobi = false;          // simultaneous sweep instead of Gauss-Seidel
  long deviation_budget = 4096; // full deviation enumeration cutoff
  RviOptions rvi;
};

struct NashSolveResult {
  NashProfile profile;
  std::vector<NashTraceRow> trace;
};

/// Damped best-response sweeps over players (Gauss-Seidel by default) until
/// every player's measure is a fixed point of their own best response; the
/// final profile is certified by verify_nash.
NashSolveResult solve_nash(const MfgModel& model, int n_players,
                           const std::vector<Measure>& initial, const CostBackend& backend,
                           const NashOptions& opts = {});

struct NashCheck {
  std::vector<double> invariance_tv;
  std::vector<double> deviation_gap;
  bool deviations_enumerated = false;
  bool certified = false;
};

/// Per player: (a) measure really is the control's invariant measure and
/// (b) no stationary deviation improves the achieved long-run average by more
/// than the tolerance. Deviations are all deterministic stationary policies
/// when enumerable within budget, otherwise the solver's best response.
NashCheck verify_nash(const MfgModel& model, const NashProfile& profile,
                      const CostBackend& backend, const NashOptions& opts = {});

struct ConvergenceRow {
  int n_players = 0;
  double spread_rho = 0.0;
  double spread_value = 0.0;
  double spread_pi = 0.0;
  double gap_rho = 0.0;
  double gap_pi = 0.0;
  bool certified = false;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool selector_unique = true;  // frozen-cost argmins unique at every certified profile
};

/// Deliberately asymmetric per-player starting measures: distinct mixtures
/// between the anchor corner and the farthest corner, centered on uniform.
std::vector<Measure> asymmetric_initials(const MfgModel& model, int n_players,
                                         double spread = 0.16);

/// For each N: solve the N-person game from asymmetric initials and tabulate
/// player spreads and gaps against a certified mean-field solution.
ConvergenceTable convergence_study(const MfgModel& model, const std::vector<int>& n_list,
                                   const MfgSolution& mfg_sol, const CostBackend& backend,
                                   const NashOptions& opts = {});

}  // namespace mfg
