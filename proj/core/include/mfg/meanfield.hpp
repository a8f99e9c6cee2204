#pragma once

#include <utility>
#include <vector>

#include "mfg/ergodic.hpp"
#include "mfg/model.hpp"
#include "mfg/stationary.hpp"

namespace mfg {

/// Step-size schedule for damped fixed-point iterations.
struct DampingSchedule {
  enum class Kind { harmonic, constant } kind = Kind::harmonic;
  double lambda = 1.0;

  static DampingSchedule harmonic() { return {Kind::harmonic, 1.0}; }
  static DampingSchedule constant(double lam) { return {Kind::constant, lam}; }

  double at(int k) const {
    return kind == Kind::harmonic ? 1.0 / static_cast<double>(k + 1) : lambda;
  }
};

struct MfgResiduals {
  double bellman = 0.0;      // candidate (value, rho) in the optimality equation at eta
  double invariance = 0.0;   // TV(eta, invariant measure of the selector's chain)
  double fixed_point = 0.0;  // TV distance from the final iterate to its best response
  double selector_gap = 0.0; // selector optimality gap on supp(eta), independent recompute
};

struct MfgSolution {
  Measure eta;
  std::vector<double> value;
  double rho = 0.0;
  StationaryControl selector;
  MfgResiduals residuals;
  bool converged = false;
  bool certified = false;
  int iterations = 0;
};

struct MfgTraceRow {
  int iter = 0;
  double tv_step = 0.0;
  double rho = 0.0;
  double lambda = 0.0;
};

struct MfgOptions {
  DampingSchedule damping = DampingSchedule::harmonic();
  int max_iter = 500;
  double tol_fp = 1e-9;       // stop when TV(mu_k, mu_{k+1}) <= tol_fp * lambda_k
  double tol_certify = 1e-8;  // certification tolerances for all residuals
  RviOptions rvi;
};

struct MfgSolveResult {
  MfgSolution solution;
  std::vector<MfgTraceRow> trace;
};

/// One element of the best-response set at mu: freeze r_mu, solve the ergodic
/// problem, return the invariant measure of the deterministic minimizing
/// selector together with the full ergodic solution.
std::pair<Measure, ErgodicSolution> best_response(const MfgModel& model, const Measure& mu,
                                                  const RviOptions& rvi = {});

/// Damped best-response iteration mu <- (1-lambda) mu + lambda BR(mu); the
/// returned solution is independently certified by verify_mfg. Non-converged
/// runs return the best iterate seen, flagged.
MfgSolveResult solve_mfg(const MfgModel& model, const Measure& mu0, const MfgOptions& opts = {});

struct MfgCertification {
  double bellman_residual = 0.0;
  double selector_gap_on_support = 0.0;
  double invariance_tv = 0.0;
  bool certified = false;
};

/// From-scratch equilibrium check of a candidate: recomputes the ergodic
/// solution at mu = cand.eta and measures every defect of the candidate.
MfgCertification verify_mfg(const MfgModel& model, const MfgSolution& cand, double tol = 1e-8);

struct MonotonicityReport {
  double min_integral = 0.0;
  double max_integral = 0.0;
  int pairs = 0;
  bool monotone_on_sample = false;  // integral >= 0 whenever the measures differ
};

/// Lasry-Lions-type monotonicity probe: integrates cost differences against
/// occupation-measure differences over sample control pairs. Supporting
/// evidence for uniqueness, not a proof.
MonotonicityReport check_monotonicity(
    const MfgModel& model,
    const std::vector<std::pair<StationaryControl, StationaryControl>>& samples);

}  // namespace mfg
