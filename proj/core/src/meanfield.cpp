#include "mfg/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfg/errors.hpp"
#include "mfg/transport.hpp"

namespace mfg {

std::pair<Measure, ErgodicSolution> best_response(const MfgModel& model, const Measure& mu,
                                                  const RviOptions& rvi) {
  ErgodicSolution sol = solve_ergodic_rvi(model, mu, rvi);
  Measure eta = invariant_measure(induced_chain(model, sol.selector));
  return {std::move(eta), std::move(sol)};
}

MfgSolveResult solve_mfg(const MfgModel& model, const Measure& mu0, const MfgOptions& opts) {
  model.validate_dimensions();
  MfgSolveResult result;

  Measure mu = mu0;
  Measure best_mu = mu0;
  double best_defect = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;

  for (int k = 0; k < opts.max_iter; ++k) {
    auto [eta_br, sol] = best_response(model, mu, opts.rvi);
    const double defect = transport::tv_distance(mu, eta_br);
    if (defect < best_defect) {
      best_defect = defect;
      best_mu = mu;
    }
    const double lambda = opts.damping.at(k);
    Measure mu_next = mix(eta_br, mu, lambda);
    result.trace.push_back({k, transport::tv_distance(mu, mu_next), sol.rho, lambda});
    iterations = k + 1;
    if (defect <= opts.tol_fp) {
      converged = true;
      break;
    }
    mu = std::move(mu_next);
  }
  if (!converged) mu = best_mu;

  // assemble the candidate at the final measure and certify independently
  auto [eta_final, sol_final] = best_response(model, mu, opts.rvi);
  MfgSolution solution;
  solution.eta = eta_final;
  solution.value = sol_final.value;
  solution.rho = sol_final.rho;
  solution.selector = sol_final.selector;
  solution.converged = converged;
  solution.iterations = iterations;
  solution.residuals.fixed_point = transport::tv_distance(mu, eta_final);

  const MfgCertification cert = verify_mfg(model, solution, opts.tol_certify);
  solution.residuals.bellman = cert.bellman_residual;
  solution.residuals.invariance = cert.invariance_tv;
  solution.residuals.selector_gap = cert.selector_gap_on_support;
  solution.certified = converged && cert.certified;

  result.solution = std::move(solution);
  return result;
}

MfgCertification verify_mfg(const MfgModel& model, const MfgSolution& cand, double tol) {
  MfgCertification cert;
  const Matrix frozen = freeze_cost(model, cand.eta);

  // candidate pair in the optimality equation at cost r_eta
  {
    ErgodicSolution as_sol;
    as_sol.value = cand.value;
    as_sol.rho = cand.rho;
    as_sol.selector = cand.selector;
    const EquationReport eq = verify_ergodic_equation_frozen(model, frozen, as_sol);
    cert.bellman_residual = eq.max_residual;
  }

  // independent recomputation; the candidate selector must attain the min on
  // the support of eta
  RviOptions rvi;
  const ErgodicSolution fresh = solve_ergodic_rvi_frozen(model, frozen, rvi);
  {
    std::vector<double> q(model.n_actions);
    for (int x = 0; x < model.n_states(); ++x) {
      if (cand.eta[x] <= 1e-12) continue;
      for (int u = 0; u < model.n_actions; ++u) {
        double acc = 0.0;
        for (int y = 0; y < model.n_states(); ++y)
          acc += model.kernel.row(x, u)[y] * fresh.value[y];
        q[u] = frozen(x, u) + acc;
      }
      const double best = *std::min_element(q.begin(), q.end());
      double chosen = 0.0;
      for (int u = 0; u < model.n_actions; ++u) chosen += cand.selector.prob(x, u) * q[u];
      cert.selector_gap_on_support = std::max(cert.selector_gap_on_support, chosen - best);
    }
  }

  const Measure eta_of_selector = invariant_measure(induced_chain(model, cand.selector));
  cert.invariance_tv = transport::tv_distance(cand.eta, eta_of_selector);

  cert.certified = cert.bellman_residual <= tol && cert.selector_gap_on_support <= tol &&
                   cert.invariance_tv <= tol;
  return cert;
}

MonotonicityReport check_monotonicity(
    const MfgModel& model,
    const std::vector<std::pair<StationaryControl, StationaryControl>>& samples) {
  MonotonicityReport report;
  report.pairs = static_cast<int>(samples.size());
  report.min_integral = std::numeric_limits<double>::infinity();
  report.max_integral = -std::numeric_limits<double>::infinity();
  report.monotone_on_sample = true;

  for (const auto& [v, vbar] : samples) {
    const OccupationMeasure occ = occupation(model, v);
    const OccupationMeasure occ_bar = occupation(model, vbar);
    Measure eta = invariant_measure(induced_chain(model, v));
    Measure eta_bar = invariant_measure(induced_chain(model, vbar));

    double integral = 0.0;
    for (int x = 0; x < model.n_states(); ++x)
      for (int u = 0; u < model.n_actions; ++u) {
        const double dr = model.cost(x, u, eta) - model.cost(x, u, eta_bar);
        integral += dr * (occ.joint(x, u) - occ_bar.joint(x, u));
      }
    report.min_integral = std::min(report.min_integral, integral);
    report.max_integral = std::max(report.max_integral, integral);
    if (transport::tv_distance(eta, eta_bar) > 1e-12 && integral < -1e-12)
      report.monotone_on_sample = false;
  }
  if (samples.empty()) {
    report.min_integral = report.max_integral = 0.0;
  }
  return report;
}

}  // namespace mfg
