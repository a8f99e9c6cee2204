#include "mfg/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mfg/errors.hpp"

namespace mfg::io {

using nlohmann::json;

namespace {

Matrix parse_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ModelError(what + ": expected a nonempty 2-D array");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) throw ModelError(what + ": ragged rows");
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

json control_json(const StationaryControl& v) {
  json out = json::array();
  for (int x = 0; x < v.n_states(); ++x) {
    json row = json::array();
    for (int u = 0; u < v.n_actions(); ++u) row.push_back(v.prob(x, u));
    out.push_back(row);
  }
  return out;
}

}  // namespace

LoadReport load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ModelError("model file is not valid JSON: " + std::string(e.what()));
  }

  LoadReport report;
  MfgModel& model = report.model;

  const auto& states = doc.at("states");
  model.space.n_states = states.at("n").get<int>();
  model.space.metric = parse_matrix(states.at("metric"), "states.metric");
  model.space.anchor = states.at("anchor").get<int>();

  model.n_actions = doc.at("actions").get<int>();

  const auto& kernel = doc.at("kernel");
  if (static_cast<int>(kernel.size()) != model.space.n_states)
    throw ModelError("kernel: state dimension mismatch");
  model.kernel.probs.resize(model.space.n_states);
  for (int x = 0; x < model.space.n_states; ++x) {
    if (static_cast<int>(kernel[x].size()) != model.n_actions)
      throw ModelError("kernel: action dimension mismatch");
    model.kernel.probs[x].resize(model.n_actions);
    for (int u = 0; u < model.n_actions; ++u) {
      std::vector<double> row = kernel[x][u].get<std::vector<double>>();
      if (static_cast<int>(row.size()) != model.space.n_states)
        throw ModelError("kernel: row length mismatch");
      double total = 0.0;
      for (double v : row) {
        if (v < 0.0) throw ModelError("kernel: negative probability");
        total += v;
      }
      if (std::abs(total - 1.0) > 1e-9)
        throw ModelError("kernel: row sum off by more than 1e-9");
      if (total != 1.0) {
        for (double& v : row) v /= total;
        report.max_row_correction = std::max(report.max_row_correction, std::abs(total - 1.0));
        ++report.corrected_rows;
      }
      model.kernel.probs[x][u] = std::move(row);
    }
  }

  const auto& cost = doc.at("cost");
  const std::string kind = cost.at("kind").get<std::string>();
  if (kind == "affine" || kind == "tabular-affine") {
    model.cost = make_affine_cost(parse_matrix(cost.at("r1"), "cost.r1"),
                                  parse_matrix(cost.at("phi"), "cost.phi"));
  } else if (kind == "general") {
    throw ModelError("cost kind 'general' is not loadable from files");
  } else {
    throw ModelError("unknown cost kind: " + kind);
  }

  const auto& lyap = doc.at("lyapunov");
  model.lyapunov.v_fn = lyap.at("v").get<std::vector<double>>();
  model.lyapunov.small_set = lyap.at("C").get<std::vector<int>>();
  model.lyapunov.beta1 = lyap.at("beta1").get<double>();
  model.lyapunov.beta2 = lyap.at("beta2").get<double>();
  model.lyapunov.minor_measure = Measure(lyap.at("nu").get<std::vector<double>>());
  model.lyapunov.gamma = lyap.at("gamma").get<double>();

  const auto& orders = doc.at("orders");
  model.p_order = orders.at("p").get<double>();
  model.q_order = orders.at("q").get<double>();

  model.validate_dimensions();
  return report;
}

std::string to_json(const MfgModel& model) {
  json doc;
  doc["states"] = {{"n", model.space.n_states},
                   {"metric", matrix_json(model.space.metric)},
                   {"anchor", model.space.anchor}};
  doc["actions"] = model.n_actions;
  json kernel = json::array();
  for (int x = 0; x < model.n_states(); ++x) {
    json per_action = json::array();
    for (int u = 0; u < model.n_actions; ++u) per_action.push_back(model.kernel.probs[x][u]);
    kernel.push_back(per_action);
  }
  doc["kernel"] = kernel;
  if (model.cost.kind == CostKind::tabular_affine)
    doc["cost"] = {{"kind", "affine"}, {"r1", matrix_json(model.cost.r1)},
                   {"phi", matrix_json(model.cost.phi)}};
  else
    doc["cost"] = {{"kind", model.cost.kind == CostKind::interaction_kernel
                                ? "interaction-kernel"
                                : "general"}};
  doc["lyapunov"] = {{"v", model.lyapunov.v_fn},     {"C", model.lyapunov.small_set},
                     {"beta1", model.lyapunov.beta1}, {"beta2", model.lyapunov.beta2},
                     {"nu", model.lyapunov.minor_measure.mass()},
                     {"gamma", model.lyapunov.gamma}};
  doc["orders"] = {{"p", model.p_order}, {"q", model.q_order}};
  return doc.dump(2);
}

std::string to_json(const ErgodicSolution& sol) {
  json doc;
  doc["value"] = sol.value;
  doc["rho"] = sol.rho;
  doc["selector"] = control_json(sol.selector);
  doc["bellman_residual"] = sol.bellman_residual;
  doc["certified"] = sol.certified;
  doc["iterations"] = sol.iterations;
  return doc.dump(2);
}

std::string to_json(const MfgSolution& sol) {
  json doc;
  doc["eta"] = sol.eta.mass();
  doc["value"] = sol.value;
  doc["rho"] = sol.rho;
  doc["selector"] = control_json(sol.selector);
  doc["residuals"] = {{"bellman", sol.residuals.bellman},
                      {"invariance", sol.residuals.invariance},
                      {"fixed_point", sol.residuals.fixed_point},
                      {"selector_gap", sol.residuals.selector_gap}};
  doc["converged"] = sol.converged;
  doc["certified"] = sol.certified;
  doc["iterations"] = sol.iterations;
  return doc.dump(2);
}

std::string to_json(const NashProfile& profile) {
  json players = json::array();
  for (int i = 0; i < profile.n_players; ++i) {
    json p;
    p["control"] = control_json(profile.controls[i]);
    p["measure"] = profile.measures[i].mass();
    p["value"] = profile.values[i];
    p["rho"] = profile.rhos[i];
    if (i < static_cast<int>(profile.residuals.size()))
      p["residuals"] = {{"invariance_tv", profile.residuals[i].invariance_tv},
                        {"deviation_gap", profile.residuals[i].deviation_gap}};
    players.push_back(p);
  }
  json doc;
  doc["n_players"] = profile.n_players;
  doc["players"] = players;
  doc["converged"] = profile.converged;
  doc["certified"] = profile.certified;
  doc["rounds"] = profile.rounds;
  return doc.dump(2);
}

std::string to_json(const DriftReport& drift, const MinorReport& minor) {
  json doc;
  // V-infimum over an empty complement is +infinity; JSON has no inf
  const json inf_outside = std::isfinite(drift.inf_v_outside)
                               ? json(drift.inf_v_outside)
                               : json("inf");
  doc["drift"] = {{"pass", drift.pass},
                  {"per_state_pass", drift.per_state_pass},
                  {"separation_pass", drift.separation_pass},
                  {"separation_relaxed", drift.separation_relaxed},
                  {"slack", drift.slack},
                  {"worst_slack", drift.worst_slack},
                  {"inf_v_outside", inf_outside},
                  {"separation_required", drift.separation_required}};
  doc["minorization"] = {{"pass", minor.pass},
                         {"gamma_star", minor.gamma_star},
                         {"declared_gamma", minor.declared_gamma},
                         {"argmin", {minor.arg_x, minor.arg_u, minor.arg_y}}};
  return doc.dump(2);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  out += '\n';
  return out;
}

std::string trace_csv(const std::vector<SolverTraceRow>& trace) {
  std::string out = csv_line({"iter", "residual", "rho_estimate"});
  for (const auto& row : trace)
    out += csv_line({std::to_string(row.iter), format_double(row.residual),
                     format_double(row.rho_estimate)});
  return out;
}

std::string trace_csv(const std::vector<MfgTraceRow>& trace) {
  std::string out = csv_line({"k", "tv_step", "rho", "lambda"});
  for (const auto& row : trace)
    out += csv_line({std::to_string(row.iter), format_double(row.tv_step),
                     format_double(row.rho), format_double(row.lambda)});
  return out;
}

std::string trace_csv(const std::vector<NashTraceRow>& trace) {
  std::string out = csv_line({"round", "max_tv_step", "max_rho", "lambda"});
  for (const auto& row : trace)
    out += csv_line({std::to_string(row.round), format_double(row.max_tv_step),
                     format_double(row.max_rho), format_double(row.lambda)});
  return out;
}

std::string convergence_csv(const ConvergenceTable& table) {
  std::string out =
      csv_line({"N", "spread_rho", "spread_V", "spread_pi", "gap_rho", "gap_pi", "certified"});
  for (const auto& row : table.rows)
    out += csv_line({std::to_string(row.n_players), format_double(row.spread_rho),
                     format_double(row.spread_value), format_double(row.spread_pi),
                     format_double(row.gap_rho), format_double(row.gap_pi),
                     row.certified ? "1" : "0"});
  return out;
}

std::string regeneration_csv(const RegenerationStats& stats) {
  std::string out = csv_line({"path", "tau_star", "censored", "sum_V"});
  for (std::size_t p = 0; p < stats.paths.size(); ++p) {
    const auto& path = stats.paths[p];
    out += csv_line({std::to_string(p), std::to_string(path.tau), path.censored ? "1" : "0",
                     format_double(path.sum_v)});
  }
  return out;
}

std::string survival_csv(const CouplingReport& report) {
  std::string out = csv_line({"k", "empirical_survival", "bound"});
  for (std::size_t k = 1; k < report.survival.size(); ++k)
    out += csv_line({std::to_string(k), format_double(report.survival[k]),
                     format_double(report.bound[k])});
  return out;
}

std::vector<PlotFile> emit_plot_data(const ConvergenceTable& table) {
  if (table.rows.empty()) throw ModelError("emit_plot_data: empty convergence table");
  return {{"fig_convergence.csv", convergence_csv(table)}};
}

std::vector<PlotFile> emit_plot_data(const std::vector<MfgTraceRow>& trace) {
  if (trace.empty()) throw ModelError("emit_plot_data: empty iteration trace");
  return {{"fig_iteration.csv", trace_csv(trace)}};
}

std::vector<PlotFile> emit_plot_data(const CouplingReport& report) {
  if (report.survival.size() <= 1) throw ModelError("emit_plot_data: empty survival curve");
  return {{"fig_survival.csv", survival_csv(report)}};
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write file: " + path.string());
  out << contents;
}

}  // namespace mfg::io
