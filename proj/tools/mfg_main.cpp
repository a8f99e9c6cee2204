// Batch experiment runner: loads a model document, runs one pipeline
// (validate / ergodic / mfg / nash / converge / splitchain) and writes the
// result documents, CSV tables and a run manifest into the output directory.
//
// Exit codes: 0 success, 1 model validation failure, 2 solver
// non-convergence or failed certification, 3 IO/config errors.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfg/errors.hpp"
#include "mfg/model_io.hpp"
#include "mfg/philox.hpp"
#include "mfg/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Config {
  std::string model_path;
  std::string pipeline;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;
  std::string backend = "affine";
  long mc_samples = 4000;
  std::string damping = "harmonic";
  std::string n_list = "2,3,5,8,12,20";
  int n_person = 3;
  std::string mu0 = "uniform";
  std::vector<double> alphas = {0.9, 0.99, 0.999, 0.9999};
  double tol_fp = 1e-9;
  double tol_bellman = 1e-8;
  double tol_vd = 1e-7;
  double tol_deviation = 1e-6;
  double gap_tol = 0.05;
  bool relax_separation = false;
  int horizon = 400;
  int paths = 20000;
  double gamma1 = -1.0;  // <= 0: use the model default
  int max_iter = 500;
};

mfg::DampingSchedule parse_damping(const std::string& text) {
  if (text == "harmonic") return mfg::DampingSchedule::harmonic();
  const double lam = std::stod(text);
  if (!(lam > 0.0 && lam <= 1.0)) throw mfg::ModelError("damping must lie in (0,1]");
  return mfg::DampingSchedule::constant(lam);
}

std::vector<int> parse_n_list(const std::string& text) {
  std::vector<int> out;
  std::string token;
  for (char c : text) {
    if (c == ',') {
      out.push_back(std::stoi(token));
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) out.push_back(std::stoi(token));
  if (out.empty()) throw mfg::ModelError("empty N list");
  return out;
}

mfg::CostBackend make_backend(const Config& cfg) {
  mfg::CostBackend backend;
  if (cfg.backend == "affine")
    backend.mode = mfg::CostBackendMode::affine_exact;
  else if (cfg.backend == "enumerate")
    backend.mode = mfg::CostBackendMode::enumerate;
  else if (cfg.backend == "mc")
    backend.mode = mfg::CostBackendMode::monte_carlo;
  else
    throw mfg::ModelError("unknown backend: " + cfg.backend);
  backend.sample_count = cfg.mc_samples;
  backend.seed = cfg.seed;
  backend.threads = cfg.threads;
  return backend;
}

mfg::Measure initial_measure(const mfg::MfgModel& model, const std::string& spec) {
  if (spec == "uniform") return mfg::Measure::uniform(model.n_states());
  if (spec == "anchor") return mfg::Measure::dirac(model.n_states(), model.anchor());
  throw mfg::ModelError("unknown initial measure: " + spec);
}

// affine cost range over simplex vertices; scales the converge thresholds
double cost_range(const mfg::MfgModel& model) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int y = 0; y < model.n_states(); ++y) {
    const mfg::Measure vertex = mfg::Measure::dirac(model.n_states(), y);
    for (int x = 0; x < model.n_states(); ++x)
      for (int u = 0; u < model.n_actions; ++u) {
        const double v = model.cost(x, u, vertex);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  }
  return hi - lo;
}

class Runner {
 public:
  explicit Runner(Config cfg) : cfg_(std::move(cfg)) {}

  int run() {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(cfg_.out_dir);

    mfg::io::LoadReport loaded = mfg::io::load_model(cfg_.model_path);
    model_ = loaded.model;
    manifest_["model_load"] = {{"max_row_correction", loaded.max_row_correction},
                               {"corrected_rows", loaded.corrected_rows}};

    int code = 3;
    if (cfg_.pipeline == "validate")
      code = run_validate();
    else if (cfg_.pipeline == "ergodic")
      code = run_ergodic();
    else if (cfg_.pipeline == "mfg")
      code = run_mfg();
    else if (cfg_.pipeline == "nash")
      code = run_nash();
    else if (cfg_.pipeline == "converge")
      code = run_converge();
    else if (cfg_.pipeline == "splitchain")
      code = run_splitchain();
    else
      throw mfg::ModelError("unknown pipeline: " + cfg_.pipeline);

    const auto t1 = std::chrono::steady_clock::now();
    write_manifest(std::chrono::duration<double, std::milli>(t1 - t0).count(), code);
    return code;
  }

 private:
  void emit(const std::string& name, const std::string& contents) {
    mfg::io::write_file(fs::path(cfg_.out_dir) / name, contents);
    outputs_.push_back(name);
  }

  // complete config echo: everything that can influence a result is here
  void write_manifest(double wall_ms, int exit_code) {
    manifest_["pipeline"] = cfg_.pipeline;
    manifest_["model"] = cfg_.model_path;
    manifest_["seed"] = cfg_.seed;
    manifest_["threads"] = cfg_.threads;
    manifest_["backend"] = cfg_.backend;
    manifest_["mc_samples"] = cfg_.mc_samples;
    manifest_["damping"] = cfg_.damping;
    manifest_["n_list"] = cfg_.n_list;
    manifest_["n_person"] = cfg_.n_person;
    manifest_["mu0"] = cfg_.mu0;
    manifest_["max_iter"] = cfg_.max_iter;
    manifest_["horizon"] = cfg_.horizon;
    manifest_["paths"] = cfg_.paths;
    manifest_["gamma1"] = cfg_.gamma1;
    manifest_["relax_separation"] = cfg_.relax_separation;
    manifest_["tolerances"] = {{"tol_fp", cfg_.tol_fp},
                               {"tol_bellman", cfg_.tol_bellman},
                               {"tol_vd", cfg_.tol_vd},
                               {"tol_deviation", cfg_.tol_deviation},
                               {"gap_tol", cfg_.gap_tol}};
    manifest_["alphas"] = cfg_.alphas;
    manifest_["library_version"] = mfg::library_version;
    manifest_["wall_ms"] = wall_ms;
    manifest_["exit_code"] = exit_code;
    manifest_["outputs"] = outputs_;
    mfg::io::write_file(fs::path(cfg_.out_dir) / "manifest.json", manifest_.dump(2));
  }

  int run_validate() {
    const mfg::DriftReport drift = mfg::check_drift(model_, cfg_.relax_separation);
    const mfg::MinorReport minor = mfg::check_minorization(model_);

    // deterministic random trial measures for the regularity diagnostic
    std::vector<std::pair<mfg::Measure, mfg::Measure>> trials;
    for (int t = 0; t < 20; ++t) {
      auto draw = [&](int which) {
        std::vector<double> m(model_.n_states());
        double total = 0.0;
        for (int y = 0; y < model_.n_states(); ++y) {
          m[y] = 1e-3 + mfg::rng::uniform01(cfg_.seed, t, y, which, 0x564du);
          total += m[y];
        }
        for (double& v : m) v /= total;
        return mfg::Measure(m);
      };
      trials.emplace_back(draw(0), draw(1));
    }
    const mfg::RegularityReport reg = mfg::check_cost_regularity(model_, trials);

    json doc = json::parse(mfg::io::to_json(drift, minor));
    doc["regularity"] = {{"max_lipschitz_ratio", reg.max_lipschitz_ratio},
                         {"max_dropone_scaled", reg.max_dropone_scaled},
                         {"pairs_used", reg.pairs_used}};
    emit("validate_report.json", doc.dump(2));
    return (drift.pass && minor.pass) ? 0 : 1;
  }

  int run_ergodic() {
    const mfg::Measure mu = initial_measure(model_, cfg_.mu0);
    std::vector<mfg::SolverTraceRow> trace;
    mfg::RviOptions rvi;
    rvi.tol_bellman = cfg_.tol_bellman;
    rvi.trace = &trace;
    const mfg::ErgodicSolution by_rvi = mfg::solve_ergodic_rvi(model_, mu, rvi);

    mfg::VanishingDiscountOptions vd;
    vd.tol_vd = cfg_.tol_vd;
    vd.tol_bellman = cfg_.tol_bellman;
    const mfg::ErgodicSolution by_vd =
        mfg::solve_ergodic_vanishing_discount(model_, mu, cfg_.alphas, vd);

    double v_diff = std::abs(by_rvi.rho - by_vd.rho);
    double value_diff = 0.0;
    for (int x = 0; x < model_.n_states(); ++x)
      value_diff = std::max(value_diff, std::abs(by_rvi.value[x] - by_vd.value[x]));

    json doc;
    doc["rvi"] = json::parse(mfg::io::to_json(by_rvi));
    doc["vanishing_discount"] = json::parse(mfg::io::to_json(by_vd));
    doc["cross_check"] = {{"rho_diff", v_diff}, {"value_diff", value_diff}};
    emit("ergodic_result.json", doc.dump(2));
    emit("rvi_trace.csv", mfg::io::trace_csv(trace));
    return (by_rvi.certified && by_vd.certified) ? 0 : 2;
  }

  int run_mfg() {
    mfg::MfgOptions opts;
    opts.damping = parse_damping(cfg_.damping);
    opts.max_iter = cfg_.max_iter;
    opts.tol_fp = cfg_.tol_fp;
    opts.tol_certify = cfg_.tol_bellman;
    const mfg::MfgSolveResult result = mfg::solve_mfg(model_, initial_measure(model_, cfg_.mu0), opts);

    emit("mfg_result.json", mfg::io::to_json(result.solution));
    emit("mfg_trace.csv", mfg::io::trace_csv(result.trace));
    for (const auto& fig : mfg::io::emit_plot_data(result.trace)) emit(fig.name, fig.contents);
    return result.solution.certified ? 0 : 2;
  }

  int run_nash() {
    mfg::NashOptions opts;
    opts.damping = parse_damping(cfg_.damping);
    opts.tol_deviation = cfg_.tol_deviation;
    const auto initial = mfg::asymmetric_initials(model_, cfg_.n_person);
    const mfg::NashSolveResult result =
        mfg::solve_nash(model_, cfg_.n_person, initial, make_backend(cfg_), opts);

    emit("nash_result.json", mfg::io::to_json(result.profile));
    emit("nash_trace.csv", mfg::io::trace_csv(result.trace));
    return result.profile.certified ? 0 : 2;
  }

  int run_converge() {
    mfg::MfgOptions mfg_opts;
    mfg_opts.damping = parse_damping(cfg_.damping);
    mfg_opts.tol_fp = cfg_.tol_fp;
    const mfg::MfgSolveResult mfg_run =
        mfg::solve_mfg(model_, initial_measure(model_, "uniform"), mfg_opts);
    if (!mfg_run.solution.certified) {
      emit("mfg_result.json", mfg::io::to_json(mfg_run.solution));
      return 2;
    }

    mfg::NashOptions nash_opts;
    nash_opts.damping = parse_damping(cfg_.damping);
    nash_opts.tol_deviation = cfg_.tol_deviation;
    const auto n_list = parse_n_list(cfg_.n_list);
    const mfg::ConvergenceTable table =
        mfg::convergence_study(model_, n_list, mfg_run.solution, make_backend(cfg_), nash_opts);

    emit("mfg_result.json", mfg::io::to_json(mfg_run.solution));
    emit("converge.csv", mfg::io::convergence_csv(table));
    for (const auto& fig : mfg::io::emit_plot_data(table)) emit(fig.name, fig.contents);
    for (const auto& fig : mfg::io::emit_plot_data(mfg_run.trace)) emit(fig.name, fig.contents);

    const double rho_threshold = cfg_.gap_tol * cost_range(model_);
    bool pass = table.selector_unique;
    for (const auto& row : table.rows) pass = pass && row.certified;
    if (!table.rows.empty()) {
      const auto& last = table.rows.back();
      pass = pass && last.gap_rho <= rho_threshold && last.gap_pi <= cfg_.gap_tol;
    }
    json summary;
    summary["rho_threshold"] = rho_threshold;
    summary["pi_threshold"] = cfg_.gap_tol;
    summary["selector_unique"] = table.selector_unique;
    summary["pass"] = pass;
    emit("converge_summary.json", summary.dump(2));
    return pass ? 0 : 2;
  }

  int run_splitchain() {
    const mfg::StationaryControl control =
        mfg::StationaryControl::uniform(model_.n_states(), model_.n_actions);
    const mfg::SplitChainSpec spec = mfg::make_split_spec(
        model_, control, cfg_.gamma1 > 0.0 ? std::optional<double>(cfg_.gamma1) : std::nullopt);

    const mfg::ProductMinorReport minor = mfg::verify_product_minorization(spec);
    const int start_pair = spec.pair_index(model_.anchor(), model_.anchor());
    const double law_error = mfg::marginal_law_max_error(spec, start_pair, 20);

    const mfg::RegenerationStats stats = mfg::simulate_regeneration(
        spec, {start_pair, 0}, cfg_.horizon, cfg_.paths, cfg_.seed, cfg_.threads);
    const mfg::CouplingReport coupling = mfg::verify_coupling_bounds(spec, stats);

    json doc;
    doc["gamma1"] = spec.gamma1;
    doc["gamma2"] = coupling.gamma2;
    doc["product_minorization"] = {{"pass", minor.pass},
                                   {"pair_gamma_star", minor.pair_gamma_star},
                                   {"declared", minor.declared}};
    doc["marginal_law_max_error"] = law_error;
    doc["censored_fraction"] = stats.censored_fraction;
    doc["theta_hat"] = coupling.theta_hat;
    doc["mean_tau"] = coupling.mean_tau;
    doc["se_tau"] = coupling.se_tau;
    doc["tail_respected"] = coupling.tail_respected;
    doc["exp_moment_delta"] = coupling.exp_moment_delta;
    doc["exp_moment_value"] = coupling.exp_moment_value;
    doc["two_sample_stat"] = coupling.two_sample_stat;
    doc["two_sample_critical"] = coupling.two_sample_critical;
    doc["exchangeable"] = coupling.exchangeable;
    emit("splitchain_report.json", doc.dump(2));
    emit("regen.csv", mfg::io::regeneration_csv(stats));
    emit("survival.csv", mfg::io::survival_csv(coupling));
    for (const auto& fig : mfg::io::emit_plot_data(coupling)) emit(fig.name, fig.contents);

    const bool pass =
        minor.pass && law_error <= 1e-12 && coupling.tail_respected && coupling.enough_data;
    return pass ? 0 : 2;
  }

  Config cfg_;
  mfg::MfgModel model_;
  json manifest_;
  std::vector<std::string> outputs_;
};

}  // namespace

int main(int argc, char** argv) {
  Config cfg;
  CLI::App app{"mean-field game experiment runner"};
  app.add_option("--model", cfg.model_path, "model definition file")->required();
  app.add_option("--pipeline", cfg.pipeline,
                 "one of: validate, ergodic, mfg, nash, converge, splitchain")
      ->required();
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--seed", cfg.seed, "base seed for every stochastic component");
  app.add_option("--threads", cfg.threads, "worker cap; never changes results");
  app.add_option("--backend", cfg.backend, "integrated-cost backend: affine, enumerate, mc");
  app.add_option("--mc-samples", cfg.mc_samples, "monte-carlo sample count");
  app.add_option("--damping", cfg.damping, "'harmonic' or a constant in (0,1]");
  app.add_option("--n-list", cfg.n_list, "player counts for the converge pipeline");
  app.add_option("--n-person", cfg.n_person, "player count for the nash pipeline");
  app.add_option("--mu0", cfg.mu0, "initial measure: uniform or anchor");
  app.add_option("--alphas", cfg.alphas, "discount sequence for the vanishing-discount route");
  app.add_option("--tol-fp", cfg.tol_fp, "fixed-point stopping tolerance");
  app.add_option("--tol-bellman", cfg.tol_bellman, "certification residual tolerance");
  app.add_option("--tol-vd", cfg.tol_vd, "vanishing-discount sequence tolerance");
  app.add_option("--tol-deviation", cfg.tol_deviation, "Nash deviation tolerance");
  app.add_option("--gap-tol", cfg.gap_tol, "converge pipeline gap thresholds");
  app.add_flag("--relax-separation", cfg.relax_separation,
               "skip the Lyapunov separation clause (flagged in the report)");
  app.add_option("--horizon", cfg.horizon, "splitchain simulation horizon");
  app.add_option("--paths", cfg.paths, "splitchain simulated paths");
  app.add_option("--gamma1", cfg.gamma1, "split level mass; default gamma^2/2");
  app.add_option("--max-iter", cfg.max_iter, "fixed-point iteration cap");

  CLI11_PARSE(app, argc, argv);

  try {
    return Runner(std::move(cfg)).run();
  } catch (const mfg::IterationError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  } catch (const mfg::NonUniqueInvariantError& e) {
    std::cerr << "model failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
