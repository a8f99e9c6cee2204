#include "mfg/splitchain.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "mfg/errors.hpp"
#include "mfg/philox.hpp"

namespace mfg {

SplitChainSpec make_split_spec(const MfgModel& model, const StationaryControl& control,
                               std::optional<double> gamma1) {
  model.validate_dimensions();
  SplitChainSpec spec;
  spec.model = model;
  spec.control = control;
  spec.n = model.n_states();
  const double g = gamma1.value_or(model.lyapunov.gamma * model.lyapunov.gamma / 2.0);
  if (!(g > 0.0 && g < 1.0)) throw ModelError("gamma1 must lie in (0,1)");
  spec.gamma1 = g;

  const int n = spec.n;
  spec.in_atom.assign(static_cast<std::size_t>(n) * n, 0);
  spec.minor_pair.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int x1 = 0; x1 < n; ++x1)
    for (int x2 = 0; x2 < n; ++x2) {
      const int pair = spec.pair_index(x1, x2);
      if (model.lyapunov.in_small_set(x1) && model.lyapunov.in_small_set(x2)) {
        spec.in_atom[pair] = 1;
        spec.minor_pair[pair] = model.lyapunov.minor_measure[x1] * model.lyapunov.minor_measure[x2];
      }
    }
  return spec;
}

Matrix product_kernel(const MfgModel& model, const StationaryControl& control) {
  const Matrix marginal = induced_chain(model, control);
  return kronecker(marginal, marginal);
}

ProductMinorReport verify_product_minorization(const SplitChainSpec& spec, int n_subsets,
                                               std::uint64_t seed) {
  const MfgModel& model = spec.model;
  const int n = spec.n;
  const double declared = model.lyapunov.gamma * model.lyapunov.gamma;

  ProductMinorReport report;
  report.declared = declared;

  // per-atom ratio over all raw action pairs
  double gamma_star = std::numeric_limits<double>::infinity();
  std::vector<int> atom_pairs;
  for (int pair = 0; pair < n * n; ++pair)
    if (spec.in_atom[pair]) atom_pairs.push_back(pair);

  for (int from : atom_pairs) {
    const int x1 = from / n, x2 = from % n;
    for (int u1 = 0; u1 < model.n_actions; ++u1)
      for (int u2 = 0; u2 < model.n_actions; ++u2) {
        const auto row1 = model.kernel.row(x1, u1);
        const auto row2 = model.kernel.row(x2, u2);
        for (int pair = 0; pair < n * n; ++pair) {
          if (spec.minor_pair[pair] <= 0.0) continue;
          const double prob = row1[pair / n] * row2[pair % n];
          gamma_star = std::min(gamma_star, prob / spec.minor_pair[pair]);
        }
      }
  }
  report.pair_gamma_star = gamma_star;

  // random-subset check of the set-level inequality
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_subsets; ++s) {
    std::vector<char> mask(static_cast<std::size_t>(n) * n, 0);
    for (int pair = 0; pair < n * n; ++pair)
      mask[pair] = rng::uniform01(seed, static_cast<std::uint32_t>(s),
                                  static_cast<std::uint32_t>(pair), 0, 0x5345u) < 0.5;
    double nu_mass = 0.0;
    for (int pair = 0; pair < n * n; ++pair)
      if (mask[pair]) nu_mass += spec.minor_pair[pair];
    for (int from : atom_pairs) {
      const int x1 = from / n, x2 = from % n;
      for (int u1 = 0; u1 < model.n_actions; ++u1)
        for (int u2 = 0; u2 < model.n_actions; ++u2) {
          const auto row1 = model.kernel.row(x1, u1);
          const auto row2 = model.kernel.row(x2, u2);
          double prob = 0.0;
          for (int pair = 0; pair < n * n; ++pair)
            if (mask[pair]) prob += row1[pair / n] * row2[pair % n];
          worst = std::min(worst, prob - declared * nu_mass);
        }
    }
  }
  report.worst_subset_slack = worst;
  report.pass = gamma_star >= declared - 1e-12 && worst >= -1e-12;
  return report;
}

std::vector<double> star_lift(const SplitChainSpec& spec, std::span<const double> pair_dist) {
  const int n2 = spec.n * spec.n;
  std::vector<double> lifted(2 * static_cast<std::size_t>(n2), 0.0);
  for (int pair = 0; pair < n2; ++pair) {
    if (spec.in_atom[pair]) {
      lifted[pair] = (1.0 - spec.gamma1) * pair_dist[pair];
      lifted[n2 + pair] = spec.gamma1 * pair_dist[pair];
    } else {
      lifted[pair] = pair_dist[pair];
    }
  }
  return lifted;
}

Matrix split_kernel(const SplitChainSpec& spec) {
  const int n2 = spec.n * spec.n;
  const Matrix pk = product_kernel(spec.model, spec.control);
  const std::vector<double> nu_star = star_lift(spec, spec.minor_pair);

  Matrix out(2 * n2, 2 * n2);
  for (int pair = 0; pair < n2; ++pair) {
    const std::vector<double> row_star = star_lift(spec, pk.row(pair));
    const int level0 = spec.split_index(pair, 0);
    if (!spec.in_atom[pair]) {
      for (int t = 0; t < 2 * n2; ++t) out(level0, t) = row_star[t];
    } else {
      // residual kernel once the gamma1 nu-star component is peeled off
      for (int t = 0; t < 2 * n2; ++t) {
        double v = (row_star[t] - spec.gamma1 * nu_star[t]) / (1.0 - spec.gamma1);
        if (v < 0.0) {
          if (v < -1e-15)
            throw MinorizationTooTightError(
                "gamma1 exceeds the product minorization; residual kernel went negative");
          v = 0.0;
        }
        out(level0, t) = v;
      }
    }
  }
  // every level-1 state regenerates from nu-star
  for (int pair = 0; pair < n2; ++pair) {
    const int level1 = spec.split_index(pair, 1);
    for (int t = 0; t < 2 * n2; ++t) out(level1, t) = nu_star[t];
  }
  return out;
}

double marginal_law_max_error(const SplitChainSpec& spec, int start_pair, int k_max) {
  const int n2 = spec.n * spec.n;
  if (start_pair < 0 || start_pair >= n2) throw ModelError("start pair out of range");

  const Matrix pk = product_kernel(spec.model, spec.control);
  const Matrix sk = split_kernel(spec);

  std::vector<double> pair_law(n2, 0.0);
  pair_law[start_pair] = 1.0;
  std::vector<double> split_law = star_lift(spec, pair_law);

  double worst = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    pair_law = left_multiply(pair_law, pk);
    split_law = left_multiply(split_law, sk);
    for (int pair = 0; pair < n2; ++pair) {
      const double marginal = split_law[pair] + split_law[n2 + pair];
      worst = std::max(worst, std::abs(marginal - pair_law[pair]));
    }
  }
  return worst;
}

RegenerationStats simulate_regeneration(const SplitChainSpec& spec, SplitState start, int horizon,
                                        int n_paths, std::uint64_t seed, int threads) {
  const int n2 = spec.n * spec.n;
  if (start.pair < 0 || start.pair >= n2 || start.level < 0 || start.level > 1)
    throw ModelError("invalid split start state");
  if (horizon < 1 || n_paths < 1) throw ModelError("horizon and path count must be positive");

  const Matrix sk = split_kernel(spec);
  const auto& v_fn = spec.model.lyapunov.v_fn;

  RegenerationStats stats;
  stats.paths.resize(n_paths);
  stats.start = start;
  stats.horizon = horizon;

  auto pair_v = [&](int pair) { return v_fn[pair / spec.n] + v_fn[pair % spec.n]; };
  auto is_atom1 = [&](int s) { return s >= n2 && spec.in_atom[s - n2]; };

  auto run_path = [&](int p) {
    RegenerationPath out;
    int s = spec.split_index(start.pair, start.level);
    out.sum_v = pair_v(start.pair);
    long tau = -1;
    int visits = 0;
    const auto plo = static_cast<std::uint32_t>(p);
    const auto phi = static_cast<std::uint32_t>(static_cast<std::uint64_t>(p) >> 32);
    int step = 1;
    for (; step <= horizon; ++step) {
      const double u01 =
          rng::uniform01(seed, static_cast<std::uint32_t>(step), plo, phi, 0x5243u);
      s = rng::sample_discrete(sk.row(s), u01);
      const int pair = s % n2;
      out.sum_v += pair_v(pair);
      if (spec.in_atom[pair]) ++visits;
      if (is_atom1(s)) {
        tau = step;
        break;
      }
    }
    if (tau < 0) {
      out.tau = horizon;
      out.censored = true;
      out.atom_visits = visits;
    } else {
      out.tau = tau;
      out.atom_visits = visits;
      if (tau + 1 <= horizon) {
        const double u01 =
            rng::uniform01(seed, static_cast<std::uint32_t>(tau + 1), plo, phi, 0x5243u);
        const int next = rng::sample_discrete(sk.row(s), u01);
        const int pair = next % n2;
        out.post_state1 = pair / spec.n;
        out.post_state2 = pair % spec.n;
      }
    }
    stats.paths[p] = out;
  };

  const int workers = std::max(1, threads);
  if (workers == 1) {
    for (int p = 0; p < n_paths; ++p) run_path(p);
  } else {
    std::atomic_int next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int p = next.fetch_add(1); p < n_paths; p = next.fetch_add(1)) run_path(p);
      });
    for (auto& t : pool) t.join();
  }

  int censored = 0;
  for (const auto& path : stats.paths) censored += path.censored;
  stats.censored_fraction = static_cast<double>(censored) / n_paths;
  return stats;
}

namespace {

// upper chi-square quantiles at 1%, Wilson-Hilferty beyond the table
double chi2_critical_99(int df) {
  static constexpr double table[] = {6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090};
  if (df >= 1 && df <= 8) return table[df - 1];
  const double z = 2.3263478740408408;  // standard normal 99% point
  const double c = 2.0 / (9.0 * df);
  const double t = 1.0 - c + z * std::sqrt(c);
  return df * t * t * t;
}

}  // namespace

CouplingReport verify_coupling_bounds(const SplitChainSpec& spec, const RegenerationStats& stats) {
  CouplingReport report;
  report.gamma2 = spec.gamma1 * spec.gamma1 / (1.0 - spec.gamma1);
  report.enough_data = stats.censored_fraction <= 0.5;

  std::vector<const RegenerationPath*> done;
  for (const auto& p : stats.paths)
    if (!p.censored) done.push_back(&p);
  if (done.empty()) return report;

  // V-sum over the cycle, normalized by the start's V mass
  const int x1 = stats.start.pair / spec.n;
  const int x2 = stats.start.pair % spec.n;
  const double denom = spec.model.lyapunov.v_fn[x1] + spec.model.lyapunov.v_fn[x2] + 1.0;
  double mean_sum = 0.0, mean_tau = 0.0;
  for (const auto* p : done) {
    mean_sum += p->sum_v;
    mean_tau += static_cast<double>(p->tau);
  }
  mean_sum /= static_cast<double>(done.size());
  mean_tau /= static_cast<double>(done.size());
  report.theta_hat = mean_sum / denom;
  report.mean_tau = mean_tau;
  double var_tau = 0.0;
  for (const auto* p : done) var_tau += (p->tau - mean_tau) * (p->tau - mean_tau);
  var_tau /= std::max<std::size_t>(1, done.size() - 1);
  report.se_tau = std::sqrt(var_tau / static_cast<double>(done.size()));

  // geometric tail over atom-visit counts
  int max_visits = 0;
  for (const auto* p : done) max_visits = std::max(max_visits, p->atom_visits);
  report.survival.resize(max_visits + 1, 0.0);
  report.bound.resize(max_visits + 1, 0.0);
  report.tail_respected = true;
  for (int k = 1; k <= max_visits; ++k) {
    long count = 0;
    for (const auto* p : done) count += p->atom_visits > k;
    report.survival[k] = static_cast<double>(count) / static_cast<double>(done.size());
    report.bound[k] = std::pow(1.0 - report.gamma2, k - 1);
    if (report.survival[k] > report.bound[k] + 1e-12) report.tail_respected = false;
  }

  // exponential-moment frontier: largest rate on a dyadic grid whose sample
  // mean is not dominated by its top percentile
  for (double delta = 1.0; delta > 1e-4; delta *= 0.5) {
    std::vector<double> terms;
    terms.reserve(done.size());
    double total = 0.0;
    bool overflow = false;
    for (const auto* p : done) {
      const double t = std::exp(delta * static_cast<double>(p->tau));
      if (!std::isfinite(t)) {
        overflow = true;
        break;
      }
      terms.push_back(t);
      total += t;
    }
    if (overflow) continue;
    std::sort(terms.begin(), terms.end());
    const std::size_t tail_start = terms.size() - std::max<std::size_t>(1, terms.size() / 100);
    double tail = 0.0;
    for (std::size_t i = tail_start; i < terms.size(); ++i) tail += terms[i];
    if (tail < 0.5 * total) {
      report.exp_moment_delta = delta;
      report.exp_moment_value = total / static_cast<double>(terms.size());
      break;
    }
  }

  // post-regeneration exchangeability: one draw per path, coordinate 1 vs 2
  std::vector<long> count1(spec.n, 0), count2(spec.n, 0);
  long used = 0;
  for (const auto* p : done)
    if (p->post_state1 >= 0) {
      ++count1[p->post_state1];
      ++count2[p->post_state2];
      ++used;
    }
  if (used > 0) {
    double stat = 0.0;
    int informative = 0;
    for (int s = 0; s < spec.n; ++s) {
      const double expected = (count1[s] + count2[s]) / 2.0;
      if (expected <= 0.0) continue;
      ++informative;
      const double d1 = count1[s] - expected;
      const double d2 = count2[s] - expected;
      stat += d1 * d1 / expected + d2 * d2 / expected;
    }
    report.two_sample_stat = stat;
    report.two_sample_critical = chi2_critical_99(std::max(1, informative - 1));
    report.exchangeable = stat <= report.two_sample_critical;
  }
  return report;
}

}  // namespace mfg
