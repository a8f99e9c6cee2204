#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mfg/matrix.hpp"
#include "mfg/model.hpp"
#include "mfg/stationary.hpp"

namespace mfg {

/// Split-chain construction data over the product space of state pairs.
/// Pair states are indexed pair = x1 * n + x2; split states carry an extra
/// level bit, index = level * n^2 + pair. Level-1 atom states share one
/// transition row, which is what creates regeneration.
struct SplitChainSpec {
  MfgModel model;
  StationaryControl control;
  double gamma1 = 0.0;             // level-split mass; default gamma^2 / 2

  int n = 0;                       // base states
  std::vector<char> in_atom;       // per pair state: both coordinates in the small set
  std::vector<double> minor_pair;  // nu x nu over pair states

  int pair_index(int x1, int x2) const { return x1 * n + x2; }
  int split_index(int pair, int level) const { return level * n * n + pair; }
};

/// Builds the spec; gamma1 defaults to gamma^2/2 and may be raised up to the
/// feasibility boundary of the product minorization (split_kernel errors past
/// it).
SplitChainSpec make_split_spec(const MfgModel& model, const StationaryControl& control,
                               std::optional<double> gamma1 = std::nullopt);

/// Kronecker square of the control-induced chain: two independent copies.
Matrix product_kernel(const MfgModel& model, const StationaryControl& control);

struct ProductMinorReport {
  bool pass = false;
  double pair_gamma_star = 0.0;   // max feasible minorization constant on pairs
  double declared = 0.0;          // gamma^2 from the base model
  double worst_subset_slack = 0.0;  // min over sampled subsets of P(A) - declared*nu(A)
};

/// Verifies the product minorization over all raw action pairs on the atom,
/// on singletons and on seeded random subsets of pair states.
ProductMinorReport verify_product_minorization(const SplitChainSpec& spec, int n_subsets = 64,
                                               std::uint64_t seed = 7);

/// Lifts a distribution on pair states to split states: atom-pair mass splits
/// (1-gamma1, gamma1) across the levels, the rest stays at level 0.
std::vector<double> star_lift(const SplitChainSpec& spec, std::span<const double> pair_dist);

/// The split transition kernel on 2 n^2 states. Rows out of level-0 atom
/// states carry the residual kernel (P* - gamma1 nu*)/(1 - gamma1); throws
/// MinorizationTooTightError if gamma1 makes any residual entry negative.
Matrix split_kernel(const SplitChainSpec& spec);

/// Exact fidelity check: sup over k <= k_max and pair states of the
/// difference between the level-marginalized k-step law of the split chain
/// and the k-step law of the product chain, both started from start_pair via
/// the initial star lift.
double marginal_law_max_error(const SplitChainSpec& spec, int start_pair, int k_max);

struct SplitState {
  int pair = 0;
  int level = 0;
};

struct RegenerationPath {
  long tau = 0;             // regeneration time, censored at horizon
  bool censored = false;
  double sum_v = 0.0;       // sum of V(x1)+V(x2) over steps 0..tau inclusive
  int atom_visits = 0;      // atom-pair visits at steps 1..tau (the visit index of tau)
  int post_state1 = -1;     // coordinates one step after regeneration, -1 if unavailable
  int post_state2 = -1;
};

struct RegenerationStats {
  std::vector<RegenerationPath> paths;
  SplitState start;
  int horizon = 0;
  double censored_fraction = 0.0;
};

/// Simulates split-chain paths with counter-based addressing (seed, path,
/// step); bit-reproducible for any worker count.
RegenerationStats simulate_regeneration(const SplitChainSpec& spec, SplitState start, int horizon,
                                        int n_paths, std::uint64_t seed, int threads = 1);

struct CouplingReport {
  bool enough_data = false;        // at least half the paths regenerated
  double theta_hat = 0.0;          // E[sum V] / (V(x1)+V(x2)+1) at the start
  double mean_tau = 0.0;
  double se_tau = 0.0;
  double gamma2 = 0.0;             // gamma1^2 / (1 - gamma1)
  std::vector<double> survival;    // empirical P(atom-visit index of tau > k), k = 1...
  std::vector<double> bound;       // (1 - gamma2)^(k-1)
  bool tail_respected = false;
  double exp_moment_delta = 0.0;   // largest stable exponential-moment rate found
  double exp_moment_value = 0.0;
  double two_sample_stat = 0.0;    // post-regeneration coordinate-law homogeneity
  double two_sample_critical = 0.0;
  bool exchangeable = false;
};

/// Empirical verification of the coupling estimates: bounded V-sums over the
/// regeneration cycle, the geometric tail bound in atom-visit counts, an
/// exponential-moment frontier, and the post-regeneration exchange of
/// coordinate laws (two-sample test at 1%).
CouplingReport verify_coupling_bounds(const SplitChainSpec& spec, const RegenerationStats& stats);

}  // namespace mfg
