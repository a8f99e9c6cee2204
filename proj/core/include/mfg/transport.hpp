#pragma once

#include <vector>

#include "mfg/matrix.hpp"
#include "mfg/measure.hpp"

namespace mfg::transport {

/// Optimal coupling between two measures plus its p-power cost.
struct TransportPlan {
  Matrix plan;       // plan(i, j): mass moved from state i to state j
  double cost = 0.0; // sum d(i,j)^p * plan(i,j)
};

struct WassersteinResult {
  double distance = 0.0;  // cost^(1/p)
  TransportPlan plan;
};

/// Exact Wasserstein-p distance on the finite metric space, solved as a
/// transportation problem by successive shortest paths (no entropic
/// approximation). Throws ModelError for p < 1 or mismatched sizes.
WassersteinResult wasserstein(const Measure& mu1, const Measure& mu2, double p,
                              const Matrix& metric);

/// Uniform average of Dirac masses at the given states.
Measure empirical(const std::vector<int>& points, int n_states);

/// Normalized total variation distance, 0.5 * l1, in [0, 1].
double tv_distance(const Measure& mu1, const Measure& mu2);

}  // namespace mfg::transport
