#include "mfg/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "mfg/errors.hpp"

namespace mfg::transport {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Transportation problem min sum c(i,j) f(i,j) subject to the marginal
// constraints, solved by successive shortest augmenting paths with Johnson
// potentials. Supplies are real; each augmentation exhausts at least one
// source or sink, so there are at most (#sources + #sinks) rounds.
class TransportSolver {
 public:
  TransportSolver(const std::vector<double>& supply, const std::vector<double>& demand,
                  const Matrix& cost)
      : n_(static_cast<int>(supply.size())),
        m_(static_cast<int>(demand.size())),
        supply_(supply),
        demand_(demand),
        cost_(cost),
        flow_(n_, m_),
        pot_src_(n_, 0.0),
        pot_dst_(m_, 0.0) {}

  Matrix solve() {
    const int max_rounds = 50 * (n_ + m_) + 100;
    int rounds = 0;
    while (remaining_supply() > 1e-14) {
      if (++rounds > max_rounds) throw IterationError("transport: augmentation did not terminate");
      augment();
    }
    return flow_;
  }

 private:
  // Dijkstra over the bipartite residual graph in reduced costs.
  void augment() {
    std::vector<double> dist_src(n_, kInf), dist_dst(m_, kInf);
    std::vector<int> parent_dst(m_, -1);   // source feeding this sink on the path
    std::vector<int> parent_src(n_, -1);   // sink feeding this source (residual arc)
    using Item = std::pair<double, int>;   // (distance, node); node < n_ is a source
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;

    for (int i = 0; i < n_; ++i)
      if (supply_[i] > 1e-15) {
        dist_src[i] = 0.0;
        heap.push({0.0, i});
      }

    std::vector<char> done_src(n_, 0), done_dst(m_, 0);
    while (!heap.empty()) {
      auto [d, node] = heap.top();
      heap.pop();
      if (node < n_) {
        const int i = node;
        if (done_src[i] || d > dist_src[i]) continue;
        done_src[i] = 1;
        for (int j = 0; j < m_; ++j) {
          // forward arc i -> j always available
          const double rc = cost_(i, j) + pot_src_[i] - pot_dst_[j];
          const double nd = d + std::max(rc, 0.0);
          if (nd < dist_dst[j] - 1e-18) {
            dist_dst[j] = nd;
            parent_dst[j] = i;
            heap.push({nd, n_ + j});
          }
        }
      } else {
        const int j = node - n_;
        if (done_dst[j] || d > dist_dst[j]) continue;
        done_dst[j] = 1;
        for (int i = 0; i < n_; ++i) {
          // residual arc j -> i exists when flow(i, j) > 0
          if (flow_(i, j) <= 1e-18) continue;
          const double rc = -(cost_(i, j) + pot_src_[i] - pot_dst_[j]);
          const double nd = d + std::max(rc, 0.0);
          if (nd < dist_src[i] - 1e-18) {
            dist_src[i] = nd;
            parent_src[i] = j;
            heap.push({nd, i});
          }
        }
      }
    }

    // Cheapest reachable sink with remaining demand.
    int best = -1;
    for (int j = 0; j < m_; ++j) {
      if (demand_[j] <= 1e-15 || dist_dst[j] == kInf) continue;
      if (best < 0 || dist_dst[j] < dist_dst[best]) best = j;
    }
    if (best < 0) throw ModelError("transport: marginals are not balanced");

    // Walk back to find the bottleneck, then push. Each round moves `push`
    // fresh mass from the path's origin to `best`.
    double push = demand_[best];
    int j = best;
    while (true) {
      const int i = parent_dst[j];
      if (parent_src[i] < 0) {
        push = std::min(push, supply_[i]);
        break;
      }
      push = std::min(push, flow_(i, parent_src[i]));
      j = parent_src[i];
    }
    j = best;
    while (true) {
      const int i = parent_dst[j];
      flow_(i, j) += push;
      if (parent_src[i] < 0) {
        supply_[i] = snap(supply_[i] - push);
        break;
      }
      flow_(i, parent_src[i]) = snap(flow_(i, parent_src[i]) - push);
      j = parent_src[i];
    }
    demand_[best] = snap(demand_[best] - push);

    for (int i = 0; i < n_; ++i)
      if (dist_src[i] < kInf) pot_src_[i] += dist_src[i];
    for (int jj = 0; jj < m_; ++jj)
      if (dist_dst[jj] < kInf) pot_dst_[jj] += dist_dst[jj];
  }

  double remaining_supply() const {
    double total = 0.0;
    for (double s : supply_) total += s;
    return total;
  }

  static double snap(double v) { return v < 1e-15 ? 0.0 : v; }

  int n_, m_;
  std::vector<double> supply_, demand_;
  const Matrix& cost_;
  Matrix flow_;
  std::vector<double> pot_src_, pot_dst_;
};

}  // namespace

WassersteinResult wasserstein(const Measure& mu1, const Measure& mu2, double p,
                              const Matrix& metric) {
  if (p < 1.0) throw ModelError("wasserstein: order p must be >= 1");
  if (mu1.size() != mu2.size()) throw ModelError("wasserstein: measures live on different spaces");
  if (metric.rows() != mu1.size() || metric.cols() != mu1.size())
    throw ModelError("wasserstein: metric dimension mismatch");

  const int n = mu1.size();
  Matrix cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost(i, j) = std::pow(metric(i, j), p);

  TransportSolver solver(mu1.mass(), mu2.mass(), cost);
  Matrix flow = solver.solve();

  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) total += cost(i, j) * flow(i, j);
  total = std::max(total, 0.0);

  WassersteinResult out;
  out.plan.plan = std::move(flow);
  out.plan.cost = total;
  out.distance = std::pow(total, 1.0 / p);
  return out;
}

Measure empirical(const std::vector<int>& points, int n_states) {
  if (points.empty()) throw ModelError("empirical: point list must be nonempty");
  std::vector<double> m(n_states, 0.0);
  const double w = 1.0 / static_cast<double>(points.size());
  for (int s : points) {
    if (s < 0 || s >= n_states) throw ModelError("empirical: state index out of range");
    m[s] += w;
  }
  return Measure(std::move(m));
}

double tv_distance(const Measure& mu1, const Measure& mu2) {
  if (mu1.size() != mu2.size()) throw ModelError("tv_distance: size mismatch");
  double acc = 0.0;
  for (int i = 0; i < mu1.size(); ++i) acc += std::abs(mu1[i] - mu2[i]);
  return 0.5 * acc;
}

}  // namespace mfg::transport
