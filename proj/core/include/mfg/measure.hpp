#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mfg/errors.hpp"

namespace mfg {

inline constexpr double probability_tol = 1e-12;

/// Probability vector over the finite state space.
class Measure {
 public:
  Measure() = default;

  /// Validates nonnegativity and unit mass (within probability_tol).
  explicit Measure(std::vector<double> mass) : mass_(std::move(mass)) { validate(); }

  static Measure dirac(int n, int at) {
    std::vector<double> m(n, 0.0);
    m[at] = 1.0;
    return Measure(std::move(m));
  }

  static Measure uniform(int n) {
    return Measure(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  int size() const { return static_cast<int>(mass_.size()); }
  double operator[](int i) const { return mass_[i]; }
  const std::vector<double>& mass() const { return mass_; }

  bool operator==(const Measure&) const = default;

 private:
  void validate() const {
    if (mass_.empty()) throw ModelError("measure must have at least one state");
    double total = 0.0;
    for (double v : mass_) {
      if (!(v >= 0.0)) throw ModelError("measure entries must be nonnegative");
      total += v;
    }
    if (std::abs(total - 1.0) > probability_tol)
      throw ModelError("measure mass must sum to 1 within 1e-12");
  }

  std::vector<double> mass_;
};

/// theta*a + (1-theta)*b, renormalized only by construction-time validation.
inline Measure mix(const Measure& a, const Measure& b, double theta) {
  std::vector<double> m(a.size());
  for (int i = 0; i < a.size(); ++i) m[i] = theta * a[i] + (1.0 - theta) * b[i];
  return Measure(std::move(m));
}

}  // namespace mfg
