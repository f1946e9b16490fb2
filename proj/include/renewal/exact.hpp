#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "renewal/kernel.hpp"

namespace renewal {

/// Expectation known only up to truncation: lower <= E <= upper.
/// `infinite` is set when positive mass provably never reaches the target,
/// in which case the expectation itself is infinite.
struct ExpectationBracket {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  bool infinite = false;

  bool bounded() const { return upper < std::numeric_limits<double>::infinity(); }
  double width() const { return upper - lower; }
  bool contains(double x) const { return x >= lower && x <= upper; }
};

/// mass[n] = P{event at time n} for n = 0..horizon; residual = unassigned
/// tail mass beyond the horizon.
struct DistributionTable {
  std::vector<double> mass;
  double residual = 0.0;

  double total() const;
};

struct HittingTime {
  DistributionTable table;
  ExpectationBracket expectation;
};

/// Law of theta_0 = inf{t >= 0 : X_t in C} by forward propagation with
/// absorption at C. The upper end of the bracket uses a geometric tail
/// certificate computed from the schedule's own constant or periodic tail.
HittingTime hitting_time_distribution(const KernelSchedule& schedule,
                                      std::span<const double> initial, Time horizon);

/// Expected hitting times h(x) of C for a homogeneous kernel, from the
/// linear system (I - Q) h = 1 on the complement of C. Throws
/// ValidationError when the system is singular (C unreachable).
std::vector<double> expected_hitting_times_linear(const Matrix& p, const StateSpace& space);

inline constexpr std::size_t kDefaultProductCap = 10000;

struct JointTail {
  /// survival[n] = P{T > n} for n = 0..horizon.
  std::vector<double> survival;
  double residual = 0.0;
  ExpectationBracket expectation;
};

/// Law of the simultaneous renewal time T = inf{t > 0 : X1_t in C1, X2_t in C2}
/// of an independent pair, propagated on the product space.
JointTail product_tail(const KernelSchedule& schedule1, const KernelSchedule& schedule2,
                       std::span<const double> initial1, std::span<const double> initial2,
                       Time horizon, std::size_t product_cap = kDefaultProductCap);

/// Kernel of the independent pair on states x1 * size2 + x2.
CompiledSchedule product_schedule(const CompiledSchedule& a, const CompiledSchedule& b);

}  // namespace renewal
