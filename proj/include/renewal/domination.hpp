#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "renewal/kernel.hpp"

namespace renewal {

// ---------------------------------------------------------------------------
// Condition A: dominating sequences
// ---------------------------------------------------------------------------

/// Nonincreasing, nonnegative G_0..G_N with G_n = G_0 for n < 0.
class DominatingSequence {
 public:
  DominatingSequence() = default;
  /// Throws ValidationError unless g is nonempty, nonnegative and
  /// nonincreasing and tail_bound (if any) is nonnegative.
  explicit DominatingSequence(std::vector<double> g, std::optional<double> tail_bound = {});

  const std::vector<double>& values() const { return g_; }
  std::size_t last_index() const { return g_.size() - 1; }
  double G0() const { return g_.front(); }

  /// G_n; negative n resolve to G_0 and n past the stored range to G_N,
  /// which still bounds the true value because G is nonincreasing.
  double at(Time n) const;

  double m_partial() const { return m_partial_; }
  const std::optional<double>& tail_bound() const { return tail_bound_; }
  /// m = sum of all G_n. Throws when no tail bound is attached.
  double m() const;

 private:
  std::vector<double> g_;
  double m_partial_ = 0.0;
  std::optional<double> tail_bound_;
};

/// Power-series coefficients f_0..f_N of
///   F(s) = (1 - sqrt(1 - 4p(1-p)s^2)) / (2(1-p)),
/// i.e. f_{2k} = C(2k,k)/(2k-1) (p(1-p))^k / (2(1-p)) and odd coefficients
/// zero. They sum to 1 for p > 1/2. Throws ValidationError unless 1/2 < p < 1.
std::vector<double> first_return_coefficients(double p, std::size_t n);

/// G_n = sum_{k>n} f_k / p for n = 0..N, with sum f_k = 1 for the outer
/// tail, and a geometric certificate for sum_{n>N} G_n.
DominatingSequence random_walk_domination(double p, std::size_t n);

/// p(1-p) >= sup_{t,j} alpha_{tj}(1 - alpha_{tj}) over both chains.
bool domination_valid_for(double p, double alpha_sup_product);

/// Empirical renewal-tail surface. For each start time t and start state
/// x in the grid, gaps to the next visit of C are sampled; then
///   G^_n(t) = sum_{k>n} max_x g^_k(t, x),
/// where gaps beyond max_n are pooled into one overflow bucket.
struct RenewalTailSurface {
  std::vector<Time> t_grid;
  std::vector<State> x_grid;
  std::size_t max_n = 0;
  std::size_t n_paths = 0;
  /// g_hat[ti][xi][k] for k = 0..max_n+1 (last entry: gap > max_n).
  std::vector<std::vector<std::vector<double>>> g_hat;
  /// G_hat[ti][n] and se[ti][n] for n = 0..max_n.
  std::vector<std::vector<double>> G_hat;
  std::vector<std::vector<double>> se;
};

RenewalTailSurface estimate_renewal_tails(const KernelSchedule& schedule,
                                          std::span<const Time> t_grid,
                                          std::span<const State> x_grid, std::size_t max_n,
                                          std::size_t n_paths, std::uint64_t seed,
                                          unsigned workers = 1);

struct ConditionAFlag {
  Time t = 0;
  std::size_t n = 0;
  double G_hat = 0.0;
  double se = 0.0;
  double G = 0.0;
};

struct ConditionAReport {
  bool pass = true;
  std::size_t checked = 0;
  std::vector<ConditionAFlag> flags;
};

/// Flags every (t, n) with G^_n(t) - 3 SE > G_n over the shared index range.
ConditionAReport check_condition_A(const RenewalTailSurface& surface,
                                   const DominatingSequence& g);

// ---------------------------------------------------------------------------
// Condition B: regularity constant gamma
// ---------------------------------------------------------------------------

struct AnalyticGamma {
  double gamma0 = 0.0;
  double mu_hat = 0.0;
};

struct EmpiricalGamma {
  std::vector<Time> t_grid;
  std::vector<Time> lag_grid;
  std::size_t n_paths = 0;
  bool swapped = false;
  double min_observed = 0.0;
};

struct RegularityCertificate {
  double gamma = 1.0;
  Time n0 = 0;
  std::variant<AnalyticGamma, EmpiricalGamma> provenance;
};

/// min(alpha_inf, beta_inf); throws ValidationError unless both lie in (0,1].
double gamma0(double alpha_inf, double beta_inf);

/// gamma = gamma0^(mu_hat / gamma0) with n0 = 0.
RegularityCertificate gamma_analytic(double gamma0, double mu_hat);

struct GammaPoint {
  Time base = 0;
  Time lag = 0;
  std::size_t conditioned = 0;
  std::size_t hits = 0;
  double p_hat = 0.0;
  double se = 0.0;
  /// Conditioning event never observed at this point.
  bool flagged = false;

  double lower() const { return p_hat - 3.0 * se; }
};

struct GammaEstimate {
  std::vector<GammaPoint> points;
  /// min over unflagged points of p_hat - 3 SE (1 when nothing was observed).
  double gamma_hat = 1.0;
  std::size_t flagged = 0;
  /// Present iff gamma_hat > 0 and no point is flagged.
  std::optional<RegularityCertificate> certificate;
};

struct GammaGrid {
  std::vector<Time> t_grid;
  std::vector<Time> lag_grid;
  Time n0 = 0;
  /// false: base times n >= n0, all lags (the inequality as stated).
  /// true: all base times, lags >= n0.
  bool swapped = false;
};

/// Monte Carlo estimate of min P{X_{n+t} in C | X_n in C} over the grid,
/// with X_0 drawn from `initial`. Throws ValidationError on empty grids.
GammaEstimate estimate_gamma(const KernelSchedule& schedule, std::span<const double> initial,
                             const GammaGrid& grid, std::size_t n_paths, std::uint64_t seed,
                             unsigned workers = 1);

}  // namespace renewal
