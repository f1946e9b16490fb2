#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "renewal/domination.hpp"
#include "renewal/exact.hpp"
#include "renewal/kernel.hpp"
#include "renewal/simulate.hpp"

namespace renewal {

/// E[T] <= m1 + m2 + (n0 G0 + m)(1 + gamma)/gamma.
double theorem1_bound(double m1, double m2, Time n0, double G0, double m, double gamma);

/// P(S_k = j, tau >= k) for 0 <= k <= j <= max_j, estimated from path
/// records (tau = trial count).
struct TrialStats {
  std::size_t max_j = 0;
  std::size_t n_paths = 0;
  /// prob[j][k]
  std::vector<std::vector<double>> prob;

  double at(std::size_t j, std::size_t k) const {
    return j < prob.size() && k < prob[j].size() ? prob[j][k] : 0.0;
  }
  /// sum_{k<=j} P(S_k = j, tau >= k)
  double column_sum(std::size_t j) const;
};

TrialStats trial_stats(std::span<const PathRecord> records, std::size_t max_j);

/// S'_n = sum_{j=0}^n G_{n-j-n0} sum_{k=0}^j P(S_k = j, tau >= k) for
/// n = 0..N, negative G indices resolving to G_0.
///
/// With `include_first_trial` the term G_{n-n0} for the first trial (the
/// event n < S_0, which the double sum does not cover) is added; without it
/// S'_0 = 0 although P(T' > 0) = 1.
std::vector<double> s_hat_prime(const DominatingSequence& g, Time n0, const TrialStats& stats,
                                std::size_t n, bool include_first_trial = false);

/// (1 - gamma)^n.
double trial_tail_bound(double gamma, Time n);

struct MuHats {
  double mu_hat_1 = 0.0;
  double mu_hat_2 = 0.0;
};

/// mu1 = 2/(2p-1) + 1 and
/// mu2 = (2p-1)^-1 (2 + 8(1-p)/(1-4p)) + 2/(2p-1) + 1, the latter kept
/// exactly in this form. Note 8(1-p)/(1-4p) < 0 for p > 1/4; mu2 still
/// simplifies to 12/(4p-1) + 1 > 0.
MuHats mu_hats(double p);

struct E1Bound {
  double E1 = 0.0;
  double mu_hat_1 = 0.0;
  double mu_hat_2 = 0.0;
};

/// Second-moment bound E1 = mu2/gamma + mu1/gamma^2.
E1Bound e1_bound(double p, double gamma);
/// First-moment bound E2 = mu1 (1 + gamma)/gamma.
double e2_bound(double p, double gamma);

enum class Verdict { E2Better, E1Better, Withheld };
const char* to_string(Verdict v);

struct BoundComparison {
  double E1 = 0.0;
  double E2 = 0.0;
  double mu_hat_1 = 0.0;
  double mu_hat_2 = 0.0;
  /// |E2 - (E1 - mu2/gamma)(1 + gamma) gamma|
  double identity_residual = 0.0;
  /// Withheld unless gamma(1 + gamma) < 1.
  Verdict verdict = Verdict::Withheld;
};

BoundComparison compare_bounds(double p, double gamma);

// ---------------------------------------------------------------------------
// Empirical checks
// ---------------------------------------------------------------------------

struct EmpiricalCurve {
  std::vector<double> value;
  std::vector<double> se;
};

/// P^(tau_trials > n), n = 0..N; trial-censored paths count as exceeding.
EmpiricalCurve trial_count_tail(std::span<const PathRecord> records, std::size_t n);
/// P^(T' > n), n = 0..N, with T' = sum of all B; trial-censored paths count
/// as exceeding (their T' lies past the horizon).
EmpiricalCurve trial_total_tail(std::span<const PathRecord> records, std::size_t n);

struct DominanceCheck {
  bool pass = true;
  std::size_t checked = 0;
  /// Indices n with lhs - 3 SE > bound.
  std::vector<std::size_t> violations;
};

DominanceCheck check_dominance(const EmpiricalCurve& lhs, std::span<const double> bound);

struct PathwiseCheck {
  std::size_t checked = 0;
  /// T <= theta0(1) + sum_n B_n 1{tau > n}
  std::size_t violations_started_in_c = 0;
  /// T <= theta0(1) + theta0(2) + sum_n B_n
  std::size_t violations_general = 0;
};

/// Checks the pathwise upper bounds for T on every path where T, both
/// theta0 and the trial sequence are resolved.
PathwiseCheck check_pathwise(std::span<const PathRecord> records);

// ---------------------------------------------------------------------------
// Full bound report
// ---------------------------------------------------------------------------

struct BirthDeathPair {
  BirthDeathSpec chain1;
  BirthDeathSpec chain2;
  std::vector<double> initial1;
  std::vector<double> initial2;
};

struct ReportOptions {
  /// Truncation N of G and range of the S'_n / trial-tail checks.
  std::size_t n = 200;
  /// Range of the trial-count tail check.
  std::size_t trial_tail_n = 50;
  Time horizon = 5000;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::size_t product_cap = kDefaultProductCap;
  bool include_first_trial = false;
};

struct BoundReport {
  ExpectationBracket m1;
  ExpectationBracket m2;
  /// "exact" or "mc"
  std::string m_provenance = "exact";
  double m1_se = 0.0;
  double m2_se = 0.0;

  Time n0 = 0;
  double G0 = 0.0;
  double m = 0.0;
  double gamma = 0.0;
  RegularityCertificate certificate;
  DominatingSequence dominating;
  double E_bound = 0.0;

  std::optional<double> p;
  std::optional<double> alpha_sup_product;
  std::optional<BoundComparison> comparison;

  ETEstimate mc;
  std::optional<ExpectationBracket> exact_T;
  /// mc.mean - 3 se <= E_bound (and the exact bracket lower end when known).
  bool bound_holds = false;

  bool both_start_in_c = false;
  std::vector<double> s_hat_prime;
  EmpiricalCurve t_prime_tail;
  DominanceCheck s_hat_check;
  EmpiricalCurve trial_tail;
  std::vector<double> trial_tail_bound;
  DominanceCheck trial_tail_check;
  PathwiseCheck pathwise;
};

/// Assembles the bound for an arbitrary pair given a dominating sequence and
/// a regularity certificate, and validates it against Monte Carlo (and the
/// exact oracle when the product space fits under the cap).
BoundReport bound_report(const SimulationPlan& plan, const DominatingSequence& g,
                         const RegularityCertificate& certificate, const ReportOptions& options);

/// Birth-death pipeline: checks p(1-p) >= sup alpha(1-alpha), builds G from
/// the random walk with parameter p, gamma from gamma0 and mu_hat (default
/// mu1(p)), then calls bound_report and attaches E1/E2. Throws
/// ValidationError before simulating when the domination condition fails.
BoundReport full_report(const BirthDeathPair& pair, double p, const ReportOptions& options,
                        std::optional<double> mu_hat = {});

}  // namespace renewal
