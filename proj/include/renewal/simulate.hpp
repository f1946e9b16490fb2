#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "renewal/kernel.hpp"
#include "renewal/rng.hpp"

namespace renewal {

using Path = std::vector<State>;

/// Inverse-CDF draw from a probability vector for u in [0,1).
State sample_from(std::span<const double> distribution, double u);

/// X_0..X_horizon with X_0 ~ initial and X_{t+1} ~ P_t(X_t, .). One uniform
/// draw per step, so equal seeds give equal paths.
Path sample_path(const KernelSchedule& schedule, std::span<const double> initial,
                 std::uint64_t seed, Time horizon);

/// Incremental sampler of one chain that records its visits to C as it goes.
class PathSampler {
 public:
  PathSampler(const CompiledSchedule& schedule, const StateSpace& space,
              std::span<const double> initial, std::uint64_t seed);

  void advance_to(Time t);

  Time time() const { return time_; }
  State state() const { return state_; }
  State max_state() const { return max_state_; }
  /// Renewal times tau_0 < tau_1 < ... observed so far.
  const std::vector<Time>& renewal_times() const { return tau_; }

 private:
  const CompiledSchedule* schedule_;
  const StateSpace* space_;
  Rng rng_;
  Time time_ = 0;
  State state_ = 0;
  State max_state_ = 0;
  std::vector<Time> tau_;
};

/// Renewal structure of one observed path. theta[0] is the first hitting
/// time of C (0 when the path starts in C) and tau are its partial sums.
/// Everything is censored at `horizon`: renewals after it are unknown.
struct Renewals {
  std::vector<Time> theta;
  std::vector<Time> tau;
  Time horizon = 0;

  bool hit() const { return !tau.empty(); }
};

Renewals extract_renewals(std::span<const State> path, const StateSpace& space);

/// Theta from renewal times (inverse of the partial sums).
std::vector<Time> intervals_from_times(std::span<const Time> tau);

/// Smallest t > 0 present in both sequences; nullopt means censored.
std::optional<Time> simultaneous_renewal_time(std::span<const Time> tau1,
                                              std::span<const Time> tau2);

/// Alternating renewal trials. Even trials move chain 1 to its first renewal
/// that is either exactly on, or more than n0 after, chain 2's last trial
/// renewal; odd trials do the same for chain 2. Trial 0 takes chain 1's
/// first renewal at index >= 1 strictly after n0.
struct TrialSequence {
  std::vector<std::size_t> nu;
  std::vector<Time> B;
  std::vector<Time> S;
  /// Index of the first zero B; nullopt when the sequences ran out first.
  std::optional<std::size_t> tau_trials;

  bool censored() const { return !tau_trials.has_value(); }
  /// B_k with B_k = 0 for k >= tau_trials.
  Time B_at(std::size_t k) const { return k < B.size() ? B[k] : 0; }
  /// T' = sum of all B (only meaningful when not censored).
  Time total() const { return S.empty() ? 0 : S.back(); }
};

TrialSequence trial_sequence(std::span<const Time> tau1, std::span<const Time> tau2, Time n0);

struct RenewalTrace {
  Renewals chain1;
  Renewals chain2;
  std::optional<Time> T;
  TrialSequence trials;
};

RenewalTrace make_trace(std::span<const State> path1, const StateSpace& space1,
                        std::span<const State> path2, const StateSpace& space2, Time n0);

// ---------------------------------------------------------------------------
// Monte Carlo estimation of E[T]
// ---------------------------------------------------------------------------

struct SimulationPlan {
  KernelSchedule schedule1;
  KernelSchedule schedule2;
  std::vector<double> initial1;
  std::vector<double> initial2;
  Time horizon = 1000;
  std::size_t n_paths = 10000;
  std::uint64_t master_seed = 0;
  /// Threshold n0 used for the trial sequence recorded per path.
  Time trial_threshold = 0;
};

/// Throws ValidationError listing the first problem.
void validate_plan(const SimulationPlan& plan);

struct PathRecord {
  std::optional<Time> T;
  std::optional<Time> theta0_1;
  std::optional<Time> theta0_2;
  std::optional<std::size_t> tau_trials;
  /// Partial sums S_0..S_{tau_trials} (or as far as observed when censored).
  std::vector<Time> S;
  State max_state_1 = 0;
  State max_state_2 = 0;

  bool censored() const { return !T.has_value(); }
};

struct EstimateOptions {
  unsigned workers = 1;
  bool keep_records = false;
};

enum class EstimateStatus { Ok, PartiallyCensored, AllCensored };

struct ETEstimate {
  EstimateStatus status = EstimateStatus::Ok;
  std::size_t n_paths = 0;
  std::size_t n_censored = 0;
  std::size_t n_trials_censored = 0;
  /// Sample mean of min(T, horizon); a lower bound on E[T] when censored.
  double mean = 0.0;
  double se = 0.0;
  bool mean_is_lower_bound = false;
  /// tail[n] = P^(T > n) for n = 0..tail.size()-1; beyond the last entry it
  /// equals the censoring rate up to the horizon.
  std::vector<double> tail;
  /// Fraction of paths where either chain reached its top state.
  double top_state_rate = 0.0;
  std::vector<PathRecord> records;

  double censoring_rate() const {
    return n_paths ? static_cast<double>(n_censored) / static_cast<double>(n_paths) : 0.0;
  }
};

/// Seeds of chain 1 and chain 2 on path `path`.
inline std::uint64_t chain_seed(std::uint64_t master, std::uint64_t path, unsigned chain) {
  return mix_seed(mix_seed(master, path), chain);
}

/// Simulates one path pair until T and the trial sequence are resolved or
/// the horizon is reached.
PathRecord simulate_pair(const CompiledSchedule& s1, const StateSpace& space1,
                         const CompiledSchedule& s2, const StateSpace& space2,
                         std::span<const double> initial1, std::span<const double> initial2,
                         Time horizon, Time n0, std::uint64_t master_seed, std::uint64_t path);

ETEstimate estimate_ET(const SimulationPlan& plan, const EstimateOptions& options = {});

/// Sample mean and its standard error in input order (deterministic).
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe mean_and_se(std::span<const double> values);

}  // namespace renewal
