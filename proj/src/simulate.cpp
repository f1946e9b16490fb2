#include "renewal/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "renewal/parallel.hpp"

namespace renewal {

State sample_from(std::span<const double> initial, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < initial.size(); ++i) {
    if (initial[i] <= 0.0) continue;
    last_positive = i;
    acc += initial[i];
    if (u < acc) return static_cast<State>(i);
  }
  return static_cast<State>(last_positive);
}

namespace {

void require_distribution(std::span<const double> initial, std::size_t size) {
  auto problems = validate_distribution(initial, size);
  if (!problems.empty()) throw ValidationError(problems.front());
}

}  // namespace

// ---------------------------------------------------------------------------

PathSampler::PathSampler(const CompiledSchedule& schedule, const StateSpace& space,
                         std::span<const double> initial, std::uint64_t seed)
    : schedule_(&schedule), space_(&space), rng_(seed) {
  state_ = sample_from(initial, rng_.uniform());
  max_state_ = state_;
  if (space_->in_target(state_)) tau_.push_back(0);
}

void PathSampler::advance_to(Time t) {
  while (time_ < t) {
    state_ = schedule_->at(time_).sample(state_, rng_.uniform());
    ++time_;
    max_state_ = std::max(max_state_, state_);
    if (space_->in_target(state_)) tau_.push_back(time_);
  }
}

Path sample_path(const KernelSchedule& schedule, std::span<const double> initial,
                 std::uint64_t seed, Time horizon) {
  require_distribution(initial, schedule.space().size());
  if (horizon < 0) throw ValidationError("sample_path: negative horizon");
  const CompiledSchedule compiled(schedule);
  Rng rng(seed);
  Path path;
  path.reserve(static_cast<std::size_t>(horizon) + 1);
  path.push_back(sample_from(initial, rng.uniform()));
  for (Time t = 0; t < horizon; ++t) {
    path.push_back(compiled.at(t).sample(path.back(), rng.uniform()));
  }
  return path;
}

// ---------------------------------------------------------------------------

std::vector<Time> intervals_from_times(std::span<const Time> tau) {
  std::vector<Time> theta(tau.size());
  for (std::size_t k = 0; k < tau.size(); ++k) theta[k] = k == 0 ? tau[0] : tau[k] - tau[k - 1];
  return theta;
}

Renewals extract_renewals(std::span<const State> path, const StateSpace& space) {
  Renewals r;
  r.horizon = path.empty() ? 0 : static_cast<Time>(path.size()) - 1;
  for (std::size_t t = 0; t < path.size(); ++t) {
    if (space.in_target(path[t])) r.tau.push_back(static_cast<Time>(t));
  }
  r.theta = intervals_from_times(r.tau);
  return r;
}

std::optional<Time> simultaneous_renewal_time(std::span<const Time> tau1,
                                              std::span<const Time> tau2) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < tau1.size() && j < tau2.size()) {
    if (tau1[i] <= 0) {
      ++i;
    } else if (tau2[j] <= 0) {
      ++j;
    } else if (tau1[i] < tau2[j]) {
      ++i;
    } else if (tau2[j] < tau1[i]) {
      ++j;
    } else {
      return tau1[i];
    }
  }
  return std::nullopt;
}

TrialSequence trial_sequence(std::span<const Time> tau1, std::span<const Time> tau2, Time n0) {
  TrialSequence out;
  if (n0 < 0) throw ValidationError("trial_sequence: n0 must be nonnegative");

  // nu_0 = min{j >= 1 : tau1_j > n0}
  if (tau1.size() < 2) return out;
  auto first = std::upper_bound(tau1.begin() + 1, tau1.end(), n0);
  if (first == tau1.end()) return out;
  std::size_t nu = static_cast<std::size_t>(first - tau1.begin());
  Time last = tau1[nu];
  out.nu.push_back(nu);
  out.B.push_back(last);
  out.S.push_back(last);

  for (std::size_t k = 1;; ++k) {
    // Odd trials move chain 2, even trials chain 1; index search starts at
    // the previous trial's index, exactly as the construction prescribes.
    const auto seq = (k % 2 == 1) ? tau2 : tau1;
    if (nu >= seq.size()) return out;
    const auto from = seq.begin() + static_cast<std::ptrdiff_t>(nu);
    auto hit = std::lower_bound(from, seq.end(), last);
    if (hit == seq.end()) return out;
    if (*hit != last) {
      hit = std::upper_bound(from, seq.end(), last + n0);
      if (hit == seq.end()) return out;
    }
    nu = static_cast<std::size_t>(hit - seq.begin());
    const Time b = *hit - last;
    out.nu.push_back(nu);
    out.B.push_back(b);
    out.S.push_back(out.S.back() + b);
    if (b == 0) {
      out.tau_trials = k;
      return out;
    }
    last = *hit;
  }
}

RenewalTrace make_trace(std::span<const State> path1, const StateSpace& space1,
                        std::span<const State> path2, const StateSpace& space2, Time n0) {
  RenewalTrace trace;
  trace.chain1 = extract_renewals(path1, space1);
  trace.chain2 = extract_renewals(path2, space2);
  trace.T = simultaneous_renewal_time(trace.chain1.tau, trace.chain2.tau);
  trace.trials = trial_sequence(trace.chain1.tau, trace.chain2.tau, n0);
  return trace;
}

// ---------------------------------------------------------------------------

void validate_plan(const SimulationPlan& plan) {
  require_valid(plan.schedule1);
  require_valid(plan.schedule2);
  require_distribution(plan.initial1, plan.schedule1.space().size());
  require_distribution(plan.initial2, plan.schedule2.space().size());
  if (plan.horizon < 1) throw ValidationError("horizon must be >= 1");
  if (plan.n_paths < 1) throw ValidationError("n_paths must be >= 1");
  if (plan.trial_threshold < 0) throw ValidationError("trial threshold n0 must be >= 0");
}

PathRecord simulate_pair(const CompiledSchedule& s1, const StateSpace& space1,
                         const CompiledSchedule& s2, const StateSpace& space2,
                         std::span<const double> initial1, std::span<const double> initial2,
                         Time horizon, Time n0, std::uint64_t master_seed, std::uint64_t path) {
  PathSampler a(s1, space1, initial1, chain_seed(master_seed, path, 1));
  PathSampler b(s2, space2, initial2, chain_seed(master_seed, path, 2));

  PathRecord rec;
  TrialSequence trials;
  // Doubling windows: a result resolved on a prefix is final, since both T
  // and every trial index are minima over prefix-closed conditions.
  Time window = 64;
  for (;;) {
    const Time end = std::min(horizon, window);
    a.advance_to(end);
    b.advance_to(end);
    rec.T = simultaneous_renewal_time(a.renewal_times(), b.renewal_times());
    trials = trial_sequence(a.renewal_times(), b.renewal_times(), n0);
    if ((rec.T && !trials.censored()) || end == horizon) break;
    window *= 2;
  }
  if (!a.renewal_times().empty()) rec.theta0_1 = a.renewal_times().front();
  if (!b.renewal_times().empty()) rec.theta0_2 = b.renewal_times().front();
  rec.tau_trials = trials.tau_trials;
  rec.S = std::move(trials.S);
  rec.max_state_1 = a.max_state();
  rec.max_state_2 = b.max_state();
  return rec;
}

MeanSe mean_and_se(std::span<const double> values) {
  MeanSe out;
  const auto n = values.size();
  if (n == 0) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(n);
  if (n < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

ETEstimate estimate_ET(const SimulationPlan& plan, const EstimateOptions& options) {
  validate_plan(plan);
  const CompiledSchedule s1(plan.schedule1);
  const CompiledSchedule s2(plan.schedule2);
  const auto& space1 = plan.schedule1.space();
  const auto& space2 = plan.schedule2.space();

  std::vector<PathRecord> records(plan.n_paths);
  parallel_for(plan.n_paths, options.workers, [&](std::size_t i) {
    records[i] = simulate_pair(s1, space1, s2, space2, plan.initial1, plan.initial2,
                               plan.horizon, plan.trial_threshold, plan.master_seed, i);
  });

  // Aggregation runs in path order so the result is independent of workers.
  ETEstimate est;
  est.n_paths = plan.n_paths;
  std::vector<double> capped(plan.n_paths);
  Time max_t = 0;
  std::size_t top_hits = 0;
  const State top1 = static_cast<State>(space1.size() - 1);
  const State top2 = static_cast<State>(space2.size() - 1);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.T) {
      capped[i] = static_cast<double>(*r.T);
      max_t = std::max(max_t, *r.T);
    } else {
      capped[i] = static_cast<double>(plan.horizon);
      ++est.n_censored;
    }
    if (!r.tau_trials) ++est.n_trials_censored;
    if (r.max_state_1 == top1 || r.max_state_2 == top2) ++top_hits;
  }
  const auto ms = mean_and_se(capped);
  est.mean = ms.mean;
  est.se = ms.se;
  est.mean_is_lower_bound = est.n_censored > 0;
  est.top_state_rate = static_cast<double>(top_hits) / static_cast<double>(plan.n_paths);
  if (est.n_censored == plan.n_paths) {
    est.status = EstimateStatus::AllCensored;
  } else if (est.n_censored > 0) {
    est.status = EstimateStatus::PartiallyCensored;
  }

  const Time last = est.n_censored > 0 ? plan.horizon : max_t;
  // Censored paths exceed every n up to the horizon.
  std::vector<std::size_t> at_time(static_cast<std::size_t>(last) + 1, 0);
  for (const auto& r : records) {
    if (r.T) ++at_time[static_cast<std::size_t>(*r.T)];
  }
  est.tail.resize(at_time.size());
  std::size_t done = 0;
  for (std::size_t n = 0; n < at_time.size(); ++n) {
    done += at_time[n];
    est.tail[n] = static_cast<double>(plan.n_paths - done) / static_cast<double>(plan.n_paths);
  }
  if (options.keep_records) est.records = std::move(records);
  return est;
}

}  // namespace renewal
