#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "renewal/exact.hpp"
#include "renewal/simulate.hpp"

using namespace renewal;

namespace {

std::vector<double> delta(std::size_t n, std::size_t x) {
  std::vector<double> v(n, 0.0);
  v[x] = 1.0;
  return v;
}

KernelSchedule two_state(double stay0, double back1) {
  return KernelSchedule::constant(StateSpace(2, {0}), Matrix::from_rows({{stay0, 1 - stay0},
                                                                          {back1, 1 - back1}}));
}

SimulationPlan plan_of(KernelSchedule a, KernelSchedule b, std::vector<double> la,
                       std::vector<double> lb, std::size_t n_paths, Time horizon = 1000) {
  SimulationPlan p;
  p.schedule1 = std::move(a);
  p.schedule2 = std::move(b);
  p.initial1 = std::move(la);
  p.initial2 = std::move(lb);
  p.n_paths = n_paths;
  p.horizon = horizon;
  p.master_seed = 99;
  return p;
}

}  // namespace

TEST_CASE("sample_path basics") {
  const auto id = KernelSchedule::constant(StateSpace(3, {0}), Matrix::identity(3));
  CHECK(sample_path(id, delta(3, 2), 1, 5) == Path{2, 2, 2, 2, 2, 2});

  const auto flip = KernelSchedule::constant(StateSpace(2, {0}), Matrix::from_rows({{0, 1}, {1, 0}}));
  CHECK(sample_path(flip, delta(2, 0), 3, 4) == Path{0, 1, 0, 1, 0});

  const auto s = two_state(0.3, 0.6);
  CHECK(sample_path(s, std::vector<double>{0.5, 0.5}, 42, 200) == sample_path(s, std::vector<double>{0.5, 0.5}, 42, 200));
  CHECK(sample_path(s, std::vector<double>{0.5, 0.5}, 42, 200) != sample_path(s, std::vector<double>{0.5, 0.5}, 43, 200));
  CHECK_THROWS_AS(sample_path(s, std::vector<double>{0.5, 0.4}, 1, 3), ValidationError);
}

TEST_CASE("extract_renewals examples") {
  const StateSpace sp(4, {0});
  auto r = extract_renewals(Path{1, 0, 0, 2, 0}, sp);
  CHECK(r.theta == std::vector<Time>{1, 1, 2});
  CHECK(r.tau == std::vector<Time>{1, 2, 4});
  r = extract_renewals(Path{0, 0}, sp);
  CHECK(r.theta == std::vector<Time>{0, 1});
  CHECK(r.tau == std::vector<Time>{0, 1});
  r = extract_renewals(Path{3, 3, 3}, sp);
  CHECK_FALSE(r.hit());
  CHECK(r.theta.empty());
  CHECK(r.horizon == 2);
}

TEST_CASE("simultaneous_renewal_time examples") {
  using V = std::vector<Time>;
  CHECK(simultaneous_renewal_time(V{0, 2, 5, 7}, V{0, 3, 5}) == 5);
  CHECK(simultaneous_renewal_time(V{1, 2}, V{1, 4}) == 1);
  CHECK_FALSE(simultaneous_renewal_time(V{0, 2, 4}, V{0, 3, 5}).has_value());
  // t = 0 never counts.
  CHECK_FALSE(simultaneous_renewal_time(V{0}, V{0}).has_value());
}

TEST_CASE("trial_sequence hand traces") {
  using V = std::vector<Time>;
  auto tr = trial_sequence(V{0, 2, 5, 7}, V{0, 3, 5}, 0);
  CHECK(tr.nu == std::vector<std::size_t>{1, 1, 2, 2});
  CHECK(tr.B == V{2, 1, 2, 0});
  CHECK(tr.S == V{2, 3, 5, 5});
  REQUIRE(tr.tau_trials.has_value());
  CHECK(*tr.tau_trials == 3);
  CHECK(tr.total() == 5);

  V nat;
  for (Time t = 0; t < 20; ++t) nat.push_back(t);
  tr = trial_sequence(nat, nat, 0);
  CHECK(tr.B == V{1, 0});
  CHECK(tr.tau_trials == std::size_t{1});

  // Runs out of renewals: censored.
  tr = trial_sequence(V{0, 2, 4}, V{0, 3, 5}, 0);
  CHECK(tr.censored());

  // With n0 = 2 every B_k (k >= 1) is 0 or > 2.
  tr = trial_sequence(V{0, 1, 2, 6, 9, 13}, V{0, 4, 5, 9, 12}, 2);
  CHECK(tr.nu.front() == 3);  // first tau1_j > 2 is tau1_3 = 6
  for (std::size_t k = 1; k < tr.B.size(); ++k) CHECK((tr.B[k] == 0 || tr.B[k] > 2));
}

TEST_CASE("trace invariants on random chains") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n1 = 2 + rng() % 4;
    const std::size_t n2 = 2 + rng() % 4;
    const KernelSchedule a(StateSpace(n1, {0}), {oracle::random_stochastic(rng, n1)},
                           TailKind::Periodic,
                           {oracle::random_stochastic(rng, n1), oracle::random_stochastic(rng, n1)});
    const auto b = KernelSchedule::constant(StateSpace(n2, {0, 1}), oracle::random_stochastic(rng, n2));
    const Time n0 = static_cast<Time>(rng() % 3);
    const auto p1 = sample_path(a, oracle::random_distribution(rng, n1), rng(), 400);
    const auto p2 = sample_path(b, oracle::random_distribution(rng, n2), rng(), 400);
    const auto trace = make_trace(p1, a.space(), p2, b.space(), n0);

    // Renewal reconstruction and tau = partial sums of theta.
    std::vector<Time> visits;
    for (std::size_t t = 0; t < p1.size(); ++t) {
      if (a.space().in_target(p1[t])) visits.push_back(static_cast<Time>(t));
    }
    CHECK(visits == trace.chain1.tau);
    Time acc = 0;
    for (std::size_t k = 0; k < trace.chain1.theta.size(); ++k) {
      acc += trace.chain1.theta[k];
      CHECK(acc == trace.chain1.tau[k]);
    }

    const auto& tr = trace.trials;
    for (std::size_t k = 0; k < tr.S.size(); ++k) {
      const auto& tau = k % 2 == 0 ? trace.chain1.tau : trace.chain2.tau;
      CHECK(tr.S[k] == tau[tr.nu[k]]);
      if (k > 0) {
        CHECK(tr.S[k] >= tr.S[k - 1]);
        if (n0 > 0) CHECK((tr.B[k] == 0 || tr.B[k] > n0));
      }
    }
    if (tr.tau_trials) {
      CHECK(tr.B.size() == *tr.tau_trials + 1);
      CHECK(tr.B.back() == 0);
      CHECK(tr.B_at(*tr.tau_trials + 5) == 0);
      for (std::size_t k = 1; k < *tr.tau_trials; ++k) CHECK(tr.B[k] != 0);
      // The final trial lands on a common renewal, so T is resolved and
      // bounded pathwise.
      REQUIRE(trace.T.has_value());
      CHECK(*trace.T <= tr.total());
      if (trace.chain1.hit() && trace.chain2.hit()) {
        CHECK(*trace.T <= trace.chain1.theta[0] + trace.chain2.theta[0] + tr.total());
      }
    }
  }
}

TEST_CASE("simulate_pair matches full-horizon paths") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng() % 4;
    const auto a = KernelSchedule::constant(StateSpace(n, {0}), oracle::random_stochastic(rng, n, 0.5));
    const auto b = KernelSchedule::constant(StateSpace(n, {0}), oracle::random_stochastic(rng, n, 0.5));
    const auto la = oracle::random_distribution(rng, n);
    const auto lb = oracle::random_distribution(rng, n);
    const Time horizon = 300;
    const Time n0 = static_cast<Time>(rng() % 2);
    const CompiledSchedule ca(a);
    const CompiledSchedule cb(b);
    for (std::uint64_t path = 0; path < 20; ++path) {
      const auto rec = simulate_pair(ca, a.space(), cb, b.space(), la, lb, horizon, n0, 5, path);
      const auto p1 = sample_path(a, la, chain_seed(5, path, 1), horizon);
      const auto p2 = sample_path(b, lb, chain_seed(5, path, 2), horizon);
      const auto tr = make_trace(p1, a.space(), p2, b.space(), n0);
      CHECK(rec.T == tr.T);
      CHECK(rec.tau_trials == tr.trials.tau_trials);
      if (tr.trials.tau_trials) CHECK(rec.S == tr.trials.S);
      CHECK(rec.theta0_1 == (tr.chain1.hit() ? std::optional<Time>(tr.chain1.tau[0]) : std::nullopt));
      CHECK(rec.theta0_2 == (tr.chain2.hit() ? std::optional<Time>(tr.chain2.tau[0]) : std::nullopt));
    }
  }
}

TEST_CASE("estimate_ET: absorbed in C gives T = 1 exactly") {
  const auto id = KernelSchedule::constant(StateSpace(2, {0}), Matrix::identity(2));
  const auto est = estimate_ET(plan_of(id, id, delta(2, 0), delta(2, 0), 500));
  CHECK(est.mean == 1.0);
  CHECK(est.se == 0.0);
  CHECK(est.status == EstimateStatus::Ok);
  CHECK(est.tail == std::vector<double>{1.0, 0.0});
}

TEST_CASE("estimate_ET agrees with the exact oracle") {
  const auto a = two_state(0.5, 0.5);
  const auto b = two_state(0.3, 0.6);
  const auto plan = plan_of(a, b, delta(2, 1), delta(2, 1), 40000);
  const auto est = estimate_ET(plan, {4, false});
  const auto ex = product_tail(a, b, plan.initial1, plan.initial2, 2000);
  CHECK(ex.expectation.width() < 1e-9);
  CHECK(std::abs(est.mean - ex.expectation.lower) <= 3 * est.se);
  // Tail curve agrees pointwise too.
  for (std::size_t n = 0; n < 10 && n < est.tail.size(); ++n) {
    const double se = std::sqrt(ex.survival[n] * (1 - ex.survival[n]) / 40000.0);
    CHECK(std::abs(est.tail[n] - ex.survival[n]) <= 4 * se + 1e-12);
  }
}

TEST_CASE("estimate_ET is independent of the worker count") {
  const auto a = two_state(0.2, 0.7);
  const auto b = two_state(0.6, 0.3);
  auto plan = plan_of(a, b, {0.5, 0.5}, delta(2, 1), 5000);
  plan.trial_threshold = 1;
  const auto e1 = estimate_ET(plan, {1, true});
  const auto e8 = estimate_ET(plan, {8, true});
  CHECK(e1.mean == e8.mean);
  CHECK(e1.se == e8.se);
  CHECK(e1.tail == e8.tail);
  REQUIRE(e1.records.size() == e8.records.size());
  for (std::size_t i = 0; i < e1.records.size(); ++i) {
    CHECK(e1.records[i].T == e8.records[i].T);
    CHECK(e1.records[i].S == e8.records[i].S);
  }
}

TEST_CASE("estimate_ET censoring is explicit") {
  // Chain 1 is in C at even times, chain 2 at odd times: they never meet.
  const auto flip = KernelSchedule::constant(StateSpace(2, {0}), Matrix::from_rows({{0, 1}, {1, 0}}));
  const auto est = estimate_ET(plan_of(flip, flip, delta(2, 0), delta(2, 1), 50, 100));
  CHECK(est.status == EstimateStatus::AllCensored);
  CHECK(est.n_censored == 50);
  CHECK(est.mean_is_lower_bound);
  CHECK(est.mean == 100.0);
  CHECK(est.censoring_rate() == 1.0);

  auto bad = plan_of(flip, flip, {0.5, 0.6}, delta(2, 1), 10);
  CHECK_THROWS_AS(estimate_ET(bad), ValidationError);
}
