#include "renewal/bounds.hpp"

#include <algorithm>
#include <cmath>

namespace renewal {

namespace {

void require_p_gamma(double p, double gamma) {
  if (!(p > 0.5 && p < 1.0)) {
    throw ValidationError("p = " + std::to_string(p) +
                          " outside (1/2, 1), the domain of the random-walk generating function");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ValidationError("gamma = " + std::to_string(gamma) + " outside (0, 1]");
  }
}

bool supported_in(std::span<const double> dist, const StateSpace& space) {
  for (std::size_t x = 0; x < dist.size(); ++x) {
    if (dist[x] > 0.0 && !space.in_target(static_cast<State>(x))) return false;
  }
  return true;
}

EmpiricalCurve binomial_curve(const std::vector<std::size_t>& exceed, std::size_t total) {
  EmpiricalCurve c;
  c.value.resize(exceed.size());
  c.se.resize(exceed.size());
  const auto n = static_cast<double>(total);
  for (std::size_t i = 0; i < exceed.size(); ++i) {
    const double p = static_cast<double>(exceed[i]) / n;
    c.value[i] = p;
    c.se[i] = std::sqrt(p * (1.0 - p) / n);
  }
  return c;
}

/// Hitting-time bracket by Monte Carlo from the recorded theta0 values;
/// censored values count as the horizon, so the mean is a lower bound.
std::pair<ExpectationBracket, double> mc_hitting(std::span<const PathRecord> records,
                                                 bool first, Time horizon) {
  std::vector<double> v;
  v.reserve(records.size());
  bool censored = false;
  for (const auto& r : records) {
    const auto& th = first ? r.theta0_1 : r.theta0_2;
    censored = censored || !th;
    v.push_back(th ? static_cast<double>(*th) : static_cast<double>(horizon));
  }
  const auto ms = mean_and_se(v);
  ExpectationBracket b;
  b.lower = ms.mean;
  // Not a certified bound: the point estimate plus three standard errors.
  b.upper = censored ? std::numeric_limits<double>::infinity() : ms.mean + 3.0 * ms.se;
  return {b, ms.se};
}

}  // namespace

double theorem1_bound(double m1, double m2, Time n0, double G0, double m, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ValidationError("E[T] bound: gamma must lie in (0, 1]");
  }
  if (m1 < 0.0 || m2 < 0.0 || n0 < 0 || G0 < 0.0 || m < 0.0) {
    throw ValidationError("E[T] bound: inputs must be nonnegative");
  }
  return m1 + m2 + (static_cast<double>(n0) * G0 + m) * (1.0 + gamma) / gamma;
}

// ---------------------------------------------------------------------------

double TrialStats::column_sum(std::size_t j) const {
  if (j >= prob.size()) return 0.0;
  double s = 0.0;
  for (double v : prob[j]) s += v;
  return s;
}

TrialStats trial_stats(std::span<const PathRecord> records, std::size_t max_j) {
  TrialStats st;
  st.max_j = max_j;
  st.n_paths = records.size();
  std::vector<std::vector<std::size_t>> count(max_j + 1);
  for (std::size_t j = 0; j <= max_j; ++j) count[j].assign(j + 1, 0);
  for (const auto& r : records) {
    // k ranges over 0..tau (every recorded partial sum satisfies tau >= k).
    for (std::size_t k = 0; k < r.S.size(); ++k) {
      const Time j = r.S[k];
      if (j < 0 || static_cast<std::size_t>(j) > max_j) continue;
      if (k <= static_cast<std::size_t>(j)) ++count[static_cast<std::size_t>(j)][k];
    }
  }
  st.prob.resize(max_j + 1);
  const auto n = static_cast<double>(std::max<std::size_t>(1, records.size()));
  for (std::size_t j = 0; j <= max_j; ++j) {
    st.prob[j].resize(j + 1);
    for (std::size_t k = 0; k <= j; ++k) st.prob[j][k] = static_cast<double>(count[j][k]) / n;
  }
  return st;
}

std::vector<double> s_hat_prime(const DominatingSequence& g, Time n0, const TrialStats& stats,
                                std::size_t n, bool include_first_trial) {
  std::vector<double> c(n + 1);
  for (std::size_t j = 0; j <= n; ++j) c[j] = stats.column_sum(j);
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t i = 0; i <= n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= i; ++j) {
      acc += g.at(static_cast<Time>(i) - static_cast<Time>(j) - n0) * c[j];
    }
    if (include_first_trial) acc += g.at(static_cast<Time>(i) - n0);
    out[i] = acc;
  }
  return out;
}

double trial_tail_bound(double gamma, Time n) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("trial tail: gamma outside (0, 1]");
  if (n <= 0) return 1.0;
  return std::pow(1.0 - gamma, static_cast<double>(n));
}

// ---------------------------------------------------------------------------

MuHats mu_hats(double p) {
  if (!(p > 0.5 && p < 1.0)) {
    throw ValidationError("p = " + std::to_string(p) +
                          " outside (1/2, 1), the domain of the random-walk generating function");
  }
  MuHats m;
  m.mu_hat_1 = 2.0 / (2.0 * p - 1.0) + 1.0;
  m.mu_hat_2 = (2.0 + 8.0 * (1.0 - p) / (1.0 - 4.0 * p)) / (2.0 * p - 1.0) +
               2.0 / (2.0 * p - 1.0) + 1.0;
  return m;
}

E1Bound e1_bound(double p, double gamma) {
  require_p_gamma(p, gamma);
  const auto m = mu_hats(p);
  return {m.mu_hat_2 / gamma + m.mu_hat_1 / (gamma * gamma), m.mu_hat_1, m.mu_hat_2};
}

double e2_bound(double p, double gamma) {
  require_p_gamma(p, gamma);
  return mu_hats(p).mu_hat_1 * (1.0 + gamma) / gamma;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::E2Better:
      return "E2<E1";
    case Verdict::E1Better:
      return "E1<=E2";
    case Verdict::Withheld:
      return "withheld";
  }
  return "withheld";
}

BoundComparison compare_bounds(double p, double gamma) {
  const auto e1 = e1_bound(p, gamma);
  BoundComparison c;
  c.E1 = e1.E1;
  c.E2 = e2_bound(p, gamma);
  c.mu_hat_1 = e1.mu_hat_1;
  c.mu_hat_2 = e1.mu_hat_2;
  c.identity_residual = std::abs(c.E2 - (c.E1 - c.mu_hat_2 / gamma) * (1.0 + gamma) * gamma);
  if (gamma * (1.0 + gamma) < 1.0) {
    c.verdict = c.E2 < c.E1 ? Verdict::E2Better : Verdict::E1Better;
  }
  return c;
}

// ---------------------------------------------------------------------------

EmpiricalCurve trial_count_tail(std::span<const PathRecord> records, std::size_t n) {
  std::vector<std::size_t> exceed(n + 1, 0);
  for (const auto& r : records) {
    const std::size_t tau = r.tau_trials ? *r.tau_trials : n + 1;
    for (std::size_t i = 0; i <= n && i < tau; ++i) ++exceed[i];
  }
  return binomial_curve(exceed, records.size());
}

EmpiricalCurve trial_total_tail(std::span<const PathRecord> records, std::size_t n) {
  std::vector<std::size_t> exceed(n + 1, 0);
  for (const auto& r : records) {
    const Time total = (r.tau_trials && !r.S.empty()) ? r.S.back() : static_cast<Time>(n) + 1;
    for (std::size_t i = 0; i <= n && static_cast<Time>(i) < total; ++i) ++exceed[i];
  }
  return binomial_curve(exceed, records.size());
}

DominanceCheck check_dominance(const EmpiricalCurve& lhs, std::span<const double> bound) {
  DominanceCheck c;
  const std::size_t n = std::min(lhs.value.size(), bound.size());
  for (std::size_t i = 0; i < n; ++i) {
    ++c.checked;
    if (lhs.value[i] - 3.0 * lhs.se[i] > bound[i]) c.violations.push_back(i);
  }
  c.pass = c.violations.empty();
  return c;
}

PathwiseCheck check_pathwise(std::span<const PathRecord> records) {
  PathwiseCheck c;
  for (const auto& r : records) {
    if (!r.T || !r.tau_trials || !r.theta0_1 || !r.theta0_2 || r.S.empty()) continue;
    ++c.checked;
    // sum_n B_n 1{tau > n} = S_{tau-1} = S_tau since B_tau = 0.
    const Time trials = r.S.back();
    if (*r.theta0_2 == 0 && *r.T > *r.theta0_1 + trials) ++c.violations_started_in_c;
    if (*r.T > *r.theta0_1 + *r.theta0_2 + trials) ++c.violations_general;
  }
  return c;
}

// ---------------------------------------------------------------------------

BoundReport bound_report(const SimulationPlan& plan_in, const DominatingSequence& g,
                         const RegularityCertificate& certificate, const ReportOptions& options) {
  SimulationPlan plan = plan_in;
  plan.trial_threshold = certificate.n0;
  plan.horizon = options.horizon;
  plan.n_paths = options.n_paths;
  plan.master_seed = options.seed;
  validate_plan(plan);

  BoundReport rep;
  rep.n0 = certificate.n0;
  rep.certificate = certificate;
  rep.gamma = certificate.gamma;
  rep.dominating = g;
  rep.G0 = g.G0();
  rep.m = g.m();

  rep.mc = estimate_ET(plan, {options.workers, true});
  const auto& records = rep.mc.records;

  const auto& sp1 = plan.schedule1.space();
  const auto& sp2 = plan.schedule2.space();
  if (std::max(sp1.size(), sp2.size()) <= options.product_cap) {
    rep.m1 = hitting_time_distribution(plan.schedule1, plan.initial1, plan.horizon).expectation;
    rep.m2 = hitting_time_distribution(plan.schedule2, plan.initial2, plan.horizon).expectation;
    rep.m_provenance = "exact";
  } else {
    std::tie(rep.m1, rep.m1_se) = mc_hitting(records, true, plan.horizon);
    std::tie(rep.m2, rep.m2_se) = mc_hitting(records, false, plan.horizon);
    rep.m_provenance = "mc";
  }
  rep.E_bound = (rep.m1.bounded() && rep.m2.bounded())
                    ? theorem1_bound(rep.m1.upper, rep.m2.upper, rep.n0, rep.G0, rep.m, rep.gamma)
                    : std::numeric_limits<double>::infinity();

  if (sp1.size() * sp2.size() <= options.product_cap) {
    rep.exact_T = product_tail(plan.schedule1, plan.schedule2, plan.initial1, plan.initial2,
                               plan.horizon, options.product_cap)
                      .expectation;
  }
  rep.bound_holds = rep.mc.mean - 3.0 * rep.mc.se <= rep.E_bound &&
                    (!rep.exact_T || rep.exact_T->lower <= rep.E_bound);

  rep.pathwise = check_pathwise(records);
  rep.both_start_in_c = supported_in(plan.initial1, sp1) && supported_in(plan.initial2, sp2);
  if (rep.both_start_in_c) {
    const auto stats = trial_stats(records, options.n);
    rep.s_hat_prime = s_hat_prime(g, rep.n0, stats, options.n, options.include_first_trial);
    rep.t_prime_tail = trial_total_tail(records, options.n);
    rep.s_hat_check = check_dominance(rep.t_prime_tail, rep.s_hat_prime);

    rep.trial_tail = trial_count_tail(records, options.trial_tail_n);
    rep.trial_tail_bound.resize(options.trial_tail_n + 1);
    for (std::size_t i = 0; i <= options.trial_tail_n; ++i) {
      rep.trial_tail_bound[i] = trial_tail_bound(rep.gamma, static_cast<Time>(i));
    }
    rep.trial_tail_check = check_dominance(rep.trial_tail, rep.trial_tail_bound);
  }
  rep.mc.records.clear();
  rep.mc.records.shrink_to_fit();
  return rep;
}

BoundReport full_report(const BirthDeathPair& pair, double p, const ReportOptions& options,
                        std::optional<double> mu_hat) {
  const auto mus = mu_hats(p);
  const double sup =
      std::max(pair.chain1.sup_alpha_product(), pair.chain2.sup_alpha_product());
  if (!domination_valid_for(p, sup)) {
    throw ValidationError("random-walk domination fails: p(1-p) = " + std::to_string(p * (1 - p)) +
                          " < sup alpha(1-alpha) = " + std::to_string(sup));
  }
  const double g0 = gamma0(pair.chain1.inf_alpha0(), pair.chain2.inf_alpha0());
  const auto cert = gamma_analytic(g0, mu_hat.value_or(mus.mu_hat_1));
  const auto g = random_walk_domination(p, options.n);

  SimulationPlan plan;
  plan.schedule1 = birth_death_schedule(pair.chain1);
  plan.schedule2 = birth_death_schedule(pair.chain2);
  plan.initial1 = pair.initial1;
  plan.initial2 = pair.initial2;

  auto rep = bound_report(plan, g, cert, options);
  rep.p = p;
  rep.alpha_sup_product = sup;
  rep.comparison = compare_bounds(p, cert.gamma);
  return rep;
}

}  // namespace renewal
