// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Informational lines start with "INFO".

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "renewal/bounds.hpp"
#include "renewal/domination.hpp"
#include "renewal/exact.hpp"
#include "renewal/report.hpp"
#include "renewal/scenario.hpp"
#include "renewal/simulate.hpp"

using namespace renewal;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void verdict(int id, bool pass, const std::string& detail) {
  std::printf("%s %d %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void info(const std::string& s) {
  std::printf("INFO %s\n", s.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> delta(std::size_t n, std::size_t x) {
  std::vector<double> v(n, 0.0);
  v[x] = 1.0;
  return v;
}

BirthDeathSpec bd(std::vector<std::vector<double>> tail, std::size_t cap) {
  BirthDeathSpec s;
  s.tail = std::move(tail);
  s.tail_kind = s.tail.size() > 1 ? TailKind::Periodic : TailKind::Constant;
  s.cap = cap;
  return s;
}

// ---------------------------------------------------------------------------

void closed_forms() {
  const auto t0 = Clock::now();
  const auto mu = mu_hats(0.75);
  const auto e1 = e1_bound(0.75, 0.1);
  const double e2 = e2_bound(0.75, 0.1);
  double worst = 0.0;
  for (double p : {0.55, 0.65, 0.75, 0.85, 0.95}) {
    for (double g : {0.01, 0.1, 0.5, 1.0}) worst = std::max(worst, compare_bounds(p, g).identity_residual);
  }
  const double secs = seconds_since(t0);
  const bool pass = std::abs(mu.mu_hat_1 - 5) <= 1e-12 && std::abs(mu.mu_hat_2 - 7) <= 1e-12 &&
                    std::abs(e1.E1 - 570) <= 1e-9 && std::abs(e2 - 55) <= 1e-12 && worst <= 1e-12 &&
                    secs < 1.0;
  verdict(1, pass,
          fmt("closed forms: mu1=%.15g mu2=%.15g E1=%.15g E2=%.15g max identity residual=%.3g "
              "(20 points) %.3fs",
              mu.mu_hat_1, mu.mu_hat_2, e1.E1, e2, worst, secs));
}

void coefficients() {
  const auto t0 = Clock::now();
  double err2 = 0.0;
  double err4 = 0.0;
  double series_err = 0.0;
  for (double p : {0.6, 0.75, 0.9}) {
    const double pq = p * (1 - p);
    const auto f = first_return_coefficients(p, 60);
    err2 = std::max(err2, std::abs(f[2] - 2 * pq));
    err4 = std::max(err4, std::abs(f[4] - 2 * pq * pq));
    // Series of (1 - sqrt(1 - 4pq s^2)) / (2q) via sqrt(1-x) = sum a_k x^k.
    double a = 1.0;
    double x = 1.0;
    for (std::size_t k = 1; k <= 30; ++k) {
      a *= (static_cast<double>(k) - 1.5) / static_cast<double>(k);
      x *= 4 * pq;
      series_err = std::max(series_err, std::abs(f[2 * k] + a * x / (2 * (1 - p))));
    }
  }
  const auto f = first_return_coefficients(0.75, 2000);
  double sum = 0.0;
  for (double v : f) sum += v;
  const double secs = seconds_since(t0);
  const bool clause_i = err2 <= 1e-12 && err4 <= 1e-12;
  const bool pass = clause_i && series_err <= 1e-12 && sum >= 1 - 1e-6 && sum <= 1 + 1e-12 &&
                    secs < 1.0;
  verdict(2, pass,
          fmt("coefficients: |f2-2pq|=%.3g |f4-2(pq)^2|=%.3g series err (k<=30)=%.3g "
              "sum f (N=2000)=%.15g %.3fs",
              err2, err4, series_err, sum, secs));
  if (!clause_i) {
    const auto g = first_return_coefficients(0.75, 4);
    info(fmt("coefficients of (1-sqrt(1-4pq s^2))/(2q) at p=0.75: f2=%.6g (=p) f4=%.6g (=p^2 q); "
             "f2=2pq would make sum f = 2q < 1",
             g[2], g[4]));
  }
}

void oracle_agreement(unsigned workers) {
  const auto t0 = Clock::now();
  struct Instance {
    std::string name;
    KernelSchedule a, b;
    std::vector<double> la, lb;
  };
  std::vector<Instance> cases;
  std::mt19937_64 rng(20240601);
  for (int i = 0; i < 3; ++i) {
    const std::size_t n1 = 3 + static_cast<std::size_t>(i);
    const std::size_t n2 = 4;
    const KernelSchedule a(StateSpace(n1, {0}), {oracle::random_stochastic(rng, n1, 0.2)},
                           TailKind::Periodic,
                           {oracle::random_stochastic(rng, n1, 0.2), oracle::random_stochastic(rng, n1, 0.2)});
    const auto b = KernelSchedule::constant(StateSpace(n2, {0, 1}), oracle::random_stochastic(rng, n2, 0.2));
    cases.push_back({fmt("random %zux%zu", n1, n2), a, b, oracle::random_distribution(rng, n1),
                     oracle::random_distribution(rng, n2)});
  }
  cases.push_back({"birth-death 4x4", birth_death_schedule(bd({{0.7}}, 3)),
                   birth_death_schedule(bd({{0.8}}, 3)), delta(4, 3), delta(4, 2)});
  cases.push_back({"periodic birth-death 5x4", birth_death_schedule(bd({{0.7}, {0.8, 0.75}}, 4)),
                   birth_death_schedule(bd({{0.75}, {0.7}, {0.8}}, 3)), delta(5, 4), delta(4, 0)});

  bool pass = true;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    SimulationPlan plan;
    plan.schedule1 = c.a;
    plan.schedule2 = c.b;
    plan.initial1 = c.la;
    plan.initial2 = c.lb;
    plan.n_paths = 100000;
    plan.horizon = 5000;
    plan.master_seed = 1000 + i;
    const auto est = estimate_ET(plan, {workers, false});
    const auto ex = product_tail(c.a, c.b, c.la, c.lb, 20000);
    const double dist = est.mean < ex.expectation.lower   ? ex.expectation.lower - est.mean
                        : est.mean > ex.expectation.upper ? est.mean - ex.expectation.upper
                                                          : 0.0;
    const bool ok = c.a.space().size() * c.b.space().size() <= 20 && ex.expectation.bounded() &&
                    est.status == EstimateStatus::Ok && dist <= 3 * est.se;
    pass = pass && ok;
    info(fmt("oracle %s: MC %.6f +- %.6f, exact [%.10f, %.10f], |diff|/SE = %.2f", c.name.c_str(),
             est.mean, est.se, ex.expectation.lower, ex.expectation.upper, dist / est.se));
  }
  const double secs = seconds_since(t0);
  verdict(3, pass && secs < 30.0,
          fmt("oracle agreement: %zu instances, 1e5 paths each, within 3 SE; %.2fs", cases.size(), secs));
}

void soundness(unsigned workers) {
  const auto t0 = Clock::now();
  struct Pair {
    std::string name;
    BirthDeathSpec a, b;
    std::size_t start1, start2;
  };
  const std::vector<Pair> pairs{
      {"homogeneous 0.75/0.75 from C", bd({{0.75}}, 50), bd({{0.75}}, 50), 0, 0},
      {"homogeneous 0.7/0.8 from 5,3", bd({{0.7}}, 50), bd({{0.8}}, 50), 5, 3},
      {"periodic (0.7,0.8)/(0.8,0.75,0.7) from C", bd({{0.7}, {0.8}}, 50),
       bd({{0.8}, {0.75}, {0.7}}, 50), 0, 0},
      {"periodic state-dependent from 4,0", bd({{0.7, 0.8, 0.75}, {0.8, 0.7}}, 50), bd({{0.72}, {0.78}}, 50),
       4, 0},
  };
  bool pass = true;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pr = pairs[i];
    ReportOptions opt;
    opt.n_paths = 100000;
    opt.horizon = 5000;
    opt.seed = 500 + i;
    opt.workers = workers;
    const BirthDeathPair pair{pr.a, pr.b, delta(51, pr.start1), delta(51, pr.start2)};
    const auto rep = full_report(pair, 0.7, opt);
    const bool ok = rep.m_provenance == "exact" && rep.mc.mean - 3 * rep.mc.se <= rep.E_bound;
    pass = pass && ok;
    info(fmt("soundness %s: E[T] MC %.4f +- %.4f, bound %.4f (m1<=%.4f m2<=%.4f m=%.4f gamma=%.5f)",
             pr.name.c_str(), rep.mc.mean, rep.mc.se, rep.E_bound, rep.m1.upper, rep.m2.upper, rep.m,
             rep.gamma));
  }
  const double secs = seconds_since(t0);
  verdict(4, pass && secs < 120.0,
          fmt("E[T] bound soundness: %zu birth-death pairs, p=0.7, cap 50, 1e5 paths; %.2fs",
              pairs.size(), secs));
}

void sec3_checks(unsigned workers) {
  const auto t0 = Clock::now();
  const auto s = parse_scenario(sec3_config());
  const BirthDeathPair pair{*s.chain1.birth_death, *s.chain2.birth_death, s.chain1.initial,
                            s.chain2.initial};
  ReportOptions opt;
  opt.n = s.domination.N;
  opt.trial_tail_n = s.trial_tail_n;
  opt.horizon = s.horizon;
  opt.n_paths = s.n_paths;
  opt.seed = s.seed;
  opt.workers = workers;
  const auto rep = full_report(pair, *s.domination.p, opt);
  const double secs = seconds_since(t0);
  info(fmt("sec3 run: E[T] MC %.5f +- %.5f, exact %.6f, bound %.4f, gamma %.6f; %.2fs", rep.mc.mean,
           rep.mc.se, rep.exact_T ? rep.exact_T->lower : NAN, rep.E_bound, rep.gamma, secs));

  verdict(5, rep.both_start_in_c && rep.pathwise.checked > 0 && rep.pathwise.violations_started_in_c == 0,
          fmt("pathwise inequality: %zu non-censored paths started in C, %zu violations "
              "(general form: %zu)",
              rep.pathwise.checked, rep.pathwise.violations_started_in_c,
              rep.pathwise.violations_general));

  double worst = -1.0;
  for (std::size_t n = 0; n < rep.trial_tail.value.size(); ++n) {
    worst = std::max(worst, rep.trial_tail.value[n] - 3 * rep.trial_tail.se[n] - rep.trial_tail_bound[n]);
  }
  verdict(6, rep.trial_tail_check.pass && rep.trial_tail_check.checked == 51,
          fmt("trial-count tail: n <= 50, %zu violations, max (P^ - 3SE - (1-gamma)^n) = %.4g",
              rep.trial_tail_check.violations.size(), worst));

  std::string where;
  for (std::size_t k = 0; k < rep.s_hat_check.violations.size() && k < 12; ++k) {
    where += (k ? "," : "") + std::to_string(rep.s_hat_check.violations[k]);
  }
  verdict(7, rep.s_hat_check.pass && rep.s_hat_check.checked == 201,
          fmt("S' dominance: n <= 200, %zu violations at n = %s%s", rep.s_hat_check.violations.size(),
              where.c_str(), rep.s_hat_check.violations.size() > 12 ? ",..." : ""));
  if (!rep.s_hat_check.pass) {
    for (std::size_t n : rep.s_hat_check.violations) {
      if (n > 0) {
        info(fmt("  at n=%zu: P^(T'>n)=%.4g (SE %.2g) vs S'_n=%.4g", n, rep.t_prime_tail.value[n],
                 rep.t_prime_tail.se[n], rep.s_hat_prime[n]));
        break;
      }
    }
    auto with_first = opt;
    with_first.include_first_trial = true;
    const auto rep2 = full_report(pair, *s.domination.p, with_first);
    info(fmt("  with the first-trial term G_{n-n0} added: %zu violations (first at n=%zu)",
             rep2.s_hat_check.violations.size(),
             rep2.s_hat_check.violations.empty() ? 0 : rep2.s_hat_check.violations.front()));
    // A failed trial leaves the waiting chain outside C at S_k; its wait
    // from there is a conditional residual life, which G does not bound.
    const auto sched = s.chain2.schedule;
    const auto g = random_walk_domination(0.75, 400);
    const Time j = 40;
    const double outside = oracle::avoid_probability(sched, delta(51, 0), j, j);
    for (Time t : {20, 60, 100}) {
      const double wait = oracle::avoid_probability(sched, delta(51, 0), j, j + t) / outside;
      info(fmt("  exact: P(no visit to C in [%d,%d] | X_%d not in C) = %.4g vs G_%d = %.4g (ratio %.2f)",
               static_cast<int>(j), static_cast<int>(j + t), static_cast<int>(j), wait,
               static_cast<int>(t), g.at(t), wait / g.at(t)));
    }
  }
}

void condition_checkers() {
  const GammaGrid grid{{0, 1, 2, 5, 10, 20}, {0, 1, 2, 3, 5, 10}, 0, false};
  const auto flip = KernelSchedule::constant(StateSpace(2, {0}), Matrix::from_rows({{0, 1}, {1, 0}}));
  const auto ge = estimate_gamma(flip, delta(2, 0), grid, 20000, 8);
  double min_p = 1.0;
  for (const auto& pt : ge.points) {
    if (!pt.flagged) min_p = std::min(min_p, pt.p_hat);
  }
  const auto id = KernelSchedule::constant(StateSpace(2, {0}), Matrix::identity(2));
  const auto ga = estimate_gamma(id, delta(2, 0), grid, 20000, 9);
  const std::vector<Time> tg{0, 1, 5, 20};
  const auto tails = estimate_renewal_tails(id, tg, std::vector<State>{0}, 50, 20000, 10);
  double max_tail = 0.0;
  for (const auto& row : tails.G_hat) {
    for (std::size_t n = 1; n < row.size(); ++n) max_tail = std::max(max_tail, row[n]);
  }
  const bool pass = min_p < 0.01 && !ge.certificate && ga.gamma_hat == 1.0 && ga.certificate &&
                    max_tail == 0.0;
  verdict(8, pass,
          fmt("condition checkers: period-2 min p^=%.3g (certified: %s, %zu flagged points); "
              "absorbed gamma^=%.3g, max G^_n (n>=1)=%.3g",
              min_p, ge.certificate ? "yes" : "no", ge.flagged, ga.gamma_hat, max_tail));
}

void determinism() {
  auto cfg = sec3_config();
  cfg["n_paths"] = 20000;
  cfg["chains"][0]["birth_death"]["cap"] = 30;
  cfg["chains"][1]["birth_death"]["cap"] = 30;
  cfg["condition"] = {{"n_paths", 5000}};
  cfg["gamma"] = {{"source", "empirical"}, {"n_paths", 5000}, {"t_grid", {0, 2, 4, 10}}};
  const auto s = parse_scenario(cfg);
  auto analytic = cfg;
  analytic["gamma"] = {{"source", "analytic"}};
  const auto sa = parse_scenario(analytic);

  bool pass = true;
  std::string detail;
  for (const auto& [cmd, sc] : {std::pair{"simulate", &sa}, std::pair{"bound", &sa},
                                std::pair{"condition-check", &s}, std::pair{"reproduce-sec3", &sa}}) {
    const auto a = run_command(cmd, *sc, 1);
    const auto b = run_command(cmd, *sc, 8);
    const bool same = a.report == b.report && a.csv == b.csv && a.exit_code == b.exit_code;
    pass = pass && same;
    detail += fmt(" %s:%s", cmd, same ? "identical" : "DIFFERENT");
  }
  verdict(9, pass, "determinism, 1 vs 8 workers:" + detail);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  unsigned workers = 8;
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  closed_forms();
  coefficients();
  oracle_agreement(workers);
  soundness(workers);
  sec3_checks(workers);
  condition_checkers();
  determinism();
  std::printf("%d of 9 criteria failed\n", failures);
  return failures ? 1 : 0;
}
