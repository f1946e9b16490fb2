#include "renewal/report.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace renewal {

using nlohmann::json;

namespace {

json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

json analytic(double v) { return {{"value", number(v)}, {"provenance", "analytic"}}; }
json exact_q(double v) { return {{"value", number(v)}, {"provenance", "exact"}}; }
json input_q(double v) { return {{"value", number(v)}, {"provenance", "input"}}; }
json mc(double v, double se) { return {{"value", number(v)}, {"se", se}, {"provenance", "mc"}}; }

json bracket(const ExpectationBracket& b, const char* provenance) {
  return {{"lower", number(b.lower)},
          {"upper", number(b.upper)},
          {"infinite", b.infinite},
          {"provenance", provenance}};
}

json curve(const EmpiricalCurve& c) {
  return {{"values", c.value}, {"se", c.se}, {"provenance", "mc"}};
}

json dominance(const DominanceCheck& c) {
  return {{"pass", c.pass}, {"checked", c.checked}, {"violations", c.violations}};
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename T>
std::string opt(const std::optional<T>& v) {
  return v ? std::to_string(*v) : std::string();
}

bool both_birth_death(const Scenario& s) { return s.chain1.birth_death && s.chain2.birth_death; }

double alpha_sup(const Scenario& s) {
  return std::max(s.chain1.birth_death->sup_alpha_product(),
                  s.chain2.birth_death->sup_alpha_product());
}

SimulationPlan make_plan(const Scenario& s, Time n0) {
  SimulationPlan plan;
  plan.schedule1 = s.chain1.schedule;
  plan.schedule2 = s.chain2.schedule;
  plan.initial1 = s.chain1.initial;
  plan.initial2 = s.chain2.initial;
  plan.horizon = s.horizon;
  plan.n_paths = s.n_paths;
  plan.master_seed = s.seed;
  plan.trial_threshold = n0;
  return plan;
}

struct ResolvedDomination {
  DominatingSequence g;
  const char* provenance;
};

ResolvedDomination resolve_domination(const Scenario& s) {
  const auto& d = s.domination;
  if (d.G) return {DominatingSequence(*d.G, d.tail_bound), "input"};
  if (!d.p) throw ValidationError("domination needs either \"p\" or an explicit \"G\"");
  if (both_birth_death(s) && !domination_valid_for(*d.p, alpha_sup(s))) {
    throw ValidationError("random-walk domination fails: p(1-p) = " +
                          fmt(*d.p * (1.0 - *d.p)) + " < sup alpha(1-alpha) = " +
                          fmt(alpha_sup(s)));
  }
  return {random_walk_domination(*d.p, d.N), "analytic"};
}

GammaGrid gamma_grid(const Scenario& s) {
  return {s.gamma.t_grid, s.gamma.lag_grid, s.gamma.n0, s.gamma.swapped};
}

json gamma_points(const GammaEstimate& e) {
  json pts = json::array();
  for (const auto& p : e.points) {
    pts.push_back({{"base", p.base},
                   {"lag", p.lag},
                   {"conditioned", p.conditioned},
                   {"hits", p.hits},
                   {"p_hat", mc(p.p_hat, p.se)},
                   {"flagged", p.flagged}});
  }
  return pts;
}

// gamma_hat is already p_hat - 3 SE at the minimising point; report that SE.
json gamma_hat_json(const GammaEstimate& e) {
  double se = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : e.points) {
    if (!p.flagged && p.lower() < best) {
      best = p.lower();
      se = p.se;
    }
  }
  json j = mc(e.gamma_hat, se);
  j["minus_3se"] = true;
  return j;
}

struct ResolvedGamma {
  RegularityCertificate certificate;
  json detail;
};

ResolvedGamma resolve_gamma(const Scenario& s, unsigned workers) {
  ResolvedGamma out;
  switch (s.gamma.source) {
    case GammaSource::Fixed: {
      const double v = *s.gamma.value;
      if (!(v > 0.0 && v <= 1.0)) throw ValidationError("gamma.value must lie in (0, 1]");
      out.certificate.gamma = v;
      out.certificate.n0 = s.gamma.n0;
      out.detail = {{"gamma", input_q(v)}, {"n0", s.gamma.n0}, {"source", "fixed"}};
      return out;
    }
    case GammaSource::Analytic: {
      if (!both_birth_death(s)) {
        throw ValidationError("analytic gamma needs two birth-death chains");
      }
      double mu = 0.0;
      if (s.domination.mu_hat) {
        mu = *s.domination.mu_hat;
      } else if (s.domination.p) {
        mu = mu_hats(*s.domination.p).mu_hat_1;
      } else {
        throw ValidationError("analytic gamma needs domination.p or domination.mu_hat");
      }
      const double g0 =
          gamma0(s.chain1.birth_death->inf_alpha0(), s.chain2.birth_death->inf_alpha0());
      out.certificate = gamma_analytic(g0, mu);
      out.detail = {{"gamma", analytic(out.certificate.gamma)},
                    {"gamma0", analytic(g0)},
                    {"mu_hat", s.domination.mu_hat ? input_q(mu) : analytic(mu)},
                    {"n0", 0},
                    {"source", "analytic"}};
      return out;
    }
    case GammaSource::Empirical: {
      const auto grid = gamma_grid(s);
      const auto e1 = estimate_gamma(s.chain1.schedule, s.chain1.initial, grid,
                                     s.gamma.n_paths, mix_seed(s.seed, 101), workers);
      const auto e2 = estimate_gamma(s.chain2.schedule, s.chain2.initial, grid,
                                     s.gamma.n_paths, mix_seed(s.seed, 102), workers);
      for (const auto* e : {&e1, &e2}) {
        if (!e->certificate) {
          throw ValidationError("empirical gamma not certified: gamma_hat = " + fmt(e->gamma_hat) +
                                ", " + std::to_string(e->flagged) +
                                " grid point(s) never saw the conditioning event");
        }
      }
      out.certificate = e1.certificate->gamma <= e2.certificate->gamma ? *e1.certificate
                                                                        : *e2.certificate;
      out.detail = {{"gamma", e1.gamma_hat <= e2.gamma_hat ? gamma_hat_json(e1) : gamma_hat_json(e2)},
                    {"chain1_gamma_hat", gamma_hat_json(e1)},
                    {"chain2_gamma_hat", gamma_hat_json(e2)},
                    {"n0", s.gamma.n0},
                    {"source", "empirical"}};
      return out;
    }
  }
  throw ValidationError("unknown gamma source");
}

json comparison_json(const BoundComparison& c, double p, double gamma) {
  return {{"p", p},
          {"gamma", gamma},
          {"E1", analytic(c.E1)},
          {"E2", analytic(c.E2)},
          {"mu_hat_1", analytic(c.mu_hat_1)},
          {"mu_hat_2", analytic(c.mu_hat_2)},
          {"identity_residual", analytic(c.identity_residual)},
          {"verdict", to_string(c.verdict)}};
}

json envelope(const char* command, const Scenario& s, json results, int exit_code) {
  return {{"command", command},
          {"config", s.resolved},
          {"results", std::move(results)},
          {"status", exit_code == kExitOk           ? "ok"
                     : exit_code == kExitValidation ? "invalid"
                                                    : "statistical_failure"}};
}

std::string schedule_check_prefix(int chain) { return "chain" + std::to_string(chain) + ": "; }

}  // namespace

// ---------------------------------------------------------------------------

RunResult run_validate(const Scenario& s) {
  std::vector<std::string> problems;
  int chain = 1;
  for (const auto* c : {&s.chain1, &s.chain2}) {
    for (auto& v : validate_schedule(c->schedule)) problems.push_back(schedule_check_prefix(chain) + v);
    for (auto& v : validate_distribution(c->initial, c->schedule.space().size())) {
      problems.push_back(schedule_check_prefix(chain) + "initial: " + v);
    }
    ++chain;
  }
  json results;
  if (s.domination.p) {
    const double p = *s.domination.p;
    try {
      (void)first_return_coefficients(p, 2);
    } catch (const ValidationError& e) {
      problems.push_back(std::string("domination: ") + e.what());
    }
    if (both_birth_death(s)) {
      const bool ok = domination_valid_for(p, alpha_sup(s));
      results["alpha_sup_product"] = analytic(alpha_sup(s));
      results["domination_valid"] = ok;
      if (!ok) problems.push_back("domination: p(1-p) < sup alpha(1-alpha)");
    }
  }
  if (s.domination.G) {
    try {
      DominatingSequence(*s.domination.G, s.domination.tail_bound);
    } catch (const ValidationError& e) {
      problems.push_back(std::string("domination.G: ") + e.what());
    }
  }
  results["problems"] = problems;
  results["valid"] = problems.empty();
  RunResult r;
  r.exit_code = problems.empty() ? kExitOk : kExitValidation;
  r.report = envelope("validate", s, results, r.exit_code);
  return r;
}

RunResult run_simulate(const Scenario& s, unsigned workers) {
  const auto plan = make_plan(s, s.gamma.n0);
  const auto est = estimate_ET(plan, {workers, true});

  RunResult r;
  json res;
  res["E_T"] = mc(est.mean, est.se);
  res["E_T"]["lower_bound_only"] = est.mean_is_lower_bound;
  res["estimate_status"] = est.status == EstimateStatus::Ok                  ? "ok"
                           : est.status == EstimateStatus::PartiallyCensored ? "partially_censored"
                                                                             : "all_censored";
  res["n_paths"] = est.n_paths;
  res["n_censored"] = est.n_censored;
  res["n_trials_censored"] = est.n_trials_censored;
  const double cr = est.censoring_rate();
  res["censoring_rate"] = mc(cr, std::sqrt(cr * (1 - cr) / static_cast<double>(est.n_paths)));
  const double tr = est.top_state_rate;
  res["top_state_rate"] = mc(tr, std::sqrt(tr * (1 - tr) / static_cast<double>(est.n_paths)));
  json se = json::array();
  for (double v : est.tail) se.push_back(std::sqrt(v * (1 - v) / static_cast<double>(est.n_paths)));
  res["tail"] = {{"values", est.tail}, {"se", se}, {"provenance", "mc"}};
  res["trial_threshold"] = plan.trial_threshold;

  if (est.status == EstimateStatus::AllCensored) r.exit_code = kExitStatistical;
  r.report = envelope("simulate", s, res, r.exit_code);

  std::ostringstream csv;
  csv << "path_id,T,theta0_1,theta0_2,tau_trials,censored\n";
  for (std::size_t i = 0; i < est.records.size(); ++i) {
    const auto& p = est.records[i];
    csv << i << ',' << opt(p.T) << ',' << opt(p.theta0_1) << ',' << opt(p.theta0_2) << ','
        << opt(p.tau_trials) << ',' << (p.censored() ? 1 : 0) << '\n';
  }
  r.csv.emplace_back("simulate_paths.csv", csv.str());
  return r;
}

RunResult run_exact(const Scenario& s) {
  RunResult r;
  json res;
  std::ostringstream hit_csv;
  hit_csv << "chain,n,mass\n";
  int chain = 1;
  for (const auto* c : {&s.chain1, &s.chain2}) {
    const auto h = hitting_time_distribution(c->schedule, c->initial, s.exact.horizon);
    const std::string key = "m" + std::to_string(chain);
    res[key] = bracket(h.expectation, "exact");
    res[key]["residual"] = h.table.residual;
    const auto& sch = c->schedule;
    if (sch.body().empty() && sch.tail_kind() == TailKind::Constant) {
      try {
        const auto lin = expected_hitting_times_linear(sch.tail().front(), sch.space());
        double e = 0.0;
        for (std::size_t x = 0; x < lin.size(); ++x) e += c->initial[x] * lin[x];
        res[key + "_linear_solve"] = exact_q(e);
      } catch (const ValidationError&) {
        res[key + "_linear_solve"] = exact_q(std::numeric_limits<double>::infinity());
      }
    }
    for (std::size_t n = 0; n < h.table.mass.size(); ++n) {
      if (h.table.mass[n] > 0.0) hit_csv << chain << ',' << n << ',' << fmt(h.table.mass[n]) << '\n';
    }
    ++chain;
  }

  const std::size_t product = s.chain1.schedule.space().size() * s.chain2.schedule.space().size();
  if (product <= s.exact.product_cap) {
    const auto jt = product_tail(s.chain1.schedule, s.chain2.schedule, s.chain1.initial,
                                 s.chain2.initial, s.exact.horizon, s.exact.product_cap);
    // The curve stops once the survival drops below 1e-15.
    std::size_t len = jt.survival.size();
    for (std::size_t n = 0; n < jt.survival.size(); ++n) {
      if (jt.survival[n] < 1e-15) {
        len = n + 1;
        break;
      }
    }
    const std::vector<double> shown(jt.survival.begin(), jt.survival.begin() + static_cast<std::ptrdiff_t>(len));
    res["E_T"] = bracket(jt.expectation, "exact");
    res["T_tail"] = {{"values", shown}, {"provenance", "exact"}};
    res["T_residual"] = jt.residual;
    std::ostringstream csv;
    csv << "n,P_T_gt_n\n";
    for (std::size_t n = 0; n < shown.size(); ++n) csv << n << ',' << fmt(shown[n]) << '\n';
    r.csv.emplace_back("exact_T_tail.csv", csv.str());
  } else {
    res["E_T"] = nullptr;
    res["E_T_skipped"] = "product state count " + std::to_string(product) + " exceeds cap " +
                         std::to_string(s.exact.product_cap);
  }
  r.csv.emplace_back("exact_hitting.csv", hit_csv.str());
  r.report = envelope("exact", s, res, r.exit_code);
  return r;
}

RunResult run_condition_check(const Scenario& s, unsigned workers) {
  RunResult r;
  json res;
  bool pass = true;

  std::optional<ResolvedDomination> dom;
  if (s.domination.G || s.domination.p) dom = resolve_domination(s);
  if (s.domination.p && both_birth_death(s)) {
    res["alpha_sup_product"] = analytic(alpha_sup(s));
    res["domination_valid"] = domination_valid_for(*s.domination.p, alpha_sup(s));
  }

  std::ostringstream tails_csv;
  tails_csv << "chain,t,n,G_hat,se,G\n";
  std::ostringstream gamma_csv;
  gamma_csv << "chain,base,lag,conditioned,hits,p_hat,se,flagged\n";
  int chain = 1;
  json gamma_min;
  for (const auto* c : {&s.chain1, &s.chain2}) {
    const std::string key = "chain" + std::to_string(chain);
    json cj;
    const auto surf = estimate_renewal_tails(c->schedule, s.condition.t_grid, s.condition.x_grid,
                                             s.condition.max_n, s.condition.n_paths,
                                             mix_seed(s.seed, 200 + chain), workers);
    json rows = json::array();
    for (std::size_t ti = 0; ti < surf.t_grid.size(); ++ti) {
      rows.push_back({{"t", surf.t_grid[ti]},
                      {"G_hat", surf.G_hat[ti]},
                      {"se", surf.se[ti]},
                      {"provenance", "mc"}});
      for (std::size_t n = 0; n < surf.G_hat[ti].size(); ++n) {
        tails_csv << chain << ',' << surf.t_grid[ti] << ',' << n << ',' << fmt(surf.G_hat[ti][n])
                  << ',' << fmt(surf.se[ti][n]) << ','
                  << (dom ? fmt(dom->g.at(static_cast<Time>(n))) : std::string()) << '\n';
      }
    }
    cj["renewal_tails"] = rows;
    if (dom) {
      const auto rep = check_condition_A(surf, dom->g);
      json flags = json::array();
      for (const auto& f : rep.flags) {
        flags.push_back({{"t", f.t}, {"n", f.n}, {"G_hat", f.G_hat}, {"se", f.se}, {"G", f.G}});
      }
      cj["condition_A"] = {{"pass", rep.pass}, {"checked", rep.checked}, {"flags", flags}};
      pass = pass && rep.pass;
    }

    const auto ge = estimate_gamma(c->schedule, c->initial, gamma_grid(s), s.gamma.n_paths,
                                   mix_seed(s.seed, 300 + chain), workers);
    cj["condition_B"] = {{"gamma_hat", gamma_hat_json(ge)},
                         {"flagged", ge.flagged},
                         {"certified", ge.certificate.has_value()},
                         {"points", gamma_points(ge)}};
    for (const auto& p : ge.points) {
      gamma_csv << chain << ',' << p.base << ',' << p.lag << ',' << p.conditioned << ','
                << p.hits << ',' << fmt(p.p_hat) << ',' << fmt(p.se) << ',' << (p.flagged ? 1 : 0)
                << '\n';
    }
    pass = pass && ge.certificate.has_value();
    if (gamma_min.is_null() || ge.gamma_hat < gamma_min["value"].get<double>()) {
      gamma_min = gamma_hat_json(ge);
    }
    res[key] = cj;
    ++chain;
  }
  res["gamma_hat"] = gamma_min;
  res["pass"] = pass;
  if (!pass) r.exit_code = kExitStatistical;
  r.report = envelope("condition-check", s, res, r.exit_code);
  r.csv.emplace_back("condition_tails.csv", tails_csv.str());
  r.csv.emplace_back("gamma_grid.csv", gamma_csv.str());
  return r;
}

namespace {

struct BoundRun {
  BoundReport rep;
  json results;
  int exit_code = kExitOk;
  std::vector<std::pair<std::string, std::string>> csv;
};

BoundRun bound_run(const Scenario& s, unsigned workers) {
  const auto dom = resolve_domination(s);
  const auto gam = resolve_gamma(s, workers);

  ReportOptions opt;
  opt.n = s.domination.N;
  opt.trial_tail_n = s.trial_tail_n;
  opt.horizon = s.horizon;
  opt.n_paths = s.n_paths;
  opt.seed = s.seed;
  opt.workers = workers;
  opt.product_cap = s.exact.product_cap;
  opt.include_first_trial = s.include_first_trial;

  BoundRun out;
  out.rep = bound_report(make_plan(s, gam.certificate.n0), dom.g, gam.certificate, opt);
  const auto& b = out.rep;

  json res;
  const bool exact_m = b.m_provenance == "exact";
  res["m1"] = bracket(b.m1, exact_m ? "exact" : "mc");
  res["m2"] = bracket(b.m2, exact_m ? "exact" : "mc");
  if (!exact_m) {
    res["m1"]["se"] = b.m1_se;
    res["m2"]["se"] = b.m2_se;
  }
  res["n0"] = b.n0;
  res["G0"] = {{"value", b.G0}, {"provenance", dom.provenance}};
  res["m"] = {{"value", b.m}, {"provenance", dom.provenance}};
  res["gamma"] = gam.detail;
  if (exact_m) {
    res["E_bound"] = exact_q(b.E_bound);
  } else {
    res["E_bound"] = mc(b.E_bound, std::hypot(b.m1_se, b.m2_se));
  }
  res["E_T"] = mc(b.mc.mean, b.mc.se);
  res["E_T"]["lower_bound_only"] = b.mc.mean_is_lower_bound;
  res["n_censored"] = b.mc.n_censored;
  if (b.exact_T) res["E_T_exact"] = bracket(*b.exact_T, "exact");
  res["bound_holds"] = b.bound_holds;
  res["pathwise"] = {{"checked", b.pathwise.checked},
                     {"violations_started_in_c", b.pathwise.violations_started_in_c},
                     {"violations_general", b.pathwise.violations_general}};
  res["both_start_in_c"] = b.both_start_in_c;

  if (s.domination.p) {
    res["p"] = *s.domination.p;
    if (both_birth_death(s)) res["alpha_sup_product"] = analytic(alpha_sup(s));
    const auto cmp = compare_bounds(*s.domination.p, b.gamma);
    res["comparison"] = comparison_json(cmp, *s.domination.p, b.gamma);
  }

  if (b.both_start_in_c) {
    res["s_hat_prime"] = {{"values", b.s_hat_prime},
                          {"provenance", "mc"},
                          {"include_first_trial", s.include_first_trial}};
    res["t_prime_tail"] = curve(b.t_prime_tail);
    res["s_hat_check"] = dominance(b.s_hat_check);
    res["trial_tail"] = curve(b.trial_tail);
    res["trial_tail_bound"] = {{"values", b.trial_tail_bound}, {"provenance", "analytic"}};
    res["trial_tail_check"] = dominance(b.trial_tail_check);

    std::ostringstream csv;
    csv << "n,s_hat_prime,t_prime_tail,t_prime_se\n";
    for (std::size_t n = 0; n < b.s_hat_prime.size(); ++n) {
      csv << n << ',' << fmt(b.s_hat_prime[n]) << ',' << fmt(b.t_prime_tail.value[n]) << ','
          << fmt(b.t_prime_tail.se[n]) << '\n';
    }
    out.csv.emplace_back("bound_s_hat_prime.csv", csv.str());
    std::ostringstream tt;
    tt << "n,p_hat,se,bound\n";
    for (std::size_t n = 0; n < b.trial_tail_bound.size(); ++n) {
      tt << n << ',' << fmt(b.trial_tail.value[n]) << ',' << fmt(b.trial_tail.se[n]) << ','
         << fmt(b.trial_tail_bound[n]) << '\n';
    }
    out.csv.emplace_back("bound_trial_tail.csv", tt.str());
  }

  const bool failed = !b.bound_holds || b.pathwise.violations_general > 0 ||
                      (b.both_start_in_c && b.pathwise.violations_started_in_c > 0);
  out.exit_code = failed ? kExitStatistical : kExitOk;
  out.results = std::move(res);
  return out;
}

}  // namespace

RunResult run_bound(const Scenario& s, unsigned workers) {
  auto b = bound_run(s, workers);
  RunResult r;
  r.exit_code = b.exit_code;
  r.report = envelope("bound", s, std::move(b.results), r.exit_code);
  r.csv = std::move(b.csv);
  return r;
}

RunResult run_compare(const Scenario& s, unsigned workers) {
  if (!s.domination.p) throw ValidationError("compare needs domination.p");
  const double p = *s.domination.p;
  (void)mu_hats(p);
  const auto gam = resolve_gamma(s, workers);
  const auto cmp = compare_bounds(p, gam.certificate.gamma);
  json res = comparison_json(cmp, p, gam.certificate.gamma);
  res["gamma_detail"] = gam.detail;
  RunResult r;
  r.report = envelope("compare", s, res, kExitOk);
  std::ostringstream csv;
  csv << "p,gamma,E1,E2,mu_hat_1,mu_hat_2,identity_residual,verdict\n";
  csv << fmt(p) << ',' << fmt(gam.certificate.gamma) << ',' << fmt(cmp.E1) << ',' << fmt(cmp.E2)
      << ',' << fmt(cmp.mu_hat_1) << ',' << fmt(cmp.mu_hat_2) << ',' << fmt(cmp.identity_residual)
      << ',' << to_string(cmp.verdict) << '\n';
  r.csv.emplace_back("compare.csv", csv.str());
  return r;
}

RunResult run_reproduce_sec3(const Scenario& s, unsigned workers) {
  if (!s.domination.p) throw ValidationError("reproduce-sec3 needs domination.p");
  if (!both_birth_death(s)) throw ValidationError("reproduce-sec3 needs two birth-death chains");
  auto b = bound_run(s, workers);
  RunResult r;
  r.exit_code = b.exit_code;
  r.report = envelope("reproduce-sec3", s, std::move(b.results), r.exit_code);
  r.csv = std::move(b.csv);
  return r;
}

RunResult run_command(const std::string& command, const Scenario& s, unsigned workers) {
  if (command == "validate") return run_validate(s);
  if (command == "simulate") return run_simulate(s, workers);
  if (command == "exact") return run_exact(s);
  if (command == "condition-check") return run_condition_check(s, workers);
  if (command == "bound") return run_bound(s, workers);
  if (command == "compare") return run_compare(s, workers);
  if (command == "reproduce-sec3") return run_reproduce_sec3(s, workers);
  throw ConfigError("unknown command " + command);
}

}  // namespace renewal
