#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>

#include "renewal/report.hpp"
#include "renewal/scenario.hpp"

using namespace renewal;
using nlohmann::json;

namespace {

json two_state_config() {
  const json chain = {{"states", 2},
                      {"target_set", {0}},
                      {"tail", {{"kind", "constant"}, {"matrices", {{{0.5, 0.5}, {0.5, 0.5}}}}}},
                      {"initial_state", 1}};
  return {{"schema_version", 1},
          {"chains", {chain, chain}},
          {"horizon", 500},
          {"n_paths", 2000},
          {"seed", 3},
          {"domination", {{"G", {2.0, 1.0, 0.5}}, {"tail_bound", 1.0}}},
          {"gamma", {{"source", "fixed"}, {"value", 0.5}}}};
}

json small_sec3() {
  auto j = sec3_config();
  j["n_paths"] = 2000;
  j["horizon"] = 1000;
  j["chains"][0]["birth_death"]["cap"] = 15;
  j["chains"][1]["birth_death"]["cap"] = 15;
  return j;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

// Every object with a "value" key carries a provenance; mc values carry an se.
void check_provenance(const json& j, const std::string& where) {
  if (j.is_object()) {
    if (j.contains("value")) {
      INFO(where);
      REQUIRE(j.contains("provenance"));
      if (j["provenance"] == "mc") CHECK(j.contains("se"));
    }
    for (const auto& [k, v] : j.items()) check_provenance(v, where + "." + k);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) check_provenance(j[i], where + "[" + std::to_string(i) + "]");
  }
}

}  // namespace

TEST_CASE("reference birth-death config parses and round-trips through the resolved form") {
  const auto s = parse_scenario(sec3_config());
  CHECK(s.chain1.birth_death.has_value());
  CHECK(s.chain1.schedule.space().size() == 51);
  CHECK(s.chain1.initial[0] == 1.0);
  CHECK(*s.domination.p == 0.75);
  CHECK(s.horizon == 5000);
  CHECK(s.n_paths == 100000);
  CHECK(s.gamma.source == GammaSource::Analytic);
  const auto again = parse_scenario(s.resolved);
  CHECK(again.resolved == s.resolved);
}

TEST_CASE("explicit chains parse with defaults filled in") {
  const auto s = parse_scenario(two_state_config());
  CHECK(s.chain1.schedule.space().size() == 2);
  CHECK(s.chain1.initial == std::vector<double>{0, 1});
  CHECK(s.condition.x_grid == std::vector<State>{0});
  CHECK(s.exact.horizon == 5000);
  CHECK(s.resolved["condition"]["max_n"] == 50);
  CHECK(parse_scenario(s.resolved).resolved == s.resolved);
}

TEST_CASE("config errors name the offending location") {
  const auto bad = temp_file("renewal_bad.json", "{\n  \"schema_version\": 1,\n  \"chains\": [,]\n}\n");
  const auto msg = error_of([&] { load_scenario(bad); });
  CHECK(msg.find("renewal_bad.json:3:") != std::string::npos);
  CHECK(msg.find("malformed JSON") != std::string::npos);
  CHECK_THROWS_AS(load_scenario(bad), ConfigError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/renewal.json"), ConfigError);

  auto j = two_state_config();
  j["chains"][1].erase("tail");
  CHECK_THROWS_AS(parse_scenario(j), ConfigError);
  CHECK(error_of([&] { parse_scenario(j); }).find("$.chains[1]") != std::string::npos);

  j = two_state_config();
  j["schema_version"] = 2;
  CHECK_THROWS_AS(parse_scenario(j), ConfigError);

  j = two_state_config();
  j["horizon"] = "long";
  CHECK(error_of([&] { parse_scenario(j); }).find("$.horizon") != std::string::npos);

  j = two_state_config();
  j["gamma"] = {{"source", "fixed"}};
  CHECK_THROWS_AS(parse_scenario(j), ConfigError);
}

TEST_CASE("out-of-domain values are validation errors") {
  auto j = sec3_config();
  j["chains"][0]["birth_death"]["tail"]["alphas"] = {{1.2}};
  CHECK_THROWS_AS(parse_scenario(j), ValidationError);

  j = sec3_config();
  j["domination"]["p"] = 0.5;
  const auto s = parse_scenario(j);
  CHECK_THROWS_AS(run_compare(s, 1), ValidationError);
  const auto v = run_validate(s);
  CHECK(v.exit_code == kExitValidation);
  CHECK(v.report["status"] == "invalid");
  CHECK_FALSE(v.report["results"]["problems"].empty());

  j = two_state_config();
  j["chains"][0]["tail"]["matrices"] = {{{0.6, 0.5}, {0.5, 0.5}}};
  const auto r = run_validate(parse_scenario(j));
  CHECK(r.exit_code == kExitValidation);
  CHECK(r.report["results"]["problems"][0].get<std::string>().find("sums to") != std::string::npos);

  CHECK(run_validate(parse_scenario(sec3_config())).exit_code == kExitOk);
}

TEST_CASE("reports: exact and simulate on an explicit pair") {
  const auto s = parse_scenario(two_state_config());
  const auto ex = run_exact(s);
  CHECK(ex.exit_code == kExitOk);
  check_provenance(ex.report["results"], "$.results");
  const auto sim = run_simulate(s, 2);
  CHECK(sim.exit_code == kExitOk);
  check_provenance(sim.report["results"], "$.results");
  CHECK(sim.report["command"] == "simulate");
  CHECK(sim.report["config"] == s.resolved);
  CHECK_FALSE(sim.csv.empty());

  const auto b = run_bound(s, 2);
  check_provenance(b.report["results"], "$.results");
  CHECK(b.exit_code == kExitOk);
}

TEST_CASE("reports are identical across worker counts") {
  const auto s = parse_scenario(small_sec3());
  const auto one = run_reproduce_sec3(s, 1);
  const auto eight = run_reproduce_sec3(s, 8);
  CHECK(one.report == eight.report);
  CHECK(one.exit_code == eight.exit_code);
  check_provenance(one.report["results"], "$.results");
  CHECK(run_command("bound", s, 3).report == run_command("bound", s, 1).report);
  CHECK_THROWS_AS(run_command("frobnicate", s, 1), ConfigError);
}
