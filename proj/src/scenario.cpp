#include "renewal/scenario.hpp"

#include <fstream>
#include <sstream>

namespace renewal {

using nlohmann::json;

namespace {

// Field access with the JSON path in every error message.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const json& raw() const { return *j_; }
  const std::string& path() const { return path_; }

  bool has(const char* key) const { return j_->is_object() && j_->contains(key); }

  Node at(const char* key) const {
    if (!j_->is_object()) fail("expected an object");
    auto it = j_->find(key);
    if (it == j_->end()) throw ConfigError(path_ + ": missing field \"" + key + "\"");
    return {*it, path_ + "." + key};
  }

  Node at(std::size_t i) const { return {(*j_)[i], path_ + "[" + std::to_string(i) + "]"}; }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }

  std::int64_t integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<std::int64_t>();
  }

  std::uint64_t unsigned_integer() const {
    if (!j_->is_number_unsigned() && !(j_->is_number_integer() && j_->get<std::int64_t>() >= 0)) {
      fail("expected a nonnegative integer");
    }
    return j_->get<std::uint64_t>();
  }

  std::size_t count() const { return static_cast<std::size_t>(unsigned_integer()); }

  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }

  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  std::vector<double> numbers() const {
    std::vector<double> v(size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = at(i).number();
    return v;
  }

  template <typename T>
  std::vector<T> integers() const {
    std::vector<T> v(size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto x = at(i).integer();
      if (x < 0) at(i).fail("expected a nonnegative integer");
      v[i] = static_cast<T>(x);
    }
    return v;
  }

  Matrix matrix() const {
    std::vector<std::vector<double>> rows(size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = at(i).numbers();
    try {
      return Matrix::from_rows(rows);
    } catch (const ValidationError& e) {
      throw ConfigError(path_ + ": " + e.what());
    }
  }

  std::vector<Matrix> matrices() const {
    std::vector<Matrix> v;
    for (std::size_t i = 0; i < size(); ++i) v.push_back(at(i).matrix());
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_ + ": " + what); }

 private:
  const json* j_;
  std::string path_;
};

TailKind tail_kind(const Node& n) {
  const auto s = n.string();
  if (s == "constant") return TailKind::Constant;
  if (s == "periodic") return TailKind::Periodic;
  n.fail("tail kind must be \"constant\" or \"periodic\"");
}

const char* tail_kind_name(TailKind k) { return k == TailKind::Constant ? "constant" : "periodic"; }

std::vector<double> initial_vector(const Node& chain, std::size_t size) {
  if (chain.has("initial") && chain.has("initial_state")) {
    chain.fail("give either \"initial\" or \"initial_state\", not both");
  }
  if (chain.has("initial")) return chain.at("initial").numbers();
  const auto s = chain.at("initial_state");
  const auto x = s.count();
  if (x >= size) s.fail("initial state outside the state space");
  std::vector<double> v(size, 0.0);
  v[x] = 1.0;
  return v;
}

ChainConfig parse_chain(const Node& n) {
  ChainConfig c;
  if (n.has("birth_death")) {
    const auto bd = n.at("birth_death");
    BirthDeathSpec spec;
    spec.cap = bd.at("cap").count();
    if (bd.has("alpha_table")) {
      const auto table = bd.at("alpha_table");
      for (std::size_t i = 0; i < table.size(); ++i) spec.body.push_back(table.at(i).numbers());
    }
    const auto tail = bd.at("tail");
    spec.tail_kind = tail_kind(tail.at("kind"));
    const auto alphas = tail.at("alphas");
    for (std::size_t i = 0; i < alphas.size(); ++i) spec.tail.push_back(alphas.at(i).numbers());
    c.schedule = birth_death_schedule(spec);
    c.birth_death = std::move(spec);
  } else {
    const auto size = n.at("states").count();
    auto target = n.at("target_set").integers<State>();
    std::vector<Matrix> body;
    if (n.has("body")) body = n.at("body").matrices();
    const auto tail = n.at("tail");
    const auto kind = tail_kind(tail.at("kind"));
    c.schedule = KernelSchedule(StateSpace(size, std::move(target)), std::move(body), kind,
                                tail.at("matrices").matrices());
  }
  c.initial = initial_vector(n, c.schedule.space().size());
  return c;
}

json chain_json(const ChainConfig& c) {
  json j;
  if (c.birth_death) {
    const auto& s = *c.birth_death;
    j["birth_death"] = {{"cap", s.cap},
                        {"alpha_table", s.body},
                        {"tail", {{"kind", tail_kind_name(s.tail_kind)}, {"alphas", s.tail}}}};
  } else {
    const auto& s = c.schedule;
    j["states"] = s.space().size();
    j["target_set"] = s.space().target_set();
    json body = json::array();
    for (const auto& m : s.body()) body.push_back(m.to_rows());
    j["body"] = body;
    json tail = json::array();
    for (const auto& m : s.tail()) tail.push_back(m.to_rows());
    j["tail"] = {{"kind", tail_kind_name(s.tail_kind())}, {"matrices", tail}};
  }
  j["initial"] = c.initial;
  return j;
}

const char* gamma_source_name(GammaSource s) {
  switch (s) {
    case GammaSource::Analytic:
      return "analytic";
    case GammaSource::Empirical:
      return "empirical";
    case GammaSource::Fixed:
      return "fixed";
  }
  return "analytic";
}

}  // namespace

void refresh_resolved(Scenario& s) {
  json d;
  if (s.domination.p) d["p"] = *s.domination.p;
  d["N"] = s.domination.N;
  if (s.domination.mu_hat) d["mu_hat"] = *s.domination.mu_hat;
  if (s.domination.G) d["G"] = *s.domination.G;
  if (s.domination.tail_bound) d["tail_bound"] = *s.domination.tail_bound;

  json g = {{"source", gamma_source_name(s.gamma.source)},
            {"n0", s.gamma.n0},
            {"t_grid", s.gamma.t_grid},
            {"lag_grid", s.gamma.lag_grid},
            {"n_paths", s.gamma.n_paths},
            {"swapped", s.gamma.swapped}};
  if (s.gamma.value) g["value"] = *s.gamma.value;

  s.resolved = {
      {"schema_version", kSchemaVersion},
      {"name", s.name},
      {"chains", {chain_json(s.chain1), chain_json(s.chain2)}},
      {"horizon", s.horizon},
      {"n_paths", s.n_paths},
      {"seed", s.seed},
      {"domination", d},
      {"gamma", g},
      {"condition",
       {{"t_grid", s.condition.t_grid},
        {"x_grid", s.condition.x_grid},
        {"max_n", s.condition.max_n},
        {"n_paths", s.condition.n_paths}}},
      {"exact", {{"horizon", s.exact.horizon}, {"product_cap", s.exact.product_cap}}},
      {"report",
       {{"trial_tail_n", s.trial_tail_n}, {"include_first_trial", s.include_first_trial}}},
  };
}

Scenario parse_scenario(const json& config) {
  const Node root(config, "$");
  if (!config.is_object()) root.fail("config must be a JSON object");
  const auto version = root.at("schema_version").integer();
  if (version != kSchemaVersion) {
    root.at("schema_version")
        .fail("unsupported schema version " + std::to_string(version) + " (expected " +
              std::to_string(kSchemaVersion) + ")");
  }

  Scenario s;
  if (root.has("name")) s.name = root.at("name").string();
  const auto chains = root.at("chains");
  if (chains.size() != 2) chains.fail("expected exactly two chains");
  s.chain1 = parse_chain(chains.at(std::size_t{0}));
  s.chain2 = parse_chain(chains.at(std::size_t{1}));

  if (root.has("horizon")) s.horizon = root.at("horizon").integer();
  if (root.has("n_paths")) s.n_paths = root.at("n_paths").count();
  if (root.has("seed")) s.seed = root.at("seed").unsigned_integer();
  if (s.horizon < 1) throw ValidationError("horizon must be >= 1");
  if (s.n_paths < 1) throw ValidationError("n_paths must be >= 1");

  if (root.has("domination")) {
    const auto d = root.at("domination");
    if (d.has("p")) s.domination.p = d.at("p").number();
    if (d.has("N")) s.domination.N = d.at("N").count();
    if (d.has("mu_hat")) s.domination.mu_hat = d.at("mu_hat").number();
    if (d.has("G")) s.domination.G = d.at("G").numbers();
    if (d.has("tail_bound")) s.domination.tail_bound = d.at("tail_bound").number();
  }

  if (root.has("gamma")) {
    const auto g = root.at("gamma");
    if (g.has("source")) {
      const auto src = g.at("source").string();
      if (src == "analytic") {
        s.gamma.source = GammaSource::Analytic;
      } else if (src == "empirical") {
        s.gamma.source = GammaSource::Empirical;
      } else if (src == "fixed") {
        s.gamma.source = GammaSource::Fixed;
      } else {
        g.at("source").fail("gamma source must be analytic, empirical or fixed");
      }
    }
    if (g.has("n0")) s.gamma.n0 = g.at("n0").integer();
    if (g.has("value")) s.gamma.value = g.at("value").number();
    if (g.has("t_grid")) s.gamma.t_grid = g.at("t_grid").integers<Time>();
    if (g.has("lag_grid")) s.gamma.lag_grid = g.at("lag_grid").integers<Time>();
    if (g.has("n_paths")) s.gamma.n_paths = g.at("n_paths").count();
    if (g.has("swapped")) s.gamma.swapped = g.at("swapped").boolean();
  }
  if (s.gamma.n0 < 0) throw ValidationError("gamma.n0 must be >= 0");
  if (s.gamma.source == GammaSource::Fixed && !s.gamma.value) {
    throw ConfigError("$.gamma: source \"fixed\" needs a \"value\"");
  }

  s.condition.x_grid = s.chain1.schedule.space().target_set();
  if (root.has("condition")) {
    const auto c = root.at("condition");
    if (c.has("t_grid")) s.condition.t_grid = c.at("t_grid").integers<Time>();
    if (c.has("x_grid")) s.condition.x_grid = c.at("x_grid").integers<State>();
    if (c.has("max_n")) s.condition.max_n = c.at("max_n").count();
    if (c.has("n_paths")) s.condition.n_paths = c.at("n_paths").count();
  }

  if (root.has("exact")) {
    const auto e = root.at("exact");
    if (e.has("horizon")) s.exact.horizon = e.at("horizon").integer();
    if (e.has("product_cap")) s.exact.product_cap = e.at("product_cap").count();
  }
  if (s.exact.horizon < 1) throw ValidationError("exact.horizon must be >= 1");

  if (root.has("report")) {
    const auto r = root.at("report");
    if (r.has("trial_tail_n")) s.trial_tail_n = r.at("trial_tail_n").count();
    if (r.has("include_first_trial")) s.include_first_trial = r.at("include_first_trial").boolean();
  }

  refresh_resolved(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line:column.
    const std::size_t off = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < off; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": malformed JSON: " + e.what());
  }
  return parse_scenario(j);
}

json sec3_config() {
  const json chain = {{"birth_death",
                       {{"cap", 50}, {"tail", {{"kind", "constant"}, {"alphas", {{0.75}}}}}}},
                      {"initial_state", 0}};
  return {{"schema_version", kSchemaVersion},
          {"name", "sec3-birth-death"},
          {"chains", {chain, chain}},
          {"horizon", 5000},
          {"n_paths", 100000},
          {"seed", 20240601},
          {"domination", {{"p", 0.75}, {"N", 200}}},
          {"gamma", {{"source", "analytic"}}},
          {"report", {{"trial_tail_n", 50}}}};
}

}  // namespace renewal
