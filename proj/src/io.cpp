#include "biasedselect/io.hpp"

#include <cstdio>
#include <fstream>

namespace biasedselect::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& message) { throw ConfigError(message); }

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

int integer(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

std::string text(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

Signature parse_signature(const std::string& s, int p) {
  if (static_cast<int>(s.size()) != p) fail("signature '" + s + "' does not have " + std::to_string(p) + " bits");
  try {
    return signature_from_string(s);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

}  // namespace

json problem_to_json(const SelectionProblem& problem) {
  const GroupStructure& g = problem.structure();

  // The compact cells form only captures layouts where items fill cells in
  // ascending signature order; anything else keeps the explicit list so the
  // item-to-cell assignment survives the round trip.
  bool canonical = true;
  for (int i = 1; i < g.m() && canonical; ++i) {
    canonical = g.signature_of(i - 1) <= g.signature_of(i);
  }
  if (!canonical) {
    json memberships = json::array();
    for (int i = 0; i < g.m(); ++i) {
      memberships.push_back(signature_to_string(g.signature_of(i), g.p()));
    }
    return json{{"m", g.m()}, {"p", g.p()}, {"n", problem.n()}, {"memberships", memberships}};
  }

  json cells = json::object();
  for (const auto& [sig, items] : g.intersections()) {
    cells[signature_to_string(sig, g.p())] = items.size();
  }
  return json{{"m", g.m()}, {"p", g.p()}, {"n", problem.n()}, {"cells", cells}};
}

SelectionProblem problem_from_json(const json& j) {
  if (!j.is_object()) fail("problem spec must be an object");
  const int m = integer(j, "m");
  const int p = integer(j, "p");
  const int n = integer(j, "n");
  if (p < 1 || p > 31) fail("p must lie in [1, 31]");

  std::vector<Signature> memberships;
  if (j.contains("memberships")) {
    const json& list = j["memberships"];
    if (!list.is_array()) fail("memberships must be an array of bit-strings");
    for (const json& entry : list) {
      if (!entry.is_string()) fail("memberships must be an array of bit-strings");
      memberships.push_back(parse_signature(entry.get<std::string>(), p));
    }
  } else if (j.contains("cells")) {
    const json& cells = j["cells"];
    if (!cells.is_object()) fail("cells must map signatures to sizes");
    // json objects iterate in sorted key order, so layouts are deterministic
    for (auto it = cells.begin(); it != cells.end(); ++it) {
      const Signature sig = parse_signature(it.key(), p);
      if (!it.value().is_number_integer()) fail("cell sizes must be integers");
      const int size = it.value().get<int>();
      if (size < 0) fail("cell sizes must be non-negative");
      for (int i = 0; i < size; ++i) memberships.push_back(sig);
    }
  } else {
    fail("problem spec needs 'cells' or 'memberships'");
  }

  try {
    return SelectionProblem(build_structure(m, memberships, p), n);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

json constraints_to_json(const ConstraintSet& constraints, int p) {
  if (constraints.kind() == ConstraintKind::Intersectional) {
    json bounds = json::object();
    for (const auto& [sig, bound] : constraints.cell_bounds()) {
      bounds[signature_to_string(sig, p)] = bound;
    }
    return json{{"kind", "intersectional"}, {"bounds", bounds}};
  }
  return json{{"kind", "non_intersectional"}, {"bounds", constraints.group_bounds()}};
}

ConstraintSet constraints_from_json(const json& j) {
  if (!j.is_object()) fail("constraint spec must be an object");
  const std::string kind = text(j, "kind");
  try {
    if (kind == "intersectional") {
      const json& bounds = field(j, "bounds");
      if (!bounds.is_object()) fail("intersectional bounds must map signatures to integers");
      std::map<Signature, int> map;
      for (auto it = bounds.begin(); it != bounds.end(); ++it) {
        if (!it.value().is_number_integer()) fail("bounds must be integers");
        map[signature_from_string(it.key())] = it.value().get<int>();
      }
      return ConstraintSet::intersectional(std::move(map));
    }
    if (kind == "non_intersectional") {
      const json& bounds = field(j, "bounds");
      if (!bounds.is_array()) fail("non-intersectional bounds must be an array");
      std::vector<int> list;
      for (const json& entry : bounds) {
        if (!entry.is_number_integer()) fail("bounds must be integers");
        list.push_back(entry.get<int>());
      }
      return ConstraintSet::non_intersectional(std::move(list));
    }
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  fail("constraint kind must be 'intersectional' or 'non_intersectional'");
}

json distribution_to_json(const UtilityDistribution& dist) {
  switch (dist.kind()) {
    case UtilityDistribution::Kind::Uniform:
      return json{{"kind", "uniform"}, {"lo", dist.param(0)}, {"hi", dist.param(1)}};
    case UtilityDistribution::Kind::TruncatedNormal:
      return json{{"kind", "trunc_normal"},
                  {"mu", dist.param(0)},
                  {"sigma", dist.param(1)},
                  {"lo", dist.param(2)},
                  {"hi", dist.param(3)}};
    case UtilityDistribution::Kind::TruncatedPowerLaw:
      return json{{"kind", "trunc_powerlaw"},
                  {"alpha", dist.param(0)},
                  {"xmin", dist.param(1)},
                  {"xmax", dist.param(2)}};
  }
  fail("unknown distribution kind");
}

UtilityDistribution distribution_from_json(const json& j) {
  if (!j.is_object()) fail("distribution spec must be an object");
  const std::string kind = text(j, "kind");
  try {
    if (kind == "uniform") {
      return UtilityDistribution::uniform(number(j, "lo"), number(j, "hi"));
    }
    if (kind == "trunc_normal") {
      return UtilityDistribution::truncated_normal(number(j, "mu"), number(j, "sigma"), number(j, "lo"),
                                                   number(j, "hi"));
    }
    if (kind == "trunc_powerlaw") {
      return UtilityDistribution::truncated_power_law(number(j, "alpha"), number(j, "xmin"),
                                                      number(j, "xmax"));
    }
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  fail("distribution kind must be 'uniform', 'trunc_normal', or 'trunc_powerlaw'");
}

json bias_to_json(const Bias& bias) {
  if (const auto* mult = std::get_if<MultiplicativeBias>(&bias)) {
    return json{{"kind", "multiplicative"}, {"beta", mult->beta()}};
  }
  const auto& gen = std::get<GeneralBias>(bias);
  json cells = json::object();
  for (const auto& [sig, spec] : gen.cells()) {
    json entry;
    if (spec.is_power()) {
      entry = json{{"kind", "power_of_product"}, {"q", spec.exponent()}};
    } else {
      json knots = json::array();
      for (const auto& [x, y] : spec.knots()) knots.push_back(json::array({x, y}));
      entry = json{{"kind", "piecewise_linear"}, {"knots", knots}};
    }
    cells[signature_to_string(sig, gen.p())] = entry;
  }
  return json{{"kind", "general"}, {"beta", gen.beta()}, {"cells", cells}};
}

Bias bias_from_json(const json& j) {
  if (!j.is_object()) fail("bias spec must be an object");
  const std::string kind = text(j, "kind");
  const json& beta_json = field(j, "beta");
  if (!beta_json.is_array() || beta_json.empty()) fail("bias needs a non-empty beta array");
  std::vector<double> beta;
  for (const json& entry : beta_json) {
    if (!entry.is_number()) fail("beta entries must be numbers");
    beta.push_back(entry.get<double>());
  }
  const int p = static_cast<int>(beta.size());
  try {
    if (kind == "multiplicative") return MultiplicativeBias(std::move(beta));
    if (kind == "general") {
      std::map<Signature, CellBiasSpec> cells;
      if (j.contains("cells")) {
        const json& cj = j["cells"];
        if (!cj.is_object()) fail("general bias cells must be an object");
        for (auto it = cj.begin(); it != cj.end(); ++it) {
          const Signature sig = parse_signature(it.key(), p);
          const json& spec = it.value();
          const std::string spec_kind = text(spec, "kind");
          if (spec_kind == "power_of_product") {
            cells.emplace(sig, CellBiasSpec::power_of_product(number(spec, "q")));
          } else if (spec_kind == "piecewise_linear") {
            const json& knots_json = field(spec, "knots");
            if (!knots_json.is_array()) fail("knots must be an array of [x, y] pairs");
            std::vector<std::pair<double, double>> knots;
            for (const json& k : knots_json) {
              if (!k.is_array() || k.size() != 2) fail("knots must be [x, y] pairs");
              knots.emplace_back(k[0].get<double>(), k[1].get<double>());
            }
            cells.emplace(sig, CellBiasSpec::piecewise_linear(std::move(knots)));
          } else {
            fail("cell bias kind must be 'power_of_product' or 'piecewise_linear'");
          }
        }
      }
      return GeneralBias(std::move(beta), std::move(cells));
    }
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  fail("bias kind must be 'multiplicative' or 'general'");
}

json selection_to_json(const Selection& sel, int p) {
  json counts = json::object();
  for (const auto& [sig, count] : sel.counts) counts[signature_to_string(sig, p)] = count;
  json chosen = json::array();
  for (std::int32_t i : sel.chosen) chosen.push_back(i + 1);
  return json{{"chosen", chosen},
              {"counts", counts},
              {"latent_total", sel.latent_total},
              {"observed_total", sel.observed_total}};
}

namespace {

std::vector<int> parse_grid(const json& j, const char* key) {
  const json& g = field(j, key);
  std::vector<int> out;
  if (g.is_array()) {
    for (const json& entry : g) {
      if (!entry.is_number_integer()) fail("grid entries must be integers");
      out.push_back(entry.get<int>());
    }
  } else if (g.is_object()) {
    const int from = integer(g, "from");
    const int to = integer(g, "to");
    const int step = integer(g, "step");
    if (step < 1) fail("grid step must be positive");
    for (int v = from; v <= to; v += step) out.push_back(v);
  } else {
    fail(std::string("grid '") + key + "' must be an array or {from, to, step}");
  }
  if (out.empty()) fail(std::string("grid '") + key + "' is empty");
  return out;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("config root must be an object");

  ExperimentConfig cfg;
  if (j.contains("problem")) cfg.problem = problem_from_json(j["problem"]);
  if (j.contains("distribution")) cfg.distribution = distribution_from_json(j["distribution"]);
  if (j.contains("bias")) cfg.bias = bias_from_json(j["bias"]);
  if (j.contains("constraints")) cfg.constraints = constraints_from_json(j["constraints"]);
  if (j.contains("design")) {
    cfg.design_epsilon = number(j["design"], "epsilon");
  }
  if (j.contains("run")) {
    const json& run = j["run"];
    if (run.contains("trials")) cfg.trials = integer(run, "trials");
    if (run.contains("seed")) {
      if (!run["seed"].is_number_unsigned() && !run["seed"].is_number_integer()) fail("seed must be an integer");
      cfg.seed = run["seed"].get<std::uint64_t>();
    }
    if (run.contains("keep_per_trial")) {
      if (!run["keep_per_trial"].is_boolean()) fail("keep_per_trial must be a boolean");
      cfg.keep_per_trial = run["keep_per_trial"].get<bool>();
    }
  }
  if (cfg.trials && *cfg.trials < 1) fail("trials must be positive");
  if (j.contains("sweep")) {
    const json& sweep = j["sweep"];
    cfg.l1_grid = parse_grid(sweep, "l1_grid");
    cfg.l2_grid = parse_grid(sweep, "l2_grid");
    if (sweep.contains("beta_grid")) {
      const json& bg = sweep["beta_grid"];
      if (!bg.is_array()) fail("beta_grid must be an array of [beta1, beta2] pairs");
      for (const json& entry : bg) {
        if (!entry.is_array() || entry.size() != 2) fail("beta_grid entries must be [beta1, beta2]");
        cfg.beta_grid.push_back({entry[0].get<double>(), entry[1].get<double>()});
      }
    }
  }
  if (j.contains("asymptotic")) {
    const json& a = j["asymptotic"];
    if (a.contains("grid")) cfg.asymptotic_grid = integer(a, "grid");
    if (cfg.asymptotic_grid < 2) fail("asymptotic grid must be at least 2");
    if (a.contains("beta_grid")) {
      const json& bg = a["beta_grid"];
      if (!bg.is_array()) fail("beta_grid must be an array of [beta1, beta2] pairs");
      for (const json& entry : bg) {
        if (!entry.is_array() || entry.size() != 2) fail("beta_grid entries must be [beta1, beta2]");
        cfg.beta_grid.push_back({entry[0].get<double>(), entry[1].get<double>()});
      }
    }
  }
  if (j.contains("output")) {
    const json& out = j["output"];
    if (out.contains("csv")) cfg.csv_name = text(out, "csv");
    if (out.contains("json")) cfg.json_name = text(out, "json");
  }
  return cfg;
}

std::string format_g17(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << header[i] << (i + 1 == header.size() ? '\n' : ',');
  }
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << row[i] << (i + 1 == row.size() ? '\n' : ',');
    }
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace biasedselect::io
