#include "gridclear/case_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gridclear {

namespace {

using nlohmann::json;

constexpr double kDefaultAngleBound = std::numbers::pi / 3.0;

struct IdMap {
  int min_id = 0;
  int count = 0;

  int index_of(int id) const {
    const int idx = id - min_id;
    return idx >= 0 && idx < count ? idx : -1;
  }
  int id_of(int index) const { return index + min_id; }
};

IdMap make_id_map(const std::vector<int>& bus_ids) {
  IdMap map;
  if (bus_ids.empty()) return map;
  map.min_id = *std::min_element(bus_ids.begin(), bus_ids.end());
  map.count = static_cast<int>(bus_ids.size());
  return map;
}

bool ids_contiguous(const std::vector<int>& bus_ids) {
  if (bus_ids.empty()) return false;
  std::set<int> unique(bus_ids.begin(), bus_ids.end());
  if (unique.size() != bus_ids.size()) return false;
  return *unique.rbegin() - *unique.begin() + 1 == static_cast<int>(bus_ids.size());
}

std::pair<int, int> ordered(int a, int b) { return a <= b ? std::pair{a, b} : std::pair{b, a}; }

// --- JSON field extraction with issue collection -------------------------

class FieldReader {
 public:
  explicit FieldReader(std::vector<ValidationIssue>& issues) : issues_(issues) {}

  template <typename T>
  T get(const json& obj, const std::string& key, const std::string& context, T fallback) {
    if (!obj.contains(key)) {
      issues_.push_back({"missing_field", context + ": missing \"" + key + "\""});
      return fallback;
    }
    try {
      return obj.at(key).get<T>();
    } catch (const json::exception&) {
      issues_.push_back({"bad_field_type", context + ": \"" + key + "\" has the wrong type"});
      return fallback;
    }
  }

  template <typename T>
  std::optional<T> get_optional(const json& obj, const std::string& key,
                                const std::string& context) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    try {
      return obj.at(key).get<T>();
    } catch (const json::exception&) {
      issues_.push_back({"bad_field_type", context + ": \"" + key + "\" has the wrong type"});
      return std::nullopt;
    }
  }

 private:
  std::vector<ValidationIssue>& issues_;
};

CaseFile parse_case(const json& root, std::vector<ValidationIssue>& issues) {
  FieldReader f(issues);
  CaseFile c;
  c.schema_version = f.get<int>(root, "schema_version", "case", 0);
  c.name = f.get<std::string>(root, "name", "case", "");
  if (root.contains("comments")) {
    try {
      c.comments = root.at("comments").get<std::vector<std::string>>();
    } catch (const json::exception&) {
      issues.push_back({"bad_field_type", "case: \"comments\" must be an array of strings"});
    }
  }
  c.base_mva = f.get<double>(root, "base_mva", "case", 100.0);

  if (root.contains("buses") && root.at("buses").is_array()) {
    int i = 0;
    for (const json& b : root.at("buses")) {
      const std::string ctx = "buses[" + std::to_string(i++) + "]";
      if (b.is_object())
        c.bus_ids.push_back(f.get<int>(b, "id", ctx, -1));
      else if (b.is_number_integer())
        c.bus_ids.push_back(b.get<int>());
      else
        issues.push_back({"bad_field_type", ctx + ": expected object or integer"});
    }
  } else {
    issues.push_back({"missing_field", "case: missing \"buses\" array"});
  }

  c.slack_ids = f.get<std::vector<int>>(root, "slack_set", "case", {});

  if (root.contains("lines") && root.at("lines").is_array()) {
    int i = 0;
    for (const json& l : root.at("lines")) {
      const std::string ctx = "lines[" + std::to_string(i++) + "]";
      CaseLine line;
      line.from = f.get<int>(l, "from", ctx, -1);
      line.to = f.get<int>(l, "to", ctx, -1);
      line.conductance = f.get<double>(l, "conductance", ctx, 0.0);
      line.susceptance = f.get<double>(l, "susceptance", ctx, 0.0);
      line.limit_mw = f.get<double>(l, "limit_mw", ctx, 0.0);
      line.angle_min = f.get_optional<double>(l, "angle_min", ctx);
      line.angle_max = f.get_optional<double>(l, "angle_max", ctx);
      c.lines.push_back(line);
    }
  } else {
    issues.push_back({"missing_field", "case: missing \"lines\" array"});
  }

  if (root.contains("transcos") && root.at("transcos").is_array()) {
    int i = 0;
    for (const json& t : root.at("transcos")) {
      const std::string ctx = "transcos[" + std::to_string(i++) + "]";
      CaseTransCo tc;
      tc.id = f.get<std::string>(t, "id", ctx, "");
      if (t.contains("edges") && t.at("edges").is_array()) {
        for (const json& e : t.at("edges")) {
          if (e.is_array() && e.size() == 2 && e[0].is_number_integer() && e[1].is_number_integer())
            tc.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
          else
            issues.push_back({"bad_field_type", ctx + ": edges must be [bus, bus] pairs"});
        }
      } else {
        issues.push_back({"missing_field", ctx + ": missing \"edges\""});
      }
      c.transcos.push_back(std::move(tc));
    }
  }

  if (root.contains("gencos") && root.at("gencos").is_array()) {
    int i = 0;
    for (const json& g : root.at("gencos")) {
      const std::string ctx = "gencos[" + std::to_string(i++) + "]";
      CaseGenCo gc;
      gc.id = f.get<std::string>(g, "id", ctx, "");
      if (g.contains("units") && g.at("units").is_array()) {
        int u = 0;
        for (const json& unit : g.at("units")) {
          const std::string uctx = ctx + ".units[" + std::to_string(u++) + "]";
          CaseGenerationUnit gu;
          gu.bus = f.get<int>(unit, "bus", uctx, -1);
          gu.min_mw = f.get<double>(unit, "p_min_mw", uctx, 0.0);
          gu.max_mw = f.get<double>(unit, "p_max_mw", uctx, 0.0);
          gu.cost_linear = f.get<double>(unit, "c1", uctx, 0.0);
          gu.cost_curvature = f.get<double>(unit, "c2", uctx, 0.0);
          gc.units.push_back(gu);
        }
      }
      c.gencos.push_back(std::move(gc));
    }
  }

  if (root.contains("distcos") && root.at("distcos").is_array()) {
    int i = 0;
    for (const json& d : root.at("distcos")) {
      const std::string ctx = "distcos[" + std::to_string(i++) + "]";
      CaseDistCo dc;
      dc.id = f.get<std::string>(d, "id", ctx, "");
      if (d.contains("elastic") && d.at("elastic").is_array()) {
        int u = 0;
        for (const json& unit : d.at("elastic")) {
          const std::string uctx = ctx + ".elastic[" + std::to_string(u++) + "]";
          CaseElasticUnit eu;
          eu.bus = f.get<int>(unit, "bus", uctx, -1);
          eu.min_mw = f.get<double>(unit, "e_min_mw", uctx, 0.0);
          eu.max_mw = f.get<double>(unit, "e_max_mw", uctx, 0.0);
          eu.utility_linear = f.get<double>(unit, "a", uctx, 0.0);
          eu.utility_curvature = f.get<double>(unit, "b", uctx, 0.0);
          dc.elastic.push_back(eu);
        }
      }
      if (d.contains("inelastic") && d.at("inelastic").is_array()) {
        int u = 0;
        for (const json& unit : d.at("inelastic")) {
          const std::string uctx = ctx + ".inelastic[" + std::to_string(u++) + "]";
          CaseInelasticUnit iu;
          iu.bus = f.get<int>(unit, "bus", uctx, -1);
          iu.demand_mw = f.get<double>(unit, "s_mw", uctx, 0.0);
          dc.inelastic.push_back(iu);
        }
      }
      c.distcos.push_back(std::move(dc));
    }
  }

  if (root.contains("defaults") && root.at("defaults").is_object()) {
    const json& d = root.at("defaults");
    c.defaults.rho = f.get<double>(d, "rho", "defaults", 0.21);
    c.defaults.eps_primal = f.get<double>(d, "eps_primal", "defaults", 5e-5);
    c.defaults.eps_dual = f.get<double>(d, "eps_dual", "defaults", 5e-6);
    c.defaults.beta = f.get_optional<double>(d, "beta", "defaults");
    c.defaults.lambda0 = f.get_optional<double>(d, "lambda0", "defaults");
    c.defaults.mismatch_tol = f.get<double>(d, "mismatch_tol", "defaults", 1e-3);
  }

  return c;
}

std::vector<Line> model_lines(const CaseFile& c, const IdMap& map) {
  std::vector<Line> lines;
  lines.reserve(c.lines.size());
  for (const CaseLine& cl : c.lines) {
    Line l;
    l.from = map.index_of(cl.from);
    l.to = map.index_of(cl.to);
    l.conductance = cl.conductance;
    l.susceptance = cl.susceptance;
    l.limit = cl.limit_mw / c.base_mva;
    l.angle_min = cl.angle_min.value_or(-kDefaultAngleBound);
    l.angle_max = cl.angle_max.value_or(kDefaultAngleBound);
    lines.push_back(l);
  }
  return lines;
}

}  // namespace

std::vector<ValidationIssue> validate_case(const CaseFile& c) {
  std::vector<ValidationIssue> issues;

  if (c.schema_version != 1)
    issues.push_back({"unsupported_schema",
                      "schema_version must be 1, got " + std::to_string(c.schema_version)});
  if (!(c.base_mva > 0.0)) issues.push_back({"bad_base_mva", "base_mva must be positive"});

  if (c.bus_ids.empty()) {
    issues.push_back({"empty_network", "case defines no buses"});
    return issues;
  }
  if (!ids_contiguous(c.bus_ids)) {
    issues.push_back({"noncontiguous_bus_ids", "bus ids must be unique and contiguous"});
    return issues;
  }
  const IdMap map = make_id_map(c.bus_ids);

  auto known_bus = [&](int id, const std::string& what) {
    if (map.index_of(id) < 0) {
      issues.push_back({"unknown_bus", what + " references bus " + std::to_string(id)});
      return false;
    }
    return true;
  };

  if (c.slack_ids.empty()) issues.push_back({"no_slack", "slack_set must be nonempty"});
  for (int s : c.slack_ids) known_bus(s, "slack_set");

  std::set<std::pair<int, int>> line_pairs;
  for (std::size_t i = 0; i < c.lines.size(); ++i) {
    const CaseLine& l = c.lines[i];
    const std::string what = "line " + std::to_string(l.from) + "-" + std::to_string(l.to);
    const bool endpoints_ok = known_bus(l.from, what) && known_bus(l.to, what);
    if (l.from == l.to) issues.push_back({"self_loop", what + ": endpoints must differ"});
    if (endpoints_ok && l.from != l.to && !line_pairs.insert(ordered(l.from, l.to)).second)
      issues.push_back({"duplicate_line", what + ": bus pair appears twice"});
    if (!(l.conductance > 0.0)) issues.push_back({"nonpositive_conductance", what});
    if (!(l.susceptance > 0.0)) issues.push_back({"nonpositive_susceptance", what});
    if (!(l.limit_mw > 0.0)) issues.push_back({"nonpositive_limit", what});
    const double lo = l.angle_min.value_or(-kDefaultAngleBound);
    const double hi = l.angle_max.value_or(kDefaultAngleBound);
    if (!(lo <= 0.0 && 0.0 <= hi))
      issues.push_back({"bad_angle_bounds", what + ": bounds must straddle zero"});
  }

  std::set<std::string> agent_ids;
  for (const CaseGenCo& g : c.gencos) {
    if (g.id.empty()) issues.push_back({"missing_id", "every genco needs an id"});
    if (!agent_ids.insert("G:" + g.id).second)
      issues.push_back({"duplicate_id", "genco id \"" + g.id + "\" appears twice"});
    std::set<int> unit_buses;
    for (const CaseGenerationUnit& u : g.units) {
      const std::string what = "genco " + g.id + " unit at bus " + std::to_string(u.bus);
      if (known_bus(u.bus, what) && !unit_buses.insert(u.bus).second)
        issues.push_back({"duplicate_unit", what + ": at most one unit per bus"});
      if (!(u.min_mw <= u.max_mw)) issues.push_back({"bad_bounds", what});
      if (!(u.cost_curvature > 0.0)) issues.push_back({"nonpositive_curvature", what});
      if (u.cost_linear < 0.0) issues.push_back({"negative_cost", what});
    }
  }
  for (const CaseDistCo& d : c.distcos) {
    if (d.id.empty()) issues.push_back({"missing_id", "every distco needs an id"});
    if (!agent_ids.insert("D:" + d.id).second)
      issues.push_back({"duplicate_id", "distco id \"" + d.id + "\" appears twice"});
    std::set<int> elastic_buses, inelastic_buses;
    for (const CaseElasticUnit& u : d.elastic) {
      const std::string what = "distco " + d.id + " elastic unit at bus " + std::to_string(u.bus);
      if (known_bus(u.bus, what) && !elastic_buses.insert(u.bus).second)
        issues.push_back({"duplicate_unit", what + ": at most one elastic unit per bus"});
      if (!(u.min_mw <= u.max_mw)) issues.push_back({"bad_bounds", what});
      if (!(u.utility_curvature > 0.0)) issues.push_back({"nonpositive_curvature", what});
    }
    for (const CaseInelasticUnit& u : d.inelastic) {
      const std::string what = "distco " + d.id + " inelastic unit at bus " + std::to_string(u.bus);
      if (known_bus(u.bus, what) && !inelastic_buses.insert(u.bus).second)
        issues.push_back({"duplicate_unit", what + ": at most one inelastic unit per bus"});
      if (u.demand_mw < 0.0) issues.push_back({"negative_inelastic", what});
    }
  }

  if (!(c.defaults.rho > 0.0)) issues.push_back({"bad_default", "defaults.rho must be positive"});
  if (!(c.defaults.eps_primal > 0.0))
    issues.push_back({"bad_default", "defaults.eps_primal must be positive"});
  if (!(c.defaults.eps_dual > 0.0))
    issues.push_back({"bad_default", "defaults.eps_dual must be positive"});
  if (!(c.defaults.mismatch_tol > 0.0))
    issues.push_back({"bad_default", "defaults.mismatch_tol must be positive"});
  if (c.defaults.beta && !(*c.defaults.beta > 0.0))
    issues.push_back({"bad_default", "defaults.beta must be positive"});

  if (!issues.empty()) return issues;

  // Structural checks need the model network; local invariants re-verified.
  Network net = [&] {
    try {
      std::set<int> slack;
      for (int s : c.slack_ids) slack.insert(map.index_of(s));
      return Network::create(map.count, model_lines(c, map), std::move(slack));
    } catch (const ValidationError& err) {
      for (const ValidationIssue& issue : err.issues()) issues.push_back(issue);
      return Network::create(1, {}, {0});
    }
  }();
  if (!issues.empty()) return issues;

  std::map<std::pair<int, int>, int> line_index;
  for (std::size_t i = 0; i < net.lines().size(); ++i)
    line_index[{net.lines()[i].from, net.lines()[i].to}] = static_cast<int>(i);

  std::vector<std::vector<int>> partition;
  std::set<std::string> transco_ids;
  for (const CaseTransCo& t : c.transcos) {
    if (t.id.empty()) issues.push_back({"missing_id", "every transco needs an id"});
    if (!transco_ids.insert(t.id).second)
      issues.push_back({"duplicate_id", "transco id \"" + t.id + "\" appears twice"});
    std::vector<int> indices;
    for (const auto& [a, b] : t.edges) {
      const int ia = map.index_of(a);
      const int ib = map.index_of(b);
      const auto it =
          ia >= 0 && ib >= 0 ? line_index.find(ordered(ia, ib)) : line_index.end();
      if (it == line_index.end()) {
        issues.push_back({"unknown_line", "transco " + t.id + " references line " +
                                              std::to_string(a) + "-" + std::to_string(b)});
        continue;
      }
      indices.push_back(it->second);
    }
    partition.push_back(std::move(indices));
  }
  if (!c.lines.empty() && c.transcos.empty())
    issues.push_back({"edge_not_covered", "case has lines but no transcos"});

  for (const ValidationIssue& issue : validate_topology(net, partition)) issues.push_back(issue);
  return issues;
}

CaseFile load_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError({{"io_error", "cannot open case file " + path.string()}});

  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ValidationError({{"parse_error", std::string(err.what())}});
  }

  std::vector<ValidationIssue> issues;
  CaseFile c = parse_case(root, issues);
  if (issues.empty())
    for (const ValidationIssue& issue : validate_case(c)) issues.push_back(issue);
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return c;
}

std::string case_to_json(const CaseFile& c) {
  json root;
  root["schema_version"] = c.schema_version;
  root["name"] = c.name;
  if (!c.comments.empty()) root["comments"] = c.comments;
  root["base_mva"] = c.base_mva;
  root["buses"] = json::array();
  for (int id : c.bus_ids) root["buses"].push_back(json{{"id", id}});
  root["slack_set"] = c.slack_ids;
  root["lines"] = json::array();
  for (const CaseLine& l : c.lines) {
    json jl{{"from", l.from},
            {"to", l.to},
            {"conductance", l.conductance},
            {"susceptance", l.susceptance},
            {"limit_mw", l.limit_mw}};
    if (l.angle_min) jl["angle_min"] = *l.angle_min;
    if (l.angle_max) jl["angle_max"] = *l.angle_max;
    root["lines"].push_back(std::move(jl));
  }
  root["transcos"] = json::array();
  for (const CaseTransCo& t : c.transcos) {
    json edges = json::array();
    for (const auto& [a, b] : t.edges) edges.push_back(json::array({a, b}));
    root["transcos"].push_back(json{{"id", t.id}, {"edges", std::move(edges)}});
  }
  root["gencos"] = json::array();
  for (const CaseGenCo& g : c.gencos) {
    json units = json::array();
    for (const CaseGenerationUnit& u : g.units)
      units.push_back(json{{"bus", u.bus},
                           {"p_min_mw", u.min_mw},
                           {"p_max_mw", u.max_mw},
                           {"c1", u.cost_linear},
                           {"c2", u.cost_curvature}});
    root["gencos"].push_back(json{{"id", g.id}, {"units", std::move(units)}});
  }
  root["distcos"] = json::array();
  for (const CaseDistCo& d : c.distcos) {
    json elastic = json::array();
    for (const CaseElasticUnit& u : d.elastic)
      elastic.push_back(json{{"bus", u.bus},
                             {"e_min_mw", u.min_mw},
                             {"e_max_mw", u.max_mw},
                             {"a", u.utility_linear},
                             {"b", u.utility_curvature}});
    json inelastic = json::array();
    for (const CaseInelasticUnit& u : d.inelastic)
      inelastic.push_back(json{{"bus", u.bus}, {"s_mw", u.demand_mw}});
    root["distcos"].push_back(
        json{{"id", d.id}, {"elastic", std::move(elastic)}, {"inelastic", std::move(inelastic)}});
  }
  json defaults{{"rho", c.defaults.rho},
                {"eps_primal", c.defaults.eps_primal},
                {"eps_dual", c.defaults.eps_dual},
                {"mismatch_tol", c.defaults.mismatch_tol}};
  if (c.defaults.beta) defaults["beta"] = *c.defaults.beta;
  if (c.defaults.lambda0) defaults["lambda0"] = *c.defaults.lambda0;
  root["defaults"] = std::move(defaults);
  return root.dump(2) + "\n";
}

void save_case(const CaseFile& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << case_to_json(c);
}

System build_system(const CaseFile& c) {
  std::vector<ValidationIssue> issues = validate_case(c);
  if (!issues.empty()) throw ValidationError(std::move(issues));

  const IdMap map = make_id_map(c.bus_ids);
  System sys;
  sys.name = c.name;
  sys.base_mva = c.base_mva;
  sys.external_bus_ids.resize(map.count);
  for (int i = 0; i < map.count; ++i) sys.external_bus_ids[i] = map.id_of(i);

  std::set<int> slack;
  for (int s : c.slack_ids) slack.insert(map.index_of(s));
  sys.network = Network::create(map.count, model_lines(c, map), std::move(slack));

  const double base = c.base_mva;
  for (const CaseDistCo& cd : c.distcos) {
    DistCo d;
    d.id = cd.id;
    for (const CaseElasticUnit& u : cd.elastic)
      d.elastic.push_back(ElasticLoadUnit{map.index_of(u.bus), u.min_mw / base, u.max_mw / base,
                                          {u.utility_linear, u.utility_curvature * base}});
    for (const CaseInelasticUnit& u : cd.inelastic)
      d.inelastic.push_back(InelasticLoadUnit{map.index_of(u.bus), u.demand_mw / base});
    sys.distcos.push_back(std::move(d));
  }
  for (const CaseGenCo& cg : c.gencos) {
    GenCo g;
    g.id = cg.id;
    for (const CaseGenerationUnit& u : cg.units)
      g.units.push_back(GenerationUnit{map.index_of(u.bus), u.min_mw / base, u.max_mw / base,
                                       {u.cost_linear, u.cost_curvature * base}});
    sys.gencos.push_back(std::move(g));
  }

  std::map<std::pair<int, int>, int> line_index;
  for (std::size_t i = 0; i < sys.network.lines().size(); ++i)
    line_index[{sys.network.lines()[i].from, sys.network.lines()[i].to}] = static_cast<int>(i);
  for (const CaseTransCo& ct : c.transcos) {
    std::vector<int> indices;
    for (const auto& [a, b] : ct.edges)
      indices.push_back(line_index.at(ordered(map.index_of(a), map.index_of(b))));
    sys.transcos.push_back(TransCo::build(sys.network, ct.id, indices));
  }
  return sys;
}

ConsensusConfig consensus_config_from(const CaseDefaults& d) {
  ConsensusConfig cfg;
  cfg.rho = d.rho;
  cfg.eps_primal = d.eps_primal;
  cfg.eps_dual = d.eps_dual;
  return cfg;
}

PricingConfig pricing_config_from(const CaseDefaults& d) {
  PricingConfig cfg;
  cfg.beta = d.beta;
  cfg.lambda0 = d.lambda0;
  cfg.mismatch_tol = d.mismatch_tol;
  return cfg;
}

RunResult make_run_result(const System& sys, const PricingOutcome& outcome) {
  RunResult r;
  r.case_name = sys.name;
  r.converged = outcome.converged;
  switch (outcome.status) {
    case PricingStatus::converged: r.status = "converged"; break;
    case PricingStatus::max_iterations: r.status = "max_iterations"; break;
    case PricingStatus::assumption4_violation: r.status = "assumption4_violation"; break;
  }
  r.iterations = outcome.iterations;
  r.beta_used = outcome.beta_used;
  r.message = outcome.message;

  const EquilibriumPoint& p = outcome.point;
  const double base = sys.base_mva;
  r.lambda.assign(p.lambda.data(), p.lambda.data() + p.lambda.size());
  r.theta.assign(p.theta.theta.data(), p.theta.theta.data() + p.theta.theta.size());
  for (const auto& levels : p.elastic_levels) {
    std::vector<double> mw(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) mw[i] = levels[i] * base;
    r.elastic_levels_mw.push_back(std::move(mw));
  }
  for (const auto& levels : p.generation_levels) {
    std::vector<double> mw(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) mw[i] = levels[i] * base;
    r.generation_levels_mw.push_back(std::move(mw));
  }
  r.mismatch_pu.assign(p.mismatch.data(), p.mismatch.data() + p.mismatch.size());
  r.mismatch_inf_pu = p.mismatch.size() > 0 ? p.mismatch.cwiseAbs().maxCoeff() : 0.0;
  r.welfare = p.welfare * base;
  r.dual = p.dual * base;
  r.gap = (p.dual - p.welfare) * base;
  return r;
}

void write_run_result(const RunResult& r, const std::filesystem::path& path) {
  json root;
  root["case_name"] = r.case_name;
  root["converged"] = r.converged;
  root["status"] = r.status;
  root["iterations"] = r.iterations;
  root["beta_used"] = r.beta_used;
  root["lambda"] = r.lambda;
  root["theta"] = r.theta;
  root["elastic_levels_mw"] = r.elastic_levels_mw;
  root["generation_levels_mw"] = r.generation_levels_mw;
  root["mismatch_pu"] = r.mismatch_pu;
  root["mismatch_inf_pu"] = r.mismatch_inf_pu;
  root["welfare"] = r.welfare;
  root["dual"] = r.dual;
  root["gap"] = r.gap;
  root["message"] = r.message;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << root.dump(2) << "\n";
}

RunResult read_run_result(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({{"io_error", "cannot open run result " + path.string()}});
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ValidationError({{"parse_error", std::string(err.what())}});
  }
  RunResult r;
  try {
    r.case_name = root.value("case_name", std::string());
    r.converged = root.at("converged").get<bool>();
    r.status = root.at("status").get<std::string>();
    r.iterations = root.at("iterations").get<int>();
    r.beta_used = root.value("beta_used", 0.0);
    r.lambda = root.at("lambda").get<std::vector<double>>();
    r.theta = root.at("theta").get<std::vector<double>>();
    r.elastic_levels_mw = root.at("elastic_levels_mw").get<std::vector<std::vector<double>>>();
    r.generation_levels_mw =
        root.at("generation_levels_mw").get<std::vector<std::vector<double>>>();
    r.mismatch_pu = root.at("mismatch_pu").get<std::vector<double>>();
    r.mismatch_inf_pu = root.value("mismatch_inf_pu", 0.0);
    r.welfare = root.value("welfare", 0.0);
    r.dual = root.value("dual", 0.0);
    r.gap = root.value("gap", 0.0);
    r.message = root.value("message", std::string());
  } catch (const json::exception& err) {
    throw ValidationError({{"bad_field_type", "run result: " + std::string(err.what())}});
  }
  return r;
}

EquilibriumPoint to_equilibrium_point(const System& sys, const RunResult& r) {
  EquilibriumPoint p;
  const int n = sys.bus_count();
  const double base = sys.base_mva;
  p.lambda = Eigen::Map<const Vector>(r.lambda.data(), r.lambda.size());
  p.theta.theta = Eigen::Map<const Vector>(r.theta.data(), r.theta.size());
  for (const auto& mw : r.elastic_levels_mw) {
    std::vector<double> pu(mw.size());
    for (std::size_t i = 0; i < mw.size(); ++i) pu[i] = mw[i] / base;
    p.elastic_levels.push_back(std::move(pu));
  }
  for (const auto& mw : r.generation_levels_mw) {
    std::vector<double> pu(mw.size());
    for (std::size_t i = 0; i < mw.size(); ++i) pu[i] = mw[i] / base;
    p.generation_levels.push_back(std::move(pu));
  }
  p.profiles = BusProfiles{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
  for (std::size_t d = 0; d < sys.distcos.size(); ++d) {
    for (std::size_t i = 0; i < sys.distcos[d].elastic.size(); ++i)
      p.profiles.elastic[sys.distcos[d].elastic[i].bus] += p.elastic_levels[d][i];
    for (const InelasticLoadUnit& u : sys.distcos[d].inelastic)
      p.profiles.inelastic[u.bus] += u.demand;
  }
  for (std::size_t g = 0; g < sys.gencos.size(); ++g)
    for (std::size_t i = 0; i < sys.gencos[g].units.size(); ++i)
      p.profiles.generation[sys.gencos[g].units[i].bus] += p.generation_levels[g][i];
  p.mismatch = Eigen::Map<const Vector>(r.mismatch_pu.data(), r.mismatch_pu.size());
  p.welfare = r.welfare / base;
  p.dual = r.dual / base;
  return p;
}

}  // namespace gridclear
