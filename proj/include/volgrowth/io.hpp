#pragma once

// JSON schemas, CSV and DOT exports, and atomic file output. Rationals travel as "p/q"
// strings; integers as JSON numbers when they fit in 64 bits and as strings otherwise.

#include "volgrowth/assembly.hpp"
#include "volgrowth/errors.hpp"
#include "volgrowth/exact.hpp"
#include "volgrowth/geometry_checks.hpp"
#include "volgrowth/growth.hpp"
#include "volgrowth/metric_graph.hpp"
#include "volgrowth/pieces.hpp"
#include "volgrowth/tree.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "json.hpp"

namespace volgrowth {

using json = nlohmann::ordered_json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Scalars

inline json integer_json(const Integer& v) {
  if (v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max())
    return v.convert_to<std::int64_t>();
  return v.str();
}

inline Integer integer_from(const json& j) {
  if (j.is_number_integer()) return Integer(j.get<std::int64_t>());
  if (j.is_string()) {
    try {
      return Integer(j.get<std::string>());
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("expected an integer, got " + j.dump());
}

inline json rational_json(const Rational& q) { return to_string(q); }

inline Rational rational_from(const json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number_float()) return rational_ceil(j.get<double>());
  if (j.is_string()) {
    try {
      return parse_rational(j.get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("bad rational: ") + e.what());
    }
  }
  throw ConfigError("expected a rational, got " + j.dump());
}

inline std::string decimal(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}
inline std::string decimal(const Rational& q) { return decimal(to_double(q)); }

inline json profile_json(const Profile& p) {
  json a = json::array();
  for (const auto& x : p) a.push_back(rational_json(x));
  return a;
}

inline Profile profile_from(const json& j) {
  if (!j.is_array()) throw ConfigError("profile must be an array");
  Profile p;
  for (const auto& x : j) p.push_back(rational_from(x));
  return p;
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Growth functions

inline json growth_to_json(const GrowthFunction& v) {
  json j;
  switch (v.source()) {
    case GrowthSource::Polynomial: {
      j["kind"] = "poly";
      json c = json::array();
      for (const auto& x : v.coefficients()) c.push_back(rational_json(x));
      j["coeffs"] = c;
      break;
    }
    case GrowthSource::Exponential:
      j["kind"] = "exp";
      j["base"] = rational_json(v.coefficients()[0]);
      j["coeff"] = rational_json(v.coefficients()[1]);
      break;
    case GrowthSource::Table: {
      j["kind"] = "table";
      json a = json::array();
      for (const auto& x : v.values()) a.push_back(integer_json(x));
      j["values"] = a;
      break;
    }
  }
  j["horizon"] = v.horizon();
  return j;
}

inline GrowthFunction growth_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("growth function must be an object");
  const auto kind = field<std::string>(j, "kind");
  try {
    if (kind == "table") {
      std::vector<Integer> vals;
      for (const auto& x : j.at("values")) vals.push_back(integer_from(x));
      auto g = GrowthFunction::table(vals);
      if (j.contains("horizon")) g = g.truncated(field<int>(j, "horizon"));
      return g;
    }
    const int H = field<int>(j, "horizon");
    if (kind == "poly") {
      std::vector<Rational> c;
      for (const auto& x : j.at("coeffs")) c.push_back(rational_from(x));
      return GrowthFunction::polynomial(c, H);
    }
    if (kind == "exp") return GrowthFunction::exponential(rational_from(j.at("base")), rational_from(j.at("coeff")), H);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("growth function: ") + e.what());
  } catch (const InvalidGrowthFunction& e) {
    throw ConfigError(std::string("growth function: ") + e.what());
  }
  throw ConfigError("unknown growth kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Trees

inline json description_to_json(const RootedTreeDescription& T) {
  json levels = json::array();
  for (const auto& L : T.levels) {
    json l{{"count", L.count}, {"parents", L.parents}};
    if (!L.elements.empty()) l["elements"] = L.elements;
    levels.push_back(l);
  }
  return json{{"levels", levels}};
}

inline RootedTreeDescription description_from_json_unchecked(const json& j) {
  if (j.contains("ray")) return ray_tree(field<int>(j, "ray"));
  if (j.contains("star")) return star_of_rays(field<int>(j.at("star"), "ends"), field<int>(j.at("star"), "horizon"));
  if (j.contains("full")) return full_tree(field<int>(j.at("full"), "arity"), field<int>(j.at("full"), "horizon"));
  if (!j.contains("levels") || !j.at("levels").is_array()) throw ConfigError("tree needs a 'levels' array");
  RootedTreeDescription T;
  for (const auto& l : j.at("levels")) {
    RootedTreeLevel L;
    L.count = field<std::int64_t>(l, "count");
    L.parents = field<std::vector<std::int64_t>>(l, "parents");
    if (l.contains("elements")) L.elements = field<std::vector<int>>(l, "elements");
    T.levels.push_back(std::move(L));
  }
  return T;
}

/// Admissible tree in the level schema: parents index the previous level, and the first
/// `trunks` vertices of every level past 0 are the trunk vertices.
inline json tree_to_json(const AdmissibleTree& t) {
  json levels = json::array();
  for (int n = 0; n <= t.horizon(); ++n) {
    const auto [first, last] = t.level_range(n);
    const VertexId prev_first = n == 0 ? 0 : t.level_range(n - 1).first;
    json parents = json::array();
    for (VertexId x = first; x < last; ++x)
      parents.push_back(n == 0 ? std::int64_t{-1} : static_cast<std::int64_t>(t.vertex(x).parent - prev_first));
    levels.push_back(json{{"count", last - first}, {"parents", parents}});
  }
  json S = json::array();
  for (const auto& iv : t.S().intervals()) S.push_back(json::array({iv.start, iv.length}));
  return json{{"trunks", t.trunks()}, {"S", S}, {"levels", levels}};
}

inline LevelSet level_set_from_json(const json& j) {
  std::vector<LevelInterval> ivs;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) throw ConfigError("intervals are [start, length] pairs");
    ivs.push_back({p[0].get<int>(), p[1].get<int>()});
  }
  try {
    return LevelSet(ivs);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

inline AdmissibleTree tree_from_json_unchecked(const json& j) {
  const int trunks = field<int>(j, "trunks");
  const LevelSet S = j.contains("S") ? level_set_from_json(j.at("S")) : LevelSet{};
  std::vector<AdmissibleTree::Vertex> vs;
  VertexId prev_first = 0;
  const auto& levels = j.at("levels");
  for (std::size_t n = 0; n < levels.size(); ++n) {
    const VertexId first = static_cast<VertexId>(vs.size());
    const auto parents = field<std::vector<std::int64_t>>(levels[n], "parents");
    for (std::size_t i = 0; i < parents.size(); ++i) {
      const bool trunk = n == 0 || static_cast<int>(i) < trunks;
      const VertexId parent = n == 0 ? kNoVertex : prev_first + static_cast<VertexId>(parents[i]);
      vs.push_back({static_cast<int>(n), parent, trunk ? (n == 0 ? 0 : static_cast<int>(i)) : -1, 0});
    }
    prev_first = first;
  }
  for (const auto& v : vs)
    if (v.parent != kNoVertex) ++vs[static_cast<std::size_t>(v.parent)].children;
  try {
    return AdmissibleTree::from_vertices(std::move(vs), trunks, S);
  } catch (const Error& e) {
    throw ConfigError(std::string("tree: ") + e.what());
  }
}

inline std::string tree_to_dot(const AdmissibleTree& t) {
  std::ostringstream os;
  os << "digraph tree {\n  node [shape=point];\n";
  for (VertexId x = 0; x < static_cast<VertexId>(t.size()); ++x) {
    const auto& v = t.vertex(x);
    if (v.on_trunk()) os << "  v" << x << " [color=red];\n";
    if (v.parent != kNoVertex) os << "  v" << v.parent << " -> v" << x << ";\n";
  }
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Catalog

inline json catalog_to_json(const PieceCatalog& c) {
  const auto& k = c.constants;
  json elements = json::array();
  for (const auto& e : c.elements) {
    json counts = json::array(), variants = json::object();
    for (const auto& [b, v] : e.variants) {
      counts.push_back(b);
      variants[std::to_string(b)] = json{{"profile", profile_json(v.profile)},
                                         {"boundary_diameter", rational_json(v.boundary_diameter)}};
    }
    elements.push_back(json{{"name", e.name}, {"boundary_counts", counts}, {"params", json{{"variants", variants}}}});
  }
  return json{{"l", k.l},
              {"h", rational_json(k.h)},
              {"H", rational_json(k.H)},
              {"u", rational_json(k.u)},
              {"U", rational_json(k.U)},
              {"t0", c.t0},
              {"R", profile_json(c.R)},
              {"K", profile_json(c.K)},
              {"J", profile_json(c.J)},
              {"HS", profile_json(c.HS)},
              {"elements", elements}};
}

/// Either {"standard": {...}} or the full schema. An element's params may give one "profile"
/// and "boundary_diameter" for every boundary count, with per-count "variants" overriding it.
inline PieceCatalog catalog_from_json_unchecked(const json& j) {
  if (!j.is_object()) throw ConfigError("catalog must be an object");
  if (j.contains("standard")) {
    const auto& s = j.at("standard");
    return PieceCatalog::standard(s.value("l", 2), s.value("max_boundary", 4), s.value("elements", 1));
  }
  PieceCatalog c;
  c.constants.l = field<int>(j, "l");
  c.constants.h = rational_from(j.at("h"));
  c.constants.H = rational_from(j.at("H"));
  c.constants.u = rational_from(j.at("u"));
  c.t0 = j.value("t0", 1);
  c.R = profile_from(j.at("R"));
  c.K = profile_from(j.at("K"));
  c.J = profile_from(j.at("J"));
  c.HS = profile_from(j.at("HS"));
  if (!j.contains("elements") || !j.at("elements").is_array()) throw ConfigError("catalog needs an 'elements' array");
  for (const auto& e : j.at("elements")) {
    CatalogElement el;
    el.name = field<std::string>(e, "name");
    const json params = e.value("params", json::object());
    for (int b : field<std::vector<int>>(e, "boundary_counts")) {
      ElementVariant v;
      const auto key = std::to_string(b);
      const json* src = &params;
      if (params.contains("variants") && params.at("variants").contains(key)) src = &params.at("variants").at(key);
      if (!src->contains("profile")) throw ConfigError("element '" + el.name + "' has no profile for " + key);
      v.profile = profile_from(src->at("profile"));
      v.boundary_diameter = src->contains("boundary_diameter") ? rational_from(src->at("boundary_diameter")) : Rational(1);
      el.variants[b] = std::move(v);
    }
    c.elements.push_back(std::move(el));
  }
  c.constants.U = j.contains("U") ? rational_from(j.at("U")) : c.max_element_volume();
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("catalog: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Plans

inline json piece_json(const PieceParams& p) {
  json comps = json::array();
  for (const auto& c : p.component_profiles) comps.push_back(profile_json(c));
  return json{{"kind", kind_name(p.kind)},   {"height_units", p.height_units}, {"index", p.index},
              {"diameter", rational_json(p.diameter)}, {"components", comps}};
}

inline PieceParams piece_from_json_unchecked(const json& j) {
  std::vector<Profile> parts;
  for (const auto& c : j.at("components")) parts.push_back(profile_from(c));
  return PieceParams::multi(parse_kind(field<std::string>(j, "kind")), std::move(parts), field<int>(j, "height_units"),
                            field<int>(j, "index"), rational_from(j.at("diameter")));
}

inline json plan_to_json(const AssemblyPlan& plan) {
  json params = json::array();
  for (const auto& p : plan.params) params.push_back(piece_json(p));
  json placements = json::object();
  for (const auto& pl : plan.placements)
    placements[std::to_string(pl.vertex)] = json{{"param", pl.param},   {"level", pl.level},
                                                 {"offset", pl.offset}, {"parent", pl.parent},
                                                 {"parent_component", pl.parent_component}, {"on_trunk", pl.on_trunk}};
  json S = json::array();
  for (const auto& iv : plan.S.intervals()) S.push_back(json::array({iv.start, iv.length}));
  return json{{"l", plan.l},        {"horizon", plan.horizon},  {"trunks", plan.trunks}, {"mode", mode_name(plan.mode)},
              {"S", S},             {"params", params},         {"placements", placements}};
}

/// Placements are restored in the order they are keyed (the order plan_to_json wrote them).
inline AssemblyPlan plan_from_json_unchecked(const json& j) {
  AssemblyPlan plan;
  plan.l = field<int>(j, "l");
  plan.horizon = field<int>(j, "horizon");
  plan.trunks = field<int>(j, "trunks");
  const auto mode = field<std::string>(j, "mode");
  plan.mode = mode == "linear" ? SelectionMode::Linear : mode == "custom" ? SelectionMode::Custom : SelectionMode::Factorial;
  plan.S = level_set_from_json(j.at("S"));
  for (const auto& p : j.at("params")) plan.params.push_back(piece_from_json_unchecked(p));
  for (const auto& [key, pl] : j.at("placements").items())
    plan.placements.push_back({field<int>(pl, "param"), field<int>(pl, "level"), field<std::int64_t>(pl, "offset"),
                               static_cast<VertexId>(std::stoll(key)), field<int>(pl, "parent"),
                               field<int>(pl, "parent_component"), field<bool>(pl, "on_trunk")});
  return plan;
}

// ---------------------------------------------------------------------------
// Checked entry points: malformed documents surface as ConfigError.

template <class F>
auto config_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

inline RootedTreeDescription description_from_json(const json& j) {
  return config_guard("description", [&] { return description_from_json_unchecked(j); });
}
inline AdmissibleTree tree_from_json(const json& j) {
  return config_guard("tree", [&] { return tree_from_json_unchecked(j); });
}
inline PieceCatalog catalog_from_json(const json& j) {
  return config_guard("catalog", [&] { return catalog_from_json_unchecked(j); });
}
inline AssemblyPlan plan_from_json(const json& j) {
  return config_guard("plan", [&] { return plan_from_json_unchecked(j); });
}

// ---------------------------------------------------------------------------
// CSV and DOT

inline std::string z_csv(const DiscreteGrowth& z) {
  std::ostringstream os;
  os << "n,z,z_decimal\n";
  for (int n = 0; n <= z.horizon(); ++n) os << n << ',' << to_string(z(n)) << ',' << decimal(z(n)) << '\n';
  return os.str();
}

inline std::string level_counts_csv(const AdmissibleTree& t, const GrowthFunction& w) {
  std::ostringstream os;
  os << "n,count,increment\n";
  for (int n = 0; n <= t.horizon(); ++n) os << n << ',' << t.level_count(n) << ',' << w.increment(n) << '\n';
  return os.str();
}

inline std::string edges_csv(const MetricGraph& g) {
  std::ostringstream os;
  os << "a,b,length,length_decimal\n";
  for (const auto& e : g.edges()) os << e.a << ',' << e.b << ',' << to_string(e.length) << ',' << decimal(e.length) << '\n';
  return os.str();
}

inline std::string graph_dot(const MetricGraph& g) {
  std::ostringstream os;
  os << "graph gadget {\n  node [shape=point];\n";
  for (NodeId v = 0; v < static_cast<NodeId>(g.node_count()); ++v)
    if (g.marked(v)) os << "  n" << v << " [color=red];\n";
  for (const auto& e : g.edges()) os << "  n" << e.a << " -- n" << e.b << " [label=\"" << to_string(e.length) << "\"];\n";
  os << "}\n";
  return os.str();
}

inline std::string balls_csv(const MetricGraph& g, int max_radius) {
  const BallTable balls(g);
  std::ostringstream os;
  os << "r,vol,vol_decimal\n";
  for (int r = 0; r <= max_radius; ++r) {
    const Rational v = balls.volume(r);
    os << r << ',' << to_string(v) << ',' << decimal(v) << '\n';
  }
  return os.str();
}

inline std::string warp_csv(const WarpProfile& w) {
  std::ostringstream os;
  os << "t,f,f2_over_f\n";
  for (const auto& s : w.samples) os << decimal(s.t) << ',' << decimal(s.f) << ',' << decimal(s.ratio) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Reports

inline json bgd_json(const BgdReport& r) {
  return json{{"is_bgd", r.is_bgd},
              {"minimal_L", r.minimal_L ? integer_json(*r.minimal_L) : json(nullptr)},
              {"failing_index", r.failing_index ? json(*r.failing_index) : json(nullptr)}};
}

inline json certificate_json(const GrowthCertificate& c) {
  auto witnesses = [](const std::vector<InequalityWitness>& ws) {
    json a = json::array();
    for (const auto& w : ws) a.push_back(json{{"n", w.n}, {"lhs", rational_json(w.lhs)}, {"rhs", rational_json(w.rhs)}});
    return a;
  };
  return json{{"found", c.found()},
              {"A", c.A ? integer_json(*c.A) : json(nullptr)},
              {"horizon", c.horizon},
              {"forward", witnesses(c.forward)},
              {"backward", witnesses(c.backward)}};
}

inline json normalize_json(const NormalizeResult& r) {
  return json{{"dilation", r.dilation},
              {"lambda", rational_json(r.lambda)},
              {"lambda_decimal", decimal(r.lambda)},
              {"alpha", integer_json(r.alpha)},
              {"certificate", certificate_json(r.cert)},
              {"w", growth_to_json(r.w)}};
}

inline json density_json(const DensityReport& d) {
  json ratios = json::array();
  for (const auto& [n, q] : d.ratios) ratios.push_back(json{{"n", n}, {"ratio", rational_json(q)}});
  return json{{"ratios", ratios}, {"minimum", rational_json(d.minimum)}, {"passes", d.passes}};
}

inline json band_json(const std::vector<BandViolation>& v) {
  json a = json::array();
  for (const auto& x : v)
    a.push_back(json{{"n", x.n}, {"level", x.level}, {"step", rational_json(x.step)}, {"bound", rational_json(x.bound)},
                     {"side", x.lower ? "lower" : "upper"}});
  return json{{"violations", a}, {"passes", v.empty()}};
}

inline json sandwich_json(const std::vector<SandwichViolation>& v) {
  json a = json::array();
  for (const auto& x : v)
    a.push_back(json{{"n", x.n}, {"lower", rational_json(x.lower)}, {"ball", rational_json(x.ball)},
                     {"upper", rational_json(x.upper)}});
  return json{{"violations", a}, {"passes", v.empty()}};
}

inline json distance_json(const std::vector<DistanceViolation>& v) {
  json a = json::array();
  for (const auto& x : v)
    a.push_back(json{{"node", x.node}, {"r", x.r}, {"distance", rational_json(x.distance)},
                     {"side", x.too_far ? "above 3r" : "below r/3"}});
  return json{{"violations", a}, {"passes", v.empty()}};
}

inline json doubling_scan_json(const DoublingScan& s, const Rational& A) {
  json a = json::array();
  for (const auto& x : s.violations)
    a.push_back(json{{"center", x.center}, {"r", rational_json(x.r)}, {"ratio", rational_json(x.ratio)}});
  return json{{"A", rational_json(A)},
              {"origin_only", s.origin_only},
              {"diameter", rational_json(s.diameter)},
              {"max_ratio", rational_json(s.max_ratio)},
              {"max_ratio_decimal", decimal(s.max_ratio)},
              {"argmax_center", s.argmax_center},
              {"argmax_r", rational_json(s.argmax_r)},
              {"violations", a},
              {"passes", s.violations.empty()}};
}

inline json theta_json(const ThetaResult& t) {
  return json{{"branch1", t.branch1}, {"branch2", t.branch2}, {"theta_sup", t.theta_sup}, {"theta", t.theta}};
}

inline json rca_json(const RcaReport& r) {
  json v = json::array(), w = json::array();
  for (const auto& x : r.violations)
    v.push_back(json{{"s", x.s}, {"vertex", x.vertex}, {"trunk", x.trunk}, {"departure", x.departure}, {"bound", x.bound}});
  for (const auto& x : r.witnesses)
    w.push_back(json{{"s", x.s}, {"ball", integer_json(x.ball)}, {"full_branch", integer_json(x.full_branch)}});
  return json{{"s_first", r.s_first},          {"s_last", r.s_last}, {"violations", v}, {"witnesses", w},
              {"margin_failures", r.margin_failures}, {"passes", r.passes()}};
}

inline json rce_json(const RceReport& r) {
  json ends = json::array();
  for (const auto& e : r.per_end) ends.push_back(rca_json(e));
  return json{{"ends", ends}, {"passes", r.passes()}};
}

inline json bounded_case_json(const BoundedCaseReport& r) {
  json rows = json::array();
  for (const auto& x : r.rows)
    rows.push_back(json{{"s", x.s}, {"mu", x.mu}, {"log_v", x.log_v}, {"log_rhs", x.log_rhs},
                        {"contradiction", x.contradiction}});
  return json{{"rows", rows}, {"holds_from", r.holds_from ? json(*r.holds_from) : json(nullptr)}};
}

inline json doubling_bound_json(const DoublingBoundReport& r) {
  json rows = json::array();
  for (const auto& x : r.rows)
    rows.push_back(json{{"n", x.n},
                        {"increment", integer_json(x.increment)},
                        {"components", x.components ? json(*x.components) : json(nullptr)},
                        {"lower_ok", x.lower_ok ? json(*x.lower_ok) : json(nullptr)},
                        {"upper_ok", x.upper_ok},
                        {"C_n", integer_json(x.C_n)}});
  return json{{"rows", rows},
              {"first_upper_violation", r.first_upper_violation ? json(*r.first_upper_violation) : json(nullptr)},
              {"C", integer_json(r.C)},
              {"C_trend_unbounded", r.C_trend_unbounded}};
}

// ---------------------------------------------------------------------------
// Files

/// Writes through a sibling temporary and renames, so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace volgrowth
