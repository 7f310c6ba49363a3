// Command-line front end. Every subcommand reads the same JSON run config, writes its
// artifacts under --out once at the end, and exits 0 (checks pass), 1 (a check failed or
// the computation could not finish) or 2 (bad config).

#include "volgrowth/volgrowth.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"

namespace fs = std::filesystem;
using namespace volgrowth;

namespace {

const std::set<std::string> kAllChecks{"bgd",      "certify", "band", "sandwich", "distance",
                                       "density",  "rca",     "rce",  "doubling", "warp"};

struct Flags {
  std::string config, out = "out", checks, variant;
  std::optional<int> horizon;
  std::optional<double> theta_margin;
};

struct RunConfig {
  fs::path base;
  json raw;
  GrowthFunction growth;
  bool normalize = true;
  RootedTreeDescription ends;
  std::optional<int> degree_bound;
  PieceCatalog catalog;
  int trunks = 1;
  int horizon = 0;
  SelectionConfig selection;
  std::set<std::string> checks;
  std::string graph = "explicit";
  std::vector<ExponentVariant> variants{ExponentVariant::SmallL, ExponentVariant::BigL};
  double theta_margin = kDefaultThetaMargin;
  Integer search_cap = kDefaultSearchCap;
};

// A section is either inline JSON or a path relative to the config file.
json section(const RunConfig& rc, const char* key) {
  if (!rc.raw.contains(key)) throw ConfigError(std::string("config has no '") + key + "'");
  const json& j = rc.raw.at(key);
  if (!j.is_string()) return j;
  const fs::path p = rc.base / j.get<std::string>();
  if (!fs::exists(p)) throw ConfigError(std::string(key) + " file not found: " + p.string());
  return read_json(p);
}

SelectionConfig selection_from(const json& j) {
  SelectionConfig s;
  const auto mode = j.value("mode", std::string("factorial"));
  if (mode == "factorial")
    s.mode = SelectionMode::Factorial;
  else if (mode == "linear")
    s.mode = SelectionMode::Linear;
  else if (mode == "custom")
    s.mode = SelectionMode::Custom;
  else
    throw ConfigError("unknown selection mode '" + mode + "'");
  s.Kgap = j.value("Kgap", s.Kgap);
  s.base = j.value("base", s.base);
  s.C1 = j.value("C1", s.C1);
  s.C2 = j.value("C2", s.C2);
  if (j.contains("custom")) s.custom = j.at("custom").get<std::vector<int>>();
  if (j.contains("count")) s.count = j.at("count").get<int>();
  s.window = j.value("window", s.window);
  if (j.contains("min_start")) s.min_start = j.at("min_start").get<int>();
  return s;
}

std::set<std::string> parse_checks(const std::string& list) {
  std::set<std::string> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    if (item == "all") return kAllChecks;
    if (!kAllChecks.count(item)) throw ConfigError("unknown check '" + item + "'");
    out.insert(item);
  }
  return out;
}

RunConfig load_config(const Flags& f) {
  RunConfig rc;
  if (!fs::exists(f.config)) throw ConfigError("config not found: " + f.config);
  rc.base = fs::path(f.config).parent_path();
  rc.raw = read_json(f.config);
  try {
    rc.growth = growth_from_json(section(rc, "growth"));
    rc.normalize = rc.raw.value("normalize", true);
    rc.ends = rc.raw.contains("ends") ? description_from_json(section(rc, "ends")) : ray_tree(1);
    if (rc.raw.contains("degree_bound")) rc.degree_bound = rc.raw.at("degree_bound").get<int>();
    rc.catalog = catalog_from_json(section(rc, "catalog"));
    rc.trunks = rc.raw.value("trunks", 1);
    rc.horizon = f.horizon.value_or(rc.raw.value("horizon", 0));
    if (rc.horizon <= 0) throw ConfigError("horizon must be positive");
    if (rc.raw.contains("selection")) rc.selection = selection_from(rc.raw.at("selection"));
    rc.checks = f.checks.empty() ? (rc.raw.contains("checks") ? parse_checks([&] {
      std::string s;
      for (const auto& c : rc.raw.at("checks")) s += c.get<std::string>() + ",";
      return s;
    }())
                                                               : kAllChecks)
                                 : parse_checks(f.checks);
    rc.graph = rc.raw.value("graph", std::string("explicit"));
    if (rc.graph != "explicit" && rc.graph != "quotient" && rc.graph != "none")
      throw ConfigError("graph must be explicit, quotient or none");
    const auto variant = !f.variant.empty() ? f.variant : rc.raw.value("exponent_variant", std::string("both"));
    if (variant == "l")
      rc.variants = {ExponentVariant::SmallL};
    else if (variant == "L")
      rc.variants = {ExponentVariant::BigL};
    else if (variant != "both")
      throw ConfigError("exponent variant must be l or L");
    rc.theta_margin = f.theta_margin.value_or(rc.raw.value("theta_margin", kDefaultThetaMargin));
    if (rc.theta_margin < 0 || rc.theta_margin >= 1) throw ConfigError("theta margin must lie in [0, 1)");
    if (rc.raw.contains("search_cap")) rc.search_cap = integer_from(rc.raw.at("search_cap"));
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
  return rc;
}

// Collected artifacts, flushed atomically once the run is over.
struct Outputs {
  std::map<std::string, std::string> files;
  bool ok = true;
  void put(const std::string& name, const json& j) { files[name] = j.dump(2) + "\n"; }
  void put(const std::string& name, std::string text) { files[name] = std::move(text); }
  void verdict(const std::string& what, bool pass) {
    if (!pass) std::cerr << "check failed: " << what << "\n";
    ok = ok && pass;
  }
  void flush(const fs::path& dir) const {
    for (const auto& [name, content] : files) write_atomic(dir / name, content);
  }
};

PipelineConfig pipeline_config(const RunConfig& rc) {
  PipelineConfig pc;
  pc.v = rc.growth;
  pc.normalize = rc.normalize;
  pc.normalize_options.A_max = rc.search_cap;
  pc.ends_tree = rc.ends;
  pc.degree_bound = rc.degree_bound;
  pc.catalog = rc.catalog;
  pc.trunks = rc.trunks;
  pc.selection = rc.selection;
  pc.horizon = rc.horizon;
  return pc;
}

// z read off a radial quotient: the mass of every node at unit radius <= n.
DiscreteGrowth quotient_growth(const MetricGraph& g, int l, int horizon) {
  DiscreteGrowth z;
  z.l = l;
  z.z.assign(static_cast<std::size_t>(l * horizon) + 1, Rational(0));
  for (NodeId v = 0; v < static_cast<NodeId>(g.node_count()); ++v) {
    const auto r = g.r_value(v);
    if (r < static_cast<std::int64_t>(z.z.size())) z.z[static_cast<std::size_t>(r)] += g.mass(v);
  }
  for (std::size_t n = 1; n < z.z.size(); ++n) z.z[n] += z.z[n - 1];
  return z;
}

struct Built {
  PipelineResult r;
  std::optional<MetricGraph> quotient;  // set when the tree is never materialized
  bool has_tree() const { return !quotient; }
};

// With "rca": {"enforce_threshold": true}, every n_j is pushed past the level where the
// departure inequality starts to hold for the normalized constants.
void apply_rca_threshold(const RunConfig& rc, PipelineConfig& pc) {
  const json j = rc.raw.value("rca", json::object());
  if (!j.value("enforce_threshold", false) || pc.selection.min_start) return;
  std::optional<NormalizeResult> nr;
  pipeline_w(pc, &nr);
  const double lambda = j.contains("lambda") ? j.at("lambda").get<double>() : nr ? to_double(nr->lambda) : 1.5;
  const double alpha = std::max(1.0, j.contains("alphaO") ? j.at("alphaO").get<double>()
                                                          : nr ? nr->alpha.convert_to<double>() : 1.0);
  const int t0 = j.value("t0", rc.catalog.t0);
  const double theta = j.contains("theta") ? j.at("theta").get<double>() : rca_theta(lambda, alpha, t0, rc.theta_margin).theta;
  pc.selection.min_start = static_cast<int>(std::ceil(rca_nj_threshold(lambda, alpha, theta, t0))) + 1;
}

Built build(const RunConfig& rc) {
  auto pc = pipeline_config(rc);
  apply_rca_threshold(rc, pc);
  Built b;
  if (rc.graph != "quotient") {
    b.r = run_pipeline(pc);
    return b;
  }
  auto& r = b.r;
  r.w = pipeline_w(pc, &r.normalized);
  if (r.w.horizon() < rc.horizon) throw HorizonTooSmall("w is shorter than the pipeline horizon");
  r.w = r.w.truncated(rc.horizon);
  r.layout = layout_from_tree(pc.ends_tree, pc.degree_bound);
  r.schedule = synthesize_params(pc.catalog, r.layout, pc.trunks);
  r.S = choose_nj(r.schedule, r.w, pc.selection, rc.horizon);
  b.quotient = build_radial_quotient(r.w, r.S, r.schedule, pc.catalog, r.layout, rc.horizon);
  r.z = quotient_growth(*b.quotient, pc.catalog.constants.l, rc.horizon);
  return b;
}

json level_set_json(const LevelSet& S) {
  json a = json::array();
  for (const auto& iv : S.intervals()) a.push_back(json::array({iv.start, iv.length}));
  return a;
}

// --- individual steps --------------------------------------------------------

void do_bgd(const RunConfig& rc, Outputs& o) {
  const auto rep = check_bgd(rc.growth, rc.search_cap);
  o.put("bgd.json", bgd_json(rep));
  o.verdict("bgd", rep.is_bgd);
}

void do_normalize(const RunConfig& rc, Outputs& o) {
  NormalizeOptions opt;
  opt.A_max = rc.search_cap;
  const auto nr = normalize(rc.growth, opt);
  o.put("normalize.json", normalize_json(nr));
  o.put("w.json", growth_to_json(nr.w));
  o.verdict("normalize certificate", nr.cert.found());
}

void put_tree(const PipelineResult& r, Outputs& o) {
  o.put("tree.json", tree_to_json(r.tree));
  o.put("tree.dot", tree_to_dot(r.tree));
  o.put("levels.csv", level_counts_csv(r.tree, r.w));
  bool exact = true;
  for (int n = 0; n <= r.tree.horizon(); ++n) exact = exact && Integer(r.tree.level_count(n)) == r.w.increment(n);
  o.verdict("tree level counts", exact);
}

void put_selection(const RunConfig& rc, const PipelineResult& r, Outputs& o) {
  o.put("S.json", json{{"mode", mode_name(rc.selection.mode)}, {"intervals", level_set_json(r.S)}});
  if (rc.checks.count("density")) {
    std::vector<int> cps;
    for (int n = 8; n <= rc.horizon; n *= 2) cps.push_back(n);
    if (cps.empty() || cps.back() != rc.horizon) cps.push_back(rc.horizon);
    const auto rep = vanishing_density_check(r.S, cps);
    o.put("density.json", density_json(rep));
    o.verdict("density", rep.passes);
  }
}

void put_band(const PipelineResult& r, Outputs& o) {
  const auto v = increment_band_check(r.z, r.w, r.schedule, r.S);
  o.put("band.json", band_json(v));
  o.verdict("band", v.empty());
}

void put_certificate(const RunConfig& rc, const PipelineResult& r, Outputs& o) {
  std::vector<Rational> wl(r.w.values().begin(), r.w.values().end());
  const auto cert = growth_equivalent<Rational>(r.z.z, wl, rc.search_cap);
  const auto bgd = check_bgd(r.w, rc.search_cap);
  json bounds = json::array();
  bool ok = cert.found() && bgd.minimal_L.has_value();
  if (ok)
    for (auto var : rc.variants) {
      const auto& c = rc.catalog.constants;
      const auto b = growth_constant_bound(*bgd.minimal_L, c.l, c.u, c.h, c.H, var);
      const bool admits = b.admits(Rational(*cert.A));
      bounds.push_back(json{{"variant", var == ExponentVariant::SmallL ? "l" : "L"},
                            {"factor", rational_json(b.factor)},
                            {"L", integer_json(b.L)},
                            {"root", b.root},
                            {"bound_decimal", decimal(b.approx())},
                            {"admits", admits}});
      ok = ok && admits;
    }
  o.put("certificate.json", json{{"z_vs_w", certificate_json(cert)}, {"bgd", bgd_json(bgd)}, {"bounds", bounds}});
  o.verdict("certify", ok);
}

std::optional<MetricGraph> make_graph(const RunConfig& rc, const Built& b) {
  if (b.quotient) return b.quotient;
  if (rc.graph == "none") return std::nullopt;
  return build_gadget_graph(b.r.plan);
}

void put_graph(const RunConfig& rc, const PipelineResult& r, const MetricGraph& g, Outputs& o) {
  o.put("edges.csv", edges_csv(g));
  o.put("graph.dot", graph_dot(g));
  o.put("balls.csv", balls_csv(g, rc.horizon * rc.catalog.constants.l));
  if (rc.checks.count("sandwich")) {
    const auto v = check_sandwich(g, r.z);
    o.put("sandwich.json", sandwich_json(v));
    o.verdict("sandwich", v.empty());
  }
  if (rc.checks.count("distance")) {
    const auto v = check_distance_bounds(g, std::nullopt, rc.catalog.constants.l);
    o.put("distance.json", distance_json(v));
    o.verdict("distance", v.empty());
  }
}

RcaConfig rca_config(const RunConfig& rc, const PipelineResult& r) {
  const json j = rc.raw.value("rca", json::object());
  RcaConfig cfg;
  cfg.t0 = j.value("t0", rc.catalog.t0);
  cfg.l = rc.catalog.constants.l;
  cfg.lambda = j.contains("lambda") ? j.at("lambda").get<double>()
                                    : r.normalized ? to_double(r.normalized->lambda) : 1.5;
  cfg.alphaO = j.contains("alphaO") ? j.at("alphaO").get<double>()
                                    : r.normalized ? r.normalized->alpha.convert_to<double>() : 1.0;
  cfg.alphaO = std::max(cfg.alphaO, 1.0);
  if (j.contains("theta"))
    cfg.theta = j.at("theta").get<double>();
  else
    cfg.theta = rca_theta(cfg.lambda, cfg.alphaO, cfg.t0, rc.theta_margin).theta;
  if (rc.selection.mode == SelectionMode::Linear) {
    cfg.C1 = rc.selection.C1;
    cfg.C2 = rc.selection.C2;
  }
  if (j.contains("s_min")) cfg.s_min = j.at("s_min").get<int>();
  return cfg;
}

void put_rca(const RunConfig& rc, const PipelineResult& r, Outputs& o, bool each_end) {
  const auto cfg = rca_config(rc, r);
  json head{{"theta", cfg.theta}, {"lambda", cfg.lambda}, {"alphaO", cfg.alphaO}, {"t0", cfg.t0}};
  if (!rc.raw.value("rca", json::object()).contains("theta"))
    head["theta_detail"] = theta_json(rca_theta(cfg.lambda, cfg.alphaO, cfg.t0, rc.theta_margin));
  if (cfg.C2) {
    const int lo = detail::rca_first_level(cfg);
    head["bounded_case"] = bounded_case_json(bounded_case_check(r.w, cfg.theta, cfg.t0, *cfg.C2, lo, rc.horizon));
  }
  if (each_end) {
    const auto rep = verify_rce(r.tree, cfg, rc.horizon);
    head["report"] = rce_json(rep);
    o.put("rce.json", head);
    o.verdict("rce", rep.passes());
  } else {
    const auto rep = verify_rca(r.tree, cfg, rc.horizon);
    head["report"] = rca_json(rep);
    o.put("rca.json", head);
    o.verdict("rca", rep.passes());
  }
}

void put_doubling(const RunConfig& rc, const PipelineResult& r, const MetricGraph* g, Outputs& o) {
  const json j = rc.raw.value("doubling", json::object());
  DoublingConfig dc;
  dc.l = rc.catalog.constants.l;
  dc.K = j.contains("K") ? rational_from(j.at("K")) : [&] {
    const auto rep = check_doubling(r.w);
    return rep.minimal_K ? Rational(*rep.minimal_K) : Rational(1);
  }();
  if (j.contains("alpha_poly")) dc.alpha_poly = rational_from(j.at("alpha_poly"));
  if (j.contains("A")) dc.A = rational_from(j.at("A"));
  if (j.contains("B")) dc.B = rational_from(j.at("B"));
  dc.r0 = j.contains("r0") ? rational_from(j.at("r0")) : Rational(3 * dc.l);
  json out;
  bool ok = true;
  if (g) {
    const Rational A = j.contains("A") ? dc.A : Rational(8);
    const auto scan = pointwise_doubling(*g, dc.r0, A);
    out["pointwise"] = doubling_scan_json(scan, A);
    ok = scan.violations.empty();
  }
  const MetricGraph* counted = g && !g->is_quotient() ? g : nullptr;
  const auto rep = doubling_bound_check(r.w, dc, counted, rc.horizon);
  out["bound"] = doubling_bound_json(rep);
  const bool expect_linear = j.value("expect_linear", false);
  if (expect_linear) ok = ok && !rep.C_trend_unbounded;
  o.put("doubling.json", out);
  o.verdict("doubling", ok);
}

void put_warp(const RunConfig& rc, Outputs& o) {
  const json j = rc.raw.value("warp", json::object());
  const auto lambdas = j.value("lambdas", std::vector<double>{1.5, 2, 10});
  json rows = json::array();
  bool ok = true;
  for (double lam : lambdas) {
    const auto th = min_thickening(lam, 1.0);
    const auto prof = warp_function(lam, th.T, 2000);
    std::ostringstream name;
    name << "warp_" << decimal(lam) << ".csv";
    o.put(name.str(), warp_csv(prof));
    const bool pass = prof.max_ratio <= 1 + 1e-6;
    rows.push_back(json{{"lambda", lam}, {"T", th.T}, {"max_ratio", prof.max_ratio}, {"passes", pass}});
    ok = ok && pass;
  }
  o.put("warp.json", json{{"profiles", rows}});
  o.verdict("warp", ok);
}

// --- subcommands -------------------------------------------------------------

using Step = std::function<void(const RunConfig&, Outputs&)>;

Step from_pipeline(std::function<void(const RunConfig&, const Built&, Outputs&)> f) {
  return [f](const RunConfig& rc, Outputs& o) {
    const auto b = build(rc);
    if (b.r.normalized) o.put("w.json", growth_to_json(b.r.w));
    f(rc, b, o);
  };
}

const PipelineResult& need_tree(const Built& b) {
  if (!b.has_tree()) throw ConfigError("this step needs the materialized tree; use graph explicit or none");
  return b.r;
}

void full_pipeline(const RunConfig& rc, Outputs& o) {
  const auto& c = rc.checks;
  if (c.count("bgd")) do_bgd(rc, o);
  const auto b = build(rc);
  const auto& r = b.r;
  o.put("w.json", growth_to_json(r.w));
  if (r.normalized) o.put("normalize.json", normalize_json(*r.normalized));
  if (b.has_tree()) {
    put_tree(r, o);
    o.put("plan.json", plan_to_json(r.plan));
  }
  put_selection(rc, r, o);
  o.put("z.csv", z_csv(r.z));
  if (c.count("band")) put_band(r, o);
  if (c.count("certify")) put_certificate(rc, r, o);
  const auto g = make_graph(rc, b);
  if (g) put_graph(rc, r, *g, o);
  if (b.has_tree() && c.count("rca") && rc.trunks == 1) put_rca(rc, r, o, false);
  if (b.has_tree() && c.count("rce")) put_rca(rc, r, o, true);
  if (c.count("doubling")) put_doubling(rc, r, g ? &*g : nullptr, o);
  if (c.count("warp")) put_warp(rc, o);
}

std::map<std::string, Step> steps() {
  return {
      {"pipeline", full_pipeline},
      {"check-bgd", do_bgd},
      {"normalize", do_normalize},
      {"build-tree", from_pipeline([](auto&, auto& b, auto& o) { put_tree(need_tree(b), o); })},
      {"choose-nj", from_pipeline([](auto& rc, auto& b, auto& o) { put_selection(rc, b.r, o); })},
      {"assemble",
       from_pipeline([](auto&, auto& b, auto& o) {
         o.put("plan.json", plan_to_json(need_tree(b).plan));
         o.put("z.csv", z_csv(b.r.z));
       })},
      {"growth",
       from_pipeline([](auto&, auto& b, auto& o) {
         o.put("z.csv", z_csv(b.r.z));
         put_band(b.r, o);
       })},
      {"certify", from_pipeline([](auto& rc, auto& b, auto& o) { put_certificate(rc, b.r, o); })},
      {"simulate",
       from_pipeline([](auto& rc, auto& b, auto& o) {
         const auto g = make_graph(rc, b);
         if (!g) throw ConfigError("simulate needs graph explicit or quotient");
         put_graph(rc, b.r, *g, o);
       })},
      {"verify-rca", from_pipeline([](auto& rc, auto& b, auto& o) { put_rca(rc, need_tree(b), o, false); })},
      {"verify-rce", from_pipeline([](auto& rc, auto& b, auto& o) { put_rca(rc, need_tree(b), o, true); })},
      {"verify-doubling",
       from_pipeline([](auto& rc, auto& b, auto& o) {
         const auto g = make_graph(rc, b);
         put_doubling(rc, b.r, g ? &*g : nullptr, o);
       })},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"volume growth construction and verification"};
  app.require_subcommand(1);
  Flags flags;
  std::string chosen;
  for (const auto& [name, step] : steps()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", flags.config, "run config JSON")->required();
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--horizon", flags.horizon, "tree levels")->check(CLI::PositiveNumber);
    sub->add_option("--check", flags.checks, "comma-separated checks, or all");
    sub->add_option("--theta-margin", flags.theta_margin, "relative safety margin below the theta supremum");
    sub->add_option("--exponent-variant", flags.variant, "growth-constant exponent")->check(CLI::IsMember({"l", "L"}));
    sub->callback([&chosen, n = name] { chosen = n; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  RunConfig rc;
  try {
    rc = load_config(flags);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  Outputs out;
  int status = 0;
  try {
    steps().at(chosen)(rc, out);
    status = out.ok ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    status = 1;
  }
  try {
    out.flush(flags.out);
  } catch (const std::exception& e) {
    std::cerr << "cannot write outputs: " << e.what() << "\n";
    return 1;
  }
  return status;
}
