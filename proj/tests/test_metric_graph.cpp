#include "oracles.hpp"
#include "volgrowth/pipeline.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace volgrowth;

namespace {

AssemblyPlan single_cap(int extent) {
  AssemblyPlan plan;
  plan.l = 2;
  plan.horizon = 0;
  plan.params.push_back(PieceParams::single(PieceKind::HS, Profile(static_cast<std::size_t>(extent), Rational(1))));
  plan.placements.push_back({0, 0, 0, 0, -1, 0, true});
  return plan;
}

// Trunk of R pieces on levels 1..4 with a leaf cap beside each, root cap at level 0.
PipelineResult comb_plan() {
  PipelineConfig cfg;
  cfg.v = GrowthFunction::polynomial({1, 2}, 4);
  cfg.normalize = false;
  cfg.ends_tree = ray_tree(4);
  cfg.selection.mode = SelectionMode::Custom;
  cfg.horizon = 4;
  return run_pipeline(cfg);
}

PipelineResult quadratic_plan(int horizon) {
  PipelineConfig cfg;
  cfg.v = GrowthFunction::polynomial({1, 0, 1}, horizon);
  cfg.ends_tree = ray_tree(horizon);
  cfg.horizon = horizon;
  return run_pipeline(cfg);
}

GrowthFunction binary_growth(int horizon) {
  std::vector<Integer> v;
  for (int n = 0; n <= horizon; ++n) v.push_back(ipow(Integer(2), static_cast<unsigned>(n + 1)) - 1);
  return GrowthFunction::table(v);
}

// Copy of g with every edge from `node` into another piece stretched by `factor`.
MetricGraph copy_with_stretched_links(const MetricGraph& g, NodeId node, const Rational& factor) {
  MetricGraph out;
  for (NodeId v = 0; v < static_cast<NodeId>(g.node_count()); ++v)
    out.add_node(g.weight(v), g.r_value(v), g.piece(v), g.marked(v), g.multiplicity(v));
  for (const auto& e : g.edges()) {
    const bool link = (e.a == node || e.b == node) && g.piece(e.a) != g.piece(e.b);
    out.add_edge(e.a, e.b, link ? e.length * factor : e.length);
  }
  out.set_origin(g.origin());
  return out;
}

}  // namespace

TEST(GadgetGraph, SingleCap) {
  auto plan = single_cap(5);
  auto g = build_gadget_graph(plan);
  EXPECT_EQ(g.node_count(), 6u);
  EXPECT_EQ(ball_volume(g, 0), 0);
  EXPECT_EQ(ball_volume(g, 100), 5);
  EXPECT_TRUE(check_distance_bounds(g).empty());
  EXPECT_TRUE(check_sandwich(g, discrete_growth(plan, 15)).empty());
}

TEST(GadgetGraph, CombCountsMatchTally) {
  auto r = comb_plan();
  auto g = build_gadget_graph(r.plan);
  std::size_t nodes = 0, edges = 0;
  for (std::size_t i = 0; i < r.plan.placements.size(); ++i) {
    const auto& p = r.plan.params_of(static_cast<int>(i));
    for (const auto& comp : p.component_profiles) {
      nodes += 1 + comp.size();
      edges += comp.size() + (i == 0 ? 0 : 2);
    }
  }
  EXPECT_EQ(g.node_count(), nodes);
  EXPECT_EQ(g.edge_count(), edges);
  const auto d = oracle::relax_distances(g, g.origin());
  EXPECT_EQ(ball_volume(g, 7), oracle::ball(g, d, 7));
  EXPECT_TRUE(check_sandwich(g, r.z).empty());
}

TEST(GadgetGraph, TwoTrunksGiveTwoRays) {
  PipelineConfig cfg;
  cfg.v = GrowthFunction::polynomial({1, 2}, 8);
  cfg.ends_tree = star_of_rays(2, 8);
  cfg.trunks = 2;
  cfg.selection.mode = SelectionMode::Linear;
  cfg.horizon = 8;
  auto r = run_pipeline(cfg);
  auto g = build_gadget_graph(r.plan);
  // the root cap joins both rays near the origin; further out they separate
  EXPECT_EQ(annulus_components(g, 1, 1000), 1);
  EXPECT_EQ(annulus_components(g, 4, 1000), 2);
  EXPECT_TRUE(check_distance_bounds(g).empty());
  EXPECT_TRUE(check_sandwich(g, r.z).empty());
}

TEST(GadgetGraph, DistancesMatchRelaxationOracle) {
  auto r = quadratic_plan(10);
  auto g = build_gadget_graph(r.plan);
  const auto d = oracle::relax_distances(g, g.origin());
  for (NodeId v = 0; v < static_cast<NodeId>(g.node_count()); ++v) ASSERT_EQ(g.distance_from_origin(v), *d[static_cast<std::size_t>(v)]);
  for (int rad = 0; rad <= 30; ++rad) EXPECT_EQ(ball_volume(g, rad), oracle::ball(g, d, rad));
  EXPECT_EQ(ball_volume(g, Rational(15, 2)), oracle::ball(g, d, Rational(15, 2)));
  // symmetry and triangle inequality on random triples
  std::mt19937 rng(3);
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(g.node_count()) - 1);
  for (int i = 0; i < 20; ++i) {
    const NodeId a = pick(rng), b = pick(rng), c = pick(rng);
    const auto da = g.distances_from(a), db = g.distances_from(b);
    EXPECT_EQ(da[static_cast<std::size_t>(b)], db[static_cast<std::size_t>(a)]);
    EXPECT_LE(da[static_cast<std::size_t>(c)], da[static_cast<std::size_t>(b)] + db[static_cast<std::size_t>(c)]);
  }
}

TEST(GadgetGraph, BallIsMonotoneAndReachesTotal) {
  auto g = build_gadget_graph(quadratic_plan(8).plan);
  const BallTable balls(g);
  Rational prev = -1;
  for (int twice = 0; twice <= 80; ++twice) {
    const Rational v = balls.volume(Rational(twice, 2));
    EXPECT_GE(v, prev);
    prev = v;
  }
  Rational total = 0;
  for (NodeId v = 0; v < static_cast<NodeId>(g.node_count()); ++v) total += g.mass(v);
  EXPECT_EQ(prev, total);
}

TEST(DistanceBounds, PipelineIsClean) {
  auto g = build_gadget_graph(quadratic_plan(30).plan);
  EXPECT_TRUE(check_distance_bounds(g).empty());
}

TEST(DistanceBounds, StretchedLinkIsFlagged) {
  auto r = quadratic_plan(12);
  auto g = build_gadget_graph(r.plan);
  // marked point of the level-3 trunk piece
  NodeId node = -1;
  for (NodeId v = 0; v < static_cast<NodeId>(g.node_count()); ++v)
    if (g.marked(v) && g.r_value(v) == 6 && r.plan.placements[static_cast<std::size_t>(g.piece(v))].on_trunk) node = v;
  ASSERT_GE(node, 0);
  EXPECT_TRUE(check_distance_bounds(g).empty());
  auto bad = copy_with_stretched_links(g, node, 10);
  auto v = check_distance_bounds(bad);
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(v.front().too_far);
}

TEST(Sandwich, PipelineIsClean) {
  auto r = quadratic_plan(30);
  auto g = build_gadget_graph(r.plan);
  EXPECT_TRUE(check_sandwich(g, r.z).empty());
}

TEST(Sandwich, ShrunkZViolatesUpperSide) {
  auto r = quadratic_plan(30);
  auto g = build_gadget_graph(r.plan);
  auto z = r.z;
  for (auto& x : z.z) x /= 10;
  auto v = check_sandwich(g, z);
  ASSERT_FALSE(v.empty());
  for (const auto& x : v) EXPECT_GT(x.ball, x.upper);
}

TEST(Annulus, MatchesFloodFill) {
  auto r = comb_plan();
  auto g = build_gadget_graph(r.plan);
  const auto d = oracle::relax_distances(g, g.origin());
  for (int a = 0; a <= 14; ++a)
    for (int b = a + 1; b <= 15; ++b) {
      if (a == 0) continue;
      EXPECT_EQ(annulus_components(g, a, b), oracle::band_components(g, d, a, b)) << a << " " << b;
    }
  EXPECT_EQ(annulus_components(g, 1000, 2000), 0);
  EXPECT_EQ(annulus_components(g, 0, 1000), 1);
}

TEST(Annulus, CombBandIsolatesLeafCaps) {
  // past the last trunk chain only the deepest nodes of the level-4 leaf caps remain
  auto r = comb_plan();
  auto g = build_gadget_graph(r.plan);
  const auto& dist = g.origin_distances();
  const std::int64_t deepest = *std::max_element(dist.begin(), dist.end());
  std::int64_t trunk_end = 0;
  for (NodeId v = 0; v < static_cast<NodeId>(g.node_count()); ++v)
    if (r.plan.placements[static_cast<std::size_t>(g.piece(v))].on_trunk) trunk_end = std::max(trunk_end, dist[static_cast<std::size_t>(v)]);
  ASSERT_LT(trunk_end, deepest);
  const auto leaves = r.tree.level_count(4) - 1;
  EXPECT_EQ(annulus_components(g, Rational(trunk_end, g.scale()), Rational(deepest, g.scale())), leaves);
}

TEST(PointwiseDoubling, UnitChain) {
  MetricGraph g;
  NodeId prev = g.add_node(1, 0, 0, true);
  for (int i = 1; i <= 40; ++i) {
    NodeId v = g.add_node(1, i, 0, false);
    g.add_edge(prev, v, 1);
    prev = v;
  }
  auto scan = pointwise_doubling(g, 1, 3);
  EXPECT_TRUE(scan.violations.empty());
  EXPECT_LE(scan.max_ratio, 2);
}

TEST(PointwiseDoubling, TwoEndedLinePasses) {
  PipelineConfig cfg;
  cfg.v = GrowthFunction::polynomial({1, 2}, 20);
  cfg.ends_tree = star_of_rays(2, 20);
  cfg.trunks = 2;
  cfg.selection.mode = SelectionMode::Linear;
  cfg.horizon = 20;
  auto g = build_gadget_graph(run_pipeline(cfg).plan);
  auto scan = pointwise_doubling(g, 6, 8);
  EXPECT_TRUE(scan.violations.empty()) << to_string(scan.max_ratio);
}

TEST(RadialQuotient, MatchesExplicitGraphAtOrigin) {
  const int H = 9;
  auto w = binary_growth(H);
  auto cat = PieceCatalog::standard();
  auto layout = layout_from_tree(ray_tree(H));
  auto s = synthesize_params(cat, layout);
  auto tree = build_tree(w, LevelSet{}, H);
  auto full = build_gadget_graph(assemble(tree, LevelSet{}, s, cat, layout));
  auto q = build_radial_quotient(w, LevelSet{}, s, cat, layout, H);
  EXPECT_LT(q.node_count(), full.node_count() / 10);
  const BallTable a(full), b(q);
  for (int twice = 0; twice <= 4 * H + 8; ++twice) EXPECT_EQ(a.volume(Rational(twice, 2)), b.volume(Rational(twice, 2)));
  EXPECT_THROW(annulus_components(q, 1, 2), UnsupportedOnQuotient);
}

TEST(RadialQuotient, BinaryGrowthBreaksDoubling) {
  const int H = 60;
  auto w = binary_growth(H);
  auto cat = PieceCatalog::standard();
  auto layout = layout_from_tree(ray_tree(H));
  auto q = build_radial_quotient(w, LevelSet{}, synthesize_params(cat, layout), cat, layout, H);
  auto scan = pointwise_doubling(q, 6, 1000000);
  ASSERT_FALSE(scan.violations.empty());
  EXPECT_TRUE(scan.origin_only);
  EXPECT_LE(scan.violations.front().r, 80);
}
