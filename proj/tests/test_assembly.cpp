#include "oracles.hpp"
#include "volgrowth/pipeline.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace volgrowth;

namespace {

ParamSchedule ray_schedule(int horizon = 40) {
  return synthesize_params(PieceCatalog::standard(), layout_from_tree(ray_tree(horizon)));
}

std::vector<int> starts(const LevelSet& S) {
  std::vector<int> out;
  for (const auto& iv : S.intervals()) out.push_back(iv.start);
  return out;
}

PipelineConfig quadratic_config(int horizon) {
  PipelineConfig cfg;
  cfg.v = GrowthFunction::polynomial({1, 0, 1}, horizon);
  cfg.ends_tree = ray_tree(horizon);
  cfg.horizon = horizon;
  return cfg;
}

}  // namespace

TEST(ChooseNj, FactorialStarts) {
  auto w = GrowthFunction::polynomial({1, 1, 1}, 20);
  SelectionConfig cfg;
  cfg.count = 3;
  auto S = choose_nj(ray_schedule(), w, cfg, 20);
  EXPECT_EQ(starts(S), (std::vector<int>{3, 5, 13}));
}

TEST(ChooseNj, LinearProgression) {
  auto w = GrowthFunction::polynomial({1, 2}, 20);  // bounded increments, constant R volume
  SelectionConfig cfg;
  cfg.mode = SelectionMode::Linear;
  cfg.C1 = 2;
  cfg.C2 = 4;
  auto S = choose_nj(ray_schedule(), w, cfg, 20);
  EXPECT_EQ(starts(S), (std::vector<int>{2, 6, 10, 14, 18}));
  for (const auto& iv : S.intervals()) EXPECT_EQ(iv.length, 1);
}

TEST(ChooseNj, FactorialNeedsDivergingIncrements) {
  auto v = GrowthFunction::polynomial({1, 1}, 30);
  EXPECT_THROW(choose_nj(ray_schedule(), v, SelectionConfig{}, 30), InfeasibleSelection);
}

TEST(ChooseNj, CountUnmetIsReported) {
  auto w = GrowthFunction::polynomial({1, 1, 1}, 20);
  SelectionConfig cfg;
  cfg.count = 4;  // fourth start is 4!*2+1 = 49
  EXPECT_THROW(choose_nj(ray_schedule(), w, cfg, 20), InfeasibleSelection);
}

TEST(Density, Examples) {
  EXPECT_EQ(vanishing_density_check(LevelSet{}, {5, 10}).minimum, 0);
  // factorial starts (t = 1): checkpoint n_j - 1 holds j intervals
  LevelSet S({{3, 1}, {5, 1}, {13, 1}, {49, 1}, {241, 1}});
  auto rep = vanishing_density_check(S, {4, 12, 48, 240});
  ASSERT_EQ(rep.ratios.size(), 4u);
  EXPECT_EQ(rep.ratios[3].second, Rational(4, 240));
  for (std::size_t i = 1; i < rep.ratios.size(); ++i) EXPECT_LT(rep.ratios[i].second, rep.ratios[i - 1].second);
  EXPECT_TRUE(rep.passes);
  auto all = vanishing_density_check(LevelSet({{1, 100}}), {50, 100});
  EXPECT_EQ(all.minimum, 1);
  EXPECT_FALSE(all.passes);
}

TEST(Assemble, CombGetsRAndHS) {
  auto w = GrowthFunction::polynomial({1, 2}, 6);
  auto cat = PieceCatalog::standard();
  auto layout = layout_from_tree(ray_tree(6));
  auto s = synthesize_params(cat, layout);
  auto tree = build_tree(w, LevelSet{}, 6);
  auto plan = assemble(tree, LevelSet{}, s, cat, layout);
  EXPECT_EQ(plan.count(PieceKind::R), 6u);
  EXPECT_EQ(plan.count(PieceKind::Q), 0u);
  EXPECT_EQ(plan.count(PieceKind::J), 0u);
  EXPECT_EQ(plan.count(PieceKind::K), 0u);
  EXPECT_EQ(plan.count(PieceKind::HS), tree.size() - 6);
  for (auto p : plan.piece_of_vertex) EXPECT_GE(p, 0);
}

TEST(Assemble, IntervalCarriesSingleQ) {
  auto w = GrowthFunction::polynomial({1, 1, 1}, 8);
  auto cat = PieceCatalog::standard();
  auto layout = layout_from_tree(ray_tree(8));
  auto s = synthesize_params(cat, layout);
  LevelSet S({{3, 2}});
  auto tree = build_tree(w, S, 8);
  auto plan = assemble(tree, S, s, cat, layout);
  ASSERT_EQ(plan.count(PieceKind::Q), 1u);
  const int q = plan.piece_of_vertex[static_cast<std::size_t>(tree.trunk_vertex(0, 3))];
  EXPECT_EQ(plan.piece_of_vertex[static_cast<std::size_t>(tree.trunk_vertex(0, 4))], q);
  EXPECT_EQ(plan.params_of(q).extent(), 4);
  // kind counts match vertex types
  std::size_t two = 0, one = 0, none = 0;
  for (VertexId x = 1; x < static_cast<VertexId>(tree.size()); ++x) {
    const auto& v = tree.vertex(x);
    if (v.on_trunk()) continue;
    (v.children == 2 ? two : v.children == 1 ? one : none)++;
  }
  EXPECT_EQ(plan.count(PieceKind::J), two);
  EXPECT_EQ(plan.count(PieceKind::K), one);
  EXPECT_EQ(plan.count(PieceKind::HS), none + 1);
  for (VertexId x = 0; x < static_cast<VertexId>(tree.size()); ++x)
    if (tree.capped(x) && !tree.vertex(x).on_trunk())
      EXPECT_EQ(plan.params_of(plan.piece_of_vertex[static_cast<std::size_t>(x)]).kind, PieceKind::HS);
}

TEST(Assemble, TwoEndedLineTilesBothTrunks) {
  PipelineConfig cfg;
  cfg.v = GrowthFunction::polynomial({1, 2}, 10);
  cfg.ends_tree = star_of_rays(2, 10);
  cfg.trunks = 2;
  cfg.selection.mode = SelectionMode::Linear;
  cfg.horizon = 10;
  auto r = run_pipeline(cfg);
  EXPECT_EQ(r.plan.count(PieceKind::J) + r.plan.count(PieceKind::K), 0u);
  for (int n = 1; n <= 10; ++n)
    for (int t = 0; t < 2; ++t) EXPECT_GE(r.plan.piece_of_vertex[static_cast<std::size_t>(r.tree.trunk_vertex(t, n))], 1);
}

TEST(DiscreteGrowth, SingleCap) {
  AssemblyPlan plan;
  plan.l = 3;
  plan.horizon = 3;
  plan.params.push_back(PieceParams::single(PieceKind::HS, Profile(5, Rational(1))));
  plan.placements.push_back({0, 0, 0, 0, -1, 0, true});
  auto z = discrete_growth(plan, 9);
  for (int n = 0; n <= 9; ++n) EXPECT_EQ(z(n), std::min(n, 5));
}

TEST(DiscreteGrowth, EmptyPlan) {
  AssemblyPlan plan;
  plan.horizon = 4;
  auto z = discrete_growth(plan);
  for (int n = 0; n <= z.horizon(); ++n) EXPECT_EQ(z(n), 0);
}

TEST(DiscreteGrowth, CombMatchesFlatEnumeration) {
  auto w = GrowthFunction::polynomial({1, 2}, 4);
  auto cat = PieceCatalog::standard();
  auto layout = layout_from_tree(ray_tree(4));
  auto tree = build_tree(w, LevelSet{}, 4);
  auto plan = assemble(tree, LevelSet{}, synthesize_params(cat, layout), cat, layout);
  auto z = discrete_growth(plan);
  EXPECT_EQ(z.z, oracle::flat_z(plan, z.horizon()));
}

TEST(DiscreteGrowth, RandomPlansMatchFlatEnumeration) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 30; ++i) {
    auto plan = oracle::random_plan(rng, 60, 2);
    auto z = discrete_growth(plan);
    ASSERT_EQ(z.z, oracle::flat_z(plan, z.horizon())) << "plan " << i;
    for (int n = 1; n <= z.horizon(); ++n) EXPECT_GE(z(n), z(n - 1));
  }
}

TEST(IncrementBand, PipelinePlanIsInsideBand) {
  auto r = run_pipeline(quadratic_config(30));
  EXPECT_TRUE(increment_band_check(r.z, r.w, r.schedule, r.S).empty());
}

TEST(IncrementBand, DoubledStepIsFlagged) {
  auto r = run_pipeline(quadratic_config(30));
  auto z = r.z;
  const Rational bump = z(20) - z(19);
  for (int n = 20; n <= z.horizon(); ++n) z.z[static_cast<std::size_t>(n)] += bump;
  auto v = increment_band_check(z, r.w, r.schedule, r.S);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].n, 20);
  EXPECT_FALSE(v[0].lower);
}

TEST(IncrementBand, ZeroFloorOnlyReportsUpper) {
  auto r = run_pipeline(quadratic_config(20));
  auto s = r.schedule;
  s.constants.h = 0;
  auto z = r.z;
  for (auto& x : z.z) x = 0;  // every step 0: only the lower side could fail
  EXPECT_TRUE(increment_band_check(z, r.w, s, r.S).empty());
}

TEST(GrowthConstant, PlugIn) {
  for (auto var : {ExponentVariant::SmallL, ExponentVariant::BigL}) {
    auto b = growth_constant_bound(1, 2, 1, 1, 2, var);
    EXPECT_EQ(b.factor, 9);
    EXPECT_TRUE(b.admits(9));
    EXPECT_FALSE(b.admits(Rational(91, 10)));
  }
  auto b = growth_constant_bound(4, 2, Rational(1, 2), 1, 1, ExponentVariant::SmallL);
  EXPECT_EQ(b.factor, 6);  // 3 * max{2, 1, 2}
  EXPECT_TRUE(b.admits(12));
  EXPECT_FALSE(b.admits(Rational(121, 10)));
  EXPECT_LT(growth_constant_bound(1, 2, 1, 1, 10, ExponentVariant::SmallL).factor,
            growth_constant_bound(1, 2, 1, 1, 20, ExponentVariant::SmallL).factor);
}

TEST(GrowthConstant, PipelineZIsEquivalentToW) {
  auto r = run_pipeline(quadratic_config(40));
  // z on the unit grid against w on levels, compared over their common range
  std::vector<Rational> wl(r.w.values().begin(), r.w.values().end());
  auto cert = growth_equivalent<Rational>(r.z.z, wl, 1000);
  ASSERT_TRUE(cert.found());
  const auto L = check_bgd(r.w).minimal_L;
  ASSERT_TRUE(L);
  for (auto var : {ExponentVariant::SmallL, ExponentVariant::BigL})
    EXPECT_TRUE(growth_constant_bound(*L, 2, 1, 1, 2, var).admits(Rational(*cert.A)));
}
