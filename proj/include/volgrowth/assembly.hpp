#pragma once

// Trunk interval selection, piece placement on the admissible tree, and the
// discrete growth function z(n) = vol{ r <= n } with its bounds.

#include "volgrowth/errors.hpp"
#include "volgrowth/exact.hpp"
#include "volgrowth/growth.hpp"
#include "volgrowth/pieces.hpp"
#include "volgrowth/tree.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace volgrowth {

// ---------------------------------------------------------------------------
// Interval selection

enum class SelectionMode { Factorial, Linear, Custom };

inline const char* mode_name(SelectionMode m) {
  switch (m) {
    case SelectionMode::Factorial: return "factorial";
    case SelectionMode::Linear: return "linear";
    case SelectionMode::Custom: return "custom";
  }
  return "?";
}

struct SelectionConfig {
  SelectionMode mode = SelectionMode::Factorial;
  int Kgap = 2, base = 1;        // factorial: n_j = (j+1)! Kgap + base
  int C1 = 1, C2 = 1;            // linear: n_j = C1 + j C2
  std::vector<int> custom;       // custom: starts given verbatim
  std::optional<int> count;      // required number of intervals
  int window = 8;                // window for the increment-limit classification
  std::optional<int> min_start;  // extra lower bound on every n_j
};

namespace detail {

inline bool level_fits(const std::vector<std::int64_t>& c, int n, int trunks, bool in_S) {
  const std::int64_t non_trunk = n == 0 ? 0 : c[n] - trunks;
  const std::int64_t side = n == 0 ? ((trunks == 1 && !in_S) ? 1 : 0) : (in_S ? 0 : trunks);
  const std::int64_t need = c[n + 1] - trunks - side;
  return need >= 0 && need <= 2 * non_trunk;
}

}  // namespace detail

/// Picks trunk intervals [n_j, n_j + t_j - 1] by the mode's formula, moving each start forward
/// until the diameter, spacing, volume-cap and tree-feasibility constraints hold.
inline LevelSet choose_nj(const ParamSchedule& s, const GrowthFunction& w, const SelectionConfig& cfg, int horizon) {
  if (horizon > w.horizon()) throw InfeasibleSelection("horizon exceeds the growth function");
  const bool diverging = increments_diverge(w, std::min(cfg.window, w.horizon()));
  bool constant_u = true;
  for (int j = 0; j <= horizon; ++j) constant_u = constant_u && s.u_at(j) == s.u_at(0);
  if (cfg.mode == SelectionMode::Factorial && !diverging)
    throw InfeasibleSelection("factorial selection needs diverging increments");
  if (cfg.mode == SelectionMode::Linear && !diverging && !constant_u)
    throw InfeasibleSelection("linear selection needs diverging increments or a constant R volume");
  const bool cap_volume = diverging && cfg.mode != SelectionMode::Linear;

  std::vector<std::int64_t> c(static_cast<std::size_t>(horizon) + 1);
  for (int n = 0; n <= horizon; ++n) c[n] = to_int64(w.increment(n), "level count");
  // suffix minimum of the level increments
  std::vector<Integer> tail_min(static_cast<std::size_t>(horizon) + 2);
  tail_min[horizon + 1] = w.increment(horizon);
  for (int n = horizon; n >= 0; --n) tail_min[n] = std::min(tail_min[n + 1], w.increment(n));

  const int l = s.constants.l;
  std::vector<LevelInterval> out;
  int prev_end = 0;
  for (int j = 0;; ++j) {
    if (cfg.count && j >= *cfg.count) break;
    const int t = s.t(j);
    long long target = 0;
    switch (cfg.mode) {
      case SelectionMode::Factorial: {
        long double f = 1;
        for (int i = 2; i <= j + 1; ++i) f *= i;
        const long double v = f * cfg.Kgap + cfg.base;
        target = v > horizon ? horizon + 1 : static_cast<long long>(v);
        break;
      }
      case SelectionMode::Linear: target = static_cast<long long>(cfg.C1) + static_cast<long long>(j) * cfg.C2; break;
      case SelectionMode::Custom:
        if (j >= static_cast<int>(cfg.custom.size())) target = horizon + 1;
        else target = cfg.custom[static_cast<std::size_t>(j)];
        break;
    }
    const Rational dj = s.d_at(j);
    long long n = std::max<long long>({target, 1, ceil(dj / l).convert_to<long long>(), prev_end + 1LL,
                                       cfg.min_start.value_or(1)});
    auto fits = [&](long long start) {
      if (start + t - 1 > horizon) return false;
      if (cap_volume && Rational(tail_min[static_cast<std::size_t>(start)]) < s.U_at(j)) return false;
      for (long long lvl = start; lvl < std::min<long long>(start + t, horizon); ++lvl)
        if (!detail::level_fits(c, static_cast<int>(lvl), s.trunks, true)) return false;
      return true;
    };
    if (cfg.mode == SelectionMode::Custom) {
      if (n + t - 1 > horizon) break;
      if (n != target || !fits(n))
        throw InfeasibleSelection("custom start " + std::to_string(target) + " violates the selection constraints");
    } else {
      while (n + t - 1 <= horizon && !fits(n)) ++n;
      if (n + t - 1 > horizon) break;
    }
    out.push_back({static_cast<int>(n), t});
    prev_end = static_cast<int>(n) + t - 1;
  }
  if (cfg.count && static_cast<int>(out.size()) < *cfg.count)
    throw InfeasibleSelection("only " + std::to_string(out.size()) + " of " + std::to_string(*cfg.count) +
                              " intervals fit below level " + std::to_string(horizon));
  LevelSet S(out);
  try {
    (void)allocate_levels(w, S, horizon, s.trunks);
  } catch (const InfeasibleGrowth& e) {
    throw InfeasibleSelection(std::string("selected intervals leave the tree infeasible: ") + e.what());
  }
  return S;
}

struct DensityReport {
  std::vector<std::pair<int, Rational>> ratios;  // (n, |S ∩ [0,n]| / n)
  Rational minimum = 0;
  bool passes = false;
};

inline DensityReport vanishing_density_check(const LevelSet& S, const std::vector<int>& checkpoints,
                                             const Rational& eps = Rational(1, 10)) {
  DensityReport rep;
  bool first = true;
  for (int n : checkpoints) {
    if (n < 1) continue;
    Rational r(S.count_upto(n), n);
    rep.ratios.emplace_back(n, r);
    rep.minimum = first ? r : std::min(rep.minimum, r);
    first = false;
  }
  rep.passes = !first && rep.minimum < eps;
  return rep;
}

// ---------------------------------------------------------------------------
// Placement

struct Placement {
  int param = 0;                 // index into AssemblyPlan::params
  int level = 0;                 // first tree level covered
  std::int64_t offset = 0;       // r-offset in unit lengths
  VertexId vertex = kNoVertex;   // anchor vertex (trunk 0 vertex for trunk pieces)
  int parent = -1;               // placement this piece is glued onto
  int parent_component = 0;      // for single-component pieces
  bool on_trunk = false;
};

struct AssemblyPlan {
  LevelSet S;
  SelectionMode mode = SelectionMode::Factorial;
  int l = 2;
  int horizon = 0;               // tree levels
  int trunks = 1;
  std::vector<PieceParams> params;
  std::vector<Placement> placements;
  std::vector<int> piece_of_vertex;

  const PieceParams& params_of(int placement) const {
    return params.at(static_cast<std::size_t>(placements.at(static_cast<std::size_t>(placement)).param));
  }
  std::size_t count(PieceKind k) const {
    std::size_t n = 0;
    for (const auto& p : placements) n += params[static_cast<std::size_t>(p.param)].kind == k;
    return n;
  }

  /// Component of the parent piece that component `comp` of placement `i` is glued to.
  int parent_component(int i, int comp) const {
    const auto& p = placements.at(static_cast<std::size_t>(i));
    if (p.parent < 0) return 0;
    if (!p.on_trunk) return p.parent_component;
    const int parent_comps = params_of(p.parent).components;
    return (comp % trunks) % parent_comps;
  }

  /// Length of the hop between marked points of placement i and its parent.
  Rational link_length(int i) const {
    const auto& p = placements.at(static_cast<std::size_t>(i));
    if (p.parent < 0) return 0;
    const auto& par = params_of(p.parent);
    const auto& me = params_of(i);
    if (par.kind == PieceKind::Q) return Rational(l * par.height_units);
    if (par.kind == PieceKind::R && me.kind != PieceKind::R && me.kind != PieceKind::Q) return Rational(l) + par.diameter;
    return Rational(l);
  }
};

/// Places Q on S-intervals, R on the remaining trunk levels, J/K/HS on branch vertices by
/// child count, and HS at the root.
inline AssemblyPlan assemble(const AdmissibleTree& tree, const LevelSet& S, const ParamSchedule& s,
                             const PieceCatalog& catalog, const EndsLayout& layout) {
  if (!(tree.S() == S)) throw PlacementConflict("tree was built for a different trunk set");
  if (tree.trunks() != s.trunks) throw PlacementConflict("schedule and tree disagree on the number of trunks");
  AssemblyPlan plan;
  plan.S = S;
  plan.l = catalog.constants.l;
  plan.horizon = tree.horizon();
  plan.trunks = tree.trunks();
  plan.piece_of_vertex.assign(tree.size(), -1);
  const int l = plan.l;

  const int hs = 0, k = 1, jn = 2;
  plan.params.push_back(PieceParams::single(PieceKind::HS, catalog.HS));
  plan.params.push_back(PieceParams::single(PieceKind::K, catalog.K));
  plan.params.push_back(PieceParams::single(PieceKind::J, catalog.J));
  std::vector<int> r_param;  // indexed by j + 1

  auto claim = [&](VertexId v, int piece) {
    auto& slot = plan.piece_of_vertex[static_cast<std::size_t>(v)];
    if (slot != -1) throw PlacementConflict("vertex " + std::to_string(v) + " carries two pieces");
    slot = piece;
  };

  plan.placements.push_back({hs, 0, 0, 0, -1, 0, true});
  claim(0, 0);
  int prev_trunk_piece = 0;
  for (int n = 1; n <= tree.horizon(); ++n) {
    const auto iv = S.interval_of(n);
    if (iv && S.intervals()[static_cast<std::size_t>(*iv)].start != n) {
      for (int t = 0; t < tree.trunks(); ++t) claim(tree.trunk_vertex(t, n), prev_trunk_piece);
      continue;
    }
    int param;
    if (iv) {
      const auto& rng = S.intervals()[static_cast<std::size_t>(*iv)];
      if (rng.last() > tree.horizon()) throw PlacementConflict("trunk interval runs past the tree horizon");
      plan.params.push_back(make_Q(catalog, layout, s, *iv, rng.length));
      validate_piece(plan.params.back(), catalog.constants, s.U_at(*iv));
      param = static_cast<int>(plan.params.size()) - 1;
    } else {
      const int j = S.intervals_started(n) - 1;
      if (static_cast<int>(r_param.size()) <= j + 1) r_param.resize(static_cast<std::size_t>(j) + 2, -1);
      if (r_param[static_cast<std::size_t>(j + 1)] < 0) {
        plan.params.push_back(make_R(catalog, s, j));
        validate_piece(plan.params.back(), catalog.constants, s.U_at(j), s.u_at(j));
        r_param[static_cast<std::size_t>(j + 1)] = static_cast<int>(plan.params.size()) - 1;
      }
      param = r_param[static_cast<std::size_t>(j + 1)];
    }
    const int idx = static_cast<int>(plan.placements.size());
    plan.placements.push_back({param, n, static_cast<std::int64_t>(n) * l, tree.trunk_vertex(0, n), prev_trunk_piece,
                               0, true});
    for (int t = 0; t < tree.trunks(); ++t) claim(tree.trunk_vertex(t, n), idx);
    prev_trunk_piece = idx;
  }

  for (VertexId x = 1; x < static_cast<VertexId>(tree.size()); ++x) {
    const auto& v = tree.vertex(x);
    if (v.on_trunk()) continue;
    const int param = v.children == 2 ? jn : v.children == 1 ? k : hs;
    const int parent = plan.piece_of_vertex[static_cast<std::size_t>(v.parent)];
    if (parent < 0) throw PlacementConflict("parent of vertex " + std::to_string(x) + " carries no piece");
    const auto& pv = tree.vertex(v.parent);
    const int comps = plan.params_of(parent).components;
    const int parent_comp = pv.on_trunk() ? tree.home_trunk(x) % comps : 0;
    const int idx = static_cast<int>(plan.placements.size());
    plan.placements.push_back({param, v.level, static_cast<std::int64_t>(v.level) * l, x, parent, parent_comp, false});
    claim(x, idx);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Discrete growth

struct DiscreteGrowth {
  int l = 1;
  std::vector<Rational> z;  // z(n) for unit lengths n in [0, l * horizon]
  int horizon() const noexcept { return static_cast<int>(z.size()) - 1; }
  const Rational& operator()(int n) const { return z.at(static_cast<std::size_t>(n)); }
};

/// z(n) = sum over pieces P of sum_{1 <= i <= n - offset(P)} v'_P(i).
inline DiscreteGrowth discrete_growth(const AssemblyPlan& plan, std::optional<int> units = std::nullopt) {
  const int N = units.value_or(plan.l * plan.horizon);
  DiscreteGrowth g;
  g.l = plan.l;
  std::vector<Rational> step(static_cast<std::size_t>(N) + 1, Rational(0));
  for (const auto& p : plan.placements) {
    const auto& prof = plan.params[static_cast<std::size_t>(p.param)].profile;
    for (std::size_t i = 0; i < prof.size(); ++i) {
      const std::int64_t at = p.offset + static_cast<std::int64_t>(i) + 1;
      if (at > N) break;
      step[static_cast<std::size_t>(at)] += prof[i];
    }
  }
  g.z.resize(step.size());
  Rational acc = 0;
  for (std::size_t n = 0; n < step.size(); ++n) {
    acc += step[n];
    g.z[n] = acc;
  }
  return g;
}

struct BandViolation {
  int n = 0;           // unit index
  int level = 0;       // tree level compared against
  Rational step;       // z(n) - z(n-1)
  Rational bound;
  bool lower = false;
};

/// Checks (w(k) - w(k-1) - 1) h <= z(n) - z(n-1) <= H (w(k) - w(k-1)) + U_j for every unit
/// index n, with k = ceil(n/l) - 1 and U_j from the most recent interval started by level k.
inline std::vector<BandViolation> increment_band_check(const DiscreteGrowth& z, const GrowthFunction& w,
                                                       const ParamSchedule& s, const LevelSet& S) {
  std::vector<BandViolation> out;
  const auto& c = s.constants;
  const int l = z.l;
  for (int n = 1; n <= z.horizon(); ++n) {
    const int k = (n + l - 1) / l - 1;
    if (k > w.horizon()) break;
    const Rational dw(w.increment(k));
    const Rational step = z(n) - z(n - 1);
    const Rational lo = (dw - 1) * c.h;
    const int j = std::max(0, S.intervals_started(k) - 1);
    const Rational hi = c.H * dw + s.U_at(j);
    if (step < lo) out.push_back({n, k, step, lo, true});
    if (step > hi) out.push_back({n, k, step, hi, false});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Explicit growth constant

enum class ExponentVariant { SmallL, BigL };  // L^(1/l) or L^(1/L)

struct GrowthConstantBound {
  Rational factor;        // 3 max{1/u, 1/h, H+1}
  Integer L = 1;
  unsigned root = 1;      // exponent is 1/root

  /// Exact test of A <= factor * L^(1/root).
  bool admits(const Rational& A) const { return leq_times_rational_power(A, factor, Rational(L), 1, root); }
  double approx() const { return to_double(factor) * std::pow(to_double(L), 1.0 / root); }
};

inline GrowthConstantBound growth_constant_bound(const Integer& L, int l, const Rational& u, const Rational& h,
                                                 const Rational& H, ExponentVariant variant) {
  if (u <= 0 || h <= 0) throw DomainError("u and h must be positive");
  if (L < 1 || l < 1) throw DomainError("L and l must be positive");
  GrowthConstantBound b;
  b.factor = 3 * std::max({Rational(Rational(1) / u), Rational(Rational(1) / h), Rational(H + 1)});
  b.L = L;
  b.root = variant == ExponentVariant::SmallL ? static_cast<unsigned>(l) : L.convert_to<unsigned>();
  return b;
}

}  // namespace volgrowth
