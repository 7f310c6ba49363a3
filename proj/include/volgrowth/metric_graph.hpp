#pragma once

// Weighted gadget graph of an assembled plan: one marked node per piece component plus a
// unit-spaced depth chain carrying the volume profile. Distances are exact: every edge
// length is a rational, scaled to a common integer denominator.

#include "volgrowth/assembly.hpp"
#include "volgrowth/errors.hpp"
#include "volgrowth/exact.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

namespace volgrowth {

using NodeId = std::int32_t;

class MetricGraph {
 public:
  struct Edge {
    NodeId a, b;
    Rational length;
  };

  /// Adds a node; `multiplicity` > 1 only in radial quotients.
  NodeId add_node(const Rational& weight, std::int64_t r_value, std::int32_t piece, bool marked,
                  std::int64_t multiplicity = 1) {
    const NodeId id = static_cast<NodeId>(r_.size());
    weight_id_.push_back(intern(weight_pool_, weight));
    r_.push_back(r_value);
    piece_.push_back(piece);
    marked_.push_back(marked ? 1 : 0);
    mult_.push_back(multiplicity);
    finalized_ = false;
    return id;
  }

  void add_edge(NodeId a, NodeId b, const Rational& length) {
    if (length <= 0) throw DomainError("edge lengths must be positive");
    edges_.push_back({a, b, static_cast<std::uint32_t>(intern(length_pool_, length))});
    finalized_ = false;
  }

  void set_origin(NodeId o) { origin_ = o; finalized_ = false; }
  void set_quotient(bool q) { quotient_ = q; }

  std::size_t node_count() const noexcept { return r_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  NodeId origin() const noexcept { return origin_; }
  bool is_quotient() const noexcept { return quotient_; }
  const Rational& weight(NodeId v) const { return weight_pool_[weight_id_[static_cast<std::size_t>(v)]]; }
  std::int64_t multiplicity(NodeId v) const { return mult_[static_cast<std::size_t>(v)]; }
  Rational mass(NodeId v) const { return weight(v) * Rational(multiplicity(v)); }
  std::int64_t r_value(NodeId v) const { return r_[static_cast<std::size_t>(v)]; }
  std::int32_t piece(NodeId v) const { return piece_[static_cast<std::size_t>(v)]; }
  bool marked(NodeId v) const { return marked_[static_cast<std::size_t>(v)] != 0; }
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edges_.size());
    for (const auto& e : edges_) out.push_back({e.a, e.b, length_pool_[e.len]});
    return out;
  }

  /// Common denominator of all edge lengths; distances are stored as multiples of 1/scale.
  std::int64_t scale() const {
    finalize();
    return scale_;
  }

  /// Scaled shortest-path distances from `source` (exact, label-setting).
  std::vector<std::int64_t> distances_from(NodeId source) const {
    finalize();
    constexpr auto inf = std::numeric_limits<std::int64_t>::max();
    std::vector<std::int64_t> dist(node_count(), inf);
    using Item = std::pair<std::int64_t, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[static_cast<std::size_t>(source)] = 0;
    pq.push({0, source});
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (d != dist[static_cast<std::size_t>(v)]) continue;
      for (auto k = offsets_[static_cast<std::size_t>(v)]; k < offsets_[static_cast<std::size_t>(v) + 1]; ++k) {
        const NodeId u = adj_[k];
        const std::int64_t nd = d + adj_len_[k];
        if (nd < dist[static_cast<std::size_t>(u)]) {
          dist[static_cast<std::size_t>(u)] = nd;
          pq.push({nd, u});
        }
      }
    }
    return dist;
  }

  const std::vector<std::int64_t>& origin_distances() const {
    finalize();
    if (origin_dist_.size() != node_count()) origin_dist_ = distances_from(origin_);
    return origin_dist_;
  }

  Rational distance_from_origin(NodeId v) const {
    return Rational(origin_distances()[static_cast<std::size_t>(v)], scale());
  }

  /// Neighbours of v in the compressed adjacency.
  template <class F>
  void for_each_neighbor(NodeId v, F&& f) const {
    finalize();
    for (auto k = offsets_[static_cast<std::size_t>(v)]; k < offsets_[static_cast<std::size_t>(v) + 1]; ++k)
      f(adj_[k], adj_len_[k]);
  }

 private:
  struct RawEdge {
    NodeId a, b;
    std::uint32_t len;
  };

  template <class Pool>
  static std::uint32_t intern(Pool& pool, const Rational& x) {
    for (std::size_t i = pool.size(); i-- > 0;)
      if (pool[i] == x) return static_cast<std::uint32_t>(i);
    pool.push_back(x);
    return static_cast<std::uint32_t>(pool.size() - 1);
  }

  void finalize() const {
    if (finalized_) return;
    Integer lcm = 1;
    for (const auto& L : length_pool_) {
      const Integer d = denominator(L);
      lcm = lcm / boost::multiprecision::gcd(lcm, d) * d;
    }
    scale_ = to_int64(lcm, "distance scale");
    std::vector<std::int64_t> scaled;
    for (const auto& L : length_pool_) scaled.push_back(to_int64(numerator(L) * (lcm / denominator(L)), "edge length"));
    offsets_.assign(node_count() + 1, 0);
    for (const auto& e : edges_) {
      ++offsets_[static_cast<std::size_t>(e.a) + 1];
      ++offsets_[static_cast<std::size_t>(e.b) + 1];
    }
    for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
    adj_.assign(offsets_.back(), 0);
    adj_len_.assign(offsets_.back(), 0);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const auto& e : edges_) {
      const std::int64_t len = scaled[e.len];
      adj_[fill[static_cast<std::size_t>(e.a)]] = e.b;
      adj_len_[fill[static_cast<std::size_t>(e.a)]++] = len;
      adj_[fill[static_cast<std::size_t>(e.b)]] = e.a;
      adj_len_[fill[static_cast<std::size_t>(e.b)]++] = len;
    }
    origin_dist_.clear();
    finalized_ = true;
  }

  std::vector<Rational> weight_pool_, length_pool_;
  std::vector<std::uint32_t> weight_id_;
  std::vector<std::int64_t> r_;
  std::vector<std::int32_t> piece_;
  std::vector<std::uint8_t> marked_;
  std::vector<std::int64_t> mult_;
  std::vector<RawEdge> edges_;
  NodeId origin_ = 0;
  bool quotient_ = false;

  mutable bool finalized_ = false;
  mutable std::int64_t scale_ = 1;
  mutable std::vector<std::size_t> offsets_;
  mutable std::vector<NodeId> adj_;
  mutable std::vector<std::int64_t> adj_len_;
  mutable std::vector<std::int64_t> origin_dist_;
};

/// Marked node per piece component, unit-spaced depth chain with weights v'(i), and one hop
/// from each child's marked point to both the parent's marked point and its deepest node.
inline MetricGraph build_gadget_graph(const AssemblyPlan& plan) {
  MetricGraph g;
  std::vector<NodeId> first_marked(plan.placements.size(), -1);
  for (std::size_t i = 0; i < plan.placements.size(); ++i) {
    const auto& pl = plan.placements[i];
    const auto& par = plan.params[static_cast<std::size_t>(pl.param)];
    for (int c = 0; c < par.components; ++c) {
      const NodeId m = g.add_node(0, pl.offset, static_cast<std::int32_t>(i), true);
      if (c == 0) first_marked[i] = m;
      NodeId prev = m;
      const auto& prof = par.component_profiles[static_cast<std::size_t>(c)];
      for (std::size_t k = 0; k < prof.size(); ++k) {
        const NodeId v = g.add_node(prof[k], pl.offset + static_cast<std::int64_t>(k) + 1, static_cast<std::int32_t>(i),
                                    false);
        g.add_edge(prev, v, 1);
        prev = v;
      }
    }
  }
  // marked nodes of a piece are first_marked + sum of previous component chain lengths
  auto marked_of = [&](int placement, int comp) {
    const auto& par = plan.params_of(placement);
    NodeId id = first_marked[static_cast<std::size_t>(placement)];
    for (int c = 0; c < comp; ++c) id += 1 + static_cast<NodeId>(par.component_profiles[static_cast<std::size_t>(c)].size());
    return id;
  };
  auto deepest_of = [&](int placement, int comp) {
    const auto& par = plan.params_of(placement);
    return marked_of(placement, comp) + static_cast<NodeId>(par.component_profiles[static_cast<std::size_t>(comp)].size());
  };
  for (std::size_t i = 0; i < plan.placements.size(); ++i) {
    const auto& pl = plan.placements[i];
    if (pl.parent < 0) continue;
    const Rational len = plan.link_length(static_cast<int>(i));
    const int comps = plan.params_of(static_cast<int>(i)).components;
    for (int c = 0; c < comps; ++c) {
      const int pc = plan.parent_component(static_cast<int>(i), c);
      g.add_edge(marked_of(static_cast<int>(i), c), marked_of(pl.parent, pc), len);
      // the parent's top boundary touches the child too; the same hop keeps origin distances
      g.add_edge(marked_of(static_cast<int>(i), c), deepest_of(pl.parent, pc), len);
    }
  }
  g.set_origin(first_marked.empty() ? 0 : first_marked[0]);
  return g;
}

// ---------------------------------------------------------------------------
// Origin-centred measurements

/// Sum of node masses within `radius` of the origin.
class BallTable {
 public:
  explicit BallTable(const MetricGraph& g) : scale_(g.scale()) {
    const auto& dist = g.origin_distances();
    std::map<std::int64_t, Rational> by_dist;
    for (std::size_t v = 0; v < dist.size(); ++v) {
      if (dist[v] == std::numeric_limits<std::int64_t>::max()) continue;
      by_dist[dist[v]] += g.mass(static_cast<NodeId>(v));
    }
    Rational acc = 0;
    for (auto& [d, m] : by_dist) {
      acc += m;
      radii_.push_back(d);
      prefix_.push_back(acc);
    }
  }

  Rational volume(const Rational& radius) const {
    if (radius < 0) return 0;
    const Integer cut = floor(radius * scale_);
    const std::int64_t c = cut > std::numeric_limits<std::int64_t>::max() ? std::numeric_limits<std::int64_t>::max()
                                                                           : cut.convert_to<std::int64_t>();
    auto it = std::upper_bound(radii_.begin(), radii_.end(), c);
    if (it == radii_.begin()) return 0;
    return prefix_[static_cast<std::size_t>(it - radii_.begin()) - 1];
  }

  Rational total() const { return prefix_.empty() ? Rational(0) : prefix_.back(); }

 private:
  std::int64_t scale_;
  std::vector<std::int64_t> radii_;
  std::vector<Rational> prefix_;
};

inline Rational ball_volume(const MetricGraph& g, const Rational& radius) {
  if (radius < 0) throw DomainError("radius must be nonnegative");
  return BallTable(g).volume(radius);
}

struct DistanceViolation {
  NodeId node = 0;
  std::int64_t r = 0;
  Rational distance;
  bool too_far = false;  // d > 3r, otherwise d < r/3
};

/// r(x)/3 <= d(o,x) <= 3 r(x) for every node with r(x) >= r_min.
inline std::vector<DistanceViolation> check_distance_bounds(const MetricGraph& g, std::optional<std::int64_t> r_min = {},
                                                            int l = 2) {
  const std::int64_t cutoff = r_min.value_or(3LL * l);
  const auto& dist = g.origin_distances();
  const std::int64_t s = g.scale();
  std::vector<DistanceViolation> out;
  for (std::size_t v = 0; v < dist.size(); ++v) {
    const std::int64_t r = g.r_value(static_cast<NodeId>(v));
    if (r < cutoff) continue;
    const std::int64_t d = dist[v];
    if (d > 3 * r * s) out.push_back({static_cast<NodeId>(v), r, Rational(d, s), true});
    else if (3 * d < r * s) out.push_back({static_cast<NodeId>(v), r, Rational(d, s), false});
  }
  return out;
}

struct SandwichViolation {
  int n = 0;
  Rational lower, ball, upper;  // z(floor(n/3)), vol B(o,n), z(3n)
};

/// z(floor(n/3)) <= vol B(o,n) <= z(3n) for every n <= horizon with 3n inside z's range.
inline std::vector<SandwichViolation> check_sandwich(const MetricGraph& g, const DiscreteGrowth& z,
                                                     std::optional<int> horizon = {}) {
  const BallTable balls(g);
  const int last = std::min(horizon.value_or(z.horizon()), z.horizon() / 3);
  std::vector<SandwichViolation> out;
  for (int n = 0; n <= last; ++n) {
    const Rational b = balls.volume(n);
    const Rational& lo = z(n / 3);
    const Rational& hi = z(3 * n);
    if (lo > b || b > hi) out.push_back({n, lo, b, hi});
  }
  return out;
}

/// Components of the subgraph induced on r_in < d(o,x) <= r_out (0 <= d when r_in = 0).
inline std::int64_t annulus_components(const MetricGraph& g, const Rational& r_in, const Rational& r_out) {
  if (g.is_quotient()) throw UnsupportedOnQuotient("annulus components need the explicit graph");
  if (r_in < 0 || !(r_in < r_out)) throw DomainError("annulus needs 0 <= r_in < r_out");
  const auto& dist = g.origin_distances();
  const std::int64_t s = g.scale();
  const Integer lo = floor(r_in * s), hi = floor(r_out * s);
  std::vector<NodeId> parent(dist.size(), -1);
  std::vector<char> inside(dist.size(), 0);
  for (std::size_t v = 0; v < dist.size(); ++v) {
    // a band starting at 0 is the closed ball, origin included
    inside[v] = (r_in == 0 ? dist[v] >= 0 : Integer(dist[v]) > lo) && Integer(dist[v]) <= hi;
    if (inside[v]) parent[v] = static_cast<NodeId>(v);
  }
  std::function<NodeId(NodeId)> find = [&](NodeId x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  std::int64_t comps = 0;
  for (std::size_t v = 0; v < dist.size(); ++v) comps += inside[v];
  for (std::size_t v = 0; v < dist.size(); ++v) {
    if (!inside[v]) continue;
    g.for_each_neighbor(static_cast<NodeId>(v), [&](NodeId u, std::int64_t) {
      if (!inside[static_cast<std::size_t>(u)]) return;
      const NodeId a = find(static_cast<NodeId>(v)), b = find(u);
      if (a != b) {
        parent[static_cast<std::size_t>(a)] = b;
        --comps;
      }
    });
  }
  return comps;
}

// ---------------------------------------------------------------------------
// Pointwise doubling

struct DoublingViolation {
  NodeId center = 0;
  Rational r;
  Rational ratio;
};

struct DoublingScan {
  std::vector<DoublingViolation> violations;
  Rational max_ratio = 0;
  NodeId argmax_center = 0;
  Rational argmax_r = 0;
  Rational diameter = 0;
  bool origin_only = false;
};

namespace detail {

struct SourceBalls {
  std::vector<std::int64_t> radii;
  std::vector<Rational> prefix;
  Rational at(std::int64_t scaled_radius) const {
    auto it = std::upper_bound(radii.begin(), radii.end(), scaled_radius);
    if (it == radii.begin()) return 0;
    return prefix[static_cast<std::size_t>(it - radii.begin()) - 1];
  }
};

inline SourceBalls balls_from(const MetricGraph& g, const std::vector<std::int64_t>& dist) {
  std::vector<std::pair<std::int64_t, NodeId>> order;
  order.reserve(dist.size());
  for (std::size_t v = 0; v < dist.size(); ++v) order.emplace_back(dist[v], static_cast<NodeId>(v));
  std::sort(order.begin(), order.end());
  SourceBalls b;
  Rational acc = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    acc += g.mass(order[i].second);
    if (i + 1 == order.size() || order[i + 1].first != order[i].first) {
      b.radii.push_back(order[i].first);
      b.prefix.push_back(acc);
    }
  }
  return b;
}

}  // namespace detail

/// vol B(x,2r) / vol B(x,r) <= A for every centre x and every half-integer r in (r0, diameter/2].
/// On a radial quotient only the origin is a valid centre.
inline DoublingScan pointwise_doubling(const MetricGraph& g, const Rational& r0, const Rational& A) {
  if (r0 <= 0) throw DomainError("pointwise_doubling needs r0 > 0");
  DoublingScan scan;
  scan.origin_only = g.is_quotient();
  const std::int64_t s = g.scale();
  std::vector<NodeId> centers;
  if (scan.origin_only) centers.push_back(g.origin());
  else
    for (std::size_t v = 0; v < g.node_count(); ++v) centers.push_back(static_cast<NodeId>(v));

  std::vector<std::vector<std::int64_t>> all;
  std::int64_t diam = 0;
  for (NodeId x : centers) {
    auto d = g.distances_from(x);
    for (auto v : d) diam = std::max(diam, v);
    all.push_back(std::move(d));
  }
  if (scan.origin_only) diam *= 2;  // eccentricity of the origin bounds half the diameter
  scan.diameter = Rational(diam, s);
  const Integer first = floor(r0 * 2) + 1;  // smallest half-integer index 2r > 2 r0
  for (std::size_t ci = 0; ci < centers.size(); ++ci) {
    const auto balls = detail::balls_from(g, all[ci]);
    for (Integer twice = first; Rational(twice, 2) * 2 <= scan.diameter; ++twice) {
      const Rational r(twice, 2);
      const std::int64_t rs = floor(r * s).convert_to<std::int64_t>();
      const Rational inner = balls.at(rs), outer = balls.at(2 * rs);
      if (inner == 0) continue;
      const Rational ratio = outer / inner;
      if (ratio > scan.max_ratio) {
        scan.max_ratio = ratio;
        scan.argmax_center = centers[ci];
        scan.argmax_r = r;
      }
      if (ratio > A) scan.violations.push_back({centers[ci], r, ratio});
    }
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Radial quotient

/// Origin-centred quotient of the gadget graph built from level counts alone: all branch
/// pieces of one level share a single chain whose nodes carry the summed masses. Exact for
/// distances from the origin when the branch departure hop is the same at every level.
inline MetricGraph build_radial_quotient(const GrowthFunction& w, const LevelSet& S, const ParamSchedule& s,
                                         const PieceCatalog& catalog, const EndsLayout& layout, int horizon) {
  if (s.trunks != 1) throw UnsupportedOnQuotient("radial quotient supports a single trunk");
  const auto alloc = allocate_levels(w, S, horizon, 1);
  const int l = catalog.constants.l;
  for (int j = 0; j <= horizon; ++j)
    if (s.d_at(j) != s.d_at(0)) throw UnsupportedOnQuotient("branch departure hop varies with the level");
  const Rational hop = Rational(l) + s.d_at(0);

  MetricGraph g;
  g.set_quotient(true);
  auto chain = [&](const Profile& prof, std::int64_t offset, std::int64_t mult, std::int32_t tag) {
    const NodeId m = g.add_node(0, offset, tag, true, mult);
    NodeId prev = m;
    for (std::size_t k = 0; k < prof.size(); ++k) {
      const NodeId v = g.add_node(prof[k], offset + static_cast<std::int64_t>(k) + 1, tag, false, mult);
      g.add_edge(prev, v, 1);
      prev = v;
    }
    return m;
  };

  // trunk: HS at the root, then Q on interval starts and R elsewhere
  const NodeId root = chain(catalog.HS, 0, 1, 0);
  g.set_origin(root);
  NodeId prev_trunk = root;
  Rational prev_link = l;
  std::vector<NodeId> trunk_marked(static_cast<std::size_t>(horizon) + 1, root);
  std::vector<bool> trunk_is_R(static_cast<std::size_t>(horizon) + 1, false);
  for (int n = 1; n <= horizon; ++n) {
    const auto iv = S.interval_of(n);
    if (iv && S.intervals()[static_cast<std::size_t>(*iv)].start != n) {
      trunk_marked[n] = trunk_marked[n - 1];
      continue;
    }
    PieceParams p = iv ? make_Q(catalog, layout, s, *iv, S.intervals()[static_cast<std::size_t>(*iv)].length)
                       : make_R(catalog, s, S.intervals_started(n) - 1);
    Profile total = p.profile;
    const NodeId m = chain(total, static_cast<std::int64_t>(n) * l, 1, n);
    g.add_edge(prev_trunk, m, prev_link);
    prev_trunk = m;
    prev_link = p.kind == PieceKind::Q ? Rational(l * p.height_units) : Rational(l);
    trunk_marked[n] = m;
    trunk_is_R[n] = p.kind == PieceKind::R;
  }

  // Branch vertices grouped by the level their branch left the trunk. Descendants of the
  // root's side child hang off the cap with a plain hop, all others pay l + d once, so two
  // bundles per level (root family, trunk family) carry every branch piece.
  std::map<int, std::int64_t> by_departure;  // departure level -> vertices on the current level
  NodeId prev_bundle[2] = {-1, -1};
  for (int n = 1; n <= horizon; ++n) {
    const auto& below = alloc[static_cast<std::size_t>(n - 1)];
    std::map<int, std::int64_t> next;
    if (below.side_children > 0) next[n - 1] += below.side_children;
    std::int64_t remaining = below.branch_children;
    for (auto it = by_departure.rbegin(); it != by_departure.rend() && remaining > 0; ++it) {
      const std::int64_t take = std::min(remaining, 2 * it->second);
      next[it->first] += take;
      remaining -= take;
    }
    by_departure = std::move(next);

    // children per class on the next level decide J / K / HS here
    const auto& here = alloc[static_cast<std::size_t>(n)];
    std::int64_t rem = n < horizon ? here.branch_children : 0;
    Profile mass[2] = {Profile(static_cast<std::size_t>(l), Rational(0)), Profile(static_cast<std::size_t>(l), Rational(0))};
    std::int64_t count[2] = {0, 0};
    for (auto it = by_departure.rbegin(); it != by_departure.rend(); ++it) {
      const int fam = it->first == 0 ? 0 : 1;
      const std::int64_t two = std::min(it->second, rem / 2);
      rem -= 2 * two;
      const std::int64_t one = (rem == 1 && two < it->second) ? 1 : 0;
      rem -= one;
      const std::int64_t none = it->second - two - one;
      count[fam] += it->second;
      for (int k = 0; k < l; ++k)
        mass[fam][static_cast<std::size_t>(k)] += catalog.J[k] * two + catalog.K[k] * one + catalog.HS[k] * none;
    }
    NodeId made[2] = {-1, -1};
    for (int fam = 0; fam < 2; ++fam) {
      if (count[fam] == 0) continue;
      Profile per(mass[fam]);
      for (auto& x : per) x /= Rational(count[fam]);
      made[fam] = chain(per, static_cast<std::int64_t>(n) * l, count[fam], -n);
      if (prev_bundle[fam] >= 0) g.add_edge(prev_bundle[fam], made[fam], l);
    }
    if (below.side_children > 0) {
      if (n - 1 == 0) g.add_edge(root, made[0], l);
      else g.add_edge(trunk_marked[n - 1], made[1], trunk_is_R[n - 1] ? hop : Rational(l));
    }
    prev_bundle[0] = made[0];
    prev_bundle[1] = made[1];
  }
  return g;
}

}  // namespace volgrowth
