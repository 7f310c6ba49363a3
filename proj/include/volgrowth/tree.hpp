#pragma once

// Admissible rooted trees: one or more trunks, at most two branches per
// vertex, prescribed growth, and single-branch trunk levels given by S.

#include "volgrowth/errors.hpp"
#include "volgrowth/exact.hpp"
#include "volgrowth/growth.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace volgrowth {

using VertexId = std::int32_t;
inline constexpr VertexId kNoVertex = -1;

// ---------------------------------------------------------------------------
// LevelSet S = union of [n_j, n_j + t_j - 1]

struct LevelInterval {
  int start = 1;   // n_j
  int length = 1;  // t_j
  int last() const noexcept { return start + length - 1; }
};

class LevelSet {
 public:
  LevelSet() = default;
  explicit LevelSet(std::vector<LevelInterval> intervals) : intervals_(std::move(intervals)) {
    for (std::size_t j = 0; j < intervals_.size(); ++j) {
      const auto& iv = intervals_[j];
      if (iv.start < 1 || iv.length < 1) throw DomainError("level intervals need positive n_j and t_j");
      if (j > 0 && iv.start <= intervals_[j - 1].last())
        throw DomainError("level intervals must be sorted and disjoint");
    }
  }

  const std::vector<LevelInterval>& intervals() const noexcept { return intervals_; }
  bool empty() const noexcept { return intervals_.empty(); }

  /// Index j of the interval containing `level`, if any.
  std::optional<int> interval_of(int level) const {
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), level,
                               [](int l, const LevelInterval& iv) { return l < iv.start; });
    if (it == intervals_.begin()) return std::nullopt;
    --it;
    if (level <= it->last()) return static_cast<int>(it - intervals_.begin());
    return std::nullopt;
  }

  bool contains(int level) const { return interval_of(level).has_value(); }

  /// Number of intervals that start at or before `level`.
  int intervals_started(int level) const {
    return static_cast<int>(std::upper_bound(intervals_.begin(), intervals_.end(), level,
                                             [](int l, const LevelInterval& iv) { return l < iv.start; }) -
                            intervals_.begin());
  }

  /// |S ∩ [0, n]|
  std::int64_t count_upto(int n) const {
    std::int64_t total = 0;
    for (const auto& iv : intervals_) {
      if (iv.start > n) break;
      total += std::min(iv.last(), n) - iv.start + 1;
    }
    return total;
  }

  bool operator==(const LevelSet& o) const {
    if (intervals_.size() != o.intervals_.size()) return false;
    for (std::size_t i = 0; i < intervals_.size(); ++i)
      if (intervals_[i].start != o.intervals_[i].start || intervals_[i].length != o.intervals_[i].length)
        return false;
    return true;
  }

 private:
  std::vector<LevelInterval> intervals_;
};

// ---------------------------------------------------------------------------
// Per-level allocation shared by the explicit builder and the radial quotient.

struct LevelAllocation {
  std::int64_t count = 0;          // vertices on this level
  std::int64_t trunk = 0;          // trunk vertices on this level
  std::int64_t side_children = 0;  // children given by trunk vertices to new branches
  std::int64_t branch_children = 0;  // children given by non-trunk vertices
  std::int64_t non_trunk() const noexcept { return count - trunk; }
  // Newest-first filling: two children each, at most one vertex with a single child.
  std::int64_t with_two() const noexcept { return branch_children / 2; }
  std::int64_t with_one() const noexcept { return branch_children % 2; }
  std::int64_t with_none() const noexcept { return non_trunk() - with_two() - with_one(); }
};

inline constexpr std::int64_t kMaxTreeVertices = 400'000'000;

/// Feasibility and child counts per level for growth w with `trunks` rays.
/// The single-trunk root carries a side branch; a multi-trunk root only splits into the trunks.
inline std::vector<LevelAllocation> allocate_levels(const GrowthFunction& w, const LevelSet& S, int horizon,
                                                    int trunks = 1) {
  if (trunks < 1) throw DomainError("at least one trunk required");
  if (horizon > w.horizon()) throw DomainError("tree horizon exceeds growth horizon");
  if (w(0) != 1) throw InfeasibleGrowth(0, "w(0) must be 1");
  std::vector<LevelAllocation> levels(static_cast<std::size_t>(horizon) + 1);
  levels[0].count = 1;
  levels[0].trunk = 1;
  for (int n = 0; n < horizon; ++n) {
    auto& cur = levels[n];
    auto& next = levels[n + 1];
    next.count = to_int64(w.increment(n + 1), "level count");
    next.trunk = trunks;
    std::int64_t trunk_children;
    if (n == 0) {
      cur.side_children = (trunks == 1 && !S.contains(0)) ? 1 : 0;
      trunk_children = trunks;
    } else {
      cur.side_children = S.contains(n) ? 0 : trunks;
      trunk_children = trunks;
    }
    const std::int64_t need = next.count - trunk_children - cur.side_children;
    if (need < 0)
      throw InfeasibleGrowth(n + 1, "count " + std::to_string(next.count) + " below the " +
                                        std::to_string(trunk_children + cur.side_children) +
                                        " children forced by the trunk");
    if (need > 2 * cur.non_trunk())
      throw InfeasibleGrowth(n + 1, "count " + std::to_string(next.count) +
                                        " exceeds two children per branch vertex");
    cur.branch_children = need;
  }
  return levels;
}

// ---------------------------------------------------------------------------
// AdmissibleTree

class AdmissibleTree {
 public:
  struct Vertex {
    int level = 0;
    VertexId parent = kNoVertex;
    int trunk_id = -1;  // -1 when not on a trunk
    int children = 0;
    bool on_trunk() const noexcept { return trunk_id >= 0; }
  };

  /// Vertices listed level by level; parents must lie on the previous level.
  static AdmissibleTree from_vertices(std::vector<Vertex> vertices, int trunks, LevelSet S = {}) {
    AdmissibleTree t;
    t.vertices_ = std::move(vertices);
    t.trunks_ = trunks;
    t.S_ = std::move(S);
    t.finalize();
    return t;
  }

  int horizon() const noexcept { return static_cast<int>(level_start_.size()) - 2; }
  int trunks() const noexcept { return trunks_; }
  const LevelSet& S() const noexcept { return S_; }
  std::size_t size() const noexcept { return vertices_.size(); }
  const Vertex& vertex(VertexId v) const { return vertices_.at(static_cast<std::size_t>(v)); }
  const std::vector<Vertex>& vertices() const noexcept { return vertices_; }

  /// Vertices of `level` occupy [first, last).
  std::pair<VertexId, VertexId> level_range(int level) const {
    return {static_cast<VertexId>(level_start_.at(level)), static_cast<VertexId>(level_start_.at(level + 1))};
  }
  std::int64_t level_count(int level) const { return level_start_.at(level + 1) - level_start_.at(level); }

  /// Trunk vertex of trunk `id` at `level` (the root for level 0).
  VertexId trunk_vertex(int trunk_id, int level) const {
    if (level == 0) return 0;
    return trunk_at_.at(static_cast<std::size_t>(level) * trunks_ + trunk_id);
  }

  /// Level of the trunk vertex from which x's branch leaves the trunk.
  int departure_level(VertexId x) const {
    const int d = departure_.at(static_cast<std::size_t>(x));
    if (d < 0) throw OnTrunk("vertex " + std::to_string(x) + " lies on a trunk");
    return d;
  }

  /// Trunk from which x's branch departs (the vertex's own trunk when on a trunk).
  int home_trunk(VertexId x) const { return home_trunk_.at(static_cast<std::size_t>(x)); }

  bool capped(VertexId x) const {
    const auto& v = vertex(x);
    return v.children == 0 && v.level < horizon();
  }

  bool operator==(const AdmissibleTree& o) const {
    if (vertices_.size() != o.vertices_.size() || trunks_ != o.trunks_) return false;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      const auto &a = vertices_[i], &b = o.vertices_[i];
      if (a.level != b.level || a.parent != b.parent || a.trunk_id != b.trunk_id || a.children != b.children)
        return false;
    }
    return true;
  }

 private:
  void finalize() {
    if (vertices_.empty() || vertices_[0].level != 0 || vertices_[0].parent != kNoVertex)
      throw MalformedTree("vertex 0 must be the root at level 0");
    if (trunks_ < 1) throw MalformedTree("at least one trunk required");
    const int H = vertices_.back().level;
    level_start_.assign(static_cast<std::size_t>(H) + 2, 0);
    trunk_at_.assign(static_cast<std::size_t>(H + 1) * trunks_, kNoVertex);
    departure_.assign(vertices_.size(), -1);
    home_trunk_.assign(vertices_.size(), 0);
    std::vector<int> counted(vertices_.size(), 0);
    int level = 0;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      auto& v = vertices_[i];
      if (i > 0) {
        if (v.level == level + 1) {
          level_start_[static_cast<std::size_t>(v.level)] = static_cast<std::int64_t>(i);
          level = v.level;
        } else if (v.level != level) {
          throw MalformedTree("vertices must be listed level by level");
        }
        if (v.parent < 0 || static_cast<std::size_t>(v.parent) >= i || vertices_[v.parent].level != v.level - 1)
          throw MalformedTree("vertex " + std::to_string(i) + " has an invalid parent");
        ++counted[static_cast<std::size_t>(v.parent)];
        const auto& p = vertices_[v.parent];
        if (v.on_trunk()) {
          if (v.trunk_id >= trunks_) throw MalformedTree("trunk id out of range");
          if (!(p.on_trunk() && (p.level == 0 || p.trunk_id == v.trunk_id)))
            throw MalformedTree("trunk vertex " + std::to_string(i) + " does not continue its trunk");
          auto& slot = trunk_at_[static_cast<std::size_t>(v.level) * trunks_ + v.trunk_id];
          if (slot != kNoVertex) throw MalformedTree("trunk has two vertices on one level");
          slot = static_cast<VertexId>(i);
          home_trunk_[i] = v.trunk_id;
        } else {
          departure_[i] = p.on_trunk() ? p.level : departure_[static_cast<std::size_t>(v.parent)];
          home_trunk_[i] = home_trunk_[static_cast<std::size_t>(v.parent)];
        }
      } else if (!v.on_trunk()) {
        v.trunk_id = 0;
      }
    }
    level_start_[static_cast<std::size_t>(H) + 1] = static_cast<std::int64_t>(vertices_.size());
    for (int l = 1; l <= H; ++l)
      for (int t = 0; t < trunks_; ++t)
        if (trunk_at_[static_cast<std::size_t>(l) * trunks_ + t] == kNoVertex)
          throw MalformedTree("trunk " + std::to_string(t) + " stops before the horizon");
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      auto& v = vertices_[i];
      v.children = counted[i];
      const int limit = (i == 0 && trunks_ > 1) ? trunks_ : 2;
      if (v.children > limit) throw MalformedTree("vertex " + std::to_string(i) + " has too many children");
      if (v.on_trunk() && i > 0 && v.level < H && S_.contains(v.level) && v.children != 1)
        throw MalformedTree("trunk vertex at an S-level must have exactly one child");
    }
  }

  std::vector<Vertex> vertices_;
  int trunks_ = 1;
  LevelSet S_;
  std::vector<std::int64_t> level_start_;
  std::vector<VertexId> trunk_at_;
  std::vector<int> departure_;
  std::vector<int> home_trunk_;
};

/// Builds the tree level by level. Children of branch vertices are handed out
/// newest branch first (latest departure level), two per vertex.
inline AdmissibleTree build_tree(const GrowthFunction& w, const LevelSet& S, int horizon, int trunks = 1) {
  const auto alloc = allocate_levels(w, S, horizon, trunks);
  std::int64_t total = 0;
  for (const auto& a : alloc) {
    total += a.count;
    if (total > kMaxTreeVertices) throw InfeasibleGrowth(horizon, "tree too large to materialize");
  }
  std::vector<AdmissibleTree::Vertex> vs;
  vs.reserve(static_cast<std::size_t>(total));
  std::vector<int> departure;
  departure.reserve(static_cast<std::size_t>(total));
  vs.push_back({0, kNoVertex, 0, 0});
  departure.push_back(-1);

  std::vector<VertexId> order;
  VertexId level_begin = 0;
  for (int n = 0; n < horizon; ++n) {
    const VertexId level_end = static_cast<VertexId>(vs.size());
    const auto& a = alloc[static_cast<std::size_t>(n)];
    // trunk continuations
    for (int t = 0; t < trunks; ++t) {
      const VertexId parent = (n == 0) ? 0 : level_begin + t;
      vs.push_back({n + 1, parent, t, 0});
      departure.push_back(-1);
    }
    // side branches leaving the trunk at level n
    for (std::int64_t s = 0; s < a.side_children; ++s) {
      const VertexId parent = (n == 0) ? 0 : level_begin + static_cast<VertexId>(s);
      vs.push_back({n + 1, parent, -1, 0});
      departure.push_back(n);
    }
    // branch vertices, newest branch first
    order.clear();
    const VertexId first_branch = level_begin + (n == 0 ? 1 : trunks);
    for (VertexId v = first_branch; v < level_end; ++v) order.push_back(v);
    std::stable_sort(order.begin(), order.end(),
                     [&](VertexId x, VertexId y) { return departure[x] > departure[y]; });
    std::int64_t remaining = a.branch_children;
    for (VertexId v : order) {
      if (remaining == 0) break;
      const int give = remaining >= 2 ? 2 : 1;
      for (int c = 0; c < give; ++c) {
        vs.push_back({n + 1, v, -1, 0});
        departure.push_back(departure[v]);
      }
      remaining -= give;
    }
    level_begin = level_end;
  }
  return AdmissibleTree::from_vertices(std::move(vs), trunks, S);
}

/// Number of vertices on levels 0..n.
inline std::int64_t ball_count(const AdmissibleTree& tree, int n) {
  if (n < 0 || n > tree.horizon()) throw DomainError("ball_count level out of range");
  return static_cast<std::int64_t>(tree.level_range(n).second);
}

inline std::int64_t departure_level(const AdmissibleTree& tree, VertexId x) { return tree.departure_level(x); }

// ---------------------------------------------------------------------------
// Ends layout of an input tree T

struct RootedTreeLevel {
  std::int64_t count = 0;
  std::vector<std::int64_t> parents;  // index into the previous level
  std::vector<int> elements;          // optional catalog element per vertex
};

struct RootedTreeDescription {
  std::vector<RootedTreeLevel> levels;
};

struct LayoutVertex {
  int degree = 0;
  int element = 0;
};

struct EndsLayout {
  std::vector<std::int64_t> F;                         // vertices per level
  std::vector<std::vector<LayoutVertex>> vertices;     // per level
  std::optional<int> degree_bound;
  std::vector<std::pair<int, std::int64_t>> finite_branch_levels;  // (level, leaves ending there)
  std::int64_t ends = 1;                                // rays reaching the last level
  int horizon() const noexcept { return static_cast<int>(F.size()) - 1; }
  std::set<int> boundary_counts() const {
    std::set<int> out;
    for (const auto& lvl : vertices)
      for (const auto& v : lvl) out.insert(v.degree);
    return out;
  }
  std::int64_t F_at(int j) const { return F.at(static_cast<std::size_t>(std::min(j, horizon()))); }
};

/// Level profile, degrees, and terminating branches of T. The bound k is recorded only
/// when supplied and every degree respects it.
inline EndsLayout layout_from_tree(const RootedTreeDescription& T, std::optional<int> k = std::nullopt) {
  if (T.levels.empty() || T.levels[0].count != 1 || !T.levels[0].parents.empty())
    throw MalformedTree("level 0 must contain exactly the root");
  EndsLayout L;
  const int H = static_cast<int>(T.levels.size()) - 1;
  std::vector<std::vector<int>> children(T.levels.size());
  for (int j = 0; j <= H; ++j) {
    const auto& lvl = T.levels[static_cast<std::size_t>(j)];
    if (lvl.count < 1) throw MalformedTree("level " + std::to_string(j) + " is empty");
    if (j > 0 && static_cast<std::int64_t>(lvl.parents.size()) != lvl.count)
      throw MalformedTree("level " + std::to_string(j) + " parent list length differs from count");
    if (!lvl.elements.empty() && static_cast<std::int64_t>(lvl.elements.size()) != lvl.count)
      throw MalformedTree("level " + std::to_string(j) + " element list length differs from count");
    children[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(lvl.count), 0);
    if (j > 0) {
      const auto prev = T.levels[static_cast<std::size_t>(j - 1)].count;
      for (auto p : lvl.parents) {
        if (p < 0 || p >= prev) throw MalformedTree("parent index out of range on level " + std::to_string(j));
        ++children[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(p)];
      }
    }
    L.F.push_back(lvl.count);
  }
  int max_degree = 0;
  L.vertices.resize(T.levels.size());
  for (int j = 0; j <= H; ++j) {
    const auto& lvl = T.levels[static_cast<std::size_t>(j)];
    std::int64_t leaves = 0;
    for (std::int64_t i = 0; i < lvl.count; ++i) {
      const int c = children[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      LayoutVertex lv;
      lv.degree = c + (j > 0 ? 1 : 0);
      lv.element = lvl.elements.empty() ? 0 : lvl.elements[static_cast<std::size_t>(i)];
      max_degree = std::max(max_degree, lv.degree);
      L.vertices[static_cast<std::size_t>(j)].push_back(lv);
      if (c == 0 && j < H) ++leaves;
    }
    if (leaves > 0) L.finite_branch_levels.emplace_back(j, leaves);
  }
  L.ends = L.F.back();
  if (k && max_degree <= *k) L.degree_bound = *k;
  return L;
}

/// Ray of length `horizon` (one-ended, F = 1).
inline RootedTreeDescription ray_tree(int horizon) {
  RootedTreeDescription T;
  T.levels.push_back({1, {}, {}});
  for (int j = 1; j <= horizon; ++j) T.levels.push_back({1, {0}, {}});
  return T;
}

/// `ends` rays glued at the root.
inline RootedTreeDescription star_of_rays(int ends, int horizon) {
  RootedTreeDescription T;
  T.levels.push_back({1, {}, {}});
  for (int j = 1; j <= horizon; ++j) {
    RootedTreeLevel lvl;
    lvl.count = ends;
    for (int e = 0; e < ends; ++e) lvl.parents.push_back(j == 1 ? 0 : e);
    T.levels.push_back(std::move(lvl));
  }
  return T;
}

/// Every vertex has `arity` children.
inline RootedTreeDescription full_tree(int arity, int horizon) {
  RootedTreeDescription T;
  T.levels.push_back({1, {}, {}});
  std::int64_t prev = 1;
  for (int j = 1; j <= horizon; ++j) {
    RootedTreeLevel lvl;
    lvl.count = prev * arity;
    for (std::int64_t p = 0; p < prev; ++p)
      for (int c = 0; c < arity; ++c) lvl.parents.push_back(p);
    prev = lvl.count;
    T.levels.push_back(std::move(lvl));
  }
  return T;
}

}  // namespace volgrowth
