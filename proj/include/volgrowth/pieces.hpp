#pragma once

// Discrete piece models (Q, R, K, J, HS), the catalog of closed building blocks,
// the per-level parameter schedule, and the warp-function calibration.

#include "volgrowth/errors.hpp"
#include "volgrowth/exact.hpp"
#include "volgrowth/tree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace volgrowth {

enum class PieceKind { Q, R, K, J, HS };

inline const char* kind_name(PieceKind k) {
  switch (k) {
    case PieceKind::Q: return "Q";
    case PieceKind::R: return "R";
    case PieceKind::K: return "K";
    case PieceKind::J: return "J";
    case PieceKind::HS: return "HS";
  }
  return "?";
}

inline PieceKind parse_kind(const std::string& s) {
  if (s == "Q") return PieceKind::Q;
  if (s == "R") return PieceKind::R;
  if (s == "K") return PieceKind::K;
  if (s == "J") return PieceKind::J;
  if (s == "HS") return PieceKind::HS;
  throw InvalidPiece("unknown piece kind '" + s + "'");
}

using Profile = std::vector<Rational>;  // v'(1..extent), one entry per unit depth

inline Rational profile_max(const Profile& p) {
  return p.empty() ? Rational(0) : *std::max_element(p.begin(), p.end());
}
inline Rational profile_min(const Profile& p) {
  return p.empty() ? Rational(0) : *std::min_element(p.begin(), p.end());
}

struct PieceParams {
  PieceKind kind = PieceKind::HS;
  int height_units = 1;               // t, 1 except for Q
  int index = -1;                     // j for Q_j and R_j
  Profile profile;                    // summed over components
  std::vector<Profile> component_profiles;
  Rational diameter = 0;              // boundary diameter parameter
  int components = 1;

  int extent() const { return static_cast<int>(profile.size()); }

  static PieceParams single(PieceKind kind, Profile p, Rational diameter = 0) {
    PieceParams out;
    out.kind = kind;
    out.profile = p;
    out.component_profiles = {std::move(p)};
    out.diameter = std::move(diameter);
    return out;
  }

  /// Pieces whose profile is the pointwise sum of the given components.
  static PieceParams multi(PieceKind kind, std::vector<Profile> parts, int height, int index, Rational diameter) {
    PieceParams out;
    out.kind = kind;
    out.height_units = height;
    out.index = index;
    out.diameter = std::move(diameter);
    out.components = static_cast<int>(parts.size());
    std::size_t len = 0;
    for (const auto& p : parts) len = std::max(len, p.size());
    out.profile.assign(len, Rational(0));
    for (const auto& p : parts)
      for (std::size_t i = 0; i < p.size(); ++i) out.profile[i] += p[i];
    out.component_profiles = std::move(parts);
    return out;
  }
};

struct PieceConstants {
  int l = 2;
  Rational h = 1, H = 2;
  Rational u = 1, U = 2;
};

/// Checks the inequality block of the piece's kind. Volume caps for Q and R are passed
/// by the caller since they depend on the schedule.
inline void validate_piece(const PieceParams& p, const PieceConstants& c, const std::optional<Rational>& Uj = {},
                           const std::optional<Rational>& uj = {}) {
  if (p.height_units < 1) throw InvalidPiece("height must be positive");
  if (p.components < 1 || static_cast<int>(p.component_profiles.size()) != p.components)
    throw InvalidPiece("component count does not match the component profiles");
  for (const auto& x : p.profile)
    if (x < 0) throw InvalidPiece("negative profile entry");
  const int lt = c.l * p.height_units;
  const int lo = (lt + 2) / 3;
  for (const auto& cp : p.component_profiles)
    if (static_cast<int>(cp.size()) < lo || static_cast<int>(cp.size()) > lt)
      throw InvalidPiece(std::string(kind_name(p.kind)) + " extent " + std::to_string(cp.size()) +
                         " outside [" + std::to_string(lo) + ", " + std::to_string(lt) + "]");
  switch (p.kind) {
    case PieceKind::K:
    case PieceKind::J:
    case PieceKind::HS:
      if (profile_min(p.profile) < c.h || profile_max(p.profile) > c.H)
        throw InvalidPiece(std::string(kind_name(p.kind)) + " profile leaves [h, H]");
      break;
    case PieceKind::Q:
      if (Uj && profile_max(p.profile) > *Uj) throw InvalidPiece("Q profile exceeds U_j");
      break;
    case PieceKind::R:
      if (uj && profile_max(p.profile) > *uj) throw InvalidPiece("R profile exceeds u_j");
      if (uj && Uj && *uj > *Uj) throw InvalidPiece("u_j exceeds U_j");
      break;
  }
}

// ---------------------------------------------------------------------------
// Catalog

struct ElementVariant {
  Profile profile;          // per unit depth, before thickening
  Rational boundary_diameter = 1;
};

struct CatalogElement {
  std::string name;
  std::map<int, ElementVariant> variants;  // keyed by number of boundary spheres
};

struct PieceCatalog {
  std::vector<CatalogElement> elements;
  PieceConstants constants;
  int t0 = 1;
  Profile R, K, J, HS;  // per-component profiles of the standard pieces

  int alpha() const noexcept { return static_cast<int>(elements.size()); }

  /// Single element with every boundary count up to `max_boundary`; standard profiles of extent l.
  static PieceCatalog standard(int l = 2, int max_boundary = 4, int elements = 1) {
    PieceCatalog c;
    c.constants.l = l;
    c.constants.h = 1;
    c.constants.H = 2;
    c.constants.u = 1;
    c.R = Profile(static_cast<std::size_t>(l), Rational(1));
    c.K = Profile(static_cast<std::size_t>(l), Rational(1));
    c.J = Profile(static_cast<std::size_t>(l), Rational(2));
    c.HS = Profile(static_cast<std::size_t>(l), Rational(1));
    for (int e = 0; e < elements; ++e) {
      CatalogElement el;
      el.name = e == 0 ? "sphere" : "torus" + std::to_string(e);
      for (int b = 0; b <= max_boundary; ++b)
        el.variants[b] = {Profile(static_cast<std::size_t>(l), Rational(1 + e + (b > 2 ? 1 : 0))), Rational(1 + e)};
      c.elements.push_back(std::move(el));
    }
    c.constants.U = c.max_element_volume();
    return c;
  }

  Rational max_element_volume() const {
    Rational m = 0;
    for (const auto& e : elements)
      for (const auto& [b, v] : e.variants) m = std::max(m, profile_max(v.profile));
    return m;
  }

  int max_element_extent() const {
    int m = 0;
    for (const auto& e : elements)
      for (const auto& [b, v] : e.variants) m = std::max(m, static_cast<int>(v.profile.size()));
    return m;
  }

  const ElementVariant& variant(int element, int boundary) const {
    if (element < 0 || element >= alpha())
      throw IncompleteCatalog("no catalog element with index " + std::to_string(element));
    const auto& e = elements[static_cast<std::size_t>(element)];
    auto it = e.variants.find(boundary);
    if (it == e.variants.end())
      throw IncompleteCatalog("element '" + e.name + "' has no variant with " + std::to_string(boundary) +
                              " boundary spheres");
    return it->second;
  }

  /// Standard pieces span exactly one level (extent l) and never drop below h, which is
  /// what keeps every unit step of the discrete growth inside the volume band.
  void validate() const {
    const auto& c = constants;
    if (c.l < 1) throw InvalidPiece("l must be positive");
    if (c.h > c.H) throw InvalidPiece("h exceeds H");
    if (c.u > c.U) throw InvalidPiece("u exceeds U");
    if (elements.empty()) throw IncompleteCatalog("catalog has no elements");
    for (const auto* p : {&R, &K, &J, &HS})
      if (static_cast<int>(p->size()) != c.l) throw InvalidPiece("standard piece profiles must have extent l");
    validate_piece(PieceParams::single(PieceKind::K, K), c);
    validate_piece(PieceParams::single(PieceKind::J, J), c);
    validate_piece(PieceParams::single(PieceKind::HS, HS), c);
    validate_piece(PieceParams::single(PieceKind::R, R), c, c.U, c.U);
    if (profile_min(R) < c.h) throw InvalidPiece("R profile below h");
    for (const auto& e : elements)
      for (const auto& [b, v] : e.variants)
        if (v.profile.empty() || profile_min(v.profile) < c.h)
          throw InvalidPiece("element '" + e.name + "' profile below h");
  }
};

// ---------------------------------------------------------------------------
// Parameter schedule

/// Height, diameter and volume parameters per T-level j. Q_j holds the F(j) components of
/// level j; R_j (after Q_j) carries the F(j+1) boundary components of Q_j's top. Trunk
/// pieces always have at least one component per trunk; missing ones are R-profile collars.
struct ParamSchedule {
  PieceConstants constants;
  int t0 = 1;
  int trunks = 1;
  std::optional<int> degree_bound;
  std::vector<std::int64_t> F;
  std::vector<Rational> d;       // per level j
  std::vector<Rational> q_max;   // max v' of Q_j
  Rational d0 = 0;
  Rational r_component = 1;      // max v' of one R component
  Rational element_max = 0;      // max v' over every catalog variant

  static std::size_t clamp_index(int j, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(j, 0, static_cast<int>(n) - 1));
  }
  std::int64_t F_at(int j) const { return F.at(clamp_index(j, F.size())); }
  int t(int) const { return t0; }
  Rational d_at(int j) const { return degree_bound ? d0 : d.at(clamp_index(j, d.size())); }
  std::int64_t r_components(int j) const { return std::max<std::int64_t>(F_at(j + 1), trunks); }
  Rational u_at(int j) const { return r_component * Rational(r_components(j)); }
  Rational U_at(int j) const {
    Rational q = q_max.at(clamp_index(j, q_max.size()));
    if (degree_bound)
      q = std::max(q, constants.U * Rational(ipow(Integer(*degree_bound), static_cast<unsigned>(std::max(j, 0)))));
    return std::max(q, u_at(j));
  }
};

/// Thickens a profile to exactly `extent` units by repeating its deepest value.
inline Profile thicken(Profile p, int extent) {
  if (p.empty()) throw InvalidPiece("empty element profile");
  if (static_cast<int>(p.size()) > extent) throw InvalidPiece("profile longer than the thickened extent");
  const Rational last = p.back();
  p.resize(static_cast<std::size_t>(extent), last);
  return p;
}

inline ParamSchedule synthesize_params(const PieceCatalog& catalog, const EndsLayout& layout, int trunks = 1) {
  catalog.validate();
  if (trunks < 1) throw DomainError("at least one trunk required");
  ParamSchedule s;
  s.constants = catalog.constants;
  s.degree_bound = layout.degree_bound;
  s.trunks = trunks;
  s.F = layout.F;
  const int l = catalog.constants.l;
  s.t0 = std::max(catalog.t0, (catalog.max_element_extent() + l - 1) / l);
  s.r_component = profile_max(catalog.R);
  s.element_max = catalog.max_element_volume();
  for (const auto& lvl : layout.vertices)
    for (const auto& v : lvl) (void)catalog.variant(v.element, v.degree);
  if (layout.degree_bound) {
    for (const auto& e : catalog.elements)
      for (int b = 0; b <= *layout.degree_bound + 1; ++b)
        if (auto it = e.variants.find(b); it != e.variants.end()) s.d0 = std::max(s.d0, it->second.boundary_diameter);
  }
  for (std::size_t j = 0; j < layout.vertices.size(); ++j) {
    // any element may sit at any vertex: take the maximum over choices
    Rational dj = 0, qj = 0;
    for (const auto& v : layout.vertices[j]) {
      Rational worst = profile_max(catalog.variant(v.element, v.degree).profile);
      dj = std::max(dj, catalog.variant(v.element, v.degree).boundary_diameter);
      for (const auto& e : catalog.elements)
        if (auto it = e.variants.find(v.degree); it != e.variants.end()) {
          dj = std::max(dj, it->second.boundary_diameter);
          worst = std::max(worst, profile_max(it->second.profile));
        }
      qj += worst;
    }
    const auto collars = std::max<std::int64_t>(0, trunks - static_cast<std::int64_t>(layout.vertices[j].size()));
    qj += s.r_component * Rational(collars);
    s.d.push_back(dj);
    s.q_max.push_back(qj);
  }
  return s;
}

/// Q_j built from the level-j vertices of the layout, every component thickened to l*t.
inline PieceParams make_Q(const PieceCatalog& catalog, const EndsLayout& layout, const ParamSchedule& s, int j,
                          std::optional<int> t = std::nullopt) {
  const int height = t.value_or(s.t(j));
  const int extent = catalog.constants.l * height;
  const int lvl = std::min(j, layout.horizon());
  std::vector<Profile> parts;
  for (const auto& v : layout.vertices[static_cast<std::size_t>(lvl)])
    parts.push_back(thicken(catalog.variant(v.element, v.degree).profile, extent));
  while (static_cast<int>(parts.size()) < s.trunks) parts.push_back(thicken(catalog.R, extent));
  return PieceParams::multi(PieceKind::Q, std::move(parts), height, j, s.d_at(j));
}

/// R_j: one copy of the R profile per boundary component of Q_j's top (at least one per trunk).
inline PieceParams make_R(const PieceCatalog& catalog, const ParamSchedule& s, int j) {
  std::vector<Profile> parts(static_cast<std::size_t>(s.r_components(j)), catalog.R);
  return PieceParams::multi(PieceKind::R, std::move(parts), 1, j, s.d_at(j));
}

// ---------------------------------------------------------------------------
// Warp function and thickening

struct WarpSample {
  double t = 0, f = 0, ratio = 0;  // ratio = f''/f
};

struct WarpProfile {
  double lambda = 1, T = 4;
  std::vector<WarpSample> samples;
  double max_ratio = 0;
  double D = 0;
};

/// Closed-form warp factor, 1 below t=1, lambda above t=T-1, smooth in between.
inline double warp_value(double lambda, double T, double x) {
  if (x <= 1) return 1.0;
  if (x >= T - 1) return lambda;
  const double a = (T - 2) / (x - 1), b = (T - 2) / (T - 1 - x);
  return 1.0 + (lambda - 1) / (1.0 + std::exp(a - b));
}

namespace detail {

inline double max_ratio_on_grid(double lambda, double T, std::size_t grid, std::vector<WarpSample>* out) {
  const double step = T / static_cast<double>(grid);
  double worst = 0;
  if (out) out->clear();
  for (std::size_t i = 0; i <= grid; ++i) {
    const double x = step * static_cast<double>(i);
    const double f = warp_value(lambda, T, x);
    double ratio = 0;
    if (i > 0 && i < grid) {
      const double f2 =
          (warp_value(lambda, T, x + step) - 2 * f + warp_value(lambda, T, x - step)) / (step * step);
      ratio = f2 / f;
    }
    worst = std::max(worst, std::abs(ratio));
    if (out) out->push_back({x, f, ratio});
  }
  return worst;
}

}  // namespace detail

/// Samples f_T and estimates max |f''/f| by central differences, refining the grid
/// until two successive estimates agree to `tol`. Steps below kMinWarpStep are not
/// used since rounding then dominates the second difference.
inline constexpr double kMinWarpStep = 2e-4;

inline WarpProfile warp_function(double lambda, double T, std::size_t grid, double tol = 1e-8) {
  if (!(lambda >= 1)) throw DomainError("warp scale must be at least 1");
  if (!(T >= 4)) throw DomainError("warp length must be at least 4");
  if (grid < 100) throw DomainError("warp grid needs at least 100 cells");
  WarpProfile w;
  w.lambda = lambda;
  w.T = T;
  double prev = detail::max_ratio_on_grid(lambda, T, grid, nullptr);
  std::size_t g = grid;
  for (int round = 0; round < 6 && T / static_cast<double>(2 * g) >= kMinWarpStep; ++round) {
    const std::size_t finer = g * 2;
    const double cur = detail::max_ratio_on_grid(lambda, T, finer, nullptr);
    g = finer;
    if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) {
      prev = cur;
      break;
    }
    prev = cur;
  }
  w.max_ratio = prev;
  detail::max_ratio_on_grid(lambda, T, grid, &w.samples);
  return w;
}

struct Thickening {
  double T = 0;
  double max_ratio = 0;
};

/// Smallest T >= 3 D with max |f''/f| <= 1 + tol, by doubling then bisection.
inline Thickening min_thickening(double lambda, double D, double tol = 1e-6, double resolution = 1e-6) {
  if (!(lambda >= 1) || !(D >= 0)) throw DomainError("min_thickening needs lambda >= 1 and D >= 0");
  auto ratio = [&](double T) {
    const auto grid = static_cast<std::size_t>(std::clamp(T * 200.0, 2000.0, 400000.0));
    return warp_function(lambda, T, grid, 1e-7).max_ratio;
  };
  auto ok = [&](double T) { return ratio(T) <= 1 + tol; };
  double hi = std::max(4.0, 3 * D);
  if (ok(hi)) return {hi, ratio(hi)};
  double lo = hi;
  for (int i = 0;; ++i) {
    if (i > 40) throw SearchExhausted("no admissible thickening below 2^40");
    lo = hi;
    hi *= 2;
    if (ok(hi)) break;
  }
  while (hi - lo > resolution * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid))
      hi = mid;
    else
      lo = mid;
  }
  return {hi, ratio(hi)};
}

/// Least positive root of x^a (lambda-1) - x^(a-2) + lambda; nullopt when none exists.
inline std::optional<double> beta_root(double lambda, int alpha_exp, double tol = 1e-12) {
  if (alpha_exp < 2 || alpha_exp % 2 != 0) throw DomainError("beta exponent must be even and at least 2");
  if (!(lambda > 1)) throw DomainError("beta polynomial needs lambda > 1");
  auto p = [&](double x) {
    return std::pow(x, alpha_exp) * (lambda - 1) - std::pow(x, alpha_exp - 2) + lambda;
  };
  const double bound = 1 + std::max(1.0, lambda) / (lambda - 1);
  const int steps = 200000;
  double prev_x = 0, prev_v = p(0);
  for (int i = 1; i <= steps; ++i) {
    const double x = bound * i / steps;
    const double v = p(x);
    if (v == 0) return x;
    if ((v < 0) != (prev_v < 0)) {
      double lo = prev_x, hi = x;
      const bool lo_neg = prev_v < 0;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if ((p(mid) < 0) == lo_neg)
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev_x = x;
    prev_v = v;
  }
  return std::nullopt;
}

}  // namespace volgrowth
