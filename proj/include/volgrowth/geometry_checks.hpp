#pragma once

// Radial connectivity of annuli (single and multiple ends) checked on the tree, and the
// inequality suite behind the doubling dichotomy checked on the gadget graph.

#include "volgrowth/errors.hpp"
#include "volgrowth/exact.hpp"
#include "volgrowth/growth.hpp"
#include "volgrowth/metric_graph.hpp"
#include "volgrowth/tree.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace volgrowth {

// ---------------------------------------------------------------------------
// Annulus connectivity

struct ThetaResult {
  double branch1 = 0;    // (1/3)(1 - ln lambda / ln 2)
  double branch2 = 0;    // root of the quadratic in theta
  double theta_sup = 0;  // min of both branches, never attained
  double theta = 0;      // theta_sup reduced by the safety margin
};

inline constexpr double kDefaultThetaMargin = 0.01;

inline ThetaResult rca_theta(double lambda, double alphaO, int t0, double margin = kDefaultThetaMargin) {
  if (!(lambda > 1 && lambda < 2)) throw DomainError("lambda must lie in (1, 2)");
  if (!(alphaO >= 1)) throw DomainError("alphaO must be at least 1");
  if (t0 < 0) throw DomainError("t0 must be nonnegative");
  if (!(margin >= 0 && margin < 1)) throw DomainError("theta margin must lie in [0, 1)");
  const double ln2 = std::log(2.0);
  const double D = std::log(alphaO) + 2.0 * t0 * ln2;  // ln(alpha 2^(2 t0))
  if (D <= 0) throw DomainError("degenerate denominator ln(alpha 2^(2 t0)) <= 0");
  const double disc = 9 * ln2 * ln2 - 4 * std::log(lambda / 2) * D;
  if (disc < 0) throw DomainError("negative discriminant");
  ThetaResult r;
  r.branch1 = (1 - std::log(lambda) / ln2) / 3;
  r.branch2 = (-3 * ln2 + std::sqrt(disc)) / (2 * D);
  r.theta_sup = std::min(r.branch1, r.branch2);
  r.theta = r.theta_sup * (1 - margin);
  return r;
}

/// Level past which Q_j's start keeps the departure inequality alive.
inline double rca_nj_threshold(double lambda, double alphaO, double theta, int t_j) {
  const double ln2 = std::log(2.0);
  const double den = (1 - 3 * theta) * ln2 - std::log(lambda);
  if (den <= 0) throw DomainError("theta too large: (1 - 3 theta) ln 2 <= ln lambda");
  return (std::log(alphaO) + t_j * ln2) / den;
}

struct RcaConfig {
  double theta = 0.1;
  int t0 = 1;
  double lambda = 1.5;
  double alphaO = 1;
  int l = 2;
  std::optional<int> C1, C2;
  std::optional<int> s_min;  // first level scanned; default: smallest s with s l > 1/theta^2
};

struct RcaViolation {
  int s = 0;
  VertexId vertex = kNoVertex;
  int trunk = 0;
  int departure = 0;
  double bound = 0;  // 3 theta s + 1 + t0
};

struct RcaWitness {
  int s = 0;
  Integer ball;         // w(s)
  Integer full_branch;  // sum_{i=0}^{s - ceil(bound)} 2^i: vertices a level holds if every late branch doubles
};

struct RcaReport {
  int s_first = 0, s_last = 0;
  std::vector<RcaViolation> violations;
  std::vector<RcaWitness> witnesses;
  std::vector<int> margin_failures;  // s with 2(2l + r(1 - theta)) >= r/theta, r = s l
  bool passes() const { return violations.empty() && margin_failures.empty(); }
};

namespace detail {

inline int rca_first_level(const RcaConfig& cfg) {
  if (cfg.s_min) return std::max(1, *cfg.s_min);
  // s l theta^2 > 1, with a relative slack so 0.1^2 rounding does not admit s l = 100
  int s = 1;
  while (!(static_cast<double>(s) * cfg.l * cfg.theta * cfg.theta > 1 + 1e-12)) ++s;
  return s;
}

inline RcaReport scan_departures(const AdmissibleTree& tree, const RcaConfig& cfg, int horizon) {
  if (!(cfg.theta > 0 && cfg.theta < 1)) throw DomainError("theta must lie in (0, 1)");
  RcaReport rep;
  rep.s_first = rca_first_level(cfg);
  rep.s_last = std::min(horizon, tree.horizon());
  for (int s = rep.s_first; s <= rep.s_last; ++s) {
    const double bound = 3 * cfg.theta * s + 1 + cfg.t0;
    const double r = static_cast<double>(s) * cfg.l;
    if (!(2 * (2 * cfg.l + r * (1 - cfg.theta)) < r / cfg.theta)) rep.margin_failures.push_back(s);
    const auto [first, last] = tree.level_range(s);
    bool any = false;
    for (VertexId x = first; x < last; ++x) {
      if (tree.vertex(x).on_trunk()) continue;
      const int dep = tree.departure_level(x);
      if (static_cast<double>(dep) > bound) continue;
      rep.violations.push_back({s, x, tree.home_trunk(x), dep, bound});
      any = true;
    }
    if (any) {
      const int late = s - static_cast<int>(std::ceil(bound));
      rep.witnesses.push_back({s, Integer(ball_count(tree, s)),
                               late < 0 ? Integer(0) : ipow(Integer(2), static_cast<unsigned>(late + 1)) - 1});
    }
  }
  return rep;
}

}  // namespace detail

/// Every branch vertex at level s (s l > 1/theta^2) left the trunk after level 3 theta s + 1 + t0.
inline RcaReport verify_rca(const AdmissibleTree& tree, const RcaConfig& cfg, int horizon) {
  if (tree.trunks() != 1) throw MultiTrunk("verify_rca needs a single-trunk tree; use verify_rce");
  return detail::scan_departures(tree, cfg, horizon);
}

struct RceReport {
  std::vector<RcaReport> per_end;  // violations split by the trunk the branch hangs from
  bool passes() const {
    for (const auto& r : per_end)
      if (!r.passes()) return false;
    return true;
  }
};

/// Each branch is measured against the trunk it hangs from, so every vertex reaches some end
/// inside its annulus.
inline RceReport verify_rce(const AdmissibleTree& tree, const RcaConfig& cfg, int horizon) {
  const auto all = detail::scan_departures(tree, cfg, horizon);
  RceReport rep;
  rep.per_end.assign(static_cast<std::size_t>(tree.trunks()), RcaReport{});
  for (auto& r : rep.per_end) {
    r.s_first = all.s_first;
    r.s_last = all.s_last;
    r.margin_failures = all.margin_failures;
  }
  for (const auto& v : all.violations) rep.per_end[static_cast<std::size_t>(v.trunk)].violations.push_back(v);
  for (const auto& w : all.witnesses)
    for (auto& r : rep.per_end)
      if (!r.violations.empty() && r.violations.back().s >= w.s) r.witnesses.push_back(w);
  return rep;
}

// ---------------------------------------------------------------------------
// Bounded-increment case

struct BoundedCaseRow {
  int s = 0;
  double mu = 0;
  double log_v = 0;    // ln v(s)
  double log_rhs = 0;  // ln of 2^(C2/(t0+C2)+1) (2^(C2(1-3theta)/(t0+C2)))^s
  bool contradiction = false;  // v(s) <= rhs: failure of connectivity is impossible at s
};

struct BoundedCaseReport {
  std::vector<BoundedCaseRow> rows;
  std::optional<int> holds_from;  // smallest scanned s from which every later row holds
};

inline BoundedCaseReport bounded_case_check(const GrowthFunction& v, double theta, int t0, int C2, int s_lo, int s_hi) {
  if (t0 + C2 <= 0) throw DomainError("t0 + C2 must be positive");
  const double ln2 = std::log(2.0);
  const double a = static_cast<double>(C2) / (t0 + C2) + 1;
  const double b = C2 * (1 - 3 * theta) / (t0 + C2);
  BoundedCaseReport rep;
  s_hi = std::min(s_hi, v.horizon());
  for (int s = std::max(0, s_lo); s <= s_hi; ++s) {
    BoundedCaseRow row;
    row.s = s;
    row.mu = (s * (1 - 3 * theta) + 1) / (t0 + C2) + 1;
    row.log_v = v(s) > 0 ? log_of(v(s)) : -INFINITY;
    row.log_rhs = (a + b * s) * ln2;
    row.contradiction = row.log_v <= row.log_rhs;
    rep.rows.push_back(row);
  }
  for (auto it = rep.rows.rbegin(); it != rep.rows.rend() && it->contradiction; ++it) rep.holds_from = it->s;
  return rep;
}

/// First s past which alphaO lambda^s stays below the bounded-case right-hand side.
inline std::optional<int> bounded_case_s0(double lambda, double alphaO, double theta, int t0, int C2) {
  const double ln2 = std::log(2.0);
  const double a = static_cast<double>(C2) / (t0 + C2) + 1;
  const double b = C2 * (1 - 3 * theta) / (t0 + C2);
  const double gap = b * ln2 - std::log(lambda);
  if (gap <= 0) return std::nullopt;
  return std::max(0, static_cast<int>(std::ceil((std::log(alphaO) - a * ln2) / gap)));
}

// ---------------------------------------------------------------------------
// Doubling dichotomy

struct DoublingConfig {
  Rational K = 1;
  Rational alpha_poly = 0;
  int l = 2;
  Rational A = 1, B = 1, r0 = 1;
};

struct DoublingRow {
  int n = 0;
  Integer increment;                    // v(n) - v(n-1)
  std::optional<std::int64_t> components;  // annulus (nl/3, nl]; absent on a radial quotient
  std::optional<bool> lower_ok;         // components >= increment
  bool upper_ok = true;                 // increment <= 4 K^2 (nl)^(2 alpha)
  Integer C_n;                          // least C with v(n) <= C n^(2 alpha + 1) + C
};

struct DoublingBoundReport {
  std::vector<DoublingRow> rows;
  std::optional<int> first_upper_violation;
  Integer C = 0;
  bool C_trend_unbounded = false;  // C_n still climbing through the final window
};

namespace detail {

/// Least integer C >= 1 with v <= C n^e + C, e = p/q.
inline Integer least_C(const Integer& v, int n, unsigned p, unsigned q) {
  auto ok = [&](const Integer& C) {
    if (v <= C) return true;
    if (n == 0) return false;
    return leq_times_rational_power(Rational(v - C), Rational(C), Rational(n), p, q);
  };
  Integer lo = 1, hi = std::max(Integer(1), v);
  while (lo < hi) {
    const Integer mid = (lo + hi) / 2;
    if (ok(mid)) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

}  // namespace detail

inline DoublingBoundReport doubling_bound_check(const GrowthFunction& v, const DoublingConfig& cfg,
                                                const MetricGraph* graph, int horizon, int window = 8) {
  if (cfg.K < 1) throw DomainError("K must be at least 1");
  if (cfg.alpha_poly < 0) throw DomainError("alpha_poly must be nonnegative");
  const Rational two_alpha = 2 * cfg.alpha_poly;
  const Rational e = two_alpha + 1;
  const auto p_up = numerator(two_alpha).convert_to<unsigned>(), q_up = denominator(two_alpha).convert_to<unsigned>();
  const auto p_c = numerator(e).convert_to<unsigned>(), q_c = denominator(e).convert_to<unsigned>();
  const Rational factor = 4 * cfg.K * cfg.K;
  const bool count = graph != nullptr && !graph->is_quotient();

  DoublingBoundReport rep;
  horizon = std::min(horizon, v.horizon());
  rep.C = detail::least_C(v(0), 0, p_c, q_c);
  for (int n = 1; n <= horizon; ++n) {
    DoublingRow row;
    row.n = n;
    row.increment = v.increment(n);
    const int nl = n * cfg.l;
    if (count) {
      row.components = annulus_components(*graph, Rational(nl, 3), Rational(nl));
      row.lower_ok = Integer(*row.components) >= row.increment;
    }
    row.upper_ok = leq_times_rational_power(Rational(row.increment), factor, Rational(nl), p_up, q_up);
    if (!row.upper_ok && !rep.first_upper_violation) rep.first_upper_violation = n;
    row.C_n = detail::least_C(v(n), n, p_c, q_c);
    rep.C = std::max(rep.C, row.C_n);
    rep.rows.push_back(std::move(row));
  }
  if (static_cast<int>(rep.rows.size()) > window) {
    bool climbing = true;
    for (std::size_t i = rep.rows.size() - static_cast<std::size_t>(window); i < rep.rows.size(); ++i)
      climbing = climbing && rep.rows[i].C_n > rep.rows[i - 1].C_n;
    rep.C_trend_unbounded = climbing;
  }
  return rep;
}

}  // namespace volgrowth
