#pragma once

// Growth functions: bgd detection, normalization, growth-type certificates,
// doubling and increment-limit classification.

#include "volgrowth/errors.hpp"
#include "volgrowth/exact.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace volgrowth {

enum class GrowthSource { Table, Polynomial, Exponential };

/// A non-decreasing, nonnegative integer sequence on [0, horizon].
class GrowthFunction {
 public:
  static GrowthFunction table(std::vector<Integer> values) {
    GrowthFunction g;
    g.values_ = std::move(values);
    g.validate();
    return g;
  }

  /// values(n) = floor(sum_i coeffs[i] * n^i).
  static GrowthFunction polynomial(std::vector<Rational> coeffs, int horizon) {
    GrowthFunction g;
    g.source_ = GrowthSource::Polynomial;
    g.coeffs_ = std::move(coeffs);
    g.values_.reserve(static_cast<std::size_t>(std::max(horizon, 0)) + 1);
    for (int n = 0; n <= horizon; ++n) {
      Rational acc = 0;
      for (auto it = g.coeffs_.rbegin(); it != g.coeffs_.rend(); ++it) acc = acc * n + *it;
      g.values_.push_back(floor(acc));
    }
    g.validate();
    return g;
  }

  /// values(n) = floor(coeff * base^n).
  static GrowthFunction exponential(Rational base, Rational coeff, int horizon) {
    if (base < 1) throw InvalidGrowthFunction("exponential base must be >= 1");
    GrowthFunction g;
    g.source_ = GrowthSource::Exponential;
    g.coeffs_ = {base, coeff};
    Rational power = 1;
    for (int n = 0; n <= horizon; ++n) {
      g.values_.push_back(floor(coeff * power));
      power *= base;
    }
    g.validate();
    return g;
  }

  int horizon() const noexcept { return static_cast<int>(values_.size()) - 1; }
  const Integer& operator()(int n) const { return values_.at(static_cast<std::size_t>(n)); }
  std::span<const Integer> values() const noexcept { return values_; }
  GrowthSource source() const noexcept { return source_; }
  /// Polynomial coefficients, or {base, coeff} for exponential sources.
  const std::vector<Rational>& coefficients() const noexcept { return coeffs_; }

  /// v(n) - v(n-1), with v(-1) taken as 0.
  Integer increment(int n) const { return n == 0 ? values_[0] : values_.at(n) - values_.at(n - 1); }

  GrowthFunction truncated(int horizon) const {
    if (horizon > this->horizon()) throw InvalidGrowthFunction("truncation beyond horizon");
    GrowthFunction g = *this;
    g.values_.resize(static_cast<std::size_t>(horizon) + 1);
    g.validate();
    return g;
  }

  bool operator==(const GrowthFunction& o) const { return values_ == o.values_; }

 private:
  void validate() const {
    if (values_.size() < 3) throw InvalidGrowthFunction("horizon must be at least 2");
    for (std::size_t n = 0; n < values_.size(); ++n) {
      if (values_[n] < 0) throw InvalidGrowthFunction("negative value at " + std::to_string(n));
      if (n > 0 && values_[n] < values_[n - 1])
        throw InvalidGrowthFunction("sequence decreases at " + std::to_string(n));
    }
  }

  std::vector<Integer> values_;
  GrowthSource source_ = GrowthSource::Table;
  std::vector<Rational> coeffs_;
};

// ---------------------------------------------------------------------------
// Bounded growth of derivative

struct BgdReport {
  bool is_bgd = false;
  std::optional<Integer> minimal_L;
  std::optional<int> failing_index;
};

inline constexpr std::int64_t kDefaultSearchCap = 1'000'000;

/// Minimal L with 1/L <= d(n+1) <= L d(n) for all n <= horizon-2, where d(n) = v(n+1)-v(n).
inline BgdReport check_bgd(const GrowthFunction& v, Integer cap = kDefaultSearchCap) {
  const int H = v.horizon();
  if (H < 3) throw HorizonTooSmall("check_bgd needs horizon >= 3");
  BgdReport rep;
  Integer L = 1;
  for (int n = 0; n <= H - 2; ++n) {
    const Integer d0 = v(n + 1) - v(n);
    const Integer d1 = v(n + 2) - v(n + 1);
    // integer increments: 1/L <= d1 holds for some L iff d1 >= 1
    if (d1 <= 0 || d0 <= 0) {
      rep.failing_index = n;
      return rep;
    }
    const Integer need = ceil_div(d1, d0);
    if (need > cap) {
      rep.failing_index = n;
      return rep;
    }
    L = std::max(L, need);
  }
  rep.is_bgd = true;
  rep.minimal_L = L;
  return rep;
}

/// The three conditions every normalized function must meet exactly
/// (the growth-rate condition is checked separately against a reported lambda).
inline bool satisfies_normalized_increments(const GrowthFunction& w) {
  if (w(0) != 1) return false;
  for (int n = 0; n + 2 <= w.horizon(); ++n) {
    const Integer d0 = w(n + 1) - w(n), d1 = w(n + 2) - w(n + 1);
    if (d1 < 2 || d1 > 2 * d0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Growth type

struct InequalityWitness {
  int n = 0;
  Rational lhs;  // f(n)
  Rational rhs;  // A h(An+A) + A
};

struct GrowthCertificate {
  std::optional<Integer> A;
  int horizon = 0;
  std::vector<InequalityWitness> forward;   // f(n) <= A h(An+A) + A
  std::vector<InequalityWitness> backward;  // h(n) <= A f(An+A) + A
  bool found() const noexcept { return A.has_value(); }
};

namespace detail {

template <class T>
Rational as_rational(const T& x) {
  return Rational(x);
}

template <class T>
bool direction_holds(std::span<const T> f, std::span<const T> h, const Integer& A, int H,
                     std::vector<InequalityWitness>* out) {
  for (Integer n = 0; A * n + A <= H; ++n) {
    const int ni = n.convert_to<int>();
    const int arg = (A * n + A).template convert_to<int>();
    Rational lhs = as_rational(f[ni]);
    Rational rhs = Rational(A) * as_rational(h[arg]) + Rational(A);
    if (out) out->push_back({ni, lhs, rhs});
    if (lhs > rhs) return false;
  }
  return true;
}

}  // namespace detail

/// Smallest growth constant A <= A_max valid for every n with An+A <= min horizon.
/// Works for any exact sequence type (Integer or Rational values).
template <class T>
GrowthCertificate growth_equivalent(std::span<const T> f, std::span<const T> h,
                                    Integer A_max = kDefaultSearchCap) {
  if (f.size() < 3 || h.size() < 3) throw HorizonTooSmall("growth_equivalent needs horizons >= 2");
  GrowthCertificate cert;
  const int H = static_cast<int>(std::min(f.size(), h.size())) - 1;
  cert.horizon = H;
  for (Integer A = 1; A <= A_max; ++A) {
    if (detail::direction_holds(f, h, A, H, nullptr) && detail::direction_holds(h, f, A, H, nullptr)) {
      cert.A = A;
      detail::direction_holds(f, h, A, H, &cert.forward);
      detail::direction_holds(h, f, A, H, &cert.backward);
      return cert;
    }
  }
  return cert;
}

inline GrowthCertificate growth_equivalent(const GrowthFunction& f, const GrowthFunction& h,
                                           Integer A_max = kDefaultSearchCap) {
  return growth_equivalent<Integer>(f.values(), h.values(), std::move(A_max));
}

// ---------------------------------------------------------------------------
// Normalization

struct NormalizeOptions {
  int max_dilation = 16;
  Integer A_max = kDefaultSearchCap;
  std::int64_t lambda_scale = 1'000'000;  // lambda reported as p / lambda_scale
};

struct NormalizeResult {
  GrowthFunction w;
  GrowthCertificate cert;  // w versus the input
  int dilation = 1;
  Rational lambda;  // w(n) <= alpha * lambda^n on the whole horizon, lambda < 2
  Integer alpha;
};

namespace detail {

inline GrowthFunction dilated_candidate(const GrowthFunction& v, int c) {
  const int H = v.horizon();
  std::vector<Integer> w(static_cast<std::size_t>(H) + 1);
  w[0] = 1;
  Integer prev;
  for (int n = 0; n < H; ++n) {
    const int k = (n + c - 1) / c;
    Integer src = v(k + 1) - v(k);
    Integer delta = std::max(Integer(2), src);
    if (n > 0) delta = std::min(delta, Integer(2 * prev));
    w[n + 1] = w[n] + delta;
    prev = delta;
  }
  return GrowthFunction::table(std::move(w));
}

/// Tail growth rate estimate rounded up to the lambda grid, plus the matching alpha.
inline std::pair<Rational, Integer> rate_bound(const GrowthFunction& w, std::int64_t scale) {
  const int H = w.horizon();
  const int mid = H / 2;
  const double est =
      std::exp((log_of(w(H)) - log_of(w(mid))) / static_cast<double>(H - mid));
  Rational lambda = rational_ceil(std::max(est, 1.0), scale);
  Rational power = 1, worst = 0;
  for (int n = 0; n <= H; ++n) {
    worst = std::max(worst, Rational(w(n)) / power);
    power *= lambda;
  }
  return {lambda, ceil(worst)};
}

}  // namespace detail

/// Time-dilated increment clamping, certified against the input by growth_equivalent.
inline NormalizeResult normalize(const GrowthFunction& v, const NormalizeOptions& opt = {}) {
  if (v.horizon() < 3) throw HorizonTooSmall("normalize needs horizon >= 3");
  if (!check_bgd(v).is_bgd) throw NormalizationFailed("input is not a bgd-function on its horizon");
  for (int c = 1; c <= opt.max_dilation; ++c) {
    GrowthFunction w = detail::dilated_candidate(v, c);
    auto [lambda, alpha] = detail::rate_bound(w, opt.lambda_scale);
    if (lambda >= 2) continue;
    GrowthCertificate cert = growth_equivalent(w, v, opt.A_max);
    if (!cert.found()) continue;
    return NormalizeResult{std::move(w), std::move(cert), c, lambda, alpha};
  }
  throw NormalizationFailed("no dilation up to " + std::to_string(opt.max_dilation) +
                            " yields a certified normalized function");
}

// ---------------------------------------------------------------------------
// Doubling

struct DoublingReport {
  std::optional<Rational> minimal_K;  // absent when flagged unbounded
  bool unbounded = false;
  std::vector<std::pair<int, Rational>> sup_sequence;  // (n, v(2n)/v(n))
};

namespace detail {

/// Final `window` entries strictly increasing with non-decreasing steps.
inline bool accelerating_tail(const std::vector<Rational>& xs, int window) {
  if (window < 3 || static_cast<int>(xs.size()) < window) return false;
  const std::size_t start = xs.size() - static_cast<std::size_t>(window);
  for (std::size_t i = start + 1; i < xs.size(); ++i)
    if (xs[i] <= xs[i - 1]) return false;
  for (std::size_t i = start + 2; i < xs.size(); ++i)
    if (xs[i] - xs[i - 1] < xs[i - 1] - xs[i - 2]) return false;
  return true;
}

}  // namespace detail

inline DoublingReport check_doubling(const GrowthFunction& v, int window = 8) {
  DoublingReport rep;
  std::vector<Rational> ratios;
  for (int n = 1; 2 * n <= v.horizon(); ++n) {
    if (v(n) == 0) {
      if (v(2 * n) == 0) continue;
      rep.unbounded = true;
      return rep;
    }
    Rational r(v(2 * n), v(n));
    rep.sup_sequence.emplace_back(n, r);
    ratios.push_back(r);
  }
  if (detail::accelerating_tail(ratios, window)) {
    rep.unbounded = true;
    return rep;
  }
  Rational K = 1;
  for (const auto& r : ratios) K = std::max(K, r);
  rep.minimal_K = K;
  return rep;
}

// ---------------------------------------------------------------------------
// Increment limits (heuristic on a finite horizon)

struct IncrementsDiverge {};
struct IncrementsBoundedBy {
  Integer A;
};
using LimitBehavior = std::variant<IncrementsDiverge, IncrementsBoundedBy>;

/// Bounded when the largest increment of the final window was already reached before it.
inline LimitBehavior limit_behavior(const GrowthFunction& v, int window) {
  const int H = v.horizon();
  if (window < 1 || window > H) throw DomainError("limit_behavior window must lie in [1, horizon]");
  Integer overall = 0, prefix = 0;
  bool have_prefix = false;
  for (int n = 1; n <= H; ++n) {
    Integer d = v.increment(n);
    overall = std::max(overall, d);
    if (n <= H - window) {
      prefix = have_prefix ? std::max(prefix, d) : d;
      have_prefix = true;
    }
  }
  if (!have_prefix) {
    for (int n = 2; n <= H; ++n)
      if (v.increment(n) != v.increment(1)) return IncrementsDiverge{};
    return IncrementsBoundedBy{overall};
  }
  if (prefix == overall) return IncrementsBoundedBy{overall};
  return IncrementsDiverge{};
}

inline bool increments_diverge(const GrowthFunction& v, int window) {
  return std::holds_alternative<IncrementsDiverge>(limit_behavior(v, window));
}

/// Heuristic for v(n)/n -> infinity: the running maximum of v(n)/n keeps rising in the final window.
inline bool superlinear(const GrowthFunction& v, int window) {
  const int H = v.horizon();
  if (window < 1 || window >= H) throw DomainError("superlinear window must lie in [1, horizon)");
  Rational prefix = 0, tail = 0;
  for (int n = 1; n <= H; ++n) {
    Rational r(v(n), n);
    if (n <= H - window)
      prefix = std::max(prefix, r);
    else
      tail = std::max(tail, r);
  }
  return tail > prefix;
}

}  // namespace volgrowth
