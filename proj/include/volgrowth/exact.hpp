#pragma once

// Exact integer / rational helpers shared by every module.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace volgrowth {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Integer numerator(const Rational& q) { return boost::multiprecision::numerator(q); }
inline Integer denominator(const Rational& q) { return boost::multiprecision::denominator(q); }

inline Integer floor_div(const Integer& a, const Integer& b) {
  Integer q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline Integer ceil_div(const Integer& a, const Integer& b) { return -floor_div(-a, b); }

inline Integer floor(const Rational& q) { return floor_div(numerator(q), denominator(q)); }
inline Integer ceil(const Rational& q) { return ceil_div(numerator(q), denominator(q)); }

inline Integer ipow(Integer base, unsigned exp) {
  Integer r = 1;
  while (exp) {
    if (exp & 1u) r *= base;
    base *= base;
    exp >>= 1u;
  }
  return r;
}

inline Rational rpow(const Rational& base, unsigned exp) {
  return Rational(ipow(numerator(base), exp), ipow(denominator(base), exp));
}

inline double to_double(const Integer& v) { return v.convert_to<double>(); }
inline double to_double(const Rational& q) { return q.convert_to<double>(); }

/// Natural log of a positive integer that may exceed double range.
inline double log_of(const Integer& v) {
  if (v <= 0) throw std::domain_error("log_of: non-positive argument");
  const auto bits = boost::multiprecision::msb(v);
  if (bits < 1000) return std::log(v.convert_to<double>());
  const unsigned shift = static_cast<unsigned>(bits) - 64;
  Integer top = v >> shift;
  return std::log(top.convert_to<double>()) + shift * std::log(2.0);
}

inline std::int64_t to_int64(const Integer& v, std::string_view what) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    throw std::overflow_error(std::string(what) + ": value exceeds 64-bit range");
  return v.convert_to<std::int64_t>();
}

/// "p/q", "p", or a finite decimal such as "1.25".
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty rational");
  if (auto slash = s.find('/'); slash != std::string::npos) {
    Integer p(s.substr(0, slash)), q(s.substr(slash + 1));
    if (q == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
    return Rational(p, q);
  }
  if (auto dot = s.find('.'); dot != std::string::npos) {
    bool neg = !s.empty() && s[0] == '-';
    std::string ip = s.substr(neg ? 1 : 0, dot - (neg ? 1 : 0));
    std::string fp = s.substr(dot + 1);
    if (ip.empty()) ip = "0";
    Integer scale = ipow(Integer(10), static_cast<unsigned>(fp.size()));
    Integer num = Integer(ip) * scale + (fp.empty() ? Integer(0) : Integer(fp));
    Rational r(num, scale);
    return neg ? Rational(-r) : r;
  }
  return Rational(Integer(s));
}

inline std::string to_string(const Integer& v) { return v.str(); }

inline std::string to_string(const Rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

/// Smallest rational p/scale ≥ x.
inline Rational rational_ceil(double x, std::int64_t scale = 1'000'000'000) {
  double scaled = std::ceil(x * static_cast<double>(scale));
  Rational r(Integer(static_cast<std::int64_t>(scaled)), Integer(scale));
  while (to_double(r) < x) r += Rational(1, scale);
  return r;
}

/// Exact test of a <= b * c^(p/q) for nonnegative a, b, c and p >= 0, q >= 1.
inline bool leq_times_rational_power(const Rational& a, const Rational& b, const Rational& c,
                                     unsigned p, unsigned q) {
  if (a <= 0) return true;
  if (b <= 0) return false;
  // (a/b)^q <= c^p
  return rpow(Rational(a / b), q) <= rpow(c, p);
}

}  // namespace volgrowth
