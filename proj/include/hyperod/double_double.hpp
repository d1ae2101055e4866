#pragma once

// Double-double arithmetic: an unevaluated sum hi + lo of two doubles with
// |lo| <= ulp(hi)/2, giving roughly 106 bits (~31 decimal digits) of
// significand. All operations are built from the error-free transformations
// two_sum and two_prod (the latter through std::fma).

#include <cmath>
#include <iosfwd>
#include <limits>
#include <string>

namespace hyperod {

struct DoubleDouble {
  double hi = 0.0;
  double lo = 0.0;

  constexpr DoubleDouble() = default;
  constexpr DoubleDouble(double x) : hi(x), lo(0.0) {}  // NOLINT(google-explicit-constructor)
  constexpr DoubleDouble(double h, double l) : hi(h), lo(l) {}

  [[nodiscard]] explicit operator double() const { return hi + lo; }

  DoubleDouble& operator+=(const DoubleDouble& rhs);
  DoubleDouble& operator-=(const DoubleDouble& rhs);
  DoubleDouble& operator*=(const DoubleDouble& rhs);
  DoubleDouble& operator/=(const DoubleDouble& rhs);
};

/// Unit roundoff of the double-double format, 2^-104.
inline constexpr double kDoubleDoubleEps = 4.93038065763132e-32;

namespace eft {

/// s + e == a + b exactly.
inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bb = s - a;
  e = (a - (s - bb)) + (b - bb);
}

/// Requires |a| >= |b| (or a == 0).
inline void quick_two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  e = b - (s - a);
}

/// p + e == a * b exactly (barring underflow).
inline void two_prod(double a, double b, double& p, double& e) {
  p = a * b;
  e = std::fma(a, b, -p);
}

}  // namespace eft

inline DoubleDouble operator-(const DoubleDouble& a) { return {-a.hi, -a.lo}; }

inline DoubleDouble operator+(const DoubleDouble& a, const DoubleDouble& b) {
  double s, e, t, f;
  eft::two_sum(a.hi, b.hi, s, e);
  eft::two_sum(a.lo, b.lo, t, f);
  e += t;
  eft::quick_two_sum(s, e, s, e);
  e += f;
  eft::quick_two_sum(s, e, s, e);
  return {s, e};
}

inline DoubleDouble operator-(const DoubleDouble& a, const DoubleDouble& b) { return a + (-b); }

inline DoubleDouble operator*(const DoubleDouble& a, const DoubleDouble& b) {
  double p, e;
  eft::two_prod(a.hi, b.hi, p, e);
  e += a.hi * b.lo + a.lo * b.hi;
  eft::quick_two_sum(p, e, p, e);
  return {p, e};
}

inline DoubleDouble operator/(const DoubleDouble& a, const DoubleDouble& b) {
  // Long division: three correction steps.
  const double q1 = a.hi / b.hi;
  DoubleDouble r = a - DoubleDouble(q1) * b;
  const double q2 = r.hi / b.hi;
  r -= DoubleDouble(q2) * b;
  const double q3 = r.hi / b.hi;
  double s, e;
  eft::quick_two_sum(q1, q2, s, e);
  return DoubleDouble(s, e) + DoubleDouble(q3);
}

inline DoubleDouble& DoubleDouble::operator+=(const DoubleDouble& rhs) { return *this = *this + rhs; }
inline DoubleDouble& DoubleDouble::operator-=(const DoubleDouble& rhs) { return *this = *this - rhs; }
inline DoubleDouble& DoubleDouble::operator*=(const DoubleDouble& rhs) { return *this = *this * rhs; }
inline DoubleDouble& DoubleDouble::operator/=(const DoubleDouble& rhs) { return *this = *this / rhs; }

inline bool operator==(const DoubleDouble& a, const DoubleDouble& b) { return a.hi == b.hi && a.lo == b.lo; }
inline bool operator!=(const DoubleDouble& a, const DoubleDouble& b) { return !(a == b); }
inline bool operator<(const DoubleDouble& a, const DoubleDouble& b) {
  return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo);
}
inline bool operator>(const DoubleDouble& a, const DoubleDouble& b) { return b < a; }
inline bool operator<=(const DoubleDouble& a, const DoubleDouble& b) { return !(b < a); }
inline bool operator>=(const DoubleDouble& a, const DoubleDouble& b) { return !(a < b); }

inline DoubleDouble abs(const DoubleDouble& a) { return a.hi < 0.0 ? -a : a; }

/// Exact scaling by a power of two.
inline DoubleDouble ldexp(const DoubleDouble& a, int e) { return {std::ldexp(a.hi, e), std::ldexp(a.lo, e)}; }

inline bool isfinite(const DoubleDouble& a) { return std::isfinite(a.hi) && std::isfinite(a.lo); }

inline double to_double(const DoubleDouble& a) { return a.hi + a.lo; }
inline double to_double(double a) { return a; }
inline bool isfinite(double a) { return std::isfinite(a); }

inline DoubleDouble sqr(const DoubleDouble& a) { return a * a; }

/// One Newton step on top of the double square root doubles its accuracy.
inline DoubleDouble sqrt(const DoubleDouble& a) {
  if (a.hi <= 0.0) {
    return a.hi == 0.0 ? DoubleDouble() : DoubleDouble(std::numeric_limits<double>::quiet_NaN());
  }
  const double x = std::sqrt(a.hi);
  double p, e;
  eft::two_prod(x, x, p, e);
  const DoubleDouble residual = a - DoubleDouble(p, e);
  return DoubleDouble(x) + DoubleDouble(residual.hi / (2.0 * x));
}

/// Natural log, accurate to double precision, which is all the log-scale
/// bookkeeping needs.
inline double log(const DoubleDouble& a) { return std::log(a.hi) + std::log1p(a.lo / a.hi); }

/// Renders with `digits` significant decimal digits (up to ~32 meaningful).
std::string to_string(const DoubleDouble& a, int digits = 32);

/// Parses a decimal literal ("-1.25e-3") exactly rounded to double-double.
DoubleDouble dd_from_string(const std::string& text);

std::ostream& operator<<(std::ostream& os, const DoubleDouble& a);

/// pi to double-double precision.
inline constexpr DoubleDouble kDdPi{3.141592653589793116e+00, 1.224646799147353207e-16};

}  // namespace hyperod
