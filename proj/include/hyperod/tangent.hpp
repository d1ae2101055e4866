#pragma once

// Orbit propagation together with the state-transition matrix F^n and the
// parameter sensitivity ∂f^n/∂k, for n in [-N, N]. Both blocks carry their
// own power-of-two scale so exponential growth never reaches the entries.
//
// States are templated on the working scalar: double for the estimation
// loop, DoubleDouble for the normal-matrix experiments. The orbit itself and
// the one-step Jacobians are always evaluated in double.

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <numbers>

#include "hyperod/double_double.hpp"
#include "hyperod/dynamics.hpp"
#include "hyperod/error.hpp"
#include "hyperod/matrix.hpp"

namespace hyperod {

/// Entries are kept with max |entry| in [2^-kRescaleBits, 2^kRescaleBits].
inline constexpr int kRescaleBits = 512;

template <class Real>
struct BasicTangentState {
  long n = 0;
  PhasePoint x;
  Matrix<Real> F;        // F^n = 2^F_exp · F
  int F_exp = 0;
  Vec<Real> dk;          // ∂f^n/∂k = 2^dk_exp · dk, unless dk_zero
  int dk_exp = 0;
  bool dk_zero = true;   // exact zero at n = 0 (log-scale −∞)

  [[nodiscard]] std::size_t dim() const { return x.dim(); }
  [[nodiscard]] double logscale_F() const { return F_exp * std::numbers::ln2; }
  [[nodiscard]] double logscale_dk() const {
    return dk_zero ? -std::numeric_limits<double>::infinity() : dk_exp * std::numbers::ln2;
  }
  /// Natural log of the largest |entry| of the true F^n.
  [[nodiscard]] double log_max_F() const { return logscale_F() + std::log(to_double(max_abs(F))); }

  /// Unscaled values in double; may overflow for long orbits.
  [[nodiscard]] Matrix<double> true_F() const {
    Matrix<double> out(F.rows(), F.cols());
    for (std::size_t i = 0; i < F.data().size(); ++i) {
      out.data()[i] = std::ldexp(to_double(F.data()[i]), F_exp);
    }
    return out;
  }
  [[nodiscard]] Vec<double> true_dk() const {
    Vec<double> out(dim(), 0.0);
    if (!dk_zero) {
      for (std::size_t i = 0; i < dk.size(); ++i) {
        out[i] = std::ldexp(to_double(dk[i]), dk_exp);
      }
    }
    return out;
  }

  static BasicTangentState origin(const PhasePoint& x0) {
    BasicTangentState s;
    s.x = x0;
    s.F = Matrix<Real>::identity(x0.dim());
    s.dk = Vec<Real>(x0.dim(), Real(0));
    return s;
  }
};

using TangentState = BasicTangentState<double>;
using TangentStateDD = BasicTangentState<DoubleDouble>;

namespace detail {

inline double scale_pow2(double v, int e) { return std::ldexp(v, e); }
inline DoubleDouble scale_pow2(const DoubleDouble& v, int e) { return ldexp(v, e); }

/// Exponent shift that brings max|v| near 1, or 0 if already inside the band.
template <class Real>
int rescale_shift(const std::vector<Real>& data, bool force = false) {
  const double m = to_double(max_abs(data));
  if (m == 0.0 || !std::isfinite(m)) {
    return 0;
  }
  const double lo = std::ldexp(1.0, -kRescaleBits);
  const double hi = std::ldexp(1.0, kRescaleBits);
  if (!force && m >= lo && m <= hi) {
    return 0;
  }
  int e = 0;
  std::frexp(m, &e);
  return e;
}

template <class Real>
void apply_shift(std::vector<Real>& data, int& exponent, int shift) {
  if (shift == 0) return;
  for (auto& v : data) {
    v = scale_pow2(v, -shift);
  }
  exponent += shift;
}

template <class Real>
void check_finite(const BasicTangentState<Real>& s) {
  for (const auto& v : s.F.data()) {
    if (!isfinite(v)) throw Error(ErrorCode::NonFinite, "tangent propagation: non-finite state-transition entry");
  }
  for (const auto& v : s.dk) {
    if (!isfinite(v)) throw Error(ErrorCode::NonFinite, "tangent propagation: non-finite parameter column");
  }
}

template <class Real>
void normalize(BasicTangentState<Real>& s) {
  apply_shift(s.F.data(), s.F_exp, rescale_shift(s.F.data()));
  if (!s.dk_zero) {
    if (to_double(max_abs(s.dk)) == 0.0) {
      s.dk_zero = true;
      s.dk_exp = 0;
    } else {
      apply_shift(s.dk, s.dk_exp, rescale_shift(s.dk));
    }
  }
  check_finite(s);
}

/// Returns 2^dk_exp·(J·dk) + jac_k, written as dk' · 2^exp', where the
/// common exponent is max(dk_exp, 0) so neither term is scaled up.
template <class Real>
void combine_param_column(BasicTangentState<Real>& out, const Matrix<Real>& J, const Vec<Real>& dk, int dk_exp,
                          bool dk_zero, const Vec<double>& jk, double jk_sign) {
  const std::size_t d = jk.size();
  if (dk_zero) {
    bool nonzero = false;
    out.dk.assign(d, Real(0));
    for (std::size_t i = 0; i < d; ++i) {
      out.dk[i] = Real(jk_sign * jk[i]);
      nonzero = nonzero || jk[i] != 0.0;
    }
    out.dk_exp = 0;
    out.dk_zero = !nonzero;
    return;
  }
  const int e = std::max(dk_exp, 0);
  Vec<Real> jdk = J * dk;
  out.dk.assign(d, Real(0));
  for (std::size_t i = 0; i < d; ++i) {
    out.dk[i] = scale_pow2(jdk[i], dk_exp - e) + Real(std::ldexp(jk_sign * jk[i], -e));
  }
  out.dk_exp = e;
  out.dk_zero = false;
}

template <class Real>
Matrix<Real> promote(const Matrix<double>& m) {
  return m.template cast<Real>();
}

}  // namespace detail

/// State at n+1 from the state at n >= 0.
template <class Real>
BasicTangentState<Real> advance_forward(const BasicTangentState<Real>& s, const ParametricMap& map, double k) {
  if (s.n < 0) {
    throw Error(ErrorCode::InvalidArgument, "advance_forward: state index is negative");
  }
  const Matrix<Real> J = detail::promote<Real>(jac_x(map, k, s.x));
  BasicTangentState<Real> out;
  out.n = s.n + 1;
  out.x = eval(map, k, s.x);
  out.F = J * s.F;
  out.F_exp = s.F_exp;
  detail::combine_param_column(out, J, s.dk, s.dk_exp, s.dk_zero, jac_k(map, k, s.x), 1.0);
  detail::normalize(out);
  return out;
}

/// State at n−1 from the state at n <= 0, via f^{-(m+1)} = f^{-1} ∘ f^{-m}:
/// F' = J(x')^{-1}·F and dk' = J(x')^{-1}·(dk − ∂f/∂k(x')) with x' = f^{-1}(x).
template <class Real>
BasicTangentState<Real> advance_backward(const BasicTangentState<Real>& s, const ParametricMap& map, double k) {
  if (s.n > 0) {
    throw Error(ErrorCode::InvalidArgument, "advance_backward: state index is positive");
  }
  BasicTangentState<Real> out;
  out.n = s.n - 1;
  out.x = inverse_eval(map, k, s.x);
  const Matrix<Real> Jinv = detail::promote<Real>(map.jacobian_state_inverse(k, out.x.coords));
  out.F = Jinv * s.F;
  out.F_exp = s.F_exp;
  // J^{-1}(dk − jk) = J^{-1}·dk + J^{-1}·(−jk)
  const Vec<double> jk = jac_k(map, k, out.x);
  const Vec<double> jinv_jk = map.jacobian_state_inverse(k, out.x.coords) * jk;
  detail::combine_param_column(out, Jinv, s.dk, s.dk_exp, s.dk_zero, jinv_jk, -1.0);
  detail::normalize(out);
  return out;
}

template <class Real>
using TangentSink = std::function<void(const BasicTangentState<Real>&)>;

/// Emits the states for n = 0, +1, −1, +2, −2, …, ±N in that order. The
/// forward and backward chains are independent.
template <class Real>
void propagate(const ParametricMap& map, double k, const PhasePoint& x0, long N, const TangentSink<Real>& sink) {
  if (N < 1) {
    throw Error(ErrorCode::InvalidArgument, "propagate: N must be at least 1");
  }
  if (x0.dim() != map.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "propagate: initial point has the wrong dimension");
  }
  const auto origin = BasicTangentState<Real>::origin(PhasePoint{map.topology().wrap(x0.coords)});
  sink(origin);
  BasicTangentState<Real> fwd = origin;
  BasicTangentState<Real> bwd = origin;
  for (long n = 1; n <= N; ++n) {
    fwd = advance_forward(fwd, map, k);
    sink(fwd);
    bwd = advance_backward(bwd, map, k);
    sink(bwd);
  }
}

struct FiniteDifferenceJacobian {
  Matrix<double> F;
  Vec<double> dk;
};

/// Central differences of the lifted n-th iterate (no wrapping along the
/// orbit), for |n| <= 12 and h in [1e-8, 1e-4].
[[nodiscard]] FiniteDifferenceJacobian fd_jacobian(const ParametricMap& map, double k, const PhasePoint& x, long n,
                                                   double h);

/// Lifted n-th iterate of raw coordinates.
[[nodiscard]] Vec<double> iterate_lift(const ParametricMap& map, double k, Vec<double> x, long n);

/// CSV rows: n, x_1..x_d, logscale_F, log_max_F, logscale_dk.
void write_tangent_csv_header(std::ostream& os, std::size_t d);
template <class Real>
void write_tangent_csv_row(std::ostream& os, const BasicTangentState<Real>& s);

}  // namespace hyperod
