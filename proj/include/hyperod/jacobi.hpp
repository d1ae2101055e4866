#pragma once

// Cyclic Jacobi eigensolver for small symmetric matrices over double or
// DoubleDouble. Rotations keep the iterate exactly symmetric.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyperod/double_double.hpp"
#include "hyperod/error.hpp"
#include "hyperod/matrix.hpp"

namespace hyperod {

template <class T>
struct SymmetricEigen {
  Vec<T> values;       // ascending
  Matrix<T> vectors;   // column i pairs with values[i]
  int sweeps = 0;
};

struct JacobiOptions {
  /// A pair is left alone once |a_pq| <= rel_tol·sqrt(|a_pp·a_qq|).
  double rel_tol = 1e-32;
  /// Off-diagonal entries below abs_tol·max|a_ii| are treated as zero.
  double abs_tol = 1e-34;
  int max_sweeps = 60;
};

inline JacobiOptions default_jacobi_options(double) { return {1e-16, 1e-18, 60}; }
inline JacobiOptions default_jacobi_options(const DoubleDouble&) { return {}; }

template <class T>
SymmetricEigen<T> jacobi_eigen(Matrix<T> a, JacobiOptions opt = default_jacobi_options(T())) {
  using std::abs;
  using std::sqrt;
  if (!a.square()) {
    throw Error(ErrorCode::DimensionMismatch, "jacobi_eigen: matrix is not square");
  }
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (a(i, j) != a(j, i)) {
        throw Error(ErrorCode::InvalidArgument, "jacobi_eigen: matrix is not symmetric");
      }
    }
  }
  Matrix<T> v = Matrix<T>::identity(n);
  int sweep = 0;
  for (; sweep < opt.max_sweeps; ++sweep) {
    T max_diag(0);
    for (std::size_t i = 0; i < n; ++i) {
      max_diag = std::max(max_diag, T(abs(a(i, i))));
    }
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const T apq = a(p, q);
        const T mag = abs(apq);
        if (to_double(mag) == 0.0) continue;
        if (mag <= T(opt.rel_tol) * sqrt(T(abs(a(p, p))) * T(abs(a(q, q))))) continue;
        if (mag <= T(opt.abs_tol) * max_diag) continue;
        rotated = true;
        const T theta = (a(q, q) - a(p, p)) / (T(2) * apq);
        T t;
        if (abs(to_double(theta)) > 1e150) {
          t = T(1) / (T(2) * theta);
        } else {
          t = T(1) / (T(abs(theta)) + sqrt(theta * theta + T(1)));
          if (to_double(theta) < 0.0) t = -t;
        }
        const T c = T(1) / sqrt(t * t + T(1));
        const T s = t * c;
        const T tau = s / (T(1) + c);
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = T(0);
        a(q, p) = T(0);
        for (std::size_t r = 0; r < n; ++r) {
          if (r != p && r != q) {
            const T g = a(r, p);
            const T h = a(r, q);
            a(r, p) = g - s * (h + g * tau);
            a(p, r) = a(r, p);
            a(r, q) = h + s * (g - h * tau);
            a(q, r) = a(r, q);
          }
          const T g = v(r, p);
          const T h = v(r, q);
          v(r, p) = g - s * (h + g * tau);
          v(r, q) = h + s * (g - h * tau);
        }
      }
    }
    if (!rotated) break;
  }
  if (sweep == opt.max_sweeps) {
    throw Error(ErrorCode::NonConvergence, "jacobi_eigen: no convergence after " + std::to_string(opt.max_sweeps) +
                                               " sweeps");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen<T> out;
  out.values.resize(n);
  out.vectors = Matrix<T>(n, n);
  out.sweeps = sweep;
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) {
      out.vectors(r, c) = v(r, order[c]);
    }
  }
  return out;
}

}  // namespace hyperod
