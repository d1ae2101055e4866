#pragma once

// Small dense row-major matrices and vectors over an arbitrary scalar
// (double, DoubleDouble, BigRational). Dimensions in this project never
// exceed 4, so everything is straightforward loops.

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace hyperod {

template <class T>
using Vec = std::vector<T>;

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, const T& fill = T()) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) {
        throw std::invalid_argument("Matrix: ragged initializer");
      }
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n, T(0));
    for (std::size_t i = 0; i < n; ++i) {
      m(i, i) = T(1);
    }
    return m;
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] bool square() const { return rows_ == cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  [[nodiscard]] const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  [[nodiscard]] Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) {
        t(j, i) = (*this)(i, j);
      }
    }
    return t;
  }

  [[nodiscard]] Vec<T> column(std::size_t c) const {
    Vec<T> v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      v[i] = (*this)(i, c);
    }
    return v;
  }

  template <class U>
  [[nodiscard]] Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      out.data()[i] = U(data_[i]);
    }
    return out;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <class T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("Matrix product: shape mismatch");
  }
  Matrix<T> out(a.rows(), b.cols(), T(0));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out(i, j) += aik * b(k, j);
      }
    }
  }
  return out;
}

template <class T>
Vec<T> operator*(const Matrix<T>& a, const Vec<T>& v) {
  if (a.cols() != v.size()) {
    throw std::invalid_argument("Matrix-vector product: shape mismatch");
  }
  Vec<T> out(a.rows(), T(0));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out[i] += a(i, j) * v[j];
    }
  }
  return out;
}

template <class T>
Matrix<T> operator+(Matrix<T> a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("Matrix sum: shape mismatch");
  }
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    a.data()[i] += b.data()[i];
  }
  return a;
}

template <class T>
Matrix<T> operator-(Matrix<T> a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("Matrix difference: shape mismatch");
  }
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    a.data()[i] -= b.data()[i];
  }
  return a;
}

template <class T>
T dot(const Vec<T>& a, const Vec<T>& b) {
  T s(0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

/// Largest |entry|; `abs` is found by ADL for non-builtin scalars.
template <class T>
T max_abs(const std::vector<T>& v) {
  using std::abs;
  T m(0);
  for (const T& x : v) {
    const T a = abs(x);
    if (m < a) {
      m = a;
    }
  }
  return m;
}

template <class T>
T max_abs(const Matrix<T>& m) {
  return max_abs(m.data());
}

}  // namespace hyperod
