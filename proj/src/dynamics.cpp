#include "hyperod/dynamics.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "hyperod/error.hpp"

namespace hyperod {

// ---------------------------------------------------------------- Topology

Topology::Topology(std::vector<double> periods) : periods_(std::move(periods)) {
  if (periods_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "Topology: dimension must be at least 1");
  }
  for (double p : periods_) {
    if (!(p > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "Topology: periods must be positive");
    }
  }
}

Topology Topology::torus(std::size_t d, double period) { return Topology(std::vector<double>(d, period)); }

Topology Topology::euclidean(std::size_t d) {
  return Topology(std::vector<double>(d, std::numeric_limits<double>::infinity()));
}

bool Topology::periodic(std::size_t i) const { return std::isfinite(periods_[i]); }

Vec<double> Topology::wrap(Vec<double> x) const {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!periodic(i)) {
      continue;
    }
    const double p = periods_[i];
    double r = x[i] - p * std::floor(x[i] / p);
    // floor-division can round up to exactly p for tiny negative inputs.
    if (r >= p || r < 0.0) {
      r = 0.0;
    }
    x[i] = r;
  }
  return x;
}

Vec<double> Topology::wrap_nearest(Vec<double> x) const {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!periodic(i)) {
      continue;
    }
    const double p = periods_[i];
    double r = x[i] - p * std::floor(x[i] / p);  // [0, p]
    if (r > 0.5 * p) {
      r -= p;
    }
    x[i] = r;
  }
  return x;
}

bool Topology::contains(const Vec<double>& x) const {
  if (x.size() != dim()) {
    return false;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      return false;
    }
    if (periodic(i) && (x[i] < 0.0 || x[i] >= periods_[i])) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- ParametricMap

Matrix<double> ParametricMap::jacobian_state_inverse(double k, const Vec<double>& x) const {
  Matrix<double> a = jacobian_state(k, x);
  const std::size_t n = a.rows();
  Matrix<double> inv = Matrix<double>::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) {
        piv = r;
      }
    }
    if (a(piv, c) == 0.0) {
      throw Error(ErrorCode::SingularMatrix, name() + ": singular state Jacobian");
    }
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(a(c, j), a(piv, j));
      std::swap(inv(c, j), inv(piv, j));
    }
    const double d = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= d;
      inv(c, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a(r, c) == 0.0) {
        continue;
      }
      const double f = a(r, c);
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

// ---------------------------------------------------------------- StandardMap

StandardMap::StandardMap() : ParametricMap(Topology::torus(2, 2.0 * std::numbers::pi)) {}

Vec<double> StandardMap::step_lift(double k, const Vec<double>& x) const {
  const double y_new = x[1] - k * std::sin(x[0]);
  return {x[0] + y_new, y_new};
}

Vec<double> StandardMap::inverse_step_lift(double k, const Vec<double>& x) const {
  const double x_old = x[0] - x[1];
  return {x_old, x[1] + k * std::sin(x_old)};
}

Matrix<double> StandardMap::jacobian_state(double k, const Vec<double>& x) const {
  const double kc = k * std::cos(x[0]);
  return {{1.0 - kc, 1.0}, {-kc, 1.0}};
}

Vec<double> StandardMap::jacobian_param(double /*k*/, const Vec<double>& x) const {
  const double s = -std::sin(x[0]);
  return {s, s};
}

Matrix<double> StandardMap::jacobian_state_inverse(double k, const Vec<double>& x) const {
  const double kc = k * std::cos(x[0]);
  return {{1.0, -1.0}, {kc, 1.0 - kc}};
}

nlohmann::json StandardMap::to_json() const { return {{"type", "standard"}}; }

// ---------------------------------------------------------------- AffineTorusMap

namespace {

long long det_rec(const IntMatrix& a, std::vector<std::size_t>& rows, std::size_t col) {
  const std::size_t n = a.rows();
  if (col == n) {
    return 1;
  }
  long long total = 0;
  int sign = 1;
  for (std::size_t idx = 0; idx < rows.size(); ++idx) {
    const std::size_t r = rows[idx];
    if (a(r, col) != 0) {
      std::vector<std::size_t> rest;
      rest.reserve(rows.size() - 1);
      for (std::size_t j = 0; j < rows.size(); ++j) {
        if (j != idx) {
          rest.push_back(rows[j]);
        }
      }
      total += sign * a(r, col) * det_rec(a, rest, col + 1);
    }
    sign = -sign;
  }
  return total;
}

}  // namespace

long long integer_determinant(const IntMatrix& A) {
  if (!A.square()) {
    throw Error(ErrorCode::DimensionMismatch, "integer_determinant: matrix is not square");
  }
  std::vector<std::size_t> rows(A.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = i;
  }
  return det_rec(A, rows, 0);
}

IntMatrix integer_adjugate(const IntMatrix& A) {
  const std::size_t n = A.rows();
  IntMatrix adj(n, n, 0);
  if (n == 1) {
    adj(0, 0) = 1;
    return adj;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      IntMatrix minor(n - 1, n - 1, 0);
      for (std::size_t r = 0, mr = 0; r < n; ++r) {
        if (r == i) continue;
        for (std::size_t c = 0, mc = 0; c < n; ++c) {
          if (c == j) continue;
          minor(mr, mc++) = A(r, c);
        }
        ++mr;
      }
      const long long cof = ((i + j) % 2 == 0 ? 1 : -1) * integer_determinant(minor);
      adj(j, i) = cof;  // transpose of the cofactor matrix
    }
  }
  return adj;
}

AffineTorusMap::AffineTorusMap(IntMatrix A, std::vector<mpq_class> b)
    : ParametricMap(Topology::torus(A.rows() == 0 ? 1 : A.rows(), 1.0)), A_(std::move(A)), b_(std::move(b)) {
  const std::size_t d = A_.rows();
  if (d == 0 || !A_.square()) {
    throw Error(ErrorCode::InvalidArgument, "AffineTorusMap: A must be a non-empty square matrix");
  }
  if (b_.size() != d) {
    throw Error(ErrorCode::DimensionMismatch, "AffineTorusMap: b has the wrong length");
  }
  det_ = integer_determinant(A_);
  if (det_ != 1 && det_ != -1) {
    throw Error(ErrorCode::InvalidArgument, "AffineTorusMap: det A must be ±1, got " + std::to_string(det_));
  }
  Eigen::MatrixXd m(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<double>(A_(i, j));
    }
  }
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(std::log(std::abs(ev[i]))) <= 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "AffineTorusMap: A has an eigenvalue of modulus 1 (not hyperbolic)");
    }
  }
  symmetric_ = A_ == A_.transpose();
  A_inv_ = integer_adjugate(A_);
  if (det_ == -1) {
    for (auto& v : A_inv_.data()) v = -v;
  }
  b_double_.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    b_[i].canonicalize();
    b_double_[i] = b_[i].get_d();
  }
}

Vec<double> AffineTorusMap::step_lift(double k, const Vec<double>& x) const {
  Vec<double> out(dim(), 0.0);
  for (std::size_t i = 0; i < dim(); ++i) {
    double s = k * b_double_[i];
    for (std::size_t j = 0; j < dim(); ++j) {
      s += static_cast<double>(A_(i, j)) * x[j];
    }
    out[i] = s;
  }
  return out;
}

Vec<double> AffineTorusMap::inverse_step_lift(double k, const Vec<double>& x) const {
  Vec<double> shifted(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    shifted[i] = x[i] - k * b_double_[i];
  }
  Vec<double> out(dim(), 0.0);
  for (std::size_t i = 0; i < dim(); ++i) {
    for (std::size_t j = 0; j < dim(); ++j) {
      out[i] += static_cast<double>(A_inv_(i, j)) * shifted[j];
    }
  }
  return out;
}

Matrix<double> AffineTorusMap::jacobian_state(double /*k*/, const Vec<double>& /*x*/) const {
  return A_.cast<double>();
}

Vec<double> AffineTorusMap::jacobian_param(double /*k*/, const Vec<double>& /*x*/) const { return b_double_; }

Matrix<double> AffineTorusMap::jacobian_state_inverse(double /*k*/, const Vec<double>& /*x*/) const {
  return A_inv_.cast<double>();
}

nlohmann::json AffineTorusMap::to_json() const {
  nlohmann::json a = nlohmann::json::array();
  for (std::size_t i = 0; i < dim(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < dim(); ++j) {
      row.push_back(A_(i, j));
    }
    a.push_back(row);
  }
  nlohmann::json b = nlohmann::json::array();
  for (const auto& q : b_) {
    b.push_back(q.get_str());
  }
  return {{"type", "affine"}, {"A", a}, {"b", b}};
}

// ---------------------------------------------------------------- free functions

namespace {

void check_dim(const ParametricMap& map, const PhasePoint& x) {
  if (x.dim() != map.dim()) {
    throw Error(ErrorCode::DimensionMismatch, map.name() + ": point has dimension " + std::to_string(x.dim()) +
                                                  ", map has dimension " + std::to_string(map.dim()));
  }
}

}  // namespace

PhasePoint eval(const ParametricMap& map, double k, const PhasePoint& x) {
  check_dim(map, x);
  return {map.topology().wrap(map.step_lift(k, x.coords))};
}

PhasePoint inverse_eval(const ParametricMap& map, double k, const PhasePoint& x) {
  check_dim(map, x);
  return {map.topology().wrap(map.inverse_step_lift(k, x.coords))};
}

Matrix<double> jac_x(const ParametricMap& map, double k, const PhasePoint& x) {
  check_dim(map, x);
  return map.jacobian_state(k, x.coords);
}

Vec<double> jac_k(const ParametricMap& map, double k, const PhasePoint& x) {
  check_dim(map, x);
  return map.jacobian_param(k, x.coords);
}

PhasePoint make_point(const ParametricMap& map, Vec<double> coords) {
  if (coords.size() != map.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "make_point: expected " + std::to_string(map.dim()) + " coordinates");
  }
  for (double c : coords) {
    if (!std::isfinite(c)) {
      throw Error(ErrorCode::NonFinite, "make_point: non-finite coordinate");
    }
  }
  return {map.topology().wrap(std::move(coords))};
}

mpq_class parse_rational(const std::string& raw) {
  std::string text;
  for (char c : raw) {
    if (c != ' ') text.push_back(c);
  }
  if (text.empty()) {
    throw Error(ErrorCode::InvalidArgument, "parse_rational: empty string");
  }
  try {
    if (text.find('/') != std::string::npos) {
      mpq_class q(text, 10);
      if (q.get_den() == 0) {
        throw Error(ErrorCode::InvalidArgument, "parse_rational: zero denominator in '" + raw + "'");
      }
      q.canonicalize();
      return q;
    }
    // Decimal literal with optional exponent: mantissa digits / 10^scale.
    std::string mantissa = text;
    long exponent = 0;
    const auto epos = text.find_first_of("eE");
    if (epos != std::string::npos) {
      mantissa = text.substr(0, epos);
      exponent = std::stol(text.substr(epos + 1));
    }
    bool negative = false;
    if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
      negative = mantissa[0] == '-';
      mantissa.erase(0, 1);
    }
    std::string digits;
    long frac_digits = 0;
    bool seen_point = false;
    for (char c : mantissa) {
      if (c == '.') {
        if (seen_point) throw Error(ErrorCode::InvalidArgument, "parse_rational: malformed '" + raw + "'");
        seen_point = true;
      } else if (c >= '0' && c <= '9') {
        digits.push_back(c);
        if (seen_point) ++frac_digits;
      } else {
        throw Error(ErrorCode::InvalidArgument, "parse_rational: malformed '" + raw + "'");
      }
    }
    if (digits.empty()) {
      throw Error(ErrorCode::InvalidArgument, "parse_rational: malformed '" + raw + "'");
    }
    mpz_class num(digits, 10);
    if (negative) num = -num;
    const long scale = exponent - frac_digits;
    mpz_class pow10;
    mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
    mpq_class q = scale >= 0 ? mpq_class(num * pow10) : mpq_class(num, pow10);
    q.canonicalize();
    return q;
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::InvalidArgument, "parse_rational: malformed '" + raw + "'");
  }
}

namespace {

mpq_class rational_from_json(const nlohmann::json& v) {
  if (v.is_string()) {
    return parse_rational(v.get<std::string>());
  }
  if (v.is_number_integer()) {
    return mpq_class(mpz_class(std::to_string(v.get<long long>())));
  }
  if (v.is_number_float()) {
    // Doubles are exact binary rationals.
    return mpq_class(v.get<double>());
  }
  throw Error(ErrorCode::InvalidArgument, "map description: expected a number or \"p/q\" string");
}

long long integer_from_json(const nlohmann::json& v) {
  const mpq_class q = rational_from_json(v);
  if (q.get_den() != 1 || !q.get_num().fits_slong_p()) {
    throw Error(ErrorCode::InvalidArgument, "map description: matrix entries must be integers");
  }
  return q.get_num().get_si();
}

}  // namespace

MapPtr map_from_json(const nlohmann::json& desc) {
  if (!desc.is_object() || !desc.contains("type") || !desc["type"].is_string()) {
    throw Error(ErrorCode::InvalidArgument, "map description: expected an object with a string \"type\"");
  }
  const std::string type = desc["type"].get<std::string>();
  if (type == "standard") {
    return std::make_shared<StandardMap>();
  }
  if (type == "affine") {
    if (!desc.contains("A") || !desc["A"].is_array()) {
      throw Error(ErrorCode::InvalidArgument, "map description: affine map needs \"A\"");
    }
    const auto& a = desc["A"];
    const std::size_t d = a.size();
    IntMatrix A(d, d, 0);
    for (std::size_t i = 0; i < d; ++i) {
      if (!a[i].is_array() || a[i].size() != d) {
        throw Error(ErrorCode::InvalidArgument, "map description: \"A\" must be square");
      }
      for (std::size_t j = 0; j < d; ++j) {
        A(i, j) = integer_from_json(a[i][j]);
      }
    }
    std::vector<mpq_class> b(d, mpq_class(0));
    if (desc.contains("b")) {
      if (!desc["b"].is_array() || desc["b"].size() != d) {
        throw Error(ErrorCode::InvalidArgument, "map description: \"b\" must have length d");
      }
      for (std::size_t i = 0; i < d; ++i) {
        b[i] = rational_from_json(desc["b"][i]);
      }
    }
    return std::make_shared<AffineTorusMap>(std::move(A), std::move(b));
  }
  throw Error(ErrorCode::InvalidArgument, "map description: unknown type '" + type + "'");
}

}  // namespace hyperod
