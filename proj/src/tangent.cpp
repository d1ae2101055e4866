#include "hyperod/tangent.hpp"

#include <ostream>

namespace hyperod {

Vec<double> iterate_lift(const ParametricMap& map, double k, Vec<double> x, long n) {
  for (long i = 0; i < n; ++i) {
    x = map.step_lift(k, x);
  }
  for (long i = 0; i > n; --i) {
    x = map.inverse_step_lift(k, x);
  }
  return x;
}

FiniteDifferenceJacobian fd_jacobian(const ParametricMap& map, double k, const PhasePoint& x, long n, double h) {
  if (n < -12 || n > 12) {
    throw Error(ErrorCode::InvalidArgument, "fd_jacobian: |n| must not exceed 12");
  }
  if (!(h >= 1e-8 && h <= 1e-4)) {
    throw Error(ErrorCode::InvalidArgument, "fd_jacobian: h must lie in [1e-8, 1e-4]");
  }
  if (x.dim() != map.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "fd_jacobian: point has the wrong dimension");
  }
  const std::size_t d = map.dim();
  FiniteDifferenceJacobian out{Matrix<double>(d, d, 0.0), Vec<double>(d, 0.0)};
  if (n == 0) {
    out.F = Matrix<double>::identity(d);
    return out;
  }
  for (std::size_t j = 0; j < d; ++j) {
    Vec<double> plus = x.coords;
    Vec<double> minus = x.coords;
    plus[j] += h;
    minus[j] -= h;
    const Vec<double> fp = iterate_lift(map, k, plus, n);
    const Vec<double> fm = iterate_lift(map, k, minus, n);
    for (std::size_t i = 0; i < d; ++i) {
      out.F(i, j) = (fp[i] - fm[i]) / (2.0 * h);
    }
  }
  const Vec<double> fp = iterate_lift(map, k + h, x.coords, n);
  const Vec<double> fm = iterate_lift(map, k - h, x.coords, n);
  for (std::size_t i = 0; i < d; ++i) {
    out.dk[i] = (fp[i] - fm[i]) / (2.0 * h);
  }
  return out;
}

void write_tangent_csv_header(std::ostream& os, std::size_t d) {
  os << "n";
  for (std::size_t i = 1; i <= d; ++i) {
    os << ",x_" << i;
  }
  os << ",logscale_F,log_max_F,logscale_dk\n";
}

template <class Real>
void write_tangent_csv_row(std::ostream& os, const BasicTangentState<Real>& s) {
  const auto old_precision = os.precision(17);
  os << s.n;
  for (double c : s.x.coords) {
    os << ',' << c;
  }
  os << ',' << s.logscale_F() << ',' << s.log_max_F() << ',';
  if (s.dk_zero) {
    os << "-inf";
  } else {
    os << s.logscale_dk();
  }
  os << '\n';
  os.precision(old_precision);
}

template void write_tangent_csv_row<double>(std::ostream&, const BasicTangentState<double>&);
template void write_tangent_csv_row<DoubleDouble>(std::ostream&, const BasicTangentState<DoubleDouble>&);

}  // namespace hyperod
