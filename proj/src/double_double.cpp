#include "hyperod/double_double.hpp"

#include <ostream>

#include <gmpxx.h>

namespace hyperod {

std::string to_string(const DoubleDouble& a, int digits) {
  if (!isfinite(a)) {
    return std::to_string(a.hi);
  }
  const mpq_class exact = mpq_class(a.hi) + mpq_class(a.lo);
  mpf_class f(exact, 256);
  mp_exp_t exp = 0;
  std::string mant = f.get_str(exp, 10, static_cast<std::size_t>(digits));
  if (mant.empty() || mant == "0") {
    return "0";
  }
  std::string sign;
  if (mant[0] == '-') {
    sign = "-";
    mant.erase(0, 1);
  }
  std::string out = sign + mant.substr(0, 1);
  if (mant.size() > 1) {
    out += "." + mant.substr(1);
  }
  out += "e" + std::to_string(static_cast<long>(exp) - 1);
  return out;
}

DoubleDouble dd_from_string(const std::string& text) {
  mpf_class f(text, 256);
  const double hi = f.get_d();
  mpf_class rest = f - mpf_class(hi, 256);
  return DoubleDouble(hi) + DoubleDouble(rest.get_d());
}

std::ostream& operator<<(std::ostream& os, const DoubleDouble& a) { return os << to_string(a, 32); }

}  // namespace hyperod
