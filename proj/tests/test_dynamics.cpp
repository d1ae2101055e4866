#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "hyperod/dynamics.hpp"
#include "hyperod/error.hpp"
#include "oracles.hpp"

using namespace hyperod;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double torus_distance(const ParametricMap& map, const PhasePoint& a, const PhasePoint& b) {
  Vec<double> d(a.dim());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.coords[i] - b.coords[i];
  d = map.topology().wrap_nearest(d);
  double m = 0.0;
  for (double v : d) m = std::max(m, std::abs(v));
  return m;
}

double det2(const Matrix<double>& m) { return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0); }

}  // namespace

TEST_CASE("standard map evaluation at (3, 0)") {
  StandardMap map;
  const PhasePoint x = make_point(map, {3.0, 0.0});
  const PhasePoint y = eval(map, 0.5, x);
  CHECK(y.coords[0] == doctest::Approx(2.929440).epsilon(1e-6));
  CHECK(y.coords[1] == doctest::Approx(6.212625).epsilon(1e-6));
  // hand formula
  const double yb = std::fmod(-0.5 * std::sin(3.0) + kTwoPi, kTwoPi);
  CHECK(std::abs(y.coords[1] - yb) < 1e-15);
  CHECK(std::abs(y.coords[0] - (3.0 - 0.5 * std::sin(3.0))) < 1e-15);
}

TEST_CASE("affine map evaluation and exact inverse matrix") {
  auto map = oracle::cat_map({1, 0});
  const PhasePoint y = eval(*map, 0.0, make_point(*map, {0.1, 0.2}));
  CHECK(y.coords[0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(y.coords[1] == doctest::Approx(0.3).epsilon(1e-14));

  auto plain = oracle::cat_map({0, 0});
  CHECK(plain->A_inverse() == IntMatrix{{1, -1}, {-1, 2}});
  CHECK(plain->determinant() == 1);
  CHECK(plain->symmetric());
  const PhasePoint back = inverse_eval(*plain, 0.7, make_point(*plain, {0.4, 0.3}));
  CHECK(std::abs(back.coords[0] - 0.1) < 1e-14);
  CHECK(std::abs(back.coords[1] - 0.2) < 1e-14);
}

TEST_CASE("affine constructor rejects non-hyperbolic or non-unimodular matrices") {
  CHECK_THROWS_AS(AffineTorusMap(IntMatrix{{1, 0}, {0, 1}}, {0, 0}), Error);
  CHECK_THROWS_AS(AffineTorusMap(IntMatrix{{3, 2}, {2, 3}}, {0, 0}), Error);
  CHECK_THROWS_AS(AffineTorusMap(IntMatrix{{1, 1}, {0, 1}}, {0, 0}), Error);  // shear: |δ| = 1
  CHECK_THROWS_AS(AffineTorusMap(IntMatrix{{2, 1}, {1, 1}}, {1}), Error);
  CHECK_THROWS_AS(AffineTorusMap(IntMatrix{{2}}, {0}), Error);
  // det = −1 is accepted
  AffineTorusMap flip(IntMatrix{{1, 1}, {1, 0}}, {0, 0});
  CHECK(flip.orientation_reversing());
}

TEST_CASE("standard map Jacobians at (3, 0)") {
  StandardMap map;
  const PhasePoint x = make_point(map, {3.0, 0.0});
  const Matrix<double> J = jac_x(map, 0.5, x);
  CHECK(J(0, 0) == doctest::Approx(1.494996).epsilon(1e-6));
  CHECK(J(0, 1) == 1.0);
  CHECK(J(1, 0) == doctest::Approx(0.494996).epsilon(1e-6));
  CHECK(J(1, 1) == 1.0);
  const Vec<double> jk = jac_k(map, 0.5, x);
  CHECK(jk[0] == doctest::Approx(-0.141120).epsilon(1e-5));
  CHECK(jk[1] == doctest::Approx(-0.141120).epsilon(1e-5));
  const Vec<double> jk0 = jac_k(map, 0.9, make_point(map, {0.0, 1.3}));
  CHECK(jk0[0] == 0.0);
  CHECK(jk0[1] == 0.0);
}

TEST_CASE("affine Jacobians are A and b") {
  auto map = oracle::cat_map({1, 0});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const PhasePoint x = make_point(*map, {u(rng), u(rng)});
    const double k = 4.0 * u(rng) - 2.0;
    CHECK(jac_x(*map, k, x) == Matrix<double>{{2, 1}, {1, 1}});
    CHECK(jac_k(*map, k, x) == Vec<double>{1.0, 0.0});
  }
}

TEST_CASE("eval and inverse_eval are mutually inverse over random points") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  StandardMap standard;
  auto cat = oracle::cat_map({1, 0});
  auto cat3 = std::make_shared<AffineTorusMap>(IntMatrix{{2, 1, 0}, {1, 2, 1}, {0, 1, 1}},
                                               std::vector<mpq_class>{mpq_class(1, 3), 0, mpq_class(-1, 2)});
  const std::vector<const ParametricMap*> maps = {&standard, cat.get(), cat3.get()};
  double worst = 0.0;
  for (const ParametricMap* map : maps) {
    const double period = map->topology().period(0);
    for (int i = 0; i < 1000; ++i) {
      Vec<double> c(map->dim());
      for (auto& v : c) v = period * u(rng);
      const PhasePoint x = make_point(*map, c);
      const double k = 4.0 * u(rng) - 2.0;
      const PhasePoint y = eval(*map, k, x);
      CHECK(map->topology().contains(y.coords));
      worst = std::max(worst, torus_distance(*map, inverse_eval(*map, k, y), x));
      worst = std::max(worst, torus_distance(*map, eval(*map, k, inverse_eval(*map, k, x)), x));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("Jacobians match central finite differences over random points") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  StandardMap standard;
  auto cat = oracle::cat_map({mpq_class(2, 5), mpq_class(-1, 3)});
  const double h = 1e-6;
  for (const ParametricMap* map : {static_cast<const ParametricMap*>(&standard), static_cast<const ParametricMap*>(cat.get())}) {
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double period = map->topology().period(0);
      const Vec<double> x = {period * u(rng), period * u(rng)};
      const double k = 3.0 * u(rng) - 1.5;
      const Matrix<double> J = jac_x(*map, k, PhasePoint{x});
      const Vec<double> jk = jac_k(*map, k, PhasePoint{x});
      const double scale = std::max(1.0, max_abs(J));
      for (std::size_t j = 0; j < 2; ++j) {
        Vec<double> xp = x;
        Vec<double> xm = x;
        xp[j] += h;
        xm[j] -= h;
        const Vec<double> fp = map->step_lift(k, xp);
        const Vec<double> fm = map->step_lift(k, xm);
        for (std::size_t r = 0; r < 2; ++r) {
          worst = std::max(worst, std::abs((fp[r] - fm[r]) / (2 * h) - J(r, j)) / scale);
        }
      }
      const Vec<double> gp = map->step_lift(k + h, x);
      const Vec<double> gm = map->step_lift(k - h, x);
      for (std::size_t r = 0; r < 2; ++r) {
        worst = std::max(worst, std::abs((gp[r] - gm[r]) / (2 * h) - jk[r]) / std::max(1.0, max_abs(jk)));
      }
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("standard map Jacobian has unit determinant") {
  StandardMap map;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (int i = 0; i < 1000; ++i) {
    const PhasePoint x = make_point(map, {u(rng), u(rng)});
    const double k = u(rng) - 3.0;
    CHECK(std::abs(det2(jac_x(map, k, x)) - 1.0) < 1e-12);
    const Matrix<double> Ji = map.jacobian_state_inverse(k, x.coords);
    CHECK(oracle::max_abs_diff(Ji * jac_x(map, k, x), Matrix<double>::identity(2)) < 1e-12);
  }
}

TEST_CASE("topology wrapping") {
  const Topology t = Topology::torus(2, 1.0);
  const Vec<double> w = t.wrap({-0.25, 3.5});
  CHECK(w[0] == doctest::Approx(0.75));
  CHECK(w[1] == doctest::Approx(0.5));
  CHECK(t.contains(w));
  const Vec<double> n = t.wrap_nearest({0.75, -0.5});
  CHECK(n[0] == doctest::Approx(-0.25));
  CHECK(n[1] == doctest::Approx(0.5));  // half-open at +P/2
  const Topology e = Topology::euclidean(1);
  CHECK_FALSE(e.periodic(0));
  CHECK(e.wrap({-7.0})[0] == -7.0);
  CHECK_THROWS_AS(Topology(std::vector<double>{}), Error);
  CHECK_THROWS_AS(Topology(std::vector<double>{-1.0}), Error);
}

TEST_CASE("dimension mismatch is an error") {
  StandardMap map;
  CHECK_THROWS_AS((void)eval(map, 0.5, PhasePoint{{1.0}}), Error);
  CHECK_THROWS_AS((void)inverse_eval(map, 0.5, PhasePoint{{1.0, 2.0, 3.0}}), Error);
  CHECK_THROWS_AS((void)make_point(map, {1.0}), Error);
  CHECK_THROWS_AS((void)make_point(map, {1.0, NAN}), Error);
}

TEST_CASE("maps from JSON and exact rationals") {
  const MapPtr s = map_from_json(nlohmann::json{{"type", "standard"}});
  CHECK(s->name() == "standard");
  const MapPtr a = map_from_json(nlohmann::json::parse(R"({"type":"affine","A":[[2,1],[1,1]],"b":["1/2", 0]})"));
  const auto* aff = dynamic_cast<const AffineTorusMap*>(a.get());
  REQUIRE(aff != nullptr);
  CHECK(aff->b()[0] == mpq_class(1, 2));
  CHECK(aff->b()[1] == 0);
  CHECK(map_from_json(aff->to_json())->to_json() == aff->to_json());
  CHECK_THROWS_AS((void)map_from_json(nlohmann::json{{"type", "henon"}}), Error);
  CHECK_THROWS_AS((void)map_from_json(nlohmann::json::parse(R"({"type":"affine","A":[[2,1],[1]]})")), Error);

  CHECK(parse_rational("3/10") == mpq_class(3, 10));
  CHECK(parse_rational("0.3") == mpq_class(3, 10));
  CHECK(parse_rational("-2") == -2);
  CHECK(parse_rational("1.25e-1") == mpq_class(1, 8));
  CHECK_THROWS_AS((void)parse_rational("1/0"), Error);
  CHECK_THROWS_AS((void)parse_rational("abc"), Error);
  CHECK_THROWS_AS((void)parse_rational(""), Error);
}

TEST_CASE("integer determinant and adjugate") {
  const IntMatrix A{{2, 1, 0}, {1, 2, 1}, {0, 1, 1}};
  CHECK(integer_determinant(A) == 1);
  const IntMatrix adj = integer_adjugate(A);
  Matrix<long long> prod = A * adj;
  CHECK(prod == IntMatrix::identity(3));
}
