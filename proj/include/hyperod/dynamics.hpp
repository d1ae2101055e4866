#pragma once

// Parametric maps f_k on tori or R^d, and the two built-in families:
// the Chirikov standard map and affine hyperbolic torus maps x -> Ax + kb.

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "hyperod/matrix.hpp"
#include "json.hpp"

namespace hyperod {

/// Per-coordinate periods; an infinite period marks an unbounded coordinate.
class Topology {
 public:
  Topology() = default;
  explicit Topology(std::vector<double> periods);
  static Topology torus(std::size_t d, double period);
  static Topology euclidean(std::size_t d);

  [[nodiscard]] std::size_t dim() const { return periods_.size(); }
  [[nodiscard]] double period(std::size_t i) const { return periods_[i]; }
  [[nodiscard]] bool periodic(std::size_t i) const;
  [[nodiscard]] const std::vector<double>& periods() const { return periods_; }

  /// Canonical representative in [0, P_i) for each periodic coordinate.
  [[nodiscard]] Vec<double> wrap(Vec<double> x) const;
  /// Each periodic coordinate mapped to (-P_i/2, P_i/2].
  [[nodiscard]] Vec<double> wrap_nearest(Vec<double> x) const;
  [[nodiscard]] bool contains(const Vec<double>& x) const;

 private:
  std::vector<double> periods_;
};

struct PhasePoint {
  Vec<double> coords;

  [[nodiscard]] std::size_t dim() const { return coords.size(); }
  friend bool operator==(const PhasePoint&, const PhasePoint&) = default;
};

/// A diffeomorphism family f_k. Implementations provide the lifted forward
/// and inverse steps (no wrapping), the state Jacobian and the parameter
/// derivative; wrapping onto the fundamental domain is done by the free
/// functions below.
class ParametricMap {
 public:
  explicit ParametricMap(Topology topology) : topology_(std::move(topology)) {}
  virtual ~ParametricMap() = default;

  [[nodiscard]] std::size_t dim() const { return topology_.dim(); }
  [[nodiscard]] const Topology& topology() const { return topology_; }

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual Vec<double> step_lift(double k, const Vec<double>& x) const = 0;
  [[nodiscard]] virtual Vec<double> inverse_step_lift(double k, const Vec<double>& x) const = 0;
  [[nodiscard]] virtual Matrix<double> jacobian_state(double k, const Vec<double>& x) const = 0;
  [[nodiscard]] virtual Vec<double> jacobian_param(double k, const Vec<double>& x) const = 0;

  /// Inverse of jacobian_state at x. The default uses Gaussian elimination
  /// with partial pivoting; built-ins override with closed forms.
  [[nodiscard]] virtual Matrix<double> jacobian_state_inverse(double k, const Vec<double>& x) const;

  [[nodiscard]] virtual bool volume_preserving() const { return false; }
  [[nodiscard]] virtual nlohmann::json to_json() const = 0;

 private:
  Topology topology_;
};

using MapPtr = std::shared_ptr<const ParametricMap>;

/// x̄ = x + ȳ, ȳ = y − k sin x on the 2-torus of period 2π.
class StandardMap final : public ParametricMap {
 public:
  StandardMap();

  [[nodiscard]] std::string name() const override { return "standard"; }
  [[nodiscard]] Vec<double> step_lift(double k, const Vec<double>& x) const override;
  [[nodiscard]] Vec<double> inverse_step_lift(double k, const Vec<double>& x) const override;
  [[nodiscard]] Matrix<double> jacobian_state(double k, const Vec<double>& x) const override;
  [[nodiscard]] Vec<double> jacobian_param(double k, const Vec<double>& x) const override;
  [[nodiscard]] Matrix<double> jacobian_state_inverse(double k, const Vec<double>& x) const override;
  [[nodiscard]] bool volume_preserving() const override { return true; }
  [[nodiscard]] nlohmann::json to_json() const override;
};

using IntMatrix = Matrix<long long>;

/// x -> Ax + kb on R^d / Z^d, with A an integer matrix of determinant ±1 and
/// no eigenvalue on the unit circle. The inverse uses the exact integer
/// adjugate.
class AffineTorusMap final : public ParametricMap {
 public:
  AffineTorusMap(IntMatrix A, std::vector<mpq_class> b);

  [[nodiscard]] std::string name() const override { return "affine"; }
  [[nodiscard]] Vec<double> step_lift(double k, const Vec<double>& x) const override;
  [[nodiscard]] Vec<double> inverse_step_lift(double k, const Vec<double>& x) const override;
  [[nodiscard]] Matrix<double> jacobian_state(double k, const Vec<double>& x) const override;
  [[nodiscard]] Vec<double> jacobian_param(double k, const Vec<double>& x) const override;
  [[nodiscard]] Matrix<double> jacobian_state_inverse(double k, const Vec<double>& x) const override;
  [[nodiscard]] bool volume_preserving() const override { return true; }
  [[nodiscard]] nlohmann::json to_json() const override;

  [[nodiscard]] const IntMatrix& A() const { return A_; }
  [[nodiscard]] const IntMatrix& A_inverse() const { return A_inv_; }
  [[nodiscard]] const std::vector<mpq_class>& b() const { return b_; }
  [[nodiscard]] bool symmetric() const { return symmetric_; }
  [[nodiscard]] long long determinant() const { return det_; }
  /// det A = −1 is accepted, but the measure-preservation results assume +1.
  [[nodiscard]] bool orientation_reversing() const { return det_ == -1; }

 private:
  IntMatrix A_;
  IntMatrix A_inv_;
  std::vector<mpq_class> b_;
  Vec<double> b_double_;
  long long det_ = 0;
  bool symmetric_ = false;
};

/// Exact integer determinant by cofactor expansion (d <= 4 in practice).
[[nodiscard]] long long integer_determinant(const IntMatrix& A);
[[nodiscard]] IntMatrix integer_adjugate(const IntMatrix& A);

[[nodiscard]] PhasePoint eval(const ParametricMap& map, double k, const PhasePoint& x);
[[nodiscard]] PhasePoint inverse_eval(const ParametricMap& map, double k, const PhasePoint& x);
[[nodiscard]] Matrix<double> jac_x(const ParametricMap& map, double k, const PhasePoint& x);
[[nodiscard]] Vec<double> jac_k(const ParametricMap& map, double k, const PhasePoint& x);

/// Wraps raw coordinates into the map's fundamental domain, checking the
/// dimension.
[[nodiscard]] PhasePoint make_point(const ParametricMap& map, Vec<double> coords);

/// {"type":"standard"} or {"type":"affine","A":[[...]],"b":[...]}; b entries
/// may be numbers or "p/q" strings.
[[nodiscard]] MapPtr map_from_json(const nlohmann::json& desc);

/// Parses "p/q", an integer, or a decimal literal into an exact rational.
[[nodiscard]] mpq_class parse_rational(const std::string& text);

}  // namespace hyperod
