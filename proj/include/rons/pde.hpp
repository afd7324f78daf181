#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rons/ansatz.hpp"

namespace rons {

/// Right-hand side F(û) of a PDE  u_t = F(u), evaluated pointwise through an
/// ansatz family's value/derivative evaluators.
class PdeOperator {
 public:
  virtual ~PdeOperator() = default;
  virtual double rhs(const AnsatzFamily& family, const Eigen::VectorXd& x, double t,
                     const ParameterState& q) const = 0;
  virtual bool is_autonomous() const = 0;
};

/// Coefficients of the interacting-particle Fokker-Planck problem on R^d:
/// drift toward a periodically driven trap plus mean-field attraction,
///   v_k(t, x) = drive(t) - x_k + (coupling/d) * sum_l (x_l - x_k),
/// with isotropic diffusion:
///   F(p) = -div(v p) + diffusion * laplacian(p).
struct FokkerPlanckCoefficients {
  int dimension = 8;
  double coupling = 0.25;
  double diffusion = 0.01;
  double drive_amplitude = 1.25;
  double drive_offset = 1.5;

  /// Trap position a(t) = drive_amplitude * (sin(pi t) + drive_offset).
  double drive(double t) const {
    return drive_amplitude * (std::sin(std::numbers::pi * t) + drive_offset);
  }

  /// -div v, which is constant in x: d + coupling * (d - 1).
  double drift_divergence() const {
    return dimension + coupling * (dimension - 1.0);
  }
};

class FokkerPlanckOperator final : public PdeOperator {
 public:
  explicit FokkerPlanckOperator(FokkerPlanckCoefficients coeffs) : coeffs_(coeffs) {
    if (coeffs_.dimension < 1)
      throw std::invalid_argument("FokkerPlanckOperator: dimension must be >= 1");
    if (coeffs_.diffusion < 0)
      throw std::invalid_argument("FokkerPlanckOperator: diffusion must be >= 0");
  }

  const FokkerPlanckCoefficients& coefficients() const { return coeffs_; }

  double rhs(const AnsatzFamily& family, const Eigen::VectorXd& x, double t,
             const ParameterState& q) const override {
    const int d = coeffs_.dimension;
    if (family.domain().dimension != d)
      throw std::invalid_argument("FokkerPlanckOperator: family dimension mismatch");
    const double value = family.value(x, q);
    const double coord_sum = x.sum();
    const double a = coeffs_.drive(t);
    double result = coeffs_.drift_divergence() * value;
    for (int k = 0; k < d; ++k) {
      const double drift_k =
          a - (1.0 + coeffs_.coupling) * x[k] + coeffs_.coupling / d * coord_sum;
      result -= drift_k * family.spatial_derivative(x, q, k, 1);
      result += coeffs_.diffusion * family.spatial_derivative(x, q, k, 2);
    }
    return result;
  }

  bool is_autonomous() const override { return false; }

 private:
  FokkerPlanckCoefficients coeffs_;
};

/// F(u) = -u u_x - u_xx - u_xxxx on a periodic interval.
class KuramotoSivashinskyOperator final : public PdeOperator {
 public:
  double rhs(const AnsatzFamily& family, const Eigen::VectorXd& x, double t,
             const ParameterState& q) const override {
    (void)t;
    const double u = family.value(x, q);
    return -u * family.spatial_derivative(x, q, 0, 1) - family.spatial_derivative(x, q, 0, 2) -
           family.spatial_derivative(x, q, 0, 4);
  }
  bool is_autonomous() const override { return true; }
};

/// F(u) = diffusivity * u_xx; linear baseline whose Galerkin reduction is exact
/// on a Fourier basis.
class PeriodicHeatOperator final : public PdeOperator {
 public:
  explicit PeriodicHeatOperator(double diffusivity = 1.0) : diffusivity_(diffusivity) {}
  double rhs(const AnsatzFamily& family, const Eigen::VectorXd& x, double t,
             const ParameterState& q) const override {
    (void)t;
    return diffusivity_ * family.spatial_derivative(x, q, 0, 2);
  }
  bool is_autonomous() const override { return true; }

 private:
  double diffusivity_;
};

}  // namespace rons
