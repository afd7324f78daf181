#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rons/ansatz.hpp"
#include "rons/pde.hpp"
#include "rons/rng.hpp"

namespace rons {

/// Rectangular point-residual system. Row i of the top block enforces the PDE
/// residual at collocation point x_i: for any parameter velocity v,
/// (Mtilde * v - ftilde)(i) is exactly the residual at x_i. Optional trailing
/// constraint rows carry a conserved-quantity gradient each, with zero
/// right-hand side.
struct CollocationSystem {
  std::vector<Eigen::VectorXd> points;
  Eigen::MatrixXd Mtilde;   // (N + m) x n
  Eigen::VectorXd ftilde;   // N + m, last m entries zero
  int constraint_rows = 0;  // m

  int rows() const { return static_cast<int>(Mtilde.rows()); }
  int unknowns() const { return static_cast<int>(Mtilde.cols()); }
  int point_rows() const { return rows() - constraint_rows; }
};

/// Normal-equation form of a sampled system, scaled so that entries estimate
/// the continuous inner products: Mbar = (|D|/N) Mtilde^T Mtilde and
/// fbar = (|D|/N) Mtilde^T ftilde over the same N samples.
struct MonteCarloSystem {
  std::vector<Eigen::VectorXd> samples;
  Eigen::MatrixXd Mbar;  // n x n, symmetric PSD by construction
  Eigen::VectorXd fbar;  // n
  double domain_size = 0.0;
};

namespace detail {

inline Eigen::VectorXd wrap_into_domain(const Domain& domain, Eigen::VectorXd x) {
  if (domain.kind != Domain::Kind::periodic_interval) return x;
  const double period = 2.0 * domain.half_length;
  for (int k = 0; k < x.size(); ++k) {
    double y = std::remainder(x[k], period);  // lands in [-half_length, half_length]
    if (y >= domain.half_length) y -= period;
    x[k] = y;
  }
  return x;
}

}  // namespace detail

/// Builds the point-residual system at state q, time t. Points on a periodic
/// domain are wrapped into the fundamental interval; on unbounded domains any
/// finite point is accepted.
inline CollocationSystem assemble_collocation(const AnsatzFamily& family, const PdeOperator& pde,
                                              const ParameterState& q, double t,
                                              const std::vector<Eigen::VectorXd>& points) {
  if (points.empty()) throw std::invalid_argument("assemble_collocation: no collocation points");
  if (q.size() < 1) throw std::invalid_argument("assemble_collocation: empty parameter state");
  const int N = static_cast<int>(points.size());
  const int n = q.size();
  CollocationSystem sys;
  sys.points.reserve(points.size());
  for (const auto& x : points) sys.points.push_back(detail::wrap_into_domain(family.domain(), x));
  sys.Mtilde.resize(N, n);
  sys.ftilde.resize(N);
  // Rows are independent: each writes only its own slice of Mtilde / ftilde.
  for (int i = 0; i < N; ++i) {
    sys.Mtilde.row(i) = family.param_jacobian(sys.points[i], q).transpose();
    sys.ftilde[i] = pde.rhs(family, sys.points[i], t, q);
  }
  return sys;
}

/// Appends one row per conserved-quantity gradient, with zero right-hand side.
/// A least-squares solution of the augmented system satisfies the constraints
/// exactly whenever the system is consistent; trajectory-level tests bound the
/// conserved-quantity drift directly.
inline CollocationSystem augment_constraints(CollocationSystem sys,
                                             const std::vector<Eigen::VectorXd>& grads) {
  if (grads.empty()) return sys;
  const int n = sys.unknowns();
  for (const auto& g : grads)
    if (g.size() != n)
      throw std::invalid_argument("augment_constraints: gradient length mismatch");
  const int old_rows = sys.rows();
  const int m = static_cast<int>(grads.size());
  sys.Mtilde.conservativeResize(old_rows + m, n);
  sys.ftilde.conservativeResize(old_rows + m);
  for (int k = 0; k < m; ++k) {
    sys.Mtilde.row(old_rows + k) = grads[k].transpose();
    sys.ftilde[old_rows + k] = 0.0;
  }
  sys.constraint_rows += m;
  return sys;
}

/// Sampled normal equations over caller-drawn points (uniform i.i.d. for the
/// baseline estimator), carrying the |D|/N volume factor on both sides.
inline MonteCarloSystem assemble_monte_carlo(const AnsatzFamily& family, const PdeOperator& pde,
                                             const ParameterState& q, double t,
                                             const std::vector<Eigen::VectorXd>& samples,
                                             double domain_size) {
  if (samples.empty()) throw std::invalid_argument("assemble_monte_carlo: no samples");
  if (!(domain_size > 0))
    throw std::invalid_argument("assemble_monte_carlo: domain size must be positive");
  const CollocationSystem sys = assemble_collocation(family, pde, q, t, samples);
  const double scale = domain_size / static_cast<double>(samples.size());
  MonteCarloSystem mc;
  mc.samples = sys.points;
  mc.domain_size = domain_size;
  mc.Mbar = scale * (sys.Mtilde.transpose() * sys.Mtilde);
  mc.Mbar = ((mc.Mbar + mc.Mbar.transpose()) / 2.0).eval();
  mc.fbar = scale * (sys.Mtilde.transpose() * sys.ftilde);
  return mc;
}

/// N equidistant points on [-half_length, half_length), half-open so the
/// periodic endpoint is not duplicated.
inline std::vector<Eigen::VectorXd> equidistant_points(double half_length, int count) {
  if (count < 1) throw std::invalid_argument("equidistant_points: count must be positive");
  std::vector<Eigen::VectorXd> points(count);
  const double step = 2.0 * half_length / count;
  for (int i = 0; i < count; ++i) {
    points[i] = Eigen::VectorXd::Constant(1, -half_length + i * step);
  }
  return points;
}

/// N i.i.d. uniform samples on [-half_length, half_length)^dim.
inline std::vector<Eigen::VectorXd> uniform_samples(Rng& rng, double half_length, int dim,
                                                    int count) {
  if (count < 1) throw std::invalid_argument("uniform_samples: count must be positive");
  std::vector<Eigen::VectorXd> samples(count);
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd x(dim);
    for (int k = 0; k < dim; ++k) x[k] = rng.uniform(-half_length, half_length);
    samples[i] = std::move(x);
  }
  return samples;
}

}  // namespace rons
