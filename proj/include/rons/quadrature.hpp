#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace rons {

/// Gauss-Hermite rule for the weight exp(-x^2) on the real line.
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Nodes/weights via the symmetric-tridiagonal eigenproblem of the Hermite
/// recurrence (Golub-Welsch).
inline GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double offdiag = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = offdiag;
    jacobi(k - 1, k) = offdiag;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("gauss_hermite: eigensolver failed");
  GaussHermiteRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights.resize(n);
  const double total = std::sqrt(std::numbers::pi);
  for (int k = 0; k < n; ++k) {
    const double first = eig.eigenvectors()(0, k);
    rule.weights[k] = total * first * first;
  }
  return rule;
}

/// Integral of f over R^d by a tensor Gauss-Hermite rule. The integrand is
/// passed whole (including its own Gaussian decay); `center` and `scale`
/// locate that decay, i.e. f(x) ~ poly(x) * exp(-scale * |x - center|^2), so
/// nodes are placed where the mass is. Exact for polynomial factors of
/// per-axis degree <= 2 * nodes_per_axis - 1.
inline double gauss_hermite_tensor(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& center, double scale,
                                   int nodes_per_axis) {
  const int d = static_cast<int>(center.size());
  if (d < 1) throw std::invalid_argument("gauss_hermite_tensor: empty center");
  if (!(scale > 0)) throw std::invalid_argument("gauss_hermite_tensor: scale must be > 0");
  const double total_points = std::pow(static_cast<double>(nodes_per_axis), d);
  if (total_points > 5e7)
    throw std::invalid_argument("gauss_hermite_tensor: tensor grid too large");

  const GaussHermiteRule rule = gauss_hermite(nodes_per_axis);
  // Weights with the Gaussian divided back out, since f carries its own decay.
  Eigen::VectorXd bare_weights(nodes_per_axis);
  for (int k = 0; k < nodes_per_axis; ++k)
    bare_weights[k] = rule.weights[k] * std::exp(rule.nodes[k] * rule.nodes[k]);

  const double root_scale = std::sqrt(scale);
  std::vector<int> idx(d, 0);
  Eigen::VectorXd x(d);
  double sum = 0.0;
  while (true) {
    double weight = 1.0;
    for (int a = 0; a < d; ++a) {
      weight *= bare_weights[idx[a]];
      x[a] = center[a] + rule.nodes[idx[a]] / root_scale;
    }
    sum += weight * f(x);
    int a = 0;
    for (; a < d; ++a) {
      if (++idx[a] < nodes_per_axis) break;
      idx[a] = 0;
    }
    if (a == d) break;
  }
  return sum / std::pow(root_scale, d);
}

/// Trapezoid rule on a periodic interval [-l, l] (equal weights, spectrally
/// accurate for smooth periodic integrands).
inline double trapezoid_periodic(const std::function<double(double)>& f, double half_length,
                                 int n) {
  if (n < 1) throw std::invalid_argument("trapezoid_periodic: need at least one node");
  const double h = 2.0 * half_length / n;
  double sum = 0.0;
  for (int j = 0; j < n; ++j) sum += f(-half_length + j * h);
  return sum * h;
}

}  // namespace rons
