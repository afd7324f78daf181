#pragma once

// Least-squares fit of an ansatz to an initial profile: damped Gauss-Newton
// (Levenberg-Marquardt) with the family's analytic parameter Jacobian, run
// from several seeded starting points to escape poor local minima.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "rons/ansatz.hpp"
#include "rons/rng.hpp"

namespace rons {

class FitFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitOptions {
  int grid_points = 512;
  int restarts = 20;
  int max_iterations = 200;
  /// Below this L2 residual the search stops early (already at a
  /// representability floor).
  double target_residual = 1e-10;
  /// Above this L2 residual after all restarts the fit is declared failed.
  double acceptable_residual = 1e-4;
  std::uint64_t seed = 0;
};

struct FitResult {
  ParameterState params;
  double residual_l2 = 0.0;  // sqrt(|D|/N * sum of squared point residuals)
  int starts_used = 0;
};

namespace detail {

/// One damped Gauss-Newton descent from `q`; returns the final L2 residual.
/// `scale` converts the point-residual 2-norm into the L2(D) norm.
inline double levenberg_marquardt(const AnsatzFamily& family,
                                  const std::vector<Eigen::VectorXd>& grid,
                                  const Eigen::VectorXd& target, double scale,
                                  int max_iterations, ParameterState& q) {
  const int rows = static_cast<int>(grid.size());
  const int n = q.size();
  Eigen::VectorXd residual(rows);
  Eigen::MatrixXd jacobian(rows, n);

  const auto evaluate = [&](const ParameterState& state, Eigen::VectorXd& out) {
    for (int j = 0; j < rows; ++j) out[j] = family.value(grid[j], state) - target[j];
  };

  evaluate(q, residual);
  double cost = residual.squaredNorm();
  double damping = 1e-3;
  for (int iter = 0; iter < max_iterations; ++iter) {
    for (int j = 0; j < rows; ++j) jacobian.row(j) = family.param_jacobian(grid[j], q);
    const Eigen::MatrixXd normal = jacobian.transpose() * jacobian;
    const Eigen::VectorXd gradient = jacobian.transpose() * residual;
    if (gradient.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + cost)) break;

    bool stepped = false;
    Eigen::VectorXd trial_residual(rows);
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal() += damping * normal.diagonal();
      damped.diagonal().array() += 1e-12;
      const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
      ParameterState trial = q;
      trial.values += step;
      evaluate(trial, trial_residual);
      const double trial_cost = trial_residual.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        q = trial;
        residual = trial_residual;
        cost = trial_cost;
        // Decay the damping hard on success: these valleys are narrow, and
        // near-Gauss-Newton steps are what reach their floors; the retry loop
        // above recovers cheaply whenever the decay overshoots.
        damping = std::max(damping * 0.02, 1e-14);
        stepped = true;
        break;
      }
      damping *= 4.0;
    }
    if (!stepped) break;  // damping exhausted: local minimum reached
  }
  return scale * std::sqrt(cost);
}

}  // namespace detail

/// Fits `modes` modes of `family` to the profile u0 in the L2 norm of the
/// family's domain, sampled on an equidistant grid. Deterministic for a fixed
/// seed. Throws FitFailure if no restart reaches options.acceptable_residual.
inline FitResult fit_initial_condition(const AnsatzFamily& family, int modes,
                                       const std::function<double(double)>& u0,
                                       const FitOptions& options = {}) {
  if (family.domain().kind != Domain::Kind::periodic_interval)
    throw std::invalid_argument("fit_initial_condition: family must live on an interval");
  if (modes < 1) throw std::invalid_argument("fit_initial_condition: modes must be >= 1");
  if (options.grid_points < 2 * modes)
    throw std::invalid_argument("fit_initial_condition: grid too coarse for the mode count");
  if (options.restarts < 1)
    throw std::invalid_argument("fit_initial_condition: need at least one start");

  const double half_length = family.domain().half_length;
  const int rows = options.grid_points;
  std::vector<Eigen::VectorXd> grid(rows);
  Eigen::VectorXd target(rows);
  for (int j = 0; j < rows; ++j) {
    const double x = -half_length + 2.0 * half_length * j / rows;
    grid[j] = Eigen::VectorXd::Constant(1, x);
    target[j] = u0(x);
  }
  const double scale = std::sqrt(2.0 * half_length / rows);

  Rng rng(options.seed);
  FitResult best;
  best.residual_l2 = std::numeric_limits<double>::infinity();
  for (int start = 0; start < options.restarts; ++start) {
    ParameterState q(modes, family.params_per_mode());
    if (start == 0) {
      // Zero-amplitude start with mild spread in the shapes: exact for a zero
      // profile, and a tame descent for small-amplitude ones.
      for (int i = 0; i < modes; ++i) {
        q.at(i, TanhNetwork::slot_gain) = 1.0;
        q.at(i, TanhNetwork::slot_phase) = 2.0 * std::numbers::pi * i / modes;
      }
    } else {
      for (int i = 0; i < modes; ++i) {
        q.at(i, TanhNetwork::slot_amplitude) = rng.uniform(-1.5, 1.5);
        q.at(i, TanhNetwork::slot_gain) = rng.uniform(0.3, 2.0);
        q.at(i, TanhNetwork::slot_phase) = rng.uniform(-std::numbers::pi, std::numbers::pi);
        q.at(i, TanhNetwork::slot_bias) = rng.uniform(-1.0, 1.0);
      }
    }
    const double residual =
        detail::levenberg_marquardt(family, grid, target, scale, options.max_iterations, q);
    ++best.starts_used;
    if (residual < best.residual_l2) {
      best.residual_l2 = residual;
      best.params = q;
    }
    if (best.residual_l2 < options.target_residual) break;
  }

  if (!(best.residual_l2 < options.acceptable_residual))
    throw FitFailure("fit_initial_condition: best residual " +
                     std::to_string(best.residual_l2) + " exceeds the acceptable threshold");
  return best;
}

}  // namespace rons
