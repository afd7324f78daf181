#pragma once

// Self-check suites behind the CLI `verify` command. Every check pits a
// production code path against an independent oracle — tensor quadrature for
// the closed-form kernel table, dense linear algebra for the solver
// identities, analytic solutions for the time integrators — and reports a
// named pass/fail with the measured worst case.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "rons/ansatz.hpp"
#include "rons/integrate.hpp"
#include "rons/oracles.hpp"
#include "rons/pde.hpp"
#include "rons/quadrature.hpp"
#include "rons/rng.hpp"
#include "rons/solvers.hpp"
#include "rons/symbolic.hpp"

namespace rons {

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace verify_detail {

inline std::string measured(const char* label, double value, double bound) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s %.3e (bound %.1e)", label, value, bound);
  return buf;
}

inline GaussianMode random_mode(Rng& rng, int d) {
  GaussianMode m;
  m.amp = rng.uniform(0.3, 1.5);
  m.width = rng.uniform(0.5, 1.8);
  m.center.resize(d);
  for (int k = 0; k < d; ++k) m.center[k] = rng.uniform(-1.5, 1.5);
  return m;
}

inline ParameterState single_mode_state(const GaussianMode& m) {
  const int d = static_cast<int>(m.center.size());
  ParameterState q(1, d + 2);
  q.at(0, GaussianMixture::slot_amplitude) = m.amp;
  q.at(0, GaussianMixture::slot_width) = m.width;
  for (int k = 0; k < d; ++k) q.at(0, GaussianMixture::slot_center + k) = m.center[k];
  return q;
}

/// Node placement for integrals against the product of two Gaussian
/// envelopes: center at the precision-weighted mean, scale = total precision.
inline void pair_hint(const GaussianMode& mi, const GaussianMode& mj, Eigen::VectorXd& center,
                      double& scale) {
  const double wi2 = mi.width * mi.width;
  const double wj2 = mj.width * mj.width;
  scale = wi2 + wj2;
  center = (wi2 * mi.center + wj2 * mj.center) / scale;
}

inline double metric_entry_quadrature(const GaussianMixture& family, int slot_a, int slot_b,
                                      const GaussianMode& mi, const GaussianMode& mj, int nodes) {
  const ParameterState qi = single_mode_state(mi);
  const ParameterState qj = single_mode_state(mj);
  Eigen::VectorXd center;
  double scale = 0.0;
  pair_hint(mi, mj, center, scale);
  return gauss_hermite_tensor(
      [&](const Eigen::VectorXd& x) {
        return family.param_jacobian(x, qi)[slot_a] * family.param_jacobian(x, qj)[slot_b];
      },
      center, scale, nodes);
}

inline double rhs_entry_quadrature(const GaussianMixture& family, const FokkerPlanckOperator& op,
                                   int slot, const GaussianMode& mi, const GaussianMode& mj,
                                   double t, int nodes) {
  const ParameterState qi = single_mode_state(mi);
  const ParameterState qj = single_mode_state(mj);
  Eigen::VectorXd center;
  double scale = 0.0;
  pair_hint(mi, mj, center, scale);
  return gauss_hermite_tensor(
      [&](const Eigen::VectorXd& x) {
        return family.param_jacobian(x, qi)[slot] * op.rhs(family, x, t, qj);
      },
      center, scale, nodes);
}

inline double rel_err_floored(double value, double reference, double floor) {
  return std::abs(value - reference) / std::max(std::abs(reference), floor);
}

inline Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd A(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
  return A;
}

inline Eigen::VectorXd random_vector(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

inline Eigen::MatrixXd random_spd(Rng& rng, int n) {
  const Eigen::MatrixXd R = random_matrix(rng, n, n);
  Eigen::MatrixXd M = R * R.transpose();
  M.diagonal().array() += 0.5;
  return M;
}

inline Eigen::MatrixXd random_singular_psd(Rng& rng, int n, int rank) {
  const Eigen::MatrixXd B = random_matrix(rng, n, rank);
  return B * B.transpose();
}

/// Random rectangular matrix with a prescribed condition number through its
/// singular-value factors.
inline Eigen::MatrixXd matrix_with_condition(Rng& rng, int rows, int cols, double kappa) {
  const Eigen::MatrixXd A = random_matrix(rng, rows, cols);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const int k = static_cast<int>(svd.singularValues().size());
  Eigen::VectorXd sigma(k);
  for (int i = 0; i < k; ++i)
    sigma[i] = std::pow(kappa, -static_cast<double>(i) / (k - 1));  // 1 down to 1/kappa
  return svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
}

}  // namespace verify_detail

/// Closed-form kernel table versus tensor Gauss-Hermite quadrature.
inline std::vector<VerifyCheck> verify_kernels() {
  using namespace verify_detail;
  std::vector<VerifyCheck> checks;

  {
    FokkerPlanckCoefficients coeffs;
    coeffs.dimension = 8;  // K = d + 2 = 10 parameters per mode
    const GaussianFokkerPlanckKernels kernels(coeffs);
    const std::size_t K = static_cast<std::size_t>(kernels.params_per_mode());
    const bool ok = kernels.metric_kernel_count() == K * (K + 1) / 2 &&
                    kernels.rhs_kernel_count() == K && kernels.kernel_count() == K * (K + 3) / 2;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%zu metric + %zu rhs = %zu evaluators (K=%zu, expected %zu)",
                  kernels.metric_kernel_count(), kernels.rhs_kernel_count(),
                  kernels.kernel_count(), K, K * (K + 3) / 2);
    checks.push_back({"kernel table holds K(K+3)/2 evaluators, independent of mode count", ok,
                      buf});
  }

  {
    const int d = 2;
    const GaussianMixture family(d);
    FokkerPlanckCoefficients coeffs;
    coeffs.dimension = d;
    const GaussianFokkerPlanckKernels kernels(coeffs);
    const int K = d + 2;
    Rng rng(102);
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
      const GaussianMode mi = random_mode(rng, d);
      const GaussianMode mj = random_mode(rng, d);
      for (int sa = 0; sa < K; ++sa)
        for (int sb = 0; sb <= sa; ++sb) {
          const double closed = kernels.metric_entry(sa, sb, mi, mj);
          const double quad = metric_entry_quadrature(family, sa, sb, mi, mj, 24);
          worst = std::max(worst, rel_err_floored(closed, quad, 1e-12));
        }
    }
    checks.push_back({"metric kernels match the quadrature oracle on 100 random draws",
                      worst < 1e-8, measured("max rel err", worst, 1e-8)});
  }

  {
    const int d = 2;
    const GaussianMixture family(d);
    FokkerPlanckCoefficients coeffs;
    coeffs.dimension = d;
    const FokkerPlanckOperator op(coeffs);
    const GaussianFokkerPlanckKernels kernels(coeffs);
    const int K = d + 2;
    Rng rng(202);
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
      const GaussianMode mi = random_mode(rng, d);
      const GaussianMode mj = random_mode(rng, d);
      const double t = rng.uniform(0, 4);
      for (int slot = 0; slot < K; ++slot) {
        const double closed = kernels.rhs_entry(slot, mi, mj, t);
        const double quad = rhs_entry_quadrature(family, op, slot, mi, mj, t, 24);
        worst = std::max(worst, rel_err_floored(closed, quad, 1e-12));
      }
    }
    checks.push_back({"rhs kernels match the quadrature oracle on 100 random draws", worst < 1e-8,
                      measured("max rel err", worst, 1e-8)});
  }

  {
    const int d = 2, r = 3;
    const GaussianMixture family(d);
    FokkerPlanckCoefficients coeffs;
    coeffs.dimension = d;
    const GaussianFokkerPlanckKernels kernels(coeffs);
    Rng rng(401);
    ParameterState q(r, d + 2);
    for (int i = 0; i < r; ++i) {
      q.at(i, GaussianMixture::slot_amplitude) = rng.uniform(0.3, 1.5);
      q.at(i, GaussianMixture::slot_width) = rng.uniform(0.4, 2.0);
      for (int k = 0; k < d; ++k) q.at(i, GaussianMixture::slot_center + k) = rng.uniform(-2, 2);
    }
    const Eigen::MatrixXd closed = kernels.assemble_metric(q);
    std::vector<GaussianMode> modes;
    for (int i = 0; i < r; ++i) modes.push_back(gaussian_mode(q, i, d));
    const int K = d + 2;
    Eigen::MatrixXd quad(q.size(), q.size());
    for (int row = 0; row < q.size(); ++row)
      for (int col = 0; col <= row; ++col) {
        const double v =
            metric_entry_quadrature(family, row % K, col % K, modes[row / K], modes[col / K], 64);
        quad(row, col) = v;
        quad(col, row) = v;
      }
    const double rel = (closed - quad).norm() / quad.norm();
    checks.push_back({"assembled mixture metric matches entrywise quadrature (r=3, d=2)",
                      rel < 1e-8, measured("Frobenius rel err", rel, 1e-8)});
  }

  return checks;
}

/// Solver identities: normal-equation equivalence, condition-number squaring,
/// constrained stationarity, and the moment system's analytic fixed point.
inline std::vector<VerifyCheck> verify_theorems() {
  using namespace verify_detail;
  std::vector<VerifyCheck> checks;

  {
    Rng rng(73);
    double worst = 0.0;
    bool ok = true;
    for (int instance = 0; instance < 50; ++instance) {
      const int N = 20, n = 8;
      const Eigen::MatrixXd Mtilde = random_matrix(rng, N, n);
      const Eigen::VectorXd ftilde = random_vector(rng, N);
      const double kappa = condition_diagnostics(Mtilde).kappa;
      const double scale = 20.0 / N;
      const Eigen::MatrixXd Mbar = scale * (Mtilde.transpose() * Mtilde);
      const Eigen::VectorXd fbar = scale * (Mtilde.transpose() * ftilde);
      const Eigen::VectorXd normal =
          solve_regularized_rons(Mbar, fbar, {}, RegularizationConfig::none()).first;
      const Eigen::VectorXd lsq = pinv_solve(Mtilde, ftilde);
      const double rel = (normal - lsq).norm() / lsq.norm();
      worst = std::max(worst, rel / kappa);
      ok = ok && rel < 1e-8 * kappa;
    }
    checks.push_back({"scaled normal equations reproduce the least-squares solution (50 draws)",
                      ok, measured("max rel err / kappa", worst, 1e-8)});
  }

  {
    Rng rng(1200);
    double worst = 0.0;
    for (double kappa : {1e1, 1e2, 1e3, 1e4}) {
      const Eigen::MatrixXd A = matrix_with_condition(rng, 40, 12, kappa);
      const double ka = condition_diagnostics(A).kappa;
      const double kn = condition_diagnostics(Eigen::MatrixXd(A.transpose() * A)).kappa;
      worst = std::max(worst, std::abs(kn - ka * ka) / (ka * ka));
    }
    checks.push_back({"forming normal equations squares the condition number", worst < 1e-6,
                      measured("max rel deviation", worst, 1e-6)});
  }

  {
    Rng rng(359);
    const int n = 8;
    double worst_stationarity = 0.0;
    double worst_constraint = 0.0;
    for (int instance = 0; instance < 50; ++instance) {
      const bool deficient = instance % 2 == 0;
      const Eigen::MatrixXd M =
          deficient ? random_singular_psd(rng, n, n - 3) : random_spd(rng, n);
      const Eigen::VectorXd f = random_vector(rng, n);
      const int m = 1 + instance % 2;
      const Eigen::MatrixXd G = random_matrix(rng, n, m);
      std::vector<Eigen::VectorXd> grads;
      for (int k = 0; k < m; ++k) grads.push_back(G.col(k));
      const double alpha = 1e-4;
      const auto [v, report] =
          solve_regularized_rons(M, f, grads, RegularizationConfig::tikhonov(alpha));
      Eigen::MatrixXd shifted = M;
      shifted.diagonal().array() += alpha;
      const Eigen::VectorXd stationarity = shifted * v - f + G * report.multipliers;
      const double scale = f.norm() + v.norm() + report.multipliers.norm();
      worst_stationarity = std::max(worst_stationarity, stationarity.norm() / scale);
      for (int k = 0; k < m; ++k)
        worst_constraint =
            std::max(worst_constraint, std::abs(G.col(k).dot(v)) /
                                           std::max(1.0, v.norm() * G.col(k).norm()));
    }
    const bool ok = worst_stationarity <= 1e-9 && worst_constraint <= 1e-9;
    checks.push_back({"constrained solves satisfy the stationarity system (50 draws, "
                      "rank-deficient included)",
                      ok,
                      measured("max stationarity", worst_stationarity, 1e-9) + ", " +
                          measured("max constraint product", worst_constraint, 1e-9)});
  }

  {
    // Freeze the drive at one instant; the affine-drift moment system is then
    // stationary at mean a*1 and covariance nu * (-A)^{-1} with
    // A = (coupling/d) * ones - (1 + coupling) * I.
    FokkerPlanckCoefficients coeffs;
    const int d = coeffs.dimension;
    const double t = 0.37;
    const double a = coeffs.drive(t);
    const Eigen::MatrixXd A =
        (coeffs.coupling / d) * Eigen::MatrixXd::Ones(d, d) -
        (1.0 + coeffs.coupling) * Eigen::MatrixXd::Identity(d, d);
    MomentState stationary;
    stationary.mean = Eigen::VectorXd::Constant(d, a);
    const Eigen::MatrixXd cov = coeffs.diffusion * (-A).inverse();
    stationary.second_moment = cov + stationary.mean * stationary.mean.transpose();
    const MomentState deriv = fp_moment_rhs(t, stationary, coeffs);
    const double scale = stationary.mean.norm() + stationary.second_moment.norm();
    const double resid = (deriv.mean.norm() + deriv.second_moment.norm()) / scale;
    checks.push_back({"moment dynamics are stationary at the analytic fixed point",
                      resid < 1e-12, measured("rel residual", resid, 1e-12)});
  }

  return checks;
}

/// Time integrators versus analytic solutions.
inline std::vector<VerifyCheck> verify_integrators() {
  using namespace verify_detail;
  std::vector<VerifyCheck> checks;

  const OdeRhs rhs = [](double t, const Eigen::VectorXd& y) {
    return Eigen::VectorXd(std::cos(t) * y);
  };
  const Eigen::VectorXd y0 = Eigen::VectorXd::Ones(1);
  const double t1 = 5.0;
  const double exact = std::exp(std::sin(t1));

  auto terminal_error = [&](IntegratorConfig::Method method, double rtol) {
    IntegratorConfig cfg;
    cfg.method = method;
    cfg.rtol = rtol;
    cfg.atol = rtol * 1e-2;
    const Trajectory traj = integrate(rhs, y0, 0.0, t1, cfg);
    if (traj.aborted) throw std::runtime_error("verify integrators: " + traj.abort_reason);
    return std::abs(traj.states.back()[0] - exact) / exact;
  };

  {
    const double err = terminal_error(IntegratorConfig::Method::dopri54, 1e-8);
    checks.push_back({"embedded rk pair matches an analytic solution at tolerance", err < 1e-6,
                      measured("rel err", err, 1e-6)});
  }
  {
    const double coarse = terminal_error(IntegratorConfig::Method::dopri54, 1e-4);
    const double fine = terminal_error(IntegratorConfig::Method::dopri54, 1e-8);
    const bool ok = fine < coarse && coarse / std::max(fine, 1e-300) > 10.0;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "err(rtol 1e-4) %.3e vs err(rtol 1e-8) %.3e", coarse, fine);
    checks.push_back({"tightening the tolerance tightens the error", ok, buf});
  }
  {
    const double err = terminal_error(IntegratorConfig::Method::adams, 1e-8);
    checks.push_back({"multistep integrator matches the analytic solution", err < 1e-6,
                      measured("rel err", err, 1e-6)});
  }
  {
    IntegratorConfig cfg;
    cfg.rtol = 1e-7;
    const Trajectory a = integrate(rhs, y0, 0.0, t1, cfg);
    const Trajectory b = integrate(rhs, y0, 0.0, t1, cfg);
    bool identical = a.times.size() == b.times.size() &&
                     a.accepted_steps == b.accepted_steps &&
                     a.rhs_evaluations == b.rhs_evaluations;
    if (identical)
      for (std::size_t i = 0; i < a.states.size(); ++i)
        identical = identical && a.states[i] == b.states[i] && a.times[i] == b.times[i];
    checks.push_back({"integration is bitwise deterministic", identical,
                      identical ? "two runs agree to the last bit" : "runs differ"});
  }

  return checks;
}

/// Dispatch by suite name; "all" concatenates every suite.
inline std::vector<VerifyCheck> verify_suite(const std::string& name) {
  if (name == "kernels") return verify_kernels();
  if (name == "theorems") return verify_theorems();
  if (name == "integrators") return verify_integrators();
  if (name == "all") {
    std::vector<VerifyCheck> checks = verify_kernels();
    std::vector<VerifyCheck> theorems = verify_theorems();
    std::vector<VerifyCheck> integrators = verify_integrators();
    checks.insert(checks.end(), theorems.begin(), theorems.end());
    checks.insert(checks.end(), integrators.begin(), integrators.end());
    return checks;
  }
  throw std::invalid_argument("verify: unknown suite '" + name +
                              "' (expected kernels, theorems, integrators, or all)");
}

}  // namespace rons
