#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rons/collocation.hpp"

namespace rons {

/// Thrown when the constraint gradients fail the linear-independence check
/// (the multiplier matrix is numerically singular).
struct DependentConstraintsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tikhonov penalty configuration. The penalty operator is restricted to
/// sqrt(alpha) * I; `truncation` is the relative singular-value cutoff used
/// whenever a pseudoinverse is taken.
struct RegularizationConfig {
  enum class Mode { none, tikhonov };
  Mode mode = Mode::none;
  double alpha = 0.0;
  double truncation = 1e-12;

  static RegularizationConfig none(double truncation = 1e-12) {
    return validated({Mode::none, 0.0, truncation});
  }
  static RegularizationConfig tikhonov(double alpha, double truncation = 1e-12) {
    return validated({Mode::tikhonov, alpha, truncation});
  }
  static RegularizationConfig validated(RegularizationConfig reg) {
    if (!(reg.alpha >= 0))
      throw std::invalid_argument("regularization: alpha must be non-negative");
    if (!(reg.truncation >= 0) || reg.truncation >= 1)
      throw std::invalid_argument("regularization: truncation must lie in [0, 1)");
    if ((reg.mode == Mode::none) != (reg.alpha == 0.0))
      throw std::invalid_argument("regularization: mode none iff alpha == 0");
    return reg;
  }
};

/// Outcome of the Lagrange-multiplier stage of a constrained solve.
struct LagrangeSolveReport {
  Eigen::VectorXd multipliers;        // lambda, length m (empty when m = 0)
  double constraint_condition = 0.0;  // condition estimate of the multiplier matrix
  double solve_residual = 0.0;        // || C lambda - b ||
};

/// Singular-value summary of a matrix; kappa uses only singular values above
/// the numerical-rank threshold max(rows, cols) * eps * sigma_max.
struct ConditionDiagnostics {
  double kappa = 0.0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;  // smallest singular value counted as nonzero
  int rank = 0;
};

/// Minimum-norm least-squares solution via SVD; singular values below
/// truncation * sigma_max are treated as zero.
inline Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                  double truncation = 1e-12) {
  if (!A.allFinite() || !b.allFinite())
    throw std::invalid_argument("pinv_solve: non-finite entries");
  if (!(truncation >= 0) || truncation >= 1)
    throw std::invalid_argument("pinv_solve: truncation must lie in [0, 1)");
  if (A.rows() != b.size()) throw std::invalid_argument("pinv_solve: shape mismatch");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double cutoff = truncation * (sigma.size() > 0 ? sigma[0] : 0.0);
  Eigen::VectorXd coeffs = svd.matrixU().transpose() * b;
  for (int i = 0; i < sigma.size(); ++i)
    coeffs[i] = sigma[i] > cutoff && sigma[i] > 0.0 ? coeffs[i] / sigma[i] : 0.0;
  return svd.matrixV() * coeffs;
}

inline ConditionDiagnostics condition_diagnostics(const Eigen::MatrixXd& A) {
  if (!A.allFinite()) throw std::invalid_argument("condition_diagnostics: non-finite entries");
  // Values-only divide-and-conquer SVD: an order of magnitude faster than the
  // one-sided Jacobi variant at the few-hundred-parameter sizes used here.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  const Eigen::VectorXd& sigma = svd.singularValues();
  ConditionDiagnostics diag;
  diag.sigma_max = sigma.size() > 0 ? sigma[0] : 0.0;
  if (diag.sigma_max == 0.0)
    throw std::invalid_argument("condition_diagnostics: all-zero matrix");
  const double threshold = std::max(A.rows(), A.cols()) *
                           std::numeric_limits<double>::epsilon() * diag.sigma_max;
  for (int i = 0; i < sigma.size(); ++i) {
    if (sigma[i] > threshold) {
      diag.sigma_min = sigma[i];
      diag.rank = i + 1;
    }
  }
  diag.kappa = diag.sigma_max / diag.sigma_min;
  return diag;
}

/// Instantaneous fit error 1/2 * (v^T M v - 2 f^T v + residual_sq), where
/// residual_sq is the squared norm of the full right-hand side supplied by the
/// caller (quadrature or collocation sum).
inline double cost_functional(const Eigen::MatrixXd& M, const Eigen::VectorXd& f,
                              const Eigen::VectorXd& v, double residual_sq) {
  return 0.5 * (v.dot(M * v) - 2.0 * f.dot(v) + residual_sq);
}

namespace detail {

/// Solve operator for a symmetric system matrix: Cholesky fast path with one
/// iterative-refinement pass, falling back to a truncated-SVD pseudoinverse
/// when factorization fails or the residual check rejects the solution.
/// The Cholesky path must only be enabled when the matrix is definite with a
/// known margin (e.g. Tikhonov-shifted): on a numerically singular matrix a
/// backward-stable factorization can return solutions carrying arbitrarily
/// large null-space components at tiny backward error, which the truncated
/// SVD deliberately suppresses to get minimum-norm semantics.
class SymmetricSolveOperator {
 public:
  SymmetricSolveOperator(Eigen::MatrixXd A, double truncation, bool try_cholesky = true)
      : A_(std::move(A)), truncation_(truncation) {
    if (try_cholesky) {
      llt_.compute(A_);
      cholesky_ok_ = llt_.info() == Eigen::Success;
    }
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const {
    if (cholesky_ok_) {
      Eigen::MatrixXd X = llt_.solve(B);
      X += llt_.solve(B - A_ * X);
      if (residual_acceptable(X, B)) return X;
      cholesky_ok_ = false;
    }
    ensure_svd();
    Eigen::MatrixXd coeffs = svd_->matrixU().transpose() * B;
    const Eigen::VectorXd& sigma = svd_->singularValues();
    const double cutoff = truncation_ * (sigma.size() > 0 ? sigma[0] : 0.0);
    for (int i = 0; i < sigma.size(); ++i) {
      const double inv = sigma[i] > cutoff && sigma[i] > 0.0 ? 1.0 / sigma[i] : 0.0;
      coeffs.row(i) *= inv;
    }
    return svd_->matrixV() * coeffs;
  }

 private:
  bool residual_acceptable(const Eigen::MatrixXd& X, const Eigen::MatrixXd& B) const {
    const double scale = A_.norm() * X.norm() + B.norm();
    return (A_ * X - B).norm() <= 1e-10 * scale;
  }
  void ensure_svd() const {
    if (!svd_)
      svd_.emplace(A_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  }

  Eigen::MatrixXd A_;
  double truncation_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  mutable bool cholesky_ok_ = false;
  mutable std::optional<Eigen::JacobiSVD<Eigen::MatrixXd>> svd_;
};

/// Shared constrained-solve core: given an operator applying the (pseudo)
/// inverse of the system matrix A, returns v = A^inv (f - G lambda) with the
/// multipliers solving (G^T A^inv G) lambda = G^T A^inv f. The constraint
/// inner products of the result equal the multiplier-solve residual exactly.
inline std::pair<Eigen::VectorXd, LagrangeSolveReport> solve_with_constraints(
    const SymmetricSolveOperator& inverse, const Eigen::VectorXd& f,
    const std::vector<Eigen::VectorXd>& grads) {
  const int n = static_cast<int>(f.size());
  const int m = static_cast<int>(grads.size());
  LagrangeSolveReport report;
  if (m == 0) {
    Eigen::VectorXd v = inverse.solve(f);
    return {std::move(v), std::move(report)};
  }
  Eigen::MatrixXd rhs(n, m + 1);
  rhs.col(0) = f;
  for (int k = 0; k < m; ++k) {
    if (grads[k].size() != n)
      throw std::invalid_argument("constrained solve: gradient length mismatch");
    rhs.col(k + 1) = grads[k];
  }
  const Eigen::MatrixXd solved = inverse.solve(rhs);
  const Eigen::VectorXd inv_f = solved.col(0);
  const Eigen::MatrixXd inv_G = solved.rightCols(m);

  Eigen::MatrixXd G(n, m);
  for (int k = 0; k < m; ++k) G.col(k) = grads[k];
  Eigen::MatrixXd C = G.transpose() * inv_G;
  C = ((C + C.transpose()) / 2.0).eval();
  const Eigen::VectorXd b = G.transpose() * inv_f;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("constrained solve: multiplier matrix eigensolve failed");
  const double eig_max = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double eig_min = eig.eigenvalues().minCoeff();
  if (!(eig_min > 1e-12 * eig_max))
    throw DependentConstraintsError("constrained solve: constraint gradients are dependent");
  report.constraint_condition = eig_max / eig_min;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(C);
  Eigen::VectorXd lambda = ldlt.solve(b);
  lambda += ldlt.solve(b - C * lambda);
  report.multipliers = lambda;
  report.solve_residual = (C * lambda - b).norm();

  Eigen::VectorXd v = inv_f - inv_G * lambda;
  return {std::move(v), std::move(report)};
}

}  // namespace detail

/// Constrained parameter-velocity solve: M v = f - sum_k lambda_k grad I_k,
/// with multipliers chosen so every constraint inner product vanishes. A
/// singular metric is handled through the pseudoinverse path.
inline std::pair<Eigen::VectorXd, LagrangeSolveReport> solve_constrained_rons(
    const Eigen::MatrixXd& M, const Eigen::VectorXd& f, const std::vector<Eigen::VectorXd>& grads,
    double truncation = 1e-12) {
  if (M.rows() != M.cols() || M.rows() != f.size())
    throw std::invalid_argument("solve_constrained_rons: shape mismatch");
  detail::SymmetricSolveOperator inverse(M, truncation, /*try_cholesky=*/false);
  return detail::solve_with_constraints(inverse, f, grads);
}

/// Tikhonov-shifted constrained solve: (M + alpha I) v = f - sum lambda_k
/// grad I_k. With alpha = 0 this is exactly solve_constrained_rons.
inline std::pair<Eigen::VectorXd, LagrangeSolveReport> solve_regularized_rons(
    const Eigen::MatrixXd& M, const Eigen::VectorXd& f, const std::vector<Eigen::VectorXd>& grads,
    const RegularizationConfig& reg) {
  if (M.rows() != M.cols() || M.rows() != f.size())
    throw std::invalid_argument("solve_regularized_rons: shape mismatch");
  RegularizationConfig::validated(reg);
  Eigen::MatrixXd A = M;
  if (reg.alpha > 0) A.diagonal().array() += reg.alpha;
  detail::SymmetricSolveOperator inverse(std::move(A), reg.truncation,
                                         /*try_cholesky=*/reg.alpha > 0);
  return detail::solve_with_constraints(inverse, f, grads);
}

/// Least-squares collocation solve. With alpha > 0 solves the normal-equation
/// system (Mtilde^T Mtilde + alpha I) v = Mtilde^T ftilde - sum lambda_k
/// grad I_k. With alpha = 0 the constraint rows are appended to the
/// rectangular system and the minimum-norm least-squares solution is returned
/// (no multipliers in that case). Constraints may arrive either embedded in
/// `sys` or as `grads`, not both.
inline std::pair<Eigen::VectorXd, LagrangeSolveReport> solve_regularized_crons(
    const CollocationSystem& sys, const std::vector<Eigen::VectorXd>& grads,
    const RegularizationConfig& reg) {
  RegularizationConfig::validated(reg);
  if (sys.constraint_rows > 0 && !grads.empty())
    throw std::invalid_argument(
        "solve_regularized_crons: constraints supplied both embedded and as gradients");
  const int N = sys.point_rows();
  const int n = sys.unknowns();

  std::vector<Eigen::VectorXd> constraints = grads;
  for (int k = 0; k < sys.constraint_rows; ++k)
    constraints.push_back(sys.Mtilde.row(N + k).transpose());

  if (reg.alpha == 0.0) {
    CollocationSystem augmented;
    augmented.Mtilde = sys.Mtilde;
    augmented.ftilde = sys.ftilde;
    augmented.constraint_rows = sys.constraint_rows;
    if (!grads.empty()) {
      augmented.Mtilde.conservativeResize(N + static_cast<int>(grads.size()), n);
      augmented.ftilde.conservativeResize(augmented.Mtilde.rows());
      for (std::size_t k = 0; k < grads.size(); ++k) {
        augmented.Mtilde.row(N + static_cast<Eigen::Index>(k)) = grads[k].transpose();
        augmented.ftilde[N + static_cast<Eigen::Index>(k)] = 0.0;
      }
    }
    Eigen::VectorXd v = pinv_solve(augmented.Mtilde, augmented.ftilde, reg.truncation);
    return {std::move(v), LagrangeSolveReport{}};
  }

  const Eigen::MatrixXd P = sys.Mtilde.topRows(N);
  const Eigen::VectorXd fp = sys.ftilde.head(N);
  Eigen::MatrixXd A = P.transpose() * P;
  A = ((A + A.transpose()) / 2.0).eval();
  A.diagonal().array() += reg.alpha;
  const Eigen::VectorXd fn = P.transpose() * fp;
  detail::SymmetricSolveOperator inverse(std::move(A), reg.truncation, /*try_cholesky=*/true);
  return detail::solve_with_constraints(inverse, fn, constraints);
}

}  // namespace rons
