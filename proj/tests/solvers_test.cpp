#include "rons/solvers.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "rons/quadrature.hpp"
#include "test_util.hpp"

namespace rons {
namespace {

using test::rel_err;

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd A(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) A(i, j) = rng.uniform(-1, 1);
  return A;
}

Eigen::VectorXd random_vector(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-1, 1);
  return v;
}

/// Random symmetric positive definite matrix with moderate conditioning.
Eigen::MatrixXd random_spd(Rng& rng, int n) {
  const Eigen::MatrixXd B = random_matrix(rng, n, n);
  return B.transpose() * B + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

/// Random symmetric PSD matrix of prescribed rank deficiency.
Eigen::MatrixXd random_singular_psd(Rng& rng, int n, int rank) {
  const Eigen::MatrixXd B = random_matrix(rng, rank, n);
  Eigen::MatrixXd M = B.transpose() * B;
  return ((M + M.transpose()) / 2.0).eval();
}

TEST(PinvSolve, IdentityReturnsRhs) {
  Rng rng(301);
  const Eigen::VectorXd b = random_vector(rng, 3);
  const Eigen::VectorXd x = pinv_solve(Eigen::MatrixXd::Identity(3, 3), b);
  EXPECT_LT((x - b).lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(PinvSolve, RankDeficientDiagonalDropsTheDeadDirection) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = 1.0;
  Eigen::VectorXd b(2);
  b << 1.0, 1.0;
  const Eigen::VectorXd x = pinv_solve(A, b);
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  EXPECT_EQ(x[1], 0.0);
}

TEST(PinvSolve, SatisfiesPenroseConditions) {
  Rng rng(303);
  const Eigen::MatrixXd A = random_matrix(rng, 5, 3);
  // Reconstruct the pseudoinverse column by column through pinv_solve itself.
  Eigen::MatrixXd P(3, 5);
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(5);
    e[k] = 1.0;
    P.col(k) = pinv_solve(A, e);
  }
  const double scale = A.norm() * P.norm();
  EXPECT_LT((A * P * A - A).norm(), 1e-10 * scale);
  EXPECT_LT((P * A * P - P).norm(), 1e-10 * scale);
  EXPECT_LT(((A * P).transpose() - A * P).norm(), 1e-10 * scale);
  EXPECT_LT(((P * A).transpose() - P * A).norm(), 1e-10 * scale);
}

TEST(PinvSolve, UnderdeterminedConsistentGivesMinimumNorm) {
  Rng rng(307);
  const Eigen::MatrixXd A = random_matrix(rng, 2, 4);
  const Eigen::VectorXd truth = random_vector(rng, 4);
  const Eigen::VectorXd b = A * truth;
  const Eigen::VectorXd x = pinv_solve(A, b);
  EXPECT_LT((A * x - b).norm(), 1e-12 * b.norm());
  // Minimum-norm solutions lie in the row space of A.
  const Eigen::MatrixXd AAt = A * A.transpose();
  const Eigen::VectorXd row_space = A.transpose() * AAt.ldlt().solve(b);
  EXPECT_LT((x - row_space).norm(), 1e-10 * row_space.norm());
}

TEST(PinvSolve, RejectsBadInput) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(2);
  A(0, 1) = std::nan("");
  EXPECT_THROW(pinv_solve(A, b), std::invalid_argument);
  A(0, 1) = 0.0;
  EXPECT_THROW(pinv_solve(A, b, -0.1), std::invalid_argument);
  EXPECT_THROW(pinv_solve(A, b, 1.0), std::invalid_argument);
  EXPECT_THROW(pinv_solve(A, Eigen::VectorXd::Ones(3)), std::invalid_argument);
}

TEST(ConditionDiagnostics, MatchesHandValuesAndSquaresUnderNormalEquations) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = 0.1;
  const ConditionDiagnostics d = condition_diagnostics(A);
  EXPECT_LT(rel_err(d.kappa, 10.0), 1e-12);
  EXPECT_LT(rel_err(d.sigma_max, 1.0), 1e-12);
  EXPECT_EQ(d.rank, 2);
  const ConditionDiagnostics dn = condition_diagnostics(Eigen::MatrixXd(A.transpose() * A));
  EXPECT_LT(rel_err(dn.kappa, 100.0), 1e-12);
}

TEST(ConditionDiagnostics, UsesOnlyNonzeroSingularValues) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = 1.0;
  const ConditionDiagnostics d = condition_diagnostics(A);
  EXPECT_EQ(d.rank, 1);
  EXPECT_LT(rel_err(d.kappa, 1.0), 1e-12);
  EXPECT_THROW(condition_diagnostics(Eigen::MatrixXd::Zero(3, 3)), std::invalid_argument);
}

TEST(ConditionDiagnostics, NormalEquationsSquareKappaOnRandomMatrix) {
  Rng rng(311);
  const Eigen::MatrixXd A = random_matrix(rng, 100, 30);
  const double ka = condition_diagnostics(A).kappa;
  const double kn = condition_diagnostics(Eigen::MatrixXd(A.transpose() * A)).kappa;
  EXPECT_GT(kn / (ka * ka), 1.0 - 1e-6);
  EXPECT_LT(kn / (ka * ka), 1.0 + 1e-6);
}

TEST(ConstrainedSolve, IdentityMetricProjectsOutTheGradient) {
  Rng rng(313);
  const int n = 7;
  const Eigen::VectorXd f = random_vector(rng, n);
  const Eigen::VectorXd g = random_vector(rng, n);
  const auto [v, report] = solve_constrained_rons(Eigen::MatrixXd::Identity(n, n), f, {g});
  const Eigen::VectorXd expected = f - (g.dot(f) / g.squaredNorm()) * g;
  EXPECT_LT((v - expected).lpNorm<Eigen::Infinity>(), 1e-12);
  ASSERT_EQ(report.multipliers.size(), 1);
  EXPECT_LT(rel_err(report.multipliers[0], g.dot(f) / g.squaredNorm()), 1e-10);
}

TEST(ConstrainedSolve, NoConstraintsReducesToPlainSolve) {
  Rng rng(317);
  const Eigen::VectorXd f = random_vector(rng, 5);
  const auto [v, report] = solve_constrained_rons(Eigen::MatrixXd::Identity(5, 5), f, {});
  EXPECT_LT((v - f).lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_EQ(report.multipliers.size(), 0);
}

/// Dense KKT oracle: solve [[A, G], [G^T, 0]] [v; lambda] = [f; 0] directly.
Eigen::VectorXd kkt_velocity(const Eigen::MatrixXd& A, const Eigen::VectorXd& f,
                             const Eigen::MatrixXd& G) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(G.cols());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = A;
  kkt.topRightCorner(n, m) = G;
  kkt.bottomLeftCorner(m, n) = G.transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
  rhs.head(n) = f;
  return kkt.fullPivLu().solve(rhs).head(n);
}

TEST(ConstrainedSolve, MatchesDenseKktOracle) {
  Rng rng(331);
  const int n = 6, m = 2;
  for (int instance = 0; instance < 20; ++instance) {
    const Eigen::MatrixXd M = random_spd(rng, n);
    const Eigen::VectorXd f = random_vector(rng, n);
    const Eigen::MatrixXd G = random_matrix(rng, n, m);
    const auto [v, report] = solve_constrained_rons(M, f, {G.col(0), G.col(1)});

    for (int k = 0; k < m; ++k)
      EXPECT_LE(std::abs(G.col(k).dot(v)), 1e-10 * v.norm() * G.col(k).norm())
          << "instance " << instance << " constraint " << k;
    EXPECT_LE(report.solve_residual, 1e-10 * (G.transpose() * M.ldlt().solve(f)).norm() + 1e-14);

    const Eigen::VectorXd oracle = kkt_velocity(M, f, G);
    EXPECT_LT((v - oracle).norm(), 1e-8 * oracle.norm()) << "instance " << instance;
  }
}

TEST(ConstrainedSolve, RejectsDependentGradients) {
  Rng rng(337);
  const Eigen::MatrixXd M = random_spd(rng, 5);
  const Eigen::VectorXd f = random_vector(rng, 5);
  const Eigen::VectorXd g = random_vector(rng, 5);
  EXPECT_THROW(solve_constrained_rons(M, f, {g, 2.0 * g}), DependentConstraintsError);
}

TEST(RegularizedSolve, ScalarShiftOnIdentityMetric) {
  Rng rng(341);
  const Eigen::VectorXd f = random_vector(rng, 4);
  const double alpha = 0.7;
  const auto [v, report] =
      solve_regularized_rons(Eigen::MatrixXd::Identity(4, 4), f, {},
                             RegularizationConfig::tikhonov(alpha));
  EXPECT_LT((v - f / (1.0 + alpha)).lpNorm<Eigen::Infinity>(), 1e-13);
}

TEST(RegularizedSolve, ZeroMetricIsDeterminedByThePenaltyAlone) {
  Rng rng(347);
  const Eigen::VectorXd f = random_vector(rng, 4);
  const double alpha = 0.3;
  const auto [v, report] = solve_regularized_rons(Eigen::MatrixXd::Zero(4, 4), f, {},
                                                  RegularizationConfig::tikhonov(alpha));
  EXPECT_LT((v - f / alpha).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(RegularizedSolve, SingularMetricWithConstraintMatchesShiftedKkt) {
  Rng rng(349);
  const int n = 6;
  const double alpha = 1e-3;
  for (int instance = 0; instance < 20; ++instance) {
    const Eigen::MatrixXd M = random_singular_psd(rng, n, n - 2);
    const Eigen::VectorXd f = random_vector(rng, n);
    const Eigen::VectorXd g = random_vector(rng, n);
    const auto [v, report] =
        solve_regularized_rons(M, f, {g}, RegularizationConfig::tikhonov(alpha));
    EXPECT_LE(std::abs(g.dot(v)), 1e-10 * std::max(1.0, v.norm() * g.norm()));

    Eigen::MatrixXd shifted = M;
    shifted.diagonal().array() += alpha;
    const Eigen::VectorXd oracle = kkt_velocity(shifted, f, g);
    EXPECT_LT((v - oracle).norm(), 1e-8 * oracle.norm()) << "instance " << instance;
  }
}

TEST(RegularizedSolve, VanishingAlphaRecoversTheConstrainedSolve) {
  Rng rng(353);
  const int n = 6;
  const Eigen::MatrixXd M = random_spd(rng, n);
  const Eigen::VectorXd f = random_vector(rng, n);
  const Eigen::VectorXd g = random_vector(rng, n);
  const double alpha = 1e-12 * M.norm();
  const auto [v_reg, ra] =
      solve_regularized_rons(M, f, {g}, RegularizationConfig::tikhonov(alpha));
  const auto [v_con, rc] = solve_constrained_rons(M, f, {g});
  EXPECT_LT((v_reg - v_con).norm() / v_con.norm(), 1e-6);
}

/// Appendix-style stationarity: the returned velocity and multipliers satisfy
/// (M + alpha I) v - f + G lambda = 0 and G^T v = 0.
TEST(RegularizedSolve, StationaritySystemHoldsIncludingRankDeficientMetrics) {
  Rng rng(359);
  const int n = 8;
  for (int instance = 0; instance < 50; ++instance) {
    const bool deficient = instance % 2 == 0;
    const Eigen::MatrixXd M =
        deficient ? random_singular_psd(rng, n, n - 3) : random_spd(rng, n);
    const Eigen::VectorXd f = random_vector(rng, n);
    const int m = 1 + instance % 2;
    Eigen::MatrixXd G = random_matrix(rng, n, m);
    std::vector<Eigen::VectorXd> grads;
    for (int k = 0; k < m; ++k) grads.push_back(G.col(k));
    const double alpha = 1e-4;
    const auto [v, report] =
        solve_regularized_rons(M, f, grads, RegularizationConfig::tikhonov(alpha));

    Eigen::MatrixXd shifted = M;
    shifted.diagonal().array() += alpha;
    const Eigen::VectorXd stationarity = shifted * v - f + G * report.multipliers;
    const double scale = f.norm() + v.norm() + report.multipliers.norm();
    EXPECT_LE(stationarity.norm(), 1e-9 * scale) << "instance " << instance;
    for (int k = 0; k < m; ++k)
      EXPECT_LE(std::abs(G.col(k).dot(v)), 1e-9 * std::max(1.0, v.norm() * G.col(k).norm()));
    EXPECT_GT(report.constraint_condition, 0.0);
  }
}

TEST(RegularizedSolve, TikhonovShrinksTheSolutionMonotonically) {
  Rng rng(367);
  for (int instance = 0; instance < 20; ++instance) {
    const Eigen::MatrixXd M = random_singular_psd(rng, 6, 4);
    const Eigen::VectorXd f = random_vector(rng, 6);
    const auto [v1, r1] =
        solve_regularized_rons(M, f, {}, RegularizationConfig::tikhonov(1e-3));
    const auto [v2, r2] =
        solve_regularized_rons(M, f, {}, RegularizationConfig::tikhonov(1e-1));
    EXPECT_GE(v1.norm(), v2.norm()) << "instance " << instance;
  }
}

TEST(RegularizedSolve, ValidatesConfiguration) {
  EXPECT_THROW(RegularizationConfig::tikhonov(-1.0), std::invalid_argument);
  EXPECT_THROW(RegularizationConfig::tikhonov(0.5, 1.0), std::invalid_argument);
  RegularizationConfig bad;
  bad.mode = RegularizationConfig::Mode::none;
  bad.alpha = 0.5;
  EXPECT_THROW(RegularizationConfig::validated(bad), std::invalid_argument);
  bad.mode = RegularizationConfig::Mode::tikhonov;
  bad.alpha = 0.0;
  EXPECT_THROW(RegularizationConfig::validated(bad), std::invalid_argument);
}

CollocationSystem random_system(Rng& rng, int N, int n) {
  CollocationSystem sys;
  sys.Mtilde = random_matrix(rng, N, n);
  sys.ftilde = random_vector(rng, N);
  return sys;
}

TEST(CronsSolve, SquareInvertibleReducesToDirectSolve) {
  Rng rng(373);
  const CollocationSystem sys = random_system(rng, 5, 5);
  const auto [v, report] = solve_regularized_crons(sys, {}, RegularizationConfig::none());
  const Eigen::VectorXd direct = sys.Mtilde.fullPivLu().solve(sys.ftilde);
  EXPECT_LT((v - direct).norm(), 1e-10 * direct.norm());
}

TEST(CronsSolve, AlphaZeroEqualsPseudoinverseSolve) {
  Rng rng(379);
  const CollocationSystem sys = random_system(rng, 24, 7);
  const auto [v, report] = solve_regularized_crons(sys, {}, RegularizationConfig::none());
  const Eigen::VectorXd lsq = pinv_solve(sys.Mtilde, sys.ftilde);
  EXPECT_LT((v - lsq).norm() / lsq.norm(), 1e-8);
}

TEST(CronsSolve, RegularizedSolutionIsFirstOrderOptimal) {
  Rng rng(383);
  const double alpha = 1e-3;
  for (int instance = 0; instance < 10; ++instance) {
    const CollocationSystem sys = random_system(rng, 30, 9);
    const auto [v, report] =
        solve_regularized_crons(sys, {}, RegularizationConfig::tikhonov(alpha));
    const Eigen::VectorXd grad =
        2.0 * (sys.Mtilde.transpose() * (sys.Mtilde * v - sys.ftilde) + alpha * v);
    EXPECT_LT(grad.norm(), 1e-9 * (sys.ftilde.norm() + v.norm())) << "instance " << instance;
  }
}

TEST(CronsSolve, EmbeddedAndExplicitConstraintsAgree) {
  Rng rng(389);
  const CollocationSystem sys = random_system(rng, 20, 6);
  const Eigen::VectorXd g = random_vector(rng, 6);
  const CollocationSystem embedded = augment_constraints(sys, {g});
  const RegularizationConfig reg = RegularizationConfig::tikhonov(1e-4);

  const auto [v_embedded, re] = solve_regularized_crons(embedded, {}, reg);
  const auto [v_explicit, rx] = solve_regularized_crons(sys, {g}, reg);
  EXPECT_LT((v_embedded - v_explicit).norm(), 1e-12 * v_explicit.norm());
  EXPECT_LE(std::abs(g.dot(v_explicit)), 1e-10 * v_explicit.norm() * g.norm());

  EXPECT_THROW(solve_regularized_crons(embedded, {g}, reg), std::invalid_argument);
}

TEST(CostFunctional, ZeroVelocityGivesHalfResidualNorm) {
  Rng rng(397);
  const Eigen::MatrixXd M = random_spd(rng, 4);
  const Eigen::VectorXd f = random_vector(rng, 4);
  EXPECT_EQ(cost_functional(M, f, Eigen::VectorXd::Zero(4), 3.5), 0.5 * 3.5);
}

TEST(CostFunctional, UnconstrainedSolveMinimizes) {
  Rng rng(401);
  const Eigen::MatrixXd M = random_spd(rng, 5);
  const Eigen::VectorXd f = random_vector(rng, 5);
  // Consistent residual norm: |F|^2 = f^T M^{-1} f makes the minimum zero.
  const Eigen::VectorXd vstar = M.ldlt().solve(f);
  const double fnorm2 = f.dot(vstar);
  const double jstar = cost_functional(M, f, vstar, fnorm2);
  EXPECT_LE(std::abs(jstar), 1e-10 * fnorm2);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd v = vstar + 0.1 * random_vector(rng, 5);
    EXPECT_GE(cost_functional(M, f, v, fnorm2), jstar - 1e-12 * fnorm2);
  }
}

TEST(CostFunctional, GalerkinHeatSolveHasZeroInstantaneousError) {
  const double ell = 10.0;
  const double diffusivity = 0.7;
  FourierLinearFamily family(ell);
  PeriodicHeatOperator op(diffusivity);
  Rng rng(409);
  const int n = 5;
  ParameterState q(n, 1);
  for (int i = 0; i < n; ++i) q.at(i, 0) = rng.uniform(-1, 1);

  // Metric, right-hand side, and residual norm by periodic quadrature.
  const int quad_nodes = 1 << 12;
  Eigen::MatrixXd M(n, n);
  Eigen::VectorXd f(n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      M(a, b) = trapezoid_periodic(
          [&](double x) {
            Eigen::VectorXd p(1);
            p[0] = x;
            ParameterState unit(n, 1);
            unit.values.setZero();
            unit.values[a] = 1.0;
            ParameterState unit_b(n, 1);
            unit_b.values.setZero();
            unit_b.values[b] = 1.0;
            return family.value(p, unit) * family.value(p, unit_b);
          },
          ell, quad_nodes);
    }
    f[a] = trapezoid_periodic(
        [&](double x) {
          Eigen::VectorXd p(1);
          p[0] = x;
          ParameterState unit(n, 1);
          unit.values.setZero();
          unit.values[a] = 1.0;
          return family.value(p, unit) * op.rhs(family, p, 0.0, q);
        },
        ell, quad_nodes);
  }
  const double residual_sq = trapezoid_periodic(
      [&](double x) {
        Eigen::VectorXd p(1);
        p[0] = x;
        const double r = op.rhs(family, p, 0.0, q);
        return r * r;
      },
      ell, quad_nodes);

  const auto [v, report] = solve_constrained_rons(M, f, {});
  const double j = cost_functional(M, f, v, residual_sq);
  EXPECT_LE(std::abs(j), 1e-12 * std::max(1.0, residual_sq));
}

}  // namespace
}  // namespace rons
