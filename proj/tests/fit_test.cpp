#include "rons/fit.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_util.hpp"

namespace rons {
namespace {

TEST(Fit, RecoversAnExactlyRepresentableProfile) {
  TanhNetwork family(10.0);
  const double k = std::numbers::pi / 10.0;
  const auto u0 = [&](double x) { return 0.8 * std::tanh(1.2 * std::sin(k * x + 0.4) - 0.3); };
  const FitResult fit = fit_initial_condition(family, 1, u0);
  EXPECT_LT(fit.residual_l2, 1e-10);
}

TEST(Fit, ZeroProfileIsFittedExactly) {
  TanhNetwork family(10.0);
  FitOptions options;
  const FitResult fit = fit_initial_condition(family, 4, [](double) { return 0.0; }, options);
  EXPECT_LT(fit.residual_l2, 1e-12);
  EXPECT_EQ(fit.starts_used, 1);  // the zero-amplitude start is already optimal
}

TEST(Fit, SineProfileReachesTheAccuracyTarget) {
  TanhNetwork family(10.0);
  const auto u0 = [](double x) { return -std::sin(std::numbers::pi * x / 10.0); };
  const FitResult fit = fit_initial_condition(family, 10, u0);
  EXPECT_LT(fit.residual_l2, 1e-6);
}

TEST(Fit, ResidualMatchesAnIndependentEvaluation) {
  TanhNetwork family(10.0);
  const auto u0 = [](double x) { return -std::sin(std::numbers::pi * x / 10.0); };
  FitOptions options;
  options.restarts = 3;
  options.acceptable_residual = 1.0;  // only checking bookkeeping here
  const FitResult fit = fit_initial_condition(family, 4, u0, options);

  double sum = 0.0;
  const int n = options.grid_points;
  for (int j = 0; j < n; ++j) {
    const double x = -10.0 + 20.0 * j / n;
    const double diff = family.value(Eigen::VectorXd::Constant(1, x), fit.params) - u0(x);
    sum += diff * diff;
  }
  const double recomputed = std::sqrt(20.0 / n * sum);
  EXPECT_NEAR(fit.residual_l2, recomputed, 1e-12 * (1.0 + recomputed));
}

TEST(Fit, IsDeterministicForAFixedSeed) {
  TanhNetwork family(10.0);
  const auto u0 = [](double x) { return -std::sin(std::numbers::pi * x / 10.0); };
  FitOptions options;
  options.restarts = 5;
  const FitResult a = fit_initial_condition(family, 6, u0, options);
  const FitResult b = fit_initial_condition(family, 6, u0, options);
  EXPECT_EQ(a.residual_l2, b.residual_l2);
  EXPECT_EQ((a.params.values - b.params.values).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Fit, FailsLoudlyWhenTheTargetIsUnreachable) {
  TanhNetwork family(10.0);
  // A single mode cannot follow a profile with this much structure.
  const auto u0 = [](double x) {
    return std::sin(3.0 * std::numbers::pi * x / 10.0) +
           0.5 * std::cos(7.0 * std::numbers::pi * x / 10.0);
  };
  FitOptions options;
  options.restarts = 2;
  options.max_iterations = 40;
  options.acceptable_residual = 1e-8;
  EXPECT_THROW(fit_initial_condition(family, 1, u0, options), FitFailure);
}

TEST(Fit, ValidatesArguments) {
  TanhNetwork family(10.0);
  const auto u0 = [](double) { return 0.0; };
  EXPECT_THROW(fit_initial_condition(family, 0, u0), std::invalid_argument);
  FitOptions coarse;
  coarse.grid_points = 8;
  EXPECT_THROW(fit_initial_condition(family, 10, u0, coarse), std::invalid_argument);
  FitOptions no_starts;
  no_starts.restarts = 0;
  EXPECT_THROW(fit_initial_condition(family, 2, u0, no_starts), std::invalid_argument);
  GaussianMixture unbounded(2);
  EXPECT_THROW(fit_initial_condition(unbounded, 2, u0), std::invalid_argument);
}

}  // namespace
}  // namespace rons
