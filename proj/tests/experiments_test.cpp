#include "rons/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

namespace rons {
namespace {

ExperimentConfig density_config(int modes) {
  ExperimentConfig cfg;
  cfg.problem = Problem::fokker_planck;
  cfg.method = Method::srons;
  cfg.modes = modes;
  cfg.horizon = 1.0;
  cfg.sample_interval = 0.25;
  cfg.integrator.method = IntegratorConfig::Method::adams;
  cfg.integrator.rtol = 1e-10;
  cfg.integrator.atol = 1e-12;
  return cfg;
}

ExperimentConfig wave_config(Method method, double alpha) {
  ExperimentConfig cfg;
  cfg.problem = Problem::kuramoto_sivashinsky;
  cfg.method = method;
  cfg.modes = 10;
  cfg.alpha = alpha;
  cfg.point_count = 128;
  cfg.horizon = 1.0;
  cfg.sample_interval = 0.5;
  return cfg;
}

TEST(FokkerPlanckInitialState, RepresentsTheReferenceDensity) {
  const FokkerPlanckCoefficients coeffs;
  const int d = coeffs.dimension;
  const ParameterState q = fokker_planck_initial_state(4, coeffs);

  EXPECT_NEAR(mixture_mass(q, d), 1.0, 1e-12);
  const MixtureMoments mm = mixture_moments(q, d);
  for (int k = 0; k < d; ++k)
    EXPECT_NEAR(mm.mean[k], 0.9 + 2.1 * k / (d - 1.0), 1e-10);
  // Covariance of the represented density: 0.1 per axis plus the O(eps^2)
  // spread of the de-duplication offsets.
  EXPECT_LT((mm.covariance - 0.1 * Eigen::MatrixXd::Identity(d, d)).norm(), 1e-6);
}

TEST(FokkerPlanckInitialState, ModesAreDistinctButTheSeedIsTiny) {
  const FokkerPlanckCoefficients coeffs;
  const ParameterState q = fokker_planck_initial_state(3, coeffs);
  const double gap = std::abs(q.at(0, GaussianMixture::slot_center) -
                              q.at(2, GaussianMixture::slot_center));
  EXPECT_GT(gap, 1e-7);
  EXPECT_LT(gap, 1e-2);

  // Requesting the fully degenerate representation must stay possible.
  const ParameterState exact = fokker_planck_initial_state(3, coeffs, 0.0);
  EXPECT_EQ(exact.at(0, GaussianMixture::slot_center),
            exact.at(2, GaussianMixture::slot_center));
}

TEST(FokkerPlanckRun, TracksTheMomentOracle) {
  const ErrorReport report = run_fokker_planck(density_config(2));

  ASSERT_TRUE(report.completed);
  ASSERT_EQ(report.times.size(), 5u);
  EXPECT_DOUBLE_EQ(report.times.front(), 0.0);
  EXPECT_DOUBLE_EQ(report.times.back(), 1.0);
  ASSERT_EQ(report.mean_error.size(), report.times.size());
  ASSERT_EQ(report.covariance_error.size(), report.times.size());
  ASSERT_EQ(report.conservation_drift.size(), report.times.size());
  ASSERT_EQ(report.condition_numbers.size(), report.times.size());

  // The represented density is Gaussian and the drift is linear, so the mean
  // is tracked to integration accuracy; the covariance error is bounded by
  // the mixture's expressiveness and shrinks as the modes separate.
  EXPECT_EQ(report.mean_error.front(), 0.0);
  EXPECT_LT(report.mean_error.back(), 1e-8);
  EXPECT_LT(report.covariance_error.back(), 5e-2);
  for (double drift : report.conservation_drift) EXPECT_LT(drift, 1e-8);
  for (double kappa : report.condition_numbers) EXPECT_GE(kappa, 1.0);
  EXPECT_GT(report.time_averaged_error, 0.0);
  EXPECT_GT(report.wall_seconds, 0.0);
}

TEST(FokkerPlanckRun, ConservationEnforcementDrivesTheDriftDown) {
  ExperimentConfig cfg = density_config(2);
  cfg.enforce_conservation = false;
  const ErrorReport loose = run_fokker_planck(cfg);
  const ErrorReport tight = run_fokker_planck(density_config(2));

  ASSERT_TRUE(loose.completed);
  // Unconstrained evolution lets the total mass wander at the level of the
  // dynamics; the multiplier pins it to integration accuracy.
  EXPECT_GT(loose.conservation_drift.back(), 10.0 * tight.conservation_drift.back());
}

TEST(FokkerPlanckRun, RegularizedVariantCompletes) {
  ExperimentConfig cfg = density_config(3);
  cfg.alpha = 1e-3;
  cfg.horizon = 0.5;
  cfg.sample_interval = 0.25;
  const ErrorReport report = run_fokker_planck(cfg);
  ASSERT_TRUE(report.completed);
  EXPECT_LT(report.mean_error.back(), 1e-2);
  for (double drift : report.conservation_drift) EXPECT_LT(drift, 1e-6);
}

TEST(KuramotoSivashinskyRun, CollocationTracksTheSpectralReference) {
  const ErrorReport report = run_kuramoto_sivashinsky(wave_config(Method::crons, 1e-5));

  ASSERT_TRUE(report.completed);
  ASSERT_EQ(report.times.size(), 3u);
  ASSERT_EQ(report.field_error.size(), 3u);
  ASSERT_EQ(report.condition_numbers.size(), 3u);
  // t = 0 shows the fit quality; later samples the evolution quality.
  EXPECT_LT(report.field_error.front(), 1e-6);
  EXPECT_LT(report.field_error.back(), 1e-2);
  EXPECT_LT(report.time_averaged_error, 1e-2);
  EXPECT_TRUE(report.stop_reason.empty());
}

TEST(KuramotoSivashinskyRun, MonteCarloIsDeterministicForAFixedSeed) {
  ExperimentConfig cfg = wave_config(Method::monte_carlo, 1e-8);
  cfg.seed = 7;
  const ErrorReport a = run_kuramoto_sivashinsky(cfg);
  const ErrorReport b = run_kuramoto_sivashinsky(cfg);
  ASSERT_TRUE(a.completed);
  ASSERT_EQ(a.field_error.size(), b.field_error.size());
  for (std::size_t i = 0; i < a.field_error.size(); ++i)
    EXPECT_EQ(a.field_error[i], b.field_error[i]);

  cfg.seed = 8;
  const ErrorReport c = run_kuramoto_sivashinsky(cfg);
  ASSERT_TRUE(c.completed);
  EXPECT_NE(a.field_error.back(), c.field_error.back());
}

TEST(KuramotoSivashinskyRun, RedrawnSamplesStayDeterministicAndAccurate) {
  ExperimentConfig cfg = wave_config(Method::monte_carlo, 1e-8);
  cfg.resample_each_step = true;
  cfg.seed = 7;
  const ErrorReport a = run_kuramoto_sivashinsky(cfg);
  const ErrorReport b = run_kuramoto_sivashinsky(cfg);
  ASSERT_TRUE(a.completed);
  EXPECT_LT(a.field_error.back(), 1e-2);
  for (std::size_t i = 0; i < a.field_error.size(); ++i)
    EXPECT_EQ(a.field_error[i], b.field_error[i]);
}

TEST(KuramotoSivashinskyRun, DivergenceIsTruncatedGracefully) {
  ExperimentConfig cfg = wave_config(Method::crons, 1e-5);
  cfg.divergence_stop = 1e-12;  // even the fit error trips the threshold
  const ErrorReport report = run_kuramoto_sivashinsky(cfg);

  EXPECT_FALSE(report.completed);
  EXPECT_NE(report.stop_reason.find("divergence"), std::string::npos);
  ASSERT_EQ(report.field_error.size(), 1u);
  ASSERT_EQ(report.times.size(), 1u);
  EXPECT_DOUBLE_EQ(report.times.front(), 0.0);
}

TEST(FrobeniusStudy, SamplingErrorFallsWithSampleCountAndTheReferenceIsConverged) {
  ExperimentConfig cfg = wave_config(Method::crons, 1e-5);
  cfg.horizon = 0.5;
  cfg.sample_interval = 0.5;
  const FrobeniusMcStudy study = frobenius_mc_study(cfg);

  ASSERT_EQ(study.times.size(), 2u);
  ASSERT_EQ(study.errors.rows(), 2);
  ASSERT_EQ(study.errors.cols(), 3);
  for (Eigen::Index i = 0; i < study.errors.rows(); ++i) {
    // Single draws fluctuate, so only the extreme counts are ordered reliably.
    EXPECT_GT(study.errors(i, 0), study.errors(i, 2));
    EXPECT_LT(study.reference_gap[i], 1e-8);
  }
}

TEST(ExperimentConfigValidation, RejectsContradictoryRequests) {
  ExperimentConfig cfg = density_config(2);
  cfg.method = Method::crons;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);

  cfg = wave_config(Method::srons, 0.0);
  EXPECT_THROW(cfg.validate(), std::invalid_argument);

  cfg = density_config(2);
  cfg.modes = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);

  cfg = density_config(2);
  cfg.sample_interval = 2.0 * cfg.horizon;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);

  cfg = density_config(2);
  cfg.alpha = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);

  // A runner refuses a config aimed at the other problem.
  EXPECT_THROW(run_fokker_planck(wave_config(Method::crons, 1e-5)), std::invalid_argument);
  EXPECT_THROW(run_kuramoto_sivashinsky(density_config(2)), std::invalid_argument);
  EXPECT_THROW(frobenius_mc_study(wave_config(Method::monte_carlo, 1e-8)),
               std::invalid_argument);
}

TEST(ExperimentReport, EchoesTheConfigurationAndBuild) {
  ExperimentConfig cfg = density_config(2);
  cfg.seed = 42;
  const ErrorReport report = run_fokker_planck(cfg);
  EXPECT_EQ(report.config.seed, 42u);
  EXPECT_EQ(report.config.modes, 2);
  EXPECT_FALSE(report.build_id.empty());
}

}  // namespace
}  // namespace rons
