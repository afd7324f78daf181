#pragma once

// End-to-end benchmark scenarios: evolve a reduced-order solution, compare it
// against the matching independent oracle, and collect error, conservation,
// and conditioning diagnostics over time.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rons/ansatz.hpp"
#include "rons/collocation.hpp"
#include "rons/fit.hpp"
#include "rons/integrate.hpp"
#include "rons/oracles.hpp"
#include "rons/pde.hpp"
#include "rons/rng.hpp"
#include "rons/solvers.hpp"
#include "rons/symbolic.hpp"

#ifndef RONS_BUILD_ID
#define RONS_BUILD_ID "unversioned"
#endif

namespace rons {

enum class Problem { fokker_planck, kuramoto_sivashinsky };
enum class Method { srons, crons, monte_carlo };

struct ExperimentConfig {
  Problem problem = Problem::fokker_planck;
  Method method = Method::srons;
  int modes = 2;                      // ansatz modes r
  bool enforce_conservation = true;   // density problem: keep total mass fixed
  double alpha = 0.0;                 // Tikhonov strength; 0 disables
  int point_count = 128;              // collocation points or Monte Carlo samples
  double horizon = 10.0;              // final time T
  double sample_interval = 0.1;       // output cadence
  // Monte Carlo: redraw the sample set at every output step. The set is
  // otherwise fixed for the whole run. Redrawing inside the integrator's own
  // evaluations would make the right-hand side noisy and collapse the
  // adaptive step size, so the output cadence is the redraw granularity.
  bool resample_each_step = false;
  double divergence_stop = 5.0;       // wave problem: stop once rel. error exceeds this
  IntegratorConfig integrator;
  std::uint64_t seed = 0;

  void validate() const {
    if (modes < 1) throw std::invalid_argument("config: modes must be >= 1");
    if (!(alpha >= 0.0)) throw std::invalid_argument("config: alpha must be >= 0");
    if (point_count < 1) throw std::invalid_argument("config: point_count must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("config: horizon must be > 0");
    if (!(sample_interval > 0.0) || sample_interval > horizon)
      throw std::invalid_argument("config: sample_interval must lie in (0, horizon]");
    if (!(divergence_stop > 0.0))
      throw std::invalid_argument("config: divergence_stop must be > 0");
    if (problem == Problem::fokker_planck && method != Method::srons)
      throw std::invalid_argument(
          "config: method must be srons for the density problem (closed-form kernels)");
    if (problem == Problem::kuramoto_sivashinsky && method == Method::srons)
      throw std::invalid_argument(
          "config: method must be crons or monte_carlo for the wave problem");
  }
};

struct ErrorReport {
  std::vector<double> times;
  std::vector<double> mean_error;          // density problem: |mean - oracle| / |oracle|
  std::vector<double> covariance_error;    // density problem: Frobenius relative
  std::vector<double> field_error;         // wave problem: grid L2 relative
  std::vector<double> conservation_drift;  // |I1(t) - I1(0)|
  std::vector<double> condition_numbers;   // of the matrix the method solves with
  double time_averaged_error = 0.0;
  bool completed = true;
  std::string stop_reason;
  double wall_seconds = 0.0;
  std::string build_id = RONS_BUILD_ID;
  ExperimentConfig config;
};

namespace detail {

inline std::vector<double> cadence_times(double interval, double horizon) {
  std::vector<double> times = {0.0};
  const auto count = static_cast<long>(std::llround(horizon / interval));
  for (long k = 1; k <= count; ++k) times.push_back(k * interval);
  if (times.back() < horizon - 1e-12 * horizon) times.push_back(horizon);
  times.back() = horizon;
  return times;
}

class WallTimer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Initial mixture parameters for the density benchmark: the reference
/// Gaussian density (variance 0.1 per axis, mean spread evenly along the
/// coordinates) with its amplitude split equally across all modes.
///
/// The representation is non-unique, and the fully symmetric choice (all
/// modes identical) is numerically hostile: the metric stays rank-deficient
/// and the exchange-symmetric manifold is strongly repelling, so trajectories
/// leave it through rounding accidents that adaptive integrators cannot step
/// across. We therefore de-duplicate the modes with a tiny zero-sum center
/// offset per axis. This leaves the total mass exact, changes the represented
/// density only at O(symmetry_breaking^2), and seeds the mode separation
/// deterministically; the separation's final size is set by the dynamics, not
/// by the seed. Offsets below ~1e-6 drown in singular-value rounding noise
/// and re-create the degenerate behavior, so keep the default unless the
/// degenerate regime itself is under study.
inline ParameterState fokker_planck_initial_state(int modes,
                                                  const FokkerPlanckCoefficients& coeffs = {},
                                                  double symmetry_breaking = 1e-4) {
  if (modes < 1) throw std::invalid_argument("initial state: modes must be >= 1");
  const int d = coeffs.dimension;
  ParameterState q(modes, d + 2);
  const double variance = 0.1;
  const double amplitude_sq =
      std::pow(2.0 * std::numbers::pi * variance, -0.5 * d) / modes;
  for (int i = 0; i < modes; ++i) {
    const double offset =
        modes > 1 ? symmetry_breaking * (2.0 * i / (modes - 1.0) - 1.0) : 0.0;
    q.at(i, GaussianMixture::slot_amplitude) = std::sqrt(amplitude_sq);
    q.at(i, GaussianMixture::slot_width) = std::sqrt(1.0 / (2.0 * variance));
    for (int k = 0; k < d; ++k)
      q.at(i, GaussianMixture::slot_center + k) =
          (d > 1 ? 0.9 + 2.1 * k / (d - 1.0) : 0.9) + offset;
  }
  return q;
}

/// Evolves the Gaussian-mixture reduction of the drift-diffusion density and
/// scores it against the closed moment ODEs. Throws if the parameter
/// integration aborts; the density runs are smooth and must complete.
inline ErrorReport run_fokker_planck(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.problem != Problem::fokker_planck)
    throw std::invalid_argument("run_fokker_planck: config targets a different problem");
  const detail::WallTimer timer;

  const FokkerPlanckCoefficients coeffs;
  const GaussianFokkerPlanckKernels kernels(coeffs);
  const int d = coeffs.dimension;
  const ParameterState q0 = fokker_planck_initial_state(cfg.modes, coeffs);
  const double mass0 = mixture_mass(q0, d);

  const RegularizationConfig reg = cfg.alpha > 0.0
                                       ? RegularizationConfig::tikhonov(cfg.alpha)
                                       : RegularizationConfig::none();
  const OdeRhs rhs = [&](double t, const Eigen::VectorXd& y) {
    ParameterState q = q0;
    q.values = y;
    const Eigen::MatrixXd metric = kernels.assemble_metric(q);
    const Eigen::VectorXd field = kernels.assemble_rhs(q, t);
    std::vector<Eigen::VectorXd> grads;
    if (cfg.enforce_conservation) grads.push_back(mixture_mass_gradient(q, d));
    return solve_regularized_rons(metric, field, grads, reg).first;
  };

  IntegratorConfig icfg = cfg.integrator;
  icfg.sample_times = detail::cadence_times(cfg.sample_interval, cfg.horizon);
  const Trajectory traj = integrate(rhs, q0.values, 0.0, cfg.horizon, icfg);
  if (traj.aborted)
    throw std::runtime_error("run_fokker_planck: " + traj.abort_reason);

  MomentState m0;
  {
    const MixtureMoments initial = mixture_moments(q0, d);
    m0.mean = initial.mean;
    m0.second_moment = initial.covariance + initial.mean * initial.mean.transpose();
  }
  const MomentTrajectory oracle =
      integrate_fp_moments(m0, 0.0, cfg.horizon, coeffs, icfg.sample_times);

  ErrorReport report;
  report.config = cfg;
  report.times = traj.times;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    ParameterState q = q0;
    q.values = traj.states[i];
    const MixtureMoments mm = mixture_moments(q, d);
    const MomentState& truth = oracle.states[i];
    const Eigen::MatrixXd cov_truth = truth.covariance();
    report.mean_error.push_back((mm.mean - truth.mean).norm() / truth.mean.norm());
    report.covariance_error.push_back((mm.covariance - cov_truth).norm() / cov_truth.norm());
    report.conservation_drift.push_back(std::abs(mixture_mass(q, d) - mass0));
    report.condition_numbers.push_back(condition_diagnostics(kernels.assemble_metric(q)).kappa);
  }
  double sum = 0.0;
  for (double e : report.mean_error) sum += e;
  report.time_averaged_error = sum / report.mean_error.size();
  report.wall_seconds = timer.seconds();
  return report;
}

namespace detail {

constexpr double kWaveHalfLength = 10.0;

/// Fit targets for the wave problem's initial profile: stop as soon as the
/// residual is comfortably below the 1e-6 quality bar instead of polishing
/// to the representability floor, which costs every restart.
inline FitOptions wave_fit_options(const ExperimentConfig& cfg) {
  FitOptions options;
  options.seed = cfg.seed;
  options.target_residual = 1e-7;
  options.acceptable_residual = 1e-6;
  return options;
}

/// Shared scaffolding for wave-problem runs: fit the initial profile, then
/// advance the reduced solution window by window, invoking `on_sample` at
/// every cadence point (including t = 0). The callback returns false to stop
/// the run early; integrator aborts stop it with a recorded reason.
template <typename OnSample>
inline void integrate_reduced_wave(const ExperimentConfig& cfg, const TanhNetwork& family,
                                   const KuramotoSivashinskyOperator& pde,
                                   const std::vector<double>& times, ParameterState q,
                                   ErrorReport& report, const OnSample& on_sample) {
  Rng sampler(cfg.seed);
  std::vector<Eigen::VectorXd> points =
      cfg.method == Method::crons
          ? equidistant_points(kWaveHalfLength, cfg.point_count)
          : uniform_samples(sampler, kWaveHalfLength, 1, cfg.point_count);
  const RegularizationConfig reg = cfg.alpha > 0.0
                                       ? RegularizationConfig::tikhonov(cfg.alpha)
                                       : RegularizationConfig::none();
  const double domain_size = 2.0 * kWaveHalfLength;

  const OdeRhs rhs = [&](double t, const Eigen::VectorXd& y) {
    ParameterState state = q;
    state.values = y;
    if (cfg.method == Method::crons) {
      const CollocationSystem sys = assemble_collocation(family, pde, state, t, points);
      return solve_regularized_crons(sys, {}, reg).first;
    }
    const MonteCarloSystem mc = assemble_monte_carlo(family, pde, state, t, points, domain_size);
    return solve_regularized_rons(mc.Mbar, mc.fbar, {}, reg).first;
  };

  const auto condition_of_current_system = [&](double t) {
    if (cfg.method == Method::crons) {
      const CollocationSystem sys = assemble_collocation(family, pde, q, t, points);
      return condition_diagnostics(sys.Mtilde.topRows(sys.point_rows())).kappa;
    }
    const MonteCarloSystem mc = assemble_monte_carlo(family, pde, q, t, points, domain_size);
    return condition_diagnostics(mc.Mbar).kappa;
  };

  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && cfg.method == Method::monte_carlo && cfg.resample_each_step)
      points = uniform_samples(sampler, kWaveHalfLength, 1, cfg.point_count);
    report.times.push_back(times[k]);
    report.condition_numbers.push_back(condition_of_current_system(times[k]));
    if (!on_sample(times[k], q)) {
      report.completed = false;
      report.stop_reason = "relative error exceeded the divergence threshold at t = " +
                           std::to_string(times[k]);
      return;
    }
    if (k + 1 == times.size()) return;

    const Trajectory window =
        integrate(rhs, q.values, times[k], times[k + 1], cfg.integrator);
    if (window.aborted) {
      report.completed = false;
      report.stop_reason = window.abort_reason;
      return;
    }
    q.values = window.final_state;
  }
}

}  // namespace detail

/// Evolves the periodic tanh-network reduction of the fourth-order wave
/// problem and scores it against the pseudo-spectral reference solution on
/// the reference grid. Divergence and integrator aborts end the run early
/// with the reason recorded; the report keeps everything sampled so far.
inline ErrorReport run_kuramoto_sivashinsky(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.problem != Problem::kuramoto_sivashinsky)
    throw std::invalid_argument("run_kuramoto_sivashinsky: config targets a different problem");
  const detail::WallTimer timer;

  const TanhNetwork family(detail::kWaveHalfLength);
  const KuramotoSivashinskyOperator pde;
  const auto u0 = [](double x) {
    return -std::sin(std::numbers::pi * x / detail::kWaveHalfLength);
  };

  const FitResult fit = fit_initial_condition(family, cfg.modes, u0, detail::wave_fit_options(cfg));

  const std::vector<double> times = detail::cadence_times(cfg.sample_interval, cfg.horizon);
  KsDnsConfig dns_cfg;
  const Eigen::VectorXd u0_grid = [&] {
    Eigen::VectorXd u(dns_cfg.grid_points);
    for (int j = 0; j < dns_cfg.grid_points; ++j)
      u[j] = u0(-dns_cfg.half_length + 2.0 * dns_cfg.half_length * j / dns_cfg.grid_points);
    return u;
  }();
  const KsDnsResult dns = ks_dns(u0_grid, times, dns_cfg);

  std::vector<Eigen::VectorXd> grid(dns_cfg.grid_points);
  for (int j = 0; j < dns_cfg.grid_points; ++j)
    grid[j] = Eigen::VectorXd::Constant(
        1, -dns_cfg.half_length + 2.0 * dns_cfg.half_length * j / dns_cfg.grid_points);

  ErrorReport report;
  report.config = cfg;
  std::size_t sample_index = 0;
  detail::integrate_reduced_wave(
      cfg, family, pde, times, fit.params, report,
      [&](double, const ParameterState& q) {
        const Eigen::VectorXd& truth = dns.snapshots[sample_index++];
        Eigen::VectorXd reduced(truth.size());
        for (int j = 0; j < truth.size(); ++j) reduced[j] = family.value(grid[j], q);
        const double err = (reduced - truth).norm() / truth.norm();
        report.field_error.push_back(err);
        return err <= cfg.divergence_stop;
      });

  double sum = 0.0;
  for (double e : report.field_error) sum += e;
  report.time_averaged_error = sum / report.field_error.size();
  report.wall_seconds = timer.seconds();
  return report;
}

/// How well uniform sampling reproduces the mass-weighted normal matrix of
/// the wave problem, along a regularized collocation trajectory: Frobenius
/// gaps against an equidistant fine-grid reference, for growing sample
/// counts, plus a reference self-consistency gap (doubled node count).
struct FrobeniusMcStudy {
  std::vector<double> times;
  std::vector<int> sample_counts;
  Eigen::MatrixXd errors;         // one row per time, one column per count
  Eigen::VectorXd reference_gap;  // reference at 1e4 vs 2e4 nodes
  ExperimentConfig config;
  std::string build_id = RONS_BUILD_ID;
  double wall_seconds = 0.0;
};

inline FrobeniusMcStudy frobenius_mc_study(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.problem != Problem::kuramoto_sivashinsky || cfg.method != Method::crons)
    throw std::invalid_argument(
        "frobenius_mc_study: the study follows a collocation run of the wave problem");
  const detail::WallTimer timer;

  const TanhNetwork family(detail::kWaveHalfLength);
  const KuramotoSivashinskyOperator pde;
  const auto u0 = [](double x) {
    return -std::sin(std::numbers::pi * x / detail::kWaveHalfLength);
  };
  const FitResult fit = fit_initial_condition(family, cfg.modes, u0, detail::wave_fit_options(cfg));

  const std::vector<double> times = detail::cadence_times(cfg.sample_interval, cfg.horizon);
  const double domain_size = 2.0 * detail::kWaveHalfLength;

  FrobeniusMcStudy study;
  study.config = cfg;
  study.sample_counts = {128, 1024, 10000};
  study.errors.resize(static_cast<Eigen::Index>(times.size()), 3);
  study.reference_gap.resize(static_cast<Eigen::Index>(times.size()));

  Rng sampler(cfg.seed + 1);  // distinct stream from the trajectory's own draws
  ErrorReport scratch;
  scratch.config = cfg;
  Eigen::Index row = 0;
  detail::integrate_reduced_wave(
      cfg, family, pde, times, fit.params, scratch,
      [&](double t, const ParameterState& q) {
        const Eigen::MatrixXd reference =
            assemble_monte_carlo(family, pde, q, t,
                                 equidistant_points(detail::kWaveHalfLength, 10000), domain_size)
                .Mbar;
        const Eigen::MatrixXd reference_fine =
            assemble_monte_carlo(family, pde, q, t,
                                 equidistant_points(detail::kWaveHalfLength, 20000), domain_size)
                .Mbar;
        study.times.push_back(t);
        study.reference_gap[row] = (reference - reference_fine).norm();
        for (int c = 0; c < 3; ++c) {
          const auto samples = uniform_samples(sampler, detail::kWaveHalfLength, 1,
                                               study.sample_counts[c]);
          const Eigen::MatrixXd approx =
              assemble_monte_carlo(family, pde, q, t, samples, domain_size).Mbar;
          study.errors(row, c) = (approx - reference).norm();
        }
        ++row;
        return true;
      });
  study.errors.conservativeResize(row, 3);
  study.reference_gap.conservativeResize(row);
  study.wall_seconds = timer.seconds();
  return study;
}

}  // namespace rons
