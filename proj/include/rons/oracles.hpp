#pragma once

// Independent ground-truth generators used to validate reduced-order runs:
// the closed moment ODEs of the harmonic-trap drift-diffusion problem, exact
// moments of a Gaussian mixture, and a pseudo-spectral direct solver for the
// Kuramoto-Sivashinsky equation.

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "rons/ansatz.hpp"
#include "rons/integrate.hpp"
#include "rons/pde.hpp"
#include "rons/symbolic.hpp"

namespace rons {

/// Mean and raw second-moment matrix of a density. The covariance is derived
/// on demand so trajectories can carry the moments the closed ODEs evolve.
struct MomentState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd second_moment;

  Eigen::MatrixXd covariance() const {
    return second_moment - mean * mean.transpose();
  }
};

/// Time derivative of the mean and raw second moment for the linear-drift
/// diffusion whose coefficients `FokkerPlanckOperator` applies pointwise.
/// Because the drift is linear in x, these moment equations are closed.
inline MomentState fp_moment_rhs(double t, const MomentState& state,
                                 const FokkerPlanckCoefficients& coeffs) {
  const int d = coeffs.dimension;
  if (state.mean.size() != d || state.second_moment.rows() != d ||
      state.second_moment.cols() != d)
    throw std::invalid_argument("fp_moment_rhs: state dimension mismatch");

  const double a = coeffs.drive(t);
  const double ratio = coeffs.coupling / d;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d);

  MomentState deriv;
  const double mean_sum = state.mean.sum();
  deriv.mean = Eigen::VectorXd::Constant(d, a + ratio * mean_sum) -
               (1.0 + coeffs.coupling) * state.mean;

  // Row sums double as column sums on a symmetric matrix, and building the
  // update from symmetric rank-one pairs keeps the derivative symmetric to
  // the last bit.
  const Eigen::VectorXd row_sums = state.second_moment.rowwise().sum();
  deriv.second_moment = a * (state.mean * ones.transpose() + ones * state.mean.transpose()) -
                        2.0 * (1.0 + coeffs.coupling) * state.second_moment +
                        ratio * (row_sums * ones.transpose() + ones * row_sums.transpose());
  deriv.second_moment.diagonal().array() += 2.0 * coeffs.diffusion;
  return deriv;
}

namespace detail {

inline Eigen::VectorXd pack_moments(const MomentState& state) {
  const int d = static_cast<int>(state.mean.size());
  Eigen::VectorXd packed(d + d * (d + 1) / 2);
  packed.head(d) = state.mean;
  int idx = d;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) packed[idx++] = state.second_moment(i, j);
  return packed;
}

inline MomentState unpack_moments(const Eigen::VectorXd& packed, int d) {
  MomentState state;
  state.mean = packed.head(d);
  state.second_moment.resize(d, d);
  int idx = d;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) {
      state.second_moment(i, j) = packed[idx];
      state.second_moment(j, i) = packed[idx];
      ++idx;
    }
  return state;
}

}  // namespace detail

struct MomentTrajectory {
  std::vector<double> times;
  std::vector<MomentState> states;
};

/// Integrates the closed moment ODEs tightly enough that the result can serve
/// as ground truth for reduced-order errors down to ~1e-10. The state vector
/// carries only the lower triangle, so symmetry is exact by construction.
inline MomentTrajectory integrate_fp_moments(const MomentState& initial, double t0, double t1,
                                             const FokkerPlanckCoefficients& coeffs,
                                             std::vector<double> sample_times = {},
                                             double rtol = 1e-12) {
  const int d = coeffs.dimension;
  if (initial.mean.size() != d || initial.second_moment.rows() != d ||
      initial.second_moment.cols() != d)
    throw std::invalid_argument("integrate_fp_moments: initial state dimension mismatch");
  if ((initial.second_moment - initial.second_moment.transpose()).lpNorm<Eigen::Infinity>() >
      1e-12 * (1.0 + initial.second_moment.lpNorm<Eigen::Infinity>()))
    throw std::invalid_argument("integrate_fp_moments: second moment must be symmetric");

  const OdeRhs rhs = [&coeffs, d](double t, const Eigen::VectorXd& y) {
    return detail::pack_moments(fp_moment_rhs(t, detail::unpack_moments(y, d), coeffs));
  };

  IntegratorConfig cfg;
  cfg.method = IntegratorConfig::Method::adams;
  cfg.rtol = rtol;
  cfg.atol = 1e-14;
  cfg.max_steps = 20000000;
  cfg.sample_times = std::move(sample_times);

  const Trajectory traj = integrate(rhs, detail::pack_moments(initial), t0, t1, cfg);
  if (traj.aborted)
    throw std::runtime_error("integrate_fp_moments: " + traj.abort_reason);

  MomentTrajectory result;
  result.times = traj.times;
  result.states.reserve(traj.states.size());
  for (const auto& y : traj.states) result.states.push_back(detail::unpack_moments(y, d));
  return result;
}

/// First-moment and covariance functionals of the Gaussian-mixture ansatz,
/// evaluated on the mixture as-is: mean = integral of x * p, covariance =
/// integral of x x^T * p minus mean mean^T, with NO renormalization by the
/// total mass. For a unit-mass mixture these are the usual statistics; when
/// mass drifts away from 1 the deficit propagates into both (the covariance
/// picks up a mass*(1-mass)*center-outer-product term), so comparing them
/// against the true density's moments measures conservation violations
/// instead of silently dividing them away.
struct MixtureMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

inline MixtureMoments mixture_moments(const ParameterState& q, int dimension) {
  if (!(mixture_mass(q, dimension) > 0.0))
    throw std::invalid_argument("mixture_moments: mixture mass must be positive");

  MixtureMoments out;
  out.mean = Eigen::VectorXd::Zero(dimension);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dimension, dimension);
  for (int i = 0; i < q.modes; ++i) {
    const GaussianMode mode = gaussian_mode(q, i, dimension);
    const double w2 = mode.width * mode.width;
    const double weight = mode.amp * mode.amp * std::pow(std::numbers::pi / w2, 0.5 * dimension);
    out.mean += weight * mode.center;
    second += weight * (mode.center * mode.center.transpose());
    second.diagonal().array() += weight / (2.0 * w2);
  }
  out.covariance = second - out.mean * out.mean.transpose();
  return out;
}

namespace detail {

/// Fixed-size 1-d real<->half-complex FFT pair. Data is copied through the
/// plan-bound buffers on every call, which keeps callers' vectors intact (the
/// complex-to-real transform destroys its input) at negligible cost for the
/// grid sizes used here. FFTW_ESTIMATE keeps planning deterministic.
class RealSpectralTransform {
 public:
  explicit RealSpectralTransform(int n)
      : n_(n),
        real_buf_(fftw_alloc_real(static_cast<std::size_t>(n))),
        complex_buf_(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1))) {
    if (n < 2) throw std::invalid_argument("RealSpectralTransform: need at least 2 points");
    forward_ = fftw_plan_dft_r2c_1d(n_, real_buf_, complex_buf_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n_, complex_buf_, real_buf_, FFTW_ESTIMATE);
  }
  RealSpectralTransform(const RealSpectralTransform&) = delete;
  RealSpectralTransform& operator=(const RealSpectralTransform&) = delete;
  ~RealSpectralTransform() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_buf_);
    fftw_free(complex_buf_);
  }

  int size() const { return n_; }
  int spectrum_size() const { return n_ / 2 + 1; }

  /// Unnormalized forward transform of n real samples.
  Eigen::VectorXcd forward(const Eigen::VectorXd& field) {
    std::memcpy(real_buf_, field.data(), sizeof(double) * n_);
    fftw_execute(forward_);
    Eigen::VectorXcd spectrum(spectrum_size());
    std::memcpy(spectrum.data(), complex_buf_, sizeof(fftw_complex) * spectrum_size());
    return spectrum;
  }

  /// Inverse transform scaled by 1/n, so inverse(forward(u)) == u.
  Eigen::VectorXd inverse(const Eigen::VectorXcd& spectrum) {
    std::memcpy(complex_buf_, spectrum.data(), sizeof(fftw_complex) * spectrum_size());
    fftw_execute(inverse_);
    Eigen::VectorXd field(n_);
    std::memcpy(field.data(), real_buf_, sizeof(double) * n_);
    return field / static_cast<double>(n_);
  }

 private:
  int n_;
  double* real_buf_;
  fftw_complex* complex_buf_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

}  // namespace detail

struct KsDnsConfig {
  int grid_points = 128;
  double half_length = 10.0;
  double time_step = 1e-3;
  double blow_up_threshold = 1e6;
  /// With the linear (second/fourth derivative) terms disabled only the
  /// advective part is stepped; used to test conservation of the spatial mean.
  bool linear_terms = true;
};

struct KsDnsResult {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> snapshots;     // grid values of u
  std::vector<Eigen::VectorXcd> spectra;      // dealiased half-complex state
};

/// Direct pseudo-spectral solve of u_t = -u u_x - u_xx - u_xxxx on a periodic
/// interval: exponential time differencing (fourth-order Runge-Kutta variant)
/// on the diagonal linear part, with phi-function coefficients evaluated by
/// contour averages for numerical stability near zero, and the 2/3 rule
/// dealiasing the quadratic product. Fixed step; sample times must sit on the
/// step grid. Throws on blow-up.
inline KsDnsResult ks_dns(const Eigen::VectorXd& u0, const std::vector<double>& sample_times,
                          const KsDnsConfig& cfg = {}) {
  const int n = cfg.grid_points;
  if (n < 8 || n % 2 != 0)
    throw std::invalid_argument("ks_dns: grid_points must be even and at least 8");
  if (!(cfg.half_length > 0.0)) throw std::invalid_argument("ks_dns: half_length must be positive");
  if (!(cfg.time_step > 0.0)) throw std::invalid_argument("ks_dns: time_step must be positive");
  if (u0.size() != n) throw std::invalid_argument("ks_dns: initial field size mismatch");
  if (sample_times.empty()) throw std::invalid_argument("ks_dns: no sample times given");

  const double h = cfg.time_step;
  std::vector<long> sample_steps(sample_times.size());
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    const double t = sample_times[i];
    if (!(t >= 0.0)) throw std::invalid_argument("ks_dns: sample times must be nonnegative");
    if (i > 0 && !(t > sample_times[i - 1]))
      throw std::invalid_argument("ks_dns: sample times must be strictly increasing");
    const long step = std::lround(t / h);
    if (std::abs(step * h - t) > 1e-9 * std::max(1.0, t))
      throw std::invalid_argument("ks_dns: sample time is not on the time-step grid");
    if (i > 0 && step <= sample_steps[i - 1])
      throw std::invalid_argument("ks_dns: sample times collide on the time-step grid");
    sample_steps[i] = step;
  }

  detail::RealSpectralTransform fft(n);
  const int half = fft.spectrum_size();

  // Linear symbol and dealiased advection prefactor per retained mode.
  Eigen::VectorXd symbol(half);
  Eigen::VectorXcd advection(half);
  const int keep = n / 3;  // 2/3 rule: zero every mode above this index
  for (int m = 0; m < half; ++m) {
    const double k = m * std::numbers::pi / cfg.half_length;
    symbol[m] = cfg.linear_terms ? k * k - k * k * k * k : 0.0;
    advection[m] = m <= keep ? std::complex<double>(0.0, -0.5 * k) : 0.0;
  }

  // phi-function weights via averages over a unit circle around h*symbol.
  // Stored complex (with zero imaginary part) so they combine directly with
  // the half-complex state.
  constexpr int kContourPoints = 32;
  Eigen::VectorXcd e_full(half), e_half(half), q_w(half), f1_w(half), f2_w(half), f3_w(half);
  for (int m = 0; m < half; ++m) {
    const double lh = h * symbol[m];
    e_full[m] = std::exp(lh);
    e_half[m] = std::exp(0.5 * lh);
    std::complex<double> q_sum = 0.0, f1_sum = 0.0, f2_sum = 0.0, f3_sum = 0.0;
    for (int j = 0; j < kContourPoints; ++j) {
      const double angle = std::numbers::pi * (j + 0.5) / kContourPoints;
      const std::complex<double> z =
          lh + std::exp(std::complex<double>(0.0, angle));  // upper semicircle
      const std::complex<double> ez = std::exp(z);
      const std::complex<double> z3 = z * z * z;
      q_sum += (std::exp(0.5 * z) - 1.0) / z;
      f1_sum += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
      f2_sum += (2.0 + z + ez * (z - 2.0)) / z3;
      f3_sum += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
    }
    // The symbol is real, so averaging the upper semicircle and taking the
    // real part equals the full-circle average.
    const double scale = h / kContourPoints;
    q_w[m] = scale * q_sum.real();
    f1_w[m] = scale * f1_sum.real();
    f2_w[m] = scale * f2_sum.real();
    f3_w[m] = scale * f3_sum.real();
  }

  const auto check_field = [&](const Eigen::VectorXd& u, double t) {
    if (!(u.lpNorm<Eigen::Infinity>() <= cfg.blow_up_threshold))
      throw std::runtime_error("ks_dns: field blow-up at t = " + std::to_string(t));
  };
  const auto nonlinear = [&](const Eigen::VectorXcd& v) {
    const Eigen::VectorXd u = fft.inverse(v);
    return Eigen::VectorXcd(advection.cwiseProduct(fft.forward(u.cwiseProduct(u))));
  };

  check_field(u0, 0.0);
  Eigen::VectorXcd v = fft.forward(u0);
  for (int m = keep + 1; m < half; ++m) v[m] = 0.0;  // start from a dealiased state

  KsDnsResult result;
  result.times.reserve(sample_times.size());
  std::size_t next_sample = 0;
  const long last_step = sample_steps.back();
  for (long step = 0; step <= last_step; ++step) {
    if (next_sample < sample_steps.size() && step == sample_steps[next_sample]) {
      const Eigen::VectorXd u = fft.inverse(v);
      check_field(u, step * h);
      result.times.push_back(sample_times[next_sample]);
      result.snapshots.push_back(u);
      result.spectra.push_back(v);
      ++next_sample;
    }
    if (step == last_step) break;

    const Eigen::VectorXcd nv = nonlinear(v);
    const Eigen::VectorXcd a = e_half.cwiseProduct(v) + q_w.cwiseProduct(nv);
    const Eigen::VectorXcd na = nonlinear(a);
    const Eigen::VectorXcd b = e_half.cwiseProduct(v) + q_w.cwiseProduct(na);
    const Eigen::VectorXcd nb = nonlinear(b);
    const Eigen::VectorXcd c = e_half.cwiseProduct(a) + q_w.cwiseProduct(2.0 * nb - nv);
    const Eigen::VectorXcd nc = nonlinear(c);
    v = e_full.cwiseProduct(v) + f1_w.cwiseProduct(nv) + 2.0 * f2_w.cwiseProduct(na + nb) +
        f3_w.cwiseProduct(nc);
    check_field(fft.inverse(v), (step + 1) * h);
  }
  return result;
}

}  // namespace rons
