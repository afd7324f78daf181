#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rons {

using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Optional per-accepted-step probe; the returned vector is stored alongside
/// the step time (solver condition numbers, conserved-quantity values, ...).
using StepObserver = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

struct IntegratorConfig {
  enum class Method { dopri54, adams };
  Method method = Method::dopri54;
  double rtol = 1e-6;
  double atol = 1e-9;
  double initial_step = 0.0;  // 0 selects the automatic starting step
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 1000000;
  // When nonempty: strictly increasing times inside the span at which the
  // dense-output interpolant is sampled. When empty, every accepted step is
  // recorded (including the initial state).
  std::vector<double> sample_times;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  long accepted_steps = 0;
  long rejected_steps = 0;
  long rhs_evaluations = 0;
  bool aborted = false;
  std::string abort_reason;
  double final_time = 0.0;
  Eigen::VectorXd final_state;
  // Observer output per accepted step (empty when no observer was passed).
  std::vector<double> step_times;
  std::vector<Eigen::VectorXd> step_diagnostics;
};

namespace detail {

inline void validate_config(const IntegratorConfig& cfg, double t0, double t1) {
  if (!(t1 > t0)) throw std::invalid_argument("integrate: span must be increasing");
  if (!(cfg.rtol > 0) || !(cfg.atol > 0))
    throw std::invalid_argument("integrate: tolerances must be positive");
  if (!(cfg.max_step > 0)) throw std::invalid_argument("integrate: max step must be positive");
  if (cfg.initial_step < 0 || cfg.initial_step > cfg.max_step)
    throw std::invalid_argument("integrate: initial step must lie in [0, max step]");
  if (cfg.max_steps < 1) throw std::invalid_argument("integrate: max steps must be positive");
  for (std::size_t i = 0; i < cfg.sample_times.size(); ++i) {
    const double s = cfg.sample_times[i];
    if (s < t0 || s > t1)
      throw std::invalid_argument("integrate: sample time outside the span");
    if (i > 0 && !(s > cfg.sample_times[i - 1]))
      throw std::invalid_argument("integrate: sample times must be strictly increasing");
  }
}

/// Hairer-style mixed-tolerance RMS norm of an error vector.
inline double scaled_error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0,
                                const Eigen::VectorXd& y1, double atol, double rtol) {
  double sum = 0.0;
  for (int i = 0; i < err.size(); ++i) {
    const double sk = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double ratio = err[i] / sk;
    sum += ratio * ratio;
  }
  return std::sqrt(sum / static_cast<double>(err.size()));
}

/// Records trajectory samples: either dense output at preset times or every
/// accepted step. `interpolant` maps a time inside the step to a state.
class SampleRecorder {
 public:
  SampleRecorder(Trajectory& out, const std::vector<double>& sample_times, double t0,
                 const Eigen::VectorXd& y0)
      : out_(out), samples_(sample_times) {
    if (samples_.empty()) {
      out_.times.push_back(t0);
      out_.states.push_back(y0);
    } else {
      while (next_ < samples_.size() && samples_[next_] <= t0) {
        out_.times.push_back(samples_[next_]);
        out_.states.push_back(y0);
        ++next_;
      }
    }
  }

  template <typename Interpolant>
  void after_step(double t_new, const Eigen::VectorXd& y_new, Interpolant&& interpolant) {
    if (samples_.empty()) {
      out_.times.push_back(t_new);
      out_.states.push_back(y_new);
      return;
    }
    while (next_ < samples_.size() && samples_[next_] <= t_new) {
      const double s = samples_[next_];
      out_.times.push_back(s);
      out_.states.push_back(s == t_new ? y_new : interpolant(s));
      ++next_;
    }
  }

 private:
  Trajectory& out_;
  const std::vector<double>& samples_;
  std::size_t next_ = 0;
};

/// Automatic starting step (Hairer's recipe). An identically vanishing
/// right-hand side takes the whole span in one step.
inline double initial_step_size(const OdeRhs& rhs, double t0, double t1,
                                const Eigen::VectorXd& y0, const Eigen::VectorXd& f0,
                                double atol, double rtol, double hmax, long& evals) {
  if (f0.lpNorm<Eigen::Infinity>() == 0.0) return std::min(t1 - t0, hmax);
  double dnf = 0.0, dny = 0.0;
  for (int i = 0; i < y0.size(); ++i) {
    const double sk = atol + rtol * std::abs(y0[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (y0[i] / sk) * (y0[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, hmax);
  const Eigen::VectorXd y1 = y0 + h * f0;
  const Eigen::VectorXd f1 = rhs(t0 + h, y1);
  ++evals;
  double der2 = 0.0;
  for (int i = 0; i < y0.size(); ++i) {
    const double sk = atol + rtol * std::abs(y0[i]);
    const double diff = (f1[i] - f0[i]) / sk;
    der2 += diff * diff;
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(der2, std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3)
                                   : std::pow(0.01 / der12, 0.2);
  return std::min({100.0 * h, h1, hmax});
}

inline Trajectory integrate_dopri54(const OdeRhs& rhs, const Eigen::VectorXd& y0, double t0,
                                    double t1, const IntegratorConfig& cfg,
                                    const StepObserver& observe) {
  // Dormand-Prince 5(4) tableau; the last stage row doubles as the 5th-order
  // weights (first-same-as-last).
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  // Dense-output weights for the quartic interpolant.
  static constexpr double d1 = -12715105075.0 / 11282082432.0;
  static constexpr double d3 = 87487479700.0 / 32700410799.0;
  static constexpr double d4 = -10690763975.0 / 1880347072.0;
  static constexpr double d5 = 701980252875.0 / 199316789632.0;
  static constexpr double d6 = -1453857185.0 / 822651844.0;
  static constexpr double d7 = 69997945.0 / 29380423.0;
  // PI step controller (Lund stabilization).
  static constexpr double safety = 0.9, beta = 0.04, expo1 = 0.2 - 0.75 * beta;
  static constexpr double fac_shrink = 0.2, fac_grow = 10.0;

  Trajectory out;
  const double hmax = std::min(cfg.max_step, t1 - t0);
  double t = t0;
  Eigen::VectorXd y = y0;
  Eigen::VectorXd k1 = rhs(t, y);
  out.rhs_evaluations = 1;
  SampleRecorder recorder(out, cfg.sample_times, t0, y0);
  if (observe) {
    out.step_times.push_back(t0);
    out.step_diagnostics.push_back(observe(t0, y0));
  }

  double h = cfg.initial_step > 0
                 ? std::min(cfg.initial_step, hmax)
                 : initial_step_size(rhs, t0, t1, y, k1, cfg.atol, cfg.rtol, hmax,
                                     out.rhs_evaluations);
  double facold = 1e-4;
  bool last_rejected = false;
  const int n = static_cast<int>(y0.size());
  Eigen::VectorXd k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ynew(n), yerr(n);

  while (t < t1) {
    if (out.accepted_steps + out.rejected_steps >= cfg.max_steps) {
      out.aborted = true;
      out.abort_reason = "maximum step count exceeded at t=" + std::to_string(t);
      break;
    }
    if (0.1 * h <= std::abs(t) * std::numeric_limits<double>::epsilon()) {
      out.aborted = true;
      out.abort_reason = "step size underflow at t=" + std::to_string(t);
      break;
    }
    bool final_step = false;
    if (t + h >= t1) {
      h = t1 - t;
      final_step = true;
    }

    k2 = rhs(t + c2 * h, y + h * (a21 * k1));
    k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    k7 = rhs(t + h, ynew);
    out.rhs_evaluations += 6;
    yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = ynew.allFinite()
                     ? scaled_error_norm(yerr, y, ynew, cfg.atol, cfg.rtol)
                     : std::numeric_limits<double>::infinity();
    if (!std::isfinite(err)) err = 1e10;

    if (err <= 1.0) {
      ++out.accepted_steps;
      // Land exactly on the endpoint: t + (t1 - t) can round one ulp short.
      const double t_new = final_step ? t1 : t + h;
      // Quartic dense-output coefficients over this step.
      const Eigen::VectorXd ydiff = ynew - y;
      const Eigen::VectorXd bspl = h * k1 - ydiff;
      const Eigen::VectorXd cont4 = ydiff - h * k7 - bspl;
      const Eigen::VectorXd cont5 =
          h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      recorder.after_step(t_new, ynew, [&](double s) {
        const double theta = (s - t) / h;
        const double omt = 1.0 - theta;
        return Eigen::VectorXd(y + theta * (ydiff + omt * (bspl + theta * (cont4 + omt * cont5))));
      });
      if (observe) {
        out.step_times.push_back(t_new);
        out.step_diagnostics.push_back(observe(t_new, ynew));
      }

      const double fac11 = std::pow(err, expo1);
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(1.0 / fac_grow, std::min(1.0 / fac_shrink, fac / safety));
      double hnew = h / fac;
      if (last_rejected) hnew = std::min(hnew, h);
      facold = std::max(err, 1e-4);
      last_rejected = false;

      t = t_new;
      y.swap(ynew);
      k1.swap(k7);  // first-same-as-last
      h = std::min(hnew, hmax);
      if (final_step) break;
    } else {
      ++out.rejected_steps;
      last_rejected = true;
      const double fac11 = std::pow(err, expo1);
      h = h / std::min(1.0 / fac_shrink, fac11 / safety);
    }
  }

  out.final_time = t;
  out.final_state = y;
  return out;
}

/// Integral of the Newton node polynomial prod_{m<j} (tau - nodes[m]) from
/// t_ref to t_ref + span, where all nodes lie at or before t_ref. With
/// sigma = (tau - t_ref)/span each factor becomes span*(sigma + c_m) with
/// c_m >= 0, so the expanded coefficients are positive and the integral is
/// evaluated without cancellation.
inline double node_polynomial_integral(const std::vector<double>& node_offsets, int j,
                                       double span) {
  std::vector<double> coeffs{1.0};  // polynomial in sigma, ascending powers
  for (int m = 0; m < j; ++m) {
    const double c = node_offsets[m] / span;  // (t_ref - tau_m)/span >= 0
    std::vector<double> next(coeffs.size() + 1, 0.0);
    for (std::size_t p = 0; p < coeffs.size(); ++p) {
      next[p] += coeffs[p] * c;
      next[p + 1] += coeffs[p];
    }
    coeffs = std::move(next);
  }
  double integral = 0.0;
  for (std::size_t p = 0; p < coeffs.size(); ++p)
    integral += coeffs[p] / static_cast<double>(p + 1);
  return integral * std::pow(span, static_cast<double>(j + 1));
}

inline Trajectory integrate_adams(const OdeRhs& rhs, const Eigen::VectorXd& y0, double t0,
                                  double t1, const IntegratorConfig& cfg,
                                  const StepObserver& observe) {
  static constexpr int max_order = 12;
  static constexpr double safety = 0.9;

  Trajectory out;
  const double hmax = std::min(cfg.max_step, t1 - t0);
  const int n = static_cast<int>(y0.size());
  double t = t0;
  Eigen::VectorXd y = y0;
  Eigen::VectorXd f = rhs(t, y);
  out.rhs_evaluations = 1;
  SampleRecorder recorder(out, cfg.sample_times, t0, y0);
  if (observe) {
    out.step_times.push_back(t0);
    out.step_diagnostics.push_back(observe(t0, y0));
  }

  // History of past nodes, newest first, and the divided-difference columns
  // dd[j] = f[tau_0, ..., tau_j] over the stored nodes.
  std::deque<double> node_times{t};
  std::deque<Eigen::VectorXd> node_values{f};
  std::vector<Eigen::VectorXd> dd{f};

  auto rebuild_divided_differences = [&]() {
    const int count = static_cast<int>(node_times.size());
    dd.assign(node_values.begin(), node_values.end());
    for (int level = 1; level < count; ++level)
      for (int j = count - 1; j >= level; --j)
        dd[j] = (dd[j] - dd[j - 1]) / (node_times[j] - node_times[j - level]);
    // dd[j] now holds f[tau_0..tau_j] after in-place Newton elimination.
  };
  rebuild_divided_differences();

  int order = 1;
  double h = cfg.initial_step > 0
                 ? std::min(cfg.initial_step, hmax)
                 : initial_step_size(rhs, t0, t1, y, f, cfg.atol, cfg.rtol, hmax,
                                     out.rhs_evaluations);

  while (t < t1) {
    if (out.accepted_steps + out.rejected_steps >= cfg.max_steps) {
      out.aborted = true;
      out.abort_reason = "maximum step count exceeded at t=" + std::to_string(t);
      break;
    }
    if (0.1 * h <= std::abs(t) * std::numeric_limits<double>::epsilon()) {
      out.aborted = true;
      out.abort_reason = "step size underflow at t=" + std::to_string(t);
      break;
    }
    bool final_step = false;
    if (t + h >= t1) {
      h = t1 - t;
      final_step = true;
    }
    const double t_new = final_step ? t1 : t + h;
    const int k = std::min<int>(order, static_cast<int>(node_times.size()));

    // Offsets t - tau_m are nonnegative and shared by all integrals.
    std::vector<double> offsets(node_times.size());
    for (std::size_t m = 0; m < node_times.size(); ++m) offsets[m] = t - node_times[m];

    // Predictor: integrate the interpolant of the k newest history values.
    Eigen::VectorXd y_pred = y;
    for (int j = 0; j < k; ++j)
      y_pred += node_polynomial_integral(offsets, j, h) * dd[j];

    Eigen::VectorXd f_pred = rhs(t_new, y_pred);
    ++out.rhs_evaluations;

    // Divided differences of the new point against the history, newest first:
    // new_dd[j] = f[t_new, tau_0, ..., tau_{j-1}].
    const int usable = static_cast<int>(node_times.size());
    std::vector<Eigen::VectorXd> new_dd(usable + 1);
    new_dd[0] = f_pred;
    for (int j = 1; j <= usable; ++j)
      new_dd[j] = (dd[j - 1] - new_dd[j - 1]) / (node_times[j - 1] - t_new);

    // Corrector adds the next Newton term; the term after that (when the
    // history allows it) estimates the corrector's own error. Scaled term
    // magnitudes at orders k-1, k, k+1 also drive the order selection.
    const double ik = node_polynomial_integral(offsets, k, h);
    const Eigen::VectorXd corrector_term = ik * new_dd[k];
    Eigen::VectorXd y_corr = y_pred + corrector_term;

    const double term_k = scaled_error_norm(corrector_term, y, y_corr, cfg.atol, cfg.rtol);
    const double term_low =
        k >= 2 ? scaled_error_norm(node_polynomial_integral(offsets, k - 1, h) * new_dd[k - 1],
                                   y, y_corr, cfg.atol, cfg.rtol)
               : std::numeric_limits<double>::infinity();
    double term_high = std::numeric_limits<double>::infinity();
    if (k + 1 <= usable) {
      const Eigen::VectorXd next_term =
          node_polynomial_integral(offsets, k + 1, h) * new_dd[k + 1];
      term_high = scaled_error_norm(next_term, y, y_corr, cfg.atol, cfg.rtol);
    }
    // Sharper corrector-error estimate when the higher term is available.
    double err = std::isfinite(term_high) ? term_high : term_k;
    if (!y_corr.allFinite() || !std::isfinite(err)) err = 1e10;

    if (err <= 1.0) {
      ++out.accepted_steps;
      // Final evaluation (PECE): the history stores f at the corrected state.
      Eigen::VectorXd f_new = rhs(t_new, y_corr);
      ++out.rhs_evaluations;

      // Dense output from the corrector interpolant integrated to s.
      recorder.after_step(t_new, y_corr, [&](double s) {
        const double span = s - t;
        Eigen::VectorXd u = y;
        for (int j = 0; j < k; ++j)
          u += node_polynomial_integral(offsets, j, span) * dd[j];
        u += node_polynomial_integral(offsets, k, span) * new_dd[k];
        return u;
      });
      if (observe) {
        out.step_times.push_back(t_new);
        out.step_diagnostics.push_back(observe(t_new, y_corr));
      }

      node_times.push_front(t_new);
      node_values.push_front(std::move(f_new));
      while (static_cast<int>(node_times.size()) > max_order + 1) {
        node_times.pop_back();
        node_values.pop_back();
      }
      rebuild_divided_differences();
      t = t_new;
      y = std::move(y_corr);

      // Order selection: term_k estimates the error one order lower, term_high
      // the error at the current order. Lower when the lower order is no
      // worse; raise only on a clear improvement while terms still decrease.
      int new_order = k;
      double controlling = std::isfinite(term_high) ? term_high : term_k;
      if (k >= 2 && term_k < controlling) {
        new_order = k - 1;
        controlling = term_k;
      } else if (std::isfinite(term_high) && term_high < 0.5 * term_k &&
                 (!std::isfinite(term_low) || term_k < term_low)) {
        new_order = k + 1;
      }
      controlling = std::max(controlling, 1e-14);
      order = std::min({new_order, max_order, static_cast<int>(node_times.size())});

      double factor = safety * std::pow(1.0 / controlling, 1.0 / (order + 1));
      factor = std::max(0.5, std::min(2.0, factor));
      h = std::min(h * factor, hmax);
      if (final_step) break;
    } else {
      ++out.rejected_steps;
      double factor = safety * std::pow(1.0 / err, 1.0 / (k + 1));
      factor = std::max(0.1, std::min(0.9, factor));
      h *= factor;
      if (order > 1) --order;
    }
  }

  out.final_time = t;
  out.final_state = y;
  return out;
}

}  // namespace detail

/// Adaptive explicit integration of y' = rhs(t, y) over [t0, t1].
/// Returns a partial trajectory with `aborted` set instead of throwing when
/// the step size underflows (stiffness signal) or the step budget runs out.
inline Trajectory integrate(const OdeRhs& rhs, const Eigen::VectorXd& y0, double t0, double t1,
                            const IntegratorConfig& cfg = {},
                            const StepObserver& observe = {}) {
  detail::validate_config(cfg, t0, t1);
  if (y0.size() == 0) throw std::invalid_argument("integrate: empty initial state");
  if (cfg.method == IntegratorConfig::Method::dopri54)
    return detail::integrate_dopri54(rhs, y0, t0, t1, cfg, observe);
  return detail::integrate_adams(rhs, y0, t0, t1, cfg, observe);
}

}  // namespace rons
