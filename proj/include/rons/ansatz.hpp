#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rons {

/// Flat parameter vector of an r-mode ansatz with K parameters per mode,
/// addressed as (mode, slot) with mode-major layout.
struct ParameterState {
  int modes = 0;     // number of modes r
  int per_mode = 0;  // parameters per mode K
  Eigen::VectorXd values;

  ParameterState() = default;
  ParameterState(int r, int k) : modes(r), per_mode(k), values(Eigen::VectorXd::Zero(r * k)) {}

  int size() const { return modes * per_mode; }

  double& at(int mode, int slot) { return values[index(mode, slot)]; }
  double at(int mode, int slot) const { return values[index(mode, slot)]; }

  int index(int mode, int slot) const {
    if (mode < 0 || mode >= modes || slot < 0 || slot >= per_mode)
      throw std::invalid_argument("ParameterState: (mode, slot) out of range");
    return mode * per_mode + slot;
  }
};

/// Spatial domain of an ansatz family.
struct Domain {
  enum class Kind { unbounded, periodic_interval };

  Kind kind = Kind::unbounded;
  int dimension = 1;
  double half_length = 0.0;  // periodic interval is [-half_length, half_length]

  static Domain unbounded(int dim) { return {Kind::unbounded, dim, 0.0}; }
  static Domain periodic(double half_length) {
    return {Kind::periodic_interval, 1, half_length};
  }

  /// Lebesgue measure |D|; infinite for unbounded domains.
  double measure() const {
    return kind == Kind::periodic_interval ? 2.0 * half_length
                                           : std::numeric_limits<double>::infinity();
  }
};

/// A parametric ansatz û(x; q): point evaluation, the Jacobian with respect
/// to the parameters, and spatial derivatives up to the order a PDE needs.
class AnsatzFamily {
 public:
  virtual ~AnsatzFamily() = default;

  virtual const Domain& domain() const = 0;
  virtual int params_per_mode() const = 0;
  virtual int max_derivative_order() const = 0;

  virtual double value(const Eigen::VectorXd& x, const ParameterState& q) const = 0;

  /// Gradient of û(x; q) with respect to the flat parameter vector.
  virtual Eigen::VectorXd param_jacobian(const Eigen::VectorXd& x,
                                         const ParameterState& q) const = 0;

  /// d^order û / d x_axis^order at (x, q).
  virtual double spatial_derivative(const Eigen::VectorXd& x, const ParameterState& q,
                                    int axis, int order) const = 0;

  void check(const Eigen::VectorXd& x, const ParameterState& q) const {
    if (x.size() != domain().dimension)
      throw std::invalid_argument("ansatz: point dimension mismatch");
    if (q.per_mode != params_per_mode() || q.values.size() != q.size())
      throw std::invalid_argument("ansatz: parameter layout mismatch");
    if (q.modes <= 0) throw std::invalid_argument("ansatz: state has no modes");
  }

 protected:
  [[noreturn]] void unsupported_derivative(int axis, int order) const {
    throw std::invalid_argument("ansatz: unsupported spatial derivative (axis " +
                                std::to_string(axis) + ", order " + std::to_string(order) + ")");
  }
};

/// Mixture of isotropic squared-amplitude Gaussians on R^d:
///   û(x; q) = sum_i A_i^2 exp(-w_i^2 |x - c_i|^2),
/// slots per mode: (A, w, c_1, ..., c_d), so K = d + 2.
class GaussianMixture final : public AnsatzFamily {
 public:
  explicit GaussianMixture(int dimension)
      : domain_(Domain::unbounded(dimension)) {
    if (dimension < 1) throw std::invalid_argument("GaussianMixture: dimension must be >= 1");
  }

  static constexpr int slot_amplitude = 0;
  static constexpr int slot_width = 1;
  static constexpr int slot_center = 2;  // slot_center + k addresses c_k

  const Domain& domain() const override { return domain_; }
  int params_per_mode() const override { return domain_.dimension + 2; }
  int max_derivative_order() const override { return 2; }

  double value(const Eigen::VectorXd& x, const ParameterState& q) const override {
    check(x, q);
    double sum = 0.0;
    for (int i = 0; i < q.modes; ++i) sum = sum + mode_value(x, q, i);
    return sum;
  }

  Eigen::VectorXd param_jacobian(const Eigen::VectorXd& x,
                                 const ParameterState& q) const override {
    check(x, q);
    const int d = domain_.dimension;
    Eigen::VectorXd jac(q.size());
    for (int i = 0; i < q.modes; ++i) {
      const double amp = q.at(i, slot_amplitude);
      const double width = q.at(i, slot_width);
      const double gauss = mode_envelope(x, q, i);
      const int base = i * q.per_mode;
      jac[base + slot_amplitude] = 2.0 * amp * gauss;
      jac[base + slot_width] = -2.0 * width * amp * amp * center_dist2(x, q, i) * gauss;
      for (int k = 0; k < d; ++k) {
        const double dx = x[k] - q.at(i, slot_center + k);
        jac[base + slot_center + k] = 2.0 * width * width * amp * amp * dx * gauss;
      }
    }
    return jac;
  }

  double spatial_derivative(const Eigen::VectorXd& x, const ParameterState& q, int axis,
                            int order) const override {
    check(x, q);
    if (axis < 0 || axis >= domain_.dimension || order < 1 || order > 2)
      unsupported_derivative(axis, order);
    double sum = 0.0;
    for (int i = 0; i < q.modes; ++i) {
      const double w2 = q.at(i, slot_width) * q.at(i, slot_width);
      const double dx = x[axis] - q.at(i, slot_center + axis);
      const double mode = mode_value(x, q, i);
      sum += order == 1 ? mode * (-2.0 * w2 * dx)
                        : mode * (4.0 * w2 * w2 * dx * dx - 2.0 * w2);
    }
    return sum;
  }

 private:
  double center_dist2(const Eigen::VectorXd& x, const ParameterState& q, int i) const {
    double r2 = 0.0;
    for (int k = 0; k < domain_.dimension; ++k) {
      const double dx = x[k] - q.at(i, slot_center + k);
      r2 += dx * dx;
    }
    return r2;
  }
  double mode_envelope(const Eigen::VectorXd& x, const ParameterState& q, int i) const {
    const double width = q.at(i, slot_width);
    return std::exp(-width * width * center_dist2(x, q, i));
  }
  double mode_value(const Eigen::VectorXd& x, const ParameterState& q, int i) const {
    const double amp = q.at(i, slot_amplitude);
    return amp * amp * mode_envelope(x, q, i);
  }

  Domain domain_;
};

/// Periodic shallow network on [-l, l]:
///   û(x; q) = sum_i A_i tanh(w_i sin(pi x / l + c_i) + b_i),
/// slots per mode: (A, w, c, b), K = 4. Spatial derivatives up to order 4.
class TanhNetwork final : public AnsatzFamily {
 public:
  explicit TanhNetwork(double half_length) : domain_(Domain::periodic(half_length)) {
    if (!(half_length > 0)) throw std::invalid_argument("TanhNetwork: half length must be > 0");
  }

  static constexpr int slot_amplitude = 0;
  static constexpr int slot_gain = 1;
  static constexpr int slot_phase = 2;
  static constexpr int slot_bias = 3;

  const Domain& domain() const override { return domain_; }
  int params_per_mode() const override { return 4; }
  int max_derivative_order() const override { return 4; }

  double value(const Eigen::VectorXd& x, const ParameterState& q) const override {
    check(x, q);
    double sum = 0.0;
    for (int i = 0; i < q.modes; ++i) {
      const double theta = wavenumber() * x[0] + q.at(i, slot_phase);
      const double z = q.at(i, slot_gain) * std::sin(theta) + q.at(i, slot_bias);
      sum += q.at(i, slot_amplitude) * std::tanh(z);
    }
    return sum;
  }

  Eigen::VectorXd param_jacobian(const Eigen::VectorXd& x,
                                 const ParameterState& q) const override {
    check(x, q);
    Eigen::VectorXd jac(q.size());
    for (int i = 0; i < q.modes; ++i) {
      const double amp = q.at(i, slot_amplitude);
      const double gain = q.at(i, slot_gain);
      const double theta = wavenumber() * x[0] + q.at(i, slot_phase);
      const double s = std::sin(theta);
      const double t = std::tanh(gain * s + q.at(i, slot_bias));
      const double sech2 = 1.0 - t * t;
      const int base = i * q.per_mode;
      jac[base + slot_amplitude] = t;
      jac[base + slot_gain] = amp * sech2 * s;
      jac[base + slot_phase] = amp * sech2 * gain * std::cos(theta);
      jac[base + slot_bias] = amp * sech2;
    }
    return jac;
  }

  double spatial_derivative(const Eigen::VectorXd& x, const ParameterState& q, int axis,
                            int order) const override {
    check(x, q);
    if (axis != 0 || order < 1 || order > 4) unsupported_derivative(axis, order);
    const double k = wavenumber();
    double sum = 0.0;
    for (int i = 0; i < q.modes; ++i) {
      const double amp = q.at(i, slot_amplitude);
      const double gain = q.at(i, slot_gain);
      const double theta = k * x[0] + q.at(i, slot_phase);
      const double s = std::sin(theta), c = std::cos(theta);
      const double t = std::tanh(gain * s + q.at(i, slot_bias));
      // Derivatives of tanh in its argument z, then the chain rule for
      // z(x) = gain * sin(kx + phase) + bias.
      const double t1 = 1.0 - t * t;
      const double t2 = -2.0 * t * t1;
      const double t3 = t1 * (6.0 * t * t - 2.0);
      const double t4 = 8.0 * t * t1 * (2.0 - 3.0 * t * t);
      const double z1 = gain * k * c;
      const double z2 = -gain * k * k * s;
      const double z3 = -gain * k * k * k * c;
      const double z4 = gain * k * k * k * k * s;
      double term = 0.0;
      switch (order) {
        case 1: term = t1 * z1; break;
        case 2: term = t2 * z1 * z1 + t1 * z2; break;
        case 3: term = t3 * z1 * z1 * z1 + 3.0 * t2 * z1 * z2 + t1 * z3; break;
        case 4:
          term = t4 * z1 * z1 * z1 * z1 + 6.0 * t3 * z1 * z1 * z2 +
                 t2 * (4.0 * z1 * z3 + 3.0 * z2 * z2) + t1 * z4;
          break;
        default: unsupported_derivative(axis, order);
      }
      sum += amp * term;
    }
    return sum;
  }

  double wavenumber() const { return std::numbers::pi / domain_.half_length; }

 private:
  Domain domain_;
};

/// Linear test family: û(x; q) = sum_i q_i phi_i(x) with orthonormal Fourier
/// modes on the periodic interval [-l, l]. One parameter per mode (K = 1), so
/// the parameter Jacobian is the basis itself, independent of q.
class FourierLinearFamily final : public AnsatzFamily {
 public:
  explicit FourierLinearFamily(double half_length) : domain_(Domain::periodic(half_length)) {
    if (!(half_length > 0))
      throw std::invalid_argument("FourierLinearFamily: half length must be > 0");
  }

  const Domain& domain() const override { return domain_; }
  int params_per_mode() const override { return 1; }
  int max_derivative_order() const override { return 4; }

  double value(const Eigen::VectorXd& x, const ParameterState& q) const override {
    check(x, q);
    double sum = 0.0;
    for (int i = 0; i < q.modes; ++i) sum += q.at(i, 0) * basis(i, x[0], 0);
    return sum;
  }

  Eigen::VectorXd param_jacobian(const Eigen::VectorXd& x,
                                 const ParameterState& q) const override {
    check(x, q);
    Eigen::VectorXd jac(q.size());
    for (int i = 0; i < q.modes; ++i) jac[i] = basis(i, x[0], 0);
    return jac;
  }

  double spatial_derivative(const Eigen::VectorXd& x, const ParameterState& q, int axis,
                            int order) const override {
    check(x, q);
    if (axis != 0 || order < 1 || order > 4) unsupported_derivative(axis, order);
    double sum = 0.0;
    for (int i = 0; i < q.modes; ++i) sum += q.at(i, 0) * basis(i, x[0], order);
    return sum;
  }

  /// d^order phi_i / dx^order; index 0 is the constant mode, odd indices are
  /// sines, even indices cosines of increasing frequency.
  double basis(int i, double x, int order) const {
    const double l = domain_.half_length;
    if (i == 0) return order == 0 ? 1.0 / std::sqrt(2.0 * l) : 0.0;
    const int m = (i + 1) / 2;
    const double k = m * std::numbers::pi / l;
    const double scale = std::pow(k, order) / std::sqrt(l);
    const double shift = order * std::numbers::pi / 2.0;
    const double theta = k * x + shift;
    return i % 2 == 1 ? scale * std::sin(theta) : scale * std::cos(theta);
  }

 private:
  Domain domain_;
};

}  // namespace rons
