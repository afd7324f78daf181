#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "rons/ansatz.hpp"
#include "rons/pde.hpp"

namespace rons {

/// Reduced system M(q) qdot = f(q, t) with the metric and right-hand side
/// assembled in closed form.
struct DenseSystem {
  Eigen::MatrixXd metric;
  Eigen::VectorXd rhs;
  double time = 0.0;
};

/// One Gaussian mode's parameters: amplitude root A, width w, center c.
struct GaussianMode {
  double amp = 0.0;
  double width = 0.0;
  Eigen::VectorXd center;
};

inline GaussianMode gaussian_mode(const ParameterState& q, int mode, int dimension) {
  GaussianMode m;
  m.amp = q.at(mode, GaussianMixture::slot_amplitude);
  m.width = q.at(mode, GaussianMixture::slot_width);
  m.center.resize(dimension);
  for (int k = 0; k < dimension; ++k)
    m.center[k] = q.at(mode, GaussianMixture::slot_center + k);
  return m;
}

/// Shared geometry of a Gaussian pair: the product of two isotropic Gaussians
/// is a Gaussian with precision sum `S` centered at the precision-weighted
/// mean; `mass` is the integral of that product over R^d. `delta_*` are the
/// offsets of each mode's center from the product center; all pair moments
/// reduce to polynomials in these.
struct GaussianPairGeometry {
  double S = 0.0;       // combined precision w_i^2 + w_j^2
  double sigma2 = 0.0;  // per-axis variance of the product Gaussian, 1/(2S)
  double mass = 0.0;    // integral of E_i * E_j
  Eigen::VectorXd delta_i, delta_j;
  double di2 = 0.0, dj2 = 0.0, didj = 0.0;  // |delta_i|^2, |delta_j|^2, dot
  double sum_di = 0.0, sum_dj = 0.0;        // coordinate sums of the deltas
};

inline GaussianPairGeometry gaussian_pair_geometry(const GaussianMode& mi,
                                                   const GaussianMode& mj) {
  const int d = static_cast<int>(mi.center.size());
  if (mj.center.size() != d)
    throw std::invalid_argument("gaussian pair: center dimension mismatch");
  const double wi2 = mi.width * mi.width;
  const double wj2 = mj.width * mj.width;
  GaussianPairGeometry g;
  g.S = wi2 + wj2;
  if (!(g.S > 0))
    throw std::invalid_argument("gaussian pair: at least one width must be nonzero");
  g.sigma2 = 0.5 / g.S;
  const Eigen::VectorXd diff = mj.center - mi.center;  // c_j - c_i
  const double dist2 = diff.squaredNorm();
  const double cross_precision = wi2 * wj2 / g.S;
  g.mass = std::pow(std::numbers::pi / g.S, 0.5 * d) * std::exp(-cross_precision * dist2);
  g.delta_i = (wj2 / g.S) * diff;
  g.delta_j = -(wi2 / g.S) * diff;
  g.di2 = g.delta_i.squaredNorm();
  g.dj2 = g.delta_j.squaredNorm();
  g.didj = g.delta_i.dot(g.delta_j);
  g.sum_di = g.delta_i.sum();
  g.sum_dj = g.delta_j.sum();
  return g;
}

/// Closed-form kernel table for the Gaussian-mixture ansatz under the
/// Fokker-Planck operator. Holds one evaluator per distinct metric entry
/// (lower triangle of a K x K mode-pair block) plus one per right-hand-side
/// slot: K(K+1)/2 + K = K(K+3)/2 evaluators in total, independent of the
/// number of modes. Assembly only ever calls through this table.
class GaussianFokkerPlanckKernels {
 public:
  using MetricKernel =
      std::function<double(const GaussianPairGeometry&, const GaussianMode&, const GaussianMode&)>;
  using RhsKernel = std::function<double(const GaussianPairGeometry&, const GaussianMode&,
                                         const GaussianMode&, double)>;

  explicit GaussianFokkerPlanckKernels(FokkerPlanckCoefficients coeffs) : coeffs_(coeffs) {
    build_metric_kernels();
    build_rhs_kernels();
  }

  const FokkerPlanckCoefficients& coefficients() const { return coeffs_; }
  int dimension() const { return coeffs_.dimension; }
  int params_per_mode() const { return coeffs_.dimension + 2; }

  std::size_t metric_kernel_count() const { return metric_kernels_.size(); }
  std::size_t rhs_kernel_count() const { return rhs_kernels_.size(); }
  std::size_t kernel_count() const { return metric_kernels_.size() + rhs_kernels_.size(); }

  /// Metric entry <d û/d q_{i,slot_a}, d û/d q_{j,slot_b}> in L2(R^d).
  /// Entries above the table's lower triangle are obtained by swapping both
  /// the slots and the modes, which transposes the pair block.
  double metric_entry(int slot_a, int slot_b, const GaussianMode& mi,
                      const GaussianMode& mj) const {
    check_slot(slot_a);
    check_slot(slot_b);
    if (slot_a >= slot_b)
      return metric_kernels_[triangle_index(slot_a, slot_b)](gaussian_pair_geometry(mi, mj), mi,
                                                             mj);
    return metric_kernels_[triangle_index(slot_b, slot_a)](gaussian_pair_geometry(mj, mi), mj,
                                                           mi);
  }

  /// One source mode's contribution <d û/d q_{i,slot}, F(mode j)> to the
  /// right-hand side; the assembled entry sums this over all source modes j.
  double rhs_entry(int slot, const GaussianMode& mi, const GaussianMode& mj, double t) const {
    check_slot(slot);
    return rhs_kernels_[slot](gaussian_pair_geometry(mi, mj), mi, mj, t);
  }

  Eigen::MatrixXd assemble_metric(const ParameterState& q) const {
    check_state(q);
    const int K = params_per_mode();
    const int n = q.size();
    Eigen::MatrixXd metric(n, n);
    for (int i = 0; i < q.modes; ++i) {
      const GaussianMode mi = gaussian_mode(q, i, dimension());
      for (int j = 0; j <= i; ++j) {
        const GaussianMode mj = gaussian_mode(q, j, dimension());
        const GaussianPairGeometry forward = gaussian_pair_geometry(mi, mj);
        const GaussianPairGeometry backward = gaussian_pair_geometry(mj, mi);
        for (int sa = 0; sa < K; ++sa) {
          const int sb_end = (i == j) ? sa + 1 : K;
          for (int sb = 0; sb < sb_end; ++sb) {
            const double entry =
                sa >= sb ? metric_kernels_[triangle_index(sa, sb)](forward, mi, mj)
                         : metric_kernels_[triangle_index(sb, sa)](backward, mj, mi);
            metric(i * K + sa, j * K + sb) = entry;
          }
        }
      }
    }
    // Mirror the strictly lower part so the result is exactly symmetric.
    for (int row = 0; row < n; ++row)
      for (int col = row + 1; col < n; ++col) metric(row, col) = metric(col, row);
    return metric;
  }

  Eigen::VectorXd assemble_rhs(const ParameterState& q, double t) const {
    check_state(q);
    const int K = params_per_mode();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(q.size());
    std::vector<GaussianMode> modes(q.modes);
    for (int i = 0; i < q.modes; ++i) modes[i] = gaussian_mode(q, i, dimension());
    for (int i = 0; i < q.modes; ++i) {
      for (int j = 0; j < q.modes; ++j) {
        const GaussianPairGeometry geom = gaussian_pair_geometry(modes[i], modes[j]);
        for (int slot = 0; slot < K; ++slot)
          rhs[i * K + slot] += rhs_kernels_[slot](geom, modes[i], modes[j], t);
      }
    }
    return rhs;
  }

  DenseSystem assemble(const ParameterState& q, double t) const {
    return DenseSystem{assemble_metric(q), assemble_rhs(q, t), t};
  }

 private:
  // Slot order within a mode block: amplitude, width, then center components.
  static constexpr int slot_amp = GaussianMixture::slot_amplitude;
  static constexpr int slot_width = GaussianMixture::slot_width;
  static constexpr int slot_center = GaussianMixture::slot_center;

  static int triangle_index(int hi, int lo) { return hi * (hi + 1) / 2 + lo; }

  void check_slot(int slot) const {
    if (slot < 0 || slot >= params_per_mode())
      throw std::invalid_argument("kernel table: slot out of range");
  }
  void check_state(const ParameterState& q) const {
    if (q.per_mode != params_per_mode())
      throw std::invalid_argument("kernel table: parameter layout mismatch");
  }

  void build_metric_kernels() {
    const int d = dimension();
    const int K = params_per_mode();
    metric_kernels_.resize(static_cast<std::size_t>(K) * (K + 1) / 2);

    // Diagonal-slot kernels group commutative factor pairs so that a joint
    // (mode, mode) swap reproduces the entry bitwise.
    // <2 A_i E_i, 2 A_j E_j>
    metric_kernels_[triangle_index(slot_amp, slot_amp)] =
        [](const GaussianPairGeometry& g, const GaussianMode& mi, const GaussianMode& mj) {
          return 4.0 * (mi.amp * mj.amp) * g.mass;
        };
    // <-2 w_i A_i^2 |x-c_i|^2 E_i, 2 A_j E_j>
    metric_kernels_[triangle_index(slot_width, slot_amp)] =
        [d](const GaussianPairGeometry& g, const GaussianMode& mi, const GaussianMode& mj) {
          return -4.0 * mi.width * mi.amp * mi.amp * mj.amp * g.mass * (d * g.sigma2 + g.di2);
        };
    // <-2 w_i A_i^2 |x-c_i|^2 E_i, -2 w_j A_j^2 |x-c_j|^2 E_j>
    metric_kernels_[triangle_index(slot_width, slot_width)] =
        [d](const GaussianPairGeometry& g, const GaussianMode& mi, const GaussianMode& mj) {
          const double quartic = d * (d + 2.0) * g.sigma2 * g.sigma2 +
                                 d * g.sigma2 * (g.di2 + g.dj2) + 4.0 * g.sigma2 * g.didj +
                                 g.di2 * g.dj2;
          const double amps = (mi.amp * mi.amp) * (mj.amp * mj.amp);
          return 4.0 * (mi.width * mj.width) * amps * g.mass * quartic;
        };
    for (int k = 0; k < d; ++k) {
      // <2 w_i^2 A_i^2 (x_k - c_{ik}) E_i, 2 A_j E_j>
      metric_kernels_[triangle_index(slot_center + k, slot_amp)] =
          [k](const GaussianPairGeometry& g, const GaussianMode& mi, const GaussianMode& mj) {
            return 4.0 * mi.width * mi.width * mi.amp * mi.amp * mj.amp * g.mass * g.delta_i[k];
          };
      // <2 w_i^2 A_i^2 (x_k - c_{ik}) E_i, -2 w_j A_j^2 |x-c_j|^2 E_j>
      metric_kernels_[triangle_index(slot_center + k, slot_width)] =
          [d, k](const GaussianPairGeometry& g, const GaussianMode& mi, const GaussianMode& mj) {
            const double moment =
                2.0 * g.sigma2 * g.delta_j[k] + g.delta_i[k] * (d * g.sigma2 + g.dj2);
            return -4.0 * mi.width * mi.width * mi.amp * mi.amp * mj.width * mj.amp * mj.amp *
                   g.mass * moment;
          };
      // <2 w_i^2 A_i^2 (x_k - c_{ik}) E_i, 2 w_j^2 A_j^2 (x_l - c_{jl}) E_j>
      for (int l = 0; l <= k; ++l) {
        metric_kernels_[triangle_index(slot_center + k, slot_center + l)] =
            [k, l](const GaussianPairGeometry& g, const GaussianMode& mi, const GaussianMode& mj) {
              const double moment =
                  (k == l ? g.sigma2 : 0.0) + g.delta_i[k] * g.delta_j[l];
              const double widths = (mi.width * mi.width) * (mj.width * mj.width);
              const double amps = (mi.amp * mi.amp) * (mj.amp * mj.amp);
              return 4.0 * widths * amps * g.mass * moment;
            };
      }
    }
  }

  /// The operator applied to one Gaussian mode is a quadratic polynomial in
  /// y = x - c_j times that Gaussian. In the pair measure every needed moment
  /// of that polynomial is closed-form; `RhsMoments` carries them.
  struct RhsPolynomial {
    double constant;    // multiplies 1
    double coord_sum;   // multiplies Y = sum_k y_k
    double center_dot;  // multiplies c_j . y
    double radial;      // multiplies |y|^2
    double sum_sq;      // multiplies Y^2
  };

  RhsPolynomial rhs_polynomial(const GaussianMode& mj, double t) const {
    const int d = dimension();
    const double wj2 = mj.width * mj.width;
    const double a = coeffs_.drive(t);
    const double coupling = coeffs_.coupling;
    const double nu = coeffs_.diffusion;
    RhsPolynomial p;
    p.constant = coeffs_.drift_divergence() - 2.0 * nu * wj2 * d;
    p.coord_sum = 2.0 * wj2 * (a + coupling / d * mj.center.sum());
    p.center_dot = -2.0 * wj2 * (1.0 + coupling);
    p.radial = -2.0 * wj2 * (1.0 + coupling) + 4.0 * nu * wj2 * wj2;
    p.sum_sq = 2.0 * wj2 * coupling / d;
    return p;
  }

  void build_rhs_kernels() {
    const int d = dimension();
    rhs_kernels_.resize(static_cast<std::size_t>(params_per_mode()));

    // <2 A_i E_i, F(A_j^2 E_j)>
    rhs_kernels_[slot_amp] = [this, d](const GaussianPairGeometry& g, const GaussianMode& mi,
                                       const GaussianMode& mj, double t) {
      const RhsPolynomial p = rhs_polynomial(mj, t);
      const double cj_dot_dj = mj.center.dot(g.delta_j);
      const double expect = p.constant + p.coord_sum * g.sum_dj + p.center_dot * cj_dot_dj +
                            p.radial * (d * g.sigma2 + g.dj2) +
                            p.sum_sq * (d * g.sigma2 + g.sum_dj * g.sum_dj);
      return 2.0 * mi.amp * mj.amp * mj.amp * g.mass * expect;
    };
    // <-2 w_i A_i^2 |x-c_i|^2 E_i, F(A_j^2 E_j)>
    rhs_kernels_[slot_width] = [this, d](const GaussianPairGeometry& g, const GaussianMode& mi,
                                         const GaussianMode& mj, double t) {
      const RhsPolynomial p = rhs_polynomial(mj, t);
      const double s2 = g.sigma2;
      const double ri = d * s2 + g.di2;  // E |u + delta_i|^2
      const double cj_dot_dj = mj.center.dot(g.delta_j);
      const double cj_dot_di = mj.center.dot(g.delta_i);
      const double expect =
          p.constant * ri + p.coord_sum * (ri * g.sum_dj + 2.0 * s2 * g.sum_di) +
          p.center_dot * (ri * cj_dot_dj + 2.0 * s2 * cj_dot_di) +
          p.radial * (d * (d + 2.0) * s2 * s2 + d * s2 * (g.di2 + g.dj2) + 4.0 * s2 * g.didj +
                      g.di2 * g.dj2) +
          p.sum_sq * (d * (d + 2.0) * s2 * s2 + d * s2 * g.di2 + 4.0 * s2 * g.sum_di * g.sum_dj +
                      g.sum_dj * g.sum_dj * ri);
      return -2.0 * mi.width * mi.amp * mi.amp * mj.amp * mj.amp * g.mass * expect;
    };
    // <2 w_i^2 A_i^2 (x_k - c_{ik}) E_i, F(A_j^2 E_j)>
    for (int k = 0; k < d; ++k) {
      rhs_kernels_[slot_center + k] = [this, d, k](const GaussianPairGeometry& g,
                                                   const GaussianMode& mi, const GaussianMode& mj,
                                                   double t) {
        const RhsPolynomial p = rhs_polynomial(mj, t);
        const double s2 = g.sigma2;
        const double dik = g.delta_i[k];
        const double cj_dot_dj = mj.center.dot(g.delta_j);
        const double expect = p.constant * dik + p.coord_sum * (s2 + dik * g.sum_dj) +
                              p.center_dot * (s2 * mj.center[k] + dik * cj_dot_dj) +
                              p.radial * (2.0 * s2 * g.delta_j[k] + dik * (d * s2 + g.dj2)) +
                              p.sum_sq * (2.0 * s2 * g.sum_dj +
                                          dik * (d * s2 + g.sum_dj * g.sum_dj));
        return 2.0 * mi.width * mi.width * mi.amp * mi.amp * mj.amp * mj.amp * g.mass * expect;
      };
    }
  }

  FokkerPlanckCoefficients coeffs_;
  std::vector<MetricKernel> metric_kernels_;
  std::vector<RhsKernel> rhs_kernels_;
};

/// Integral of the mixture over R^d: sum_i A_i^2 (pi / w_i^2)^{d/2}.
inline double mixture_mass(const ParameterState& q, int dimension) {
  double total = 0.0;
  for (int i = 0; i < q.modes; ++i) {
    const double amp = q.at(i, GaussianMixture::slot_amplitude);
    const double width = q.at(i, GaussianMixture::slot_width);
    if (width == 0.0) throw std::invalid_argument("mixture_mass: width must be nonzero");
    total += amp * amp * std::pow(std::numbers::pi / (width * width), 0.5 * dimension);
  }
  return total;
}

/// Gradient of mixture_mass with respect to the flat parameter vector;
/// center components do not move mass, so their entries vanish.
inline Eigen::VectorXd mixture_mass_gradient(const ParameterState& q, int dimension) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(q.size());
  for (int i = 0; i < q.modes; ++i) {
    const double amp = q.at(i, GaussianMixture::slot_amplitude);
    const double width = q.at(i, GaussianMixture::slot_width);
    if (width == 0.0)
      throw std::invalid_argument("mixture_mass_gradient: width must be nonzero");
    const double mode_mass = std::pow(std::numbers::pi / (width * width), 0.5 * dimension);
    grad[q.index(i, GaussianMixture::slot_amplitude)] = 2.0 * amp * mode_mass;
    grad[q.index(i, GaussianMixture::slot_width)] = -dimension * amp * amp * mode_mass / width;
  }
  return grad;
}

}  // namespace rons
