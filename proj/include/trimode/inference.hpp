#pragma once

// Homodyne-based inference of the intracavity state with a finite-bandwidth
// detector whose point-spread function is a normalized boxcar of length tau.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "trimode/dynamics.hpp"
#include "trimode/error.hpp"
#include "trimode/expm.hpp"
#include "trimode/gaussian.hpp"

namespace trimode::inference {

inline constexpr double kClampTolerance = 1e-9;

struct DetectorModel {
  double tau = 0.0;                                             // s
  double bandwidth = std::numeric_limits<double>::infinity();  // Hz, 1/tau

  static DetectorModel from_bandwidth(double hz) {
    if (!(hz > 0.0)) throw Error(Errc::InvalidParams, "detector bandwidth must be positive");
    return {1.0 / hz, hz};
  }
  static DetectorModel from_tau(double tau) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error(Errc::InvalidParams, "tau must be finite and >= 0");
    return {tau, tau > 0.0 ? 1.0 / tau : std::numeric_limits<double>::infinity()};
  }
};

/// Pieces of the exact inferred covariance for window tau:
///   phi1    = (A tau)^-1 (e^{A tau} - I)
///   noise   = (A tau)^-1 [int_0^tau (e^{As} - I) D (e^{As} - I)^T ds] (A tau)^-T
/// both read off one exponential of the block matrix
///   [[-B, Dhat], [0, B^T]] tau,   B = [[A, 0], [I/tau, 0]],  Dhat = D (+) 0,
/// where e^{Bs} = [[e^{As}, 0], [Psi(s)/tau, I]] and Psi(s) = int_0^s e^{Ar} dr.
/// The block exponential contains e^{-B t}, which grows like e^{|Re lambda| t},
/// so it is only evaluated on t0 = tau / 2^k with ||B t0|| <= 1/2; the Gramian
/// W(t) = int_0^t e^{Bs} Dhat e^{B^T s} ds is then doubled up to tau via
/// W(2t) = W(t) + e^{Bt} W(t) e^{B^T t}.
struct InferenceBlocks {
  Eigen::MatrixXd phi1;
  Eigen::MatrixXd noise;
};

inline InferenceBlocks inference_blocks(const Eigen::MatrixXd& a, const Eigen::MatrixXd& d, double tau) {
  const auto n = a.rows();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  b.topLeftCorner(n, n) = a;
  b.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n) / tau;

  const double norm = linalg::detail::one_norm(b * tau);
  const int k = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
  const double t0 = std::ldexp(tau, -k);

  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4 * n, 4 * n);
  c.topLeftCorner(2 * n, 2 * n) = -b * t0;
  c.block(0, 2 * n, n, n) = d * t0;
  c.bottomRightCorner(2 * n, 2 * n) = b.transpose() * t0;
  const Eigen::MatrixXd e = linalg::expm(c);
  Eigen::MatrixXd step = e.bottomRightCorner(2 * n, 2 * n).transpose();  // e^{B t0}
  Eigen::MatrixXd gram = step * e.topRightCorner(2 * n, 2 * n);
  for (int i = 0; i < k; ++i) {
    gram += step * gram * step.transpose();
    step = (step * step).eval();
  }
  gram = (0.5 * (gram + gram.transpose())).eval();
  return {step.bottomLeftCorner(n, n), gram.bottomRightCorner(n, n)};
}

/// Steady-state covariance of the boxcar-filtered quadratures.
inline gaussian::CovarianceMatrix inferred_covariance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& d,
                                                      const gaussian::CovarianceMatrix& v,
                                                      const DetectorModel& det) {
  if (a.rows() != v.dim() || d.rows() != v.dim()) throw Error(Errc::DimensionMismatch, "A, D, V sizes differ");
  if (det.tau == 0.0) return v;
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
  if (!(sv(sv.size() - 1) > 1e-13 * sv(0))) throw Error(Errc::SingularDrift, "drift matrix is numerically singular");
  if (!dynamics::stability(a).stable) throw Error(Errc::UnstableSystem, "drift matrix is not stable");

  const auto blocks = inference_blocks(a, d, det.tau);
  const Eigen::MatrixXd vt = blocks.phi1 * v.matrix() * blocks.phi1.transpose() + blocks.noise;
  return gaussian::CovarianceMatrix(vt, v.labels());
}

inline gaussian::CovarianceMatrix inferred_covariance(const model::DriftMatrix& a, const model::DiffusionMatrix& d,
                                                      const gaussian::CovarianceMatrix& v,
                                                      const DetectorModel& det) {
  return inferred_covariance(Eigen::MatrixXd(a.entries), Eigen::MatrixXd(d.entries), v, det);
}

/// Short-window expansion V - tau D / 6.
inline gaussian::CovarianceMatrix inferred_covariance_first_order(const gaussian::CovarianceMatrix& v,
                                                                  const Eigen::MatrixXd& d,
                                                                  const DetectorModel& det) {
  if (d.rows() != v.dim() || d.cols() != v.dim()) throw Error(Errc::DimensionMismatch, "D and V sizes differ");
  return gaussian::CovarianceMatrix(v.matrix() - det.tau / 6.0 * d, v.labels());
}

inline gaussian::CovarianceMatrix inferred_covariance_first_order(const gaussian::CovarianceMatrix& v,
                                                                  const model::DiffusionMatrix& d,
                                                                  const DetectorModel& det) {
  return inferred_covariance_first_order(v, Eigen::MatrixXd(d.entries), det);
}

/// Single-mode fidelity between the reductions of V and V_inferred to `mode`.
/// Inferred reductions within kClampTolerance below the uncertainty bound are
/// rescaled onto it.
inline double inference_fidelity(const gaussian::CovarianceMatrix& v, const gaussian::CovarianceMatrix& v_inferred,
                                 int mode) {
  const auto ref = gaussian::reduce(v, {mode});
  const auto inf = gaussian::reduce(v_inferred, {mode});
  if (!gaussian::is_physical(ref)) throw Error(Errc::UnphysicalState, "reference reduction is unphysical");
  const double det = inf.matrix().determinant();
  if (!(inf.matrix()(0, 0) > 0.0) || !(det > 0.0)) {
    throw Error(Errc::UnphysicalReduction, "inferred reduction is not positive definite");
  }
  const double nu = std::sqrt(det);
  if (nu < 0.5 - kClampTolerance) {
    throw Error(Errc::UnphysicalReduction, "inferred reduction violates the uncertainty bound (nu = " +
                                               std::to_string(nu) + ")");
  }
  const auto clamped = nu < 0.5 ? gaussian::CovarianceMatrix(inf.matrix() * (0.5 / nu)) : inf;
  return gaussian::gaussian_fidelity_single_mode(ref, clamped);
}

/// Intracavity quadrature from input/output records: (out - in)/sqrt(2 kappa).
inline std::vector<double> intracavity_from_io(std::span<const double> x_out, std::span<const double> x_in,
                                               double kappa) {
  if (x_out.size() != x_in.size()) throw Error(Errc::LengthMismatch, "input and output series differ in length");
  if (!(kappa > 0.0)) throw Error(Errc::InvalidParams, "kappa must be positive");
  const double s = 1.0 / std::sqrt(2.0 * kappa);
  std::vector<double> out(x_out.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_out[i] - x_in[i]) * s;
  return out;
}

/// Boxcar point-spread filter on a uniformly sampled series:
/// (f * a)(t_k) = (1/tau) int_{t_k - tau}^{t_k} a, trapezoid rule (the
/// half-weight endpoints match f(0) = f(tau) = 1/(2 tau)). tau must be a
/// whole number of samples; entry j of the result corresponds to sample j + m.
inline std::vector<double> apply_point_spread(std::span<const double> a, double dt, double tau) {
  const auto m = static_cast<std::size_t>(std::llround(tau / dt));
  if (m == 0 || std::abs(static_cast<double>(m) * dt - tau) > 1e-9 * tau) {
    throw Error(Errc::InvalidParams, "tau must be a positive multiple of dt");
  }
  if (a.size() <= m) return {};
  std::vector<double> out(a.size() - m);
  double window = 0.0;
  for (std::size_t i = 1; i < m; ++i) window += a[i];
  for (std::size_t k = m; k < a.size(); ++k) {
    out[k - m] = (0.5 * a[k - m] + window + 0.5 * a[k]) * dt / tau;
    window += a[k] - a[k - m + 1];
  }
  return out;
}

}  // namespace trimode::inference
