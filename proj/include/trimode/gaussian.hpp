#pragma once

// Continuous-variable Gaussian-state linear algebra.
//
// Quadratures are ordered (x_1, p_1, x_2, p_2, ...) with x = (a + a^dag)/sqrt(2),
// so the vacuum covariance matrix is I/2 and physical states have all
// symplectic eigenvalues >= 1/2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "trimode/error.hpp"

namespace trimode::gaussian {

inline constexpr double kPairingTolerance = 1e-9;
inline constexpr double kPhysicalTolerance = 1e-9;
inline constexpr double kNegativityGuard = 1e-12;

/// Real symmetric 2n x 2n second-moment matrix of a zero-mean Gaussian state.
/// The input is symmetrized as (V + V^T)/2 on construction.
class CovarianceMatrix {
 public:
  CovarianceMatrix() = default;

  explicit CovarianceMatrix(const Eigen::MatrixXd& entries, std::vector<std::string> labels = {})
      : labels_(std::move(labels)) {
    if (entries.rows() != entries.cols() || entries.rows() == 0 || entries.rows() % 2 != 0) {
      throw Error(Errc::DimensionMismatch, "covariance matrix must be square with even, nonzero dimension");
    }
    if (!entries.allFinite()) {
      throw Error(Errc::DimensionMismatch, "covariance matrix has non-finite entries");
    }
    entries_ = 0.5 * (entries + entries.transpose());
    if (!labels_.empty() && static_cast<Eigen::Index>(labels_.size()) != n_modes()) {
      throw Error(Errc::DimensionMismatch, "mode label count does not match dimension");
    }
  }

  Eigen::Index n_modes() const { return entries_.rows() / 2; }
  Eigen::Index dim() const { return entries_.rows(); }
  const Eigen::MatrixXd& matrix() const { return entries_; }
  const std::vector<std::string>& labels() const { return labels_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  static CovarianceMatrix vacuum(Eigen::Index n_modes) {
    return CovarianceMatrix(0.5 * Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes));
  }

  static CovarianceMatrix thermal(double n_bar) {
    return CovarianceMatrix((n_bar + 0.5) * Eigen::MatrixXd::Identity(2, 2));
  }

  /// Two-mode squeezed vacuum with squeezing parameter r.
  static CovarianceMatrix two_mode_squeezed(double r) {
    const double c = 0.5 * std::cosh(2.0 * r);
    const double s = 0.5 * std::sinh(2.0 * r);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 4);
    v.diagonal().setConstant(c);
    v(0, 2) = v(2, 0) = s;
    v(1, 3) = v(3, 1) = -s;
    return CovarianceMatrix(v);
  }

 private:
  Eigen::MatrixXd entries_;
  std::vector<std::string> labels_;
};

/// Block-diagonal symplectic form built from [[0, 1], [-1, 0]] blocks.
inline Eigen::MatrixXd symplectic_form(Eigen::Index n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (Eigen::Index k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

namespace detail {

inline std::vector<Eigen::Index> checked_modes(const std::vector<int>& modes, Eigen::Index n_modes) {
  if (modes.empty()) throw Error(Errc::IndexOutOfRange, "mode subset is empty");
  std::vector<Eigen::Index> out;
  out.reserve(modes.size());
  for (int m : modes) {
    if (m < 0 || m >= n_modes) {
      throw Error(Errc::IndexOutOfRange, "mode index " + std::to_string(m) + " out of range");
    }
    out.push_back(m);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

/// Symplectic eigenvalues, ascending: |Im| of the eigenvalues of Omega V, which
/// come in +-i nu pairs for a positive-definite V.
inline std::vector<double> symplectic_eigenvalues(const CovarianceMatrix& v) {
  const Eigen::Index n = v.n_modes();
  const Eigen::MatrixXd m = symplectic_form(n) * v.matrix();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::NonPairedSpectrum, "eigenvalue iteration did not converge");
  }
  std::vector<std::complex<double>> ev(solver.eigenvalues().data(),
                                       solver.eigenvalues().data() + solver.eigenvalues().size());
  double scale = 0.0;
  for (const auto& z : ev) scale = std::max(scale, std::abs(z));
  const double tol = kPairingTolerance * std::max(scale, 1e-300);

  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) { return a.imag() > b.imag(); });
  std::vector<double> nu(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& up = ev[static_cast<std::size_t>(k)];
    const auto& down = ev[static_cast<std::size_t>(2 * n - 1 - k)];
    if (up.imag() <= tol || std::abs(up.real()) > tol || std::abs(up - std::conj(down)) > tol) {
      throw Error(Errc::NonPairedSpectrum, "spectrum of Omega V is not of the form +-i nu");
    }
    nu[static_cast<std::size_t>(k)] = 0.5 * (up.imag() - down.imag());
  }
  std::sort(nu.begin(), nu.end());
  return nu;
}

/// Phase-space transposition on `modes`: flips the sign of each selected p.
inline CovarianceMatrix partial_transpose(const CovarianceMatrix& v, const std::vector<int>& modes) {
  const auto idx = detail::checked_modes(modes, v.n_modes());
  Eigen::VectorXd flip = Eigen::VectorXd::Ones(v.dim());
  for (auto m : idx) flip(2 * m + 1) = -1.0;
  return CovarianceMatrix(flip.asDiagonal() * v.matrix() * flip.asDiagonal(), v.labels());
}

/// Sub-matrix on the selected modes, in ascending mode order.
inline CovarianceMatrix reduce(const CovarianceMatrix& v, const std::vector<int>& modes) {
  const auto idx = detail::checked_modes(modes, v.n_modes());
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd sub(2 * k, 2 * k);
  std::vector<std::string> labels;
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      sub.block<2, 2>(2 * a, 2 * b) = v.matrix().block<2, 2>(2 * idx[a], 2 * idx[b]);
    }
    if (!v.labels().empty()) labels.push_back(v.labels()[static_cast<std::size_t>(idx[a])]);
  }
  return CovarianceMatrix(sub, std::move(labels));
}

inline bool is_physical(const CovarianceMatrix& v) {
  try {
    const auto nu = symplectic_eigenvalues(v);
    return nu.front() >= 0.5 - kPhysicalTolerance;
  } catch (const Error&) {
    // Not positive definite: Omega V has real or off-axis eigenvalues.
    return false;
  }
}

/// Logarithmic negativity of the cut partition_A | complement, computed as
/// -sum ln(2 nu~) over the partially transposed symplectic eigenvalues below 1/2.
inline double log_negativity(const CovarianceMatrix& v, const std::vector<int>& partition_a) {
  const auto idx = detail::checked_modes(partition_a, v.n_modes());
  if (static_cast<Eigen::Index>(idx.size()) >= v.n_modes()) {
    throw Error(Errc::InvalidPartition, "partition must be a proper subset of the modes");
  }
  if (!is_physical(v)) throw Error(Errc::UnphysicalState, "log_negativity needs a physical state");

  double e = 0.0;
  for (double nu : symplectic_eigenvalues(partial_transpose(v, partition_a))) {
    if (nu < 0.5 - kNegativityGuard) e -= std::log(2.0 * nu);
  }
  return std::max(0.0, e);
}

/// Uhlmann fidelity of two zero-mean single-mode Gaussian states.
inline double gaussian_fidelity_single_mode(const CovarianceMatrix& v1, const CovarianceMatrix& v2) {
  if (v1.n_modes() != 1 || v2.n_modes() != 1) {
    throw Error(Errc::DimensionMismatch, "single-mode fidelity needs 2x2 covariance matrices");
  }
  const double delta = (v1.matrix() + v2.matrix()).determinant();
  const double d1 = std::max(0.0, v1.matrix().determinant() - 0.25);
  const double d2 = std::max(0.0, v2.matrix().determinant() - 0.25);
  const double small = 4.0 * d1 * d2;
  // 1/(sqrt(delta + small) - sqrt(small)), rationalized to avoid cancellation
  const double f = (std::sqrt(delta + small) + std::sqrt(small)) / delta;
  return std::clamp(f, 0.0, 1.0);
}

}  // namespace trimode::gaussian
