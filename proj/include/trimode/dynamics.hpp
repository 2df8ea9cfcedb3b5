#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trimode/error.hpp"
#include "trimode/gaussian.hpp"
#include "trimode/model.hpp"

namespace trimode::dynamics {

/// max Re(lambda) must lie below -kStabilityTolerance * ||A||_F for a stable verdict.
inline constexpr double kStabilityTolerance = 1e-10;
/// Spectral and Routh-Hurwitz verdicts may only disagree within this band.
inline constexpr double kVerdictMargin = 1e-6;
inline constexpr double kLyapunovResidual = 1e-10;

struct StabilityReport {
  bool stable = false;
  double max_real_eigenvalue = 0.0;
  bool routh_hurwitz_pass = false;
  std::vector<double> char_poly_coeffs;  // monic, highest degree first
  std::vector<double> hurwitz_determinants;
  std::vector<std::complex<double>> eigenvalues;
};

namespace detail {

/// Coefficients of prod(x - lambda_i), highest degree first, accumulated in long double.
inline std::vector<long double> poly_from_roots(const std::vector<std::complex<double>>& roots, double scale) {
  std::vector<std::complex<long double>> c{1.0L};
  for (const auto& r : roots) {
    const std::complex<long double> z(r.real() / scale, r.imag() / scale);
    c.push_back(0.0L);
    for (std::size_t k = c.size() - 1; k > 0; --k) c[k] -= z * c[k - 1];
  }
  std::vector<long double> out(c.size());
  std::transform(c.begin(), c.end(), out.begin(), [](const auto& z) { return z.real(); });
  return out;
}

inline long double determinant(std::vector<std::vector<long double>> m) {
  const std::size_t n = m.size();
  long double det = 1.0L;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
    }
    if (m[piv][col] == 0.0L) return 0.0L;
    if (piv != col) {
      std::swap(m[piv], m[col]);
      det = -det;
    }
    det *= m[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const long double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
    }
  }
  return det;
}

/// Leading principal minors of the Hurwitz matrix H(i, j) = a_{2j + 1 - i}.
inline std::vector<long double> hurwitz_minors(const std::vector<long double>& a) {
  const std::size_t n = a.size() - 1;
  auto coeff = [&](long long k) -> long double {
    return (k >= 0 && k <= static_cast<long long>(n)) ? a[static_cast<std::size_t>(k)] : 0.0L;
  };
  std::vector<long double> minors;
  for (std::size_t k = 1; k <= n; ++k) {
    std::vector<std::vector<long double>> h(k, std::vector<long double>(k));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        h[i][j] = coeff(2 * static_cast<long long>(j) + 1 - static_cast<long long>(i));
      }
    }
    minors.push_back(determinant(std::move(h)));
  }
  return minors;
}

}  // namespace detail

/// Spectral and Routh-Hurwitz stability verdicts for dx/dt = A x.
inline StabilityReport stability(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw Error(Errc::DimensionMismatch, "drift matrix must be square");
  if (!a.allFinite()) throw Error(Errc::InvalidParams, "drift matrix has non-finite entries");

  StabilityReport rep;
  const double norm = a.norm();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a, false);
  const auto& ev = solver.eigenvalues();
  rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  rep.max_real_eigenvalue = -std::numeric_limits<double>::infinity();
  for (const auto& z : rep.eigenvalues) rep.max_real_eigenvalue = std::max(rep.max_real_eigenvalue, z.real());

  // Work with A/||A|| so the coefficients are O(1); signs of the Hurwitz
  // minors are invariant under positive rescaling.
  const double scale = norm > 0.0 ? norm : 1.0;
  const auto coeffs = detail::poly_from_roots(rep.eigenvalues, scale);
  const auto minors = detail::hurwitz_minors(coeffs);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    rep.char_poly_coeffs.push_back(static_cast<double>(coeffs[k] * std::pow(static_cast<long double>(scale), k)));
  }
  for (auto m : minors) rep.hurwitz_determinants.push_back(static_cast<double>(m));
  rep.routh_hurwitz_pass = std::all_of(coeffs.begin(), coeffs.end(), [](long double c) { return c > 0.0L; }) &&
                           std::all_of(minors.begin(), minors.end(), [](long double m) { return m > 0.0L; });

  rep.stable = rep.max_real_eigenvalue < -kStabilityTolerance * norm;
  if (rep.stable != rep.routh_hurwitz_pass && std::abs(rep.max_real_eigenvalue) > kVerdictMargin * norm) {
    throw Error(Errc::InconsistentVerdicts,
                "spectral and Routh-Hurwitz verdicts disagree (max Re lambda = " +
                    std::to_string(rep.max_real_eigenvalue) + ")");
  }
  return rep;
}

inline StabilityReport stability(const model::DriftMatrix& a) { return stability(Eigen::MatrixXd(a.entries)); }

/// ||A V + V A^T + D||_F / ||D||_F.
inline double lyapunov_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& v, const Eigen::MatrixXd& d) {
  const double dn = d.norm();
  const double r = (a * v + v * a.transpose() + d).norm();
  return dn > 0.0 ? r / dn : r;
}

/// Stationary covariance solving A V + V A^T + D = 0 via the vectorized
/// (I (x) A + A (x) I) vec(V) = -vec(D) system. Full pivoting: refinement on
/// a partial-pivot factorization stalls near 1e-10 when kappa_m << omega_m.
inline gaussian::CovarianceMatrix steady_state_covariance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& d) {
  if (a.rows() != a.cols() || d.rows() != a.rows() || d.cols() != a.cols() || a.rows() % 2 != 0) {
    throw Error(Errc::DimensionMismatch, "A and D must be square of equal even dimension");
  }
  if (!stability(a).stable) throw Error(Errc::UnstableSystem, "drift matrix is not Hurwitz-stable");

  const auto n = a.rows();
  const double s = a.norm();
  const Eigen::MatrixXd as = a / s;
  const Eigen::MatrixXd ds = d / s;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      op.block(i * n, j * n, n, n) += id(i, j) * as + as(i, j) * id;
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(ds.data(), n * n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(op);
  if (!(lu.rcond() > 1e-15)) throw Error(Errc::SingularSystem, "Lyapunov operator is numerically singular");
  Eigen::VectorXd x = lu.solve(rhs);
  for (int it = 0; it < 2; ++it) x += lu.solve(rhs - op * x);

  Eigen::MatrixXd v = Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
  v = (0.5 * (v + v.transpose())).eval();
  if (!(lyapunov_residual(a, v, d) <= kLyapunovResidual)) {
    throw Error(Errc::SingularSystem, "Lyapunov residual above tolerance; operator ill-conditioned");
  }
  return gaussian::CovarianceMatrix(v);
}

inline gaussian::CovarianceMatrix steady_state_covariance(const model::DriftMatrix& a, const model::DiffusionMatrix& d) {
  auto v = steady_state_covariance(Eigen::MatrixXd(a.entries), Eigen::MatrixXd(d.entries));
  return gaussian::CovarianceMatrix(v.matrix(), {"F", "S", "M"});
}

}  // namespace trimode::dynamics
