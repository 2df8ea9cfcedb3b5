#pragma once

// Three-mode device model: fundamental (F) and second-harmonic (S) optical
// modes coupled by chi^(2), both radiation-pressure coupled to a mechanical
// mode (M). All rates are angular (rad/s); quadrature order is
// (x_F, p_F, x_S, p_S, x, p).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "trimode/error.hpp"

namespace trimode::model {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double k_B = 1.380649e-23;      // J/K
inline constexpr double c = 299792458.0;         // m/s
inline constexpr double two_pi = 2.0 * std::numbers::pi;
}  // namespace constants

using Mat6 = Eigen::Matrix<double, 6, 6>;

enum class MeanFieldMode {
  /// Pump amplitude from the empty-cavity solution (SHG back-action on the
  /// fundamental neglected), x_bar = p_bar = 0, bare detunings.
  paper,
  /// Smallest positive root of the full mean-field cubic, bare detunings.
  cubic,
  /// Full cubic with detunings shifted by the static mechanical displacement,
  /// solved self-consistently.
  self_consistent,
};

constexpr std::string_view to_string(MeanFieldMode m) {
  switch (m) {
    case MeanFieldMode::paper: return "paper";
    case MeanFieldMode::cubic: return "cubic";
    case MeanFieldMode::self_consistent: return "self_consistent";
  }
  return "paper";
}

inline MeanFieldMode parse_mode(std::string_view s) {
  if (s == "paper") return MeanFieldMode::paper;
  if (s == "cubic") return MeanFieldMode::cubic;
  if (s == "self_consistent") return MeanFieldMode::self_consistent;
  throw Error(Errc::InvalidConfig, "unknown mode '" + std::string(s) + "'");
}

struct SystemParams {
  double omega_m = constants::two_pi * 70e6;   // mechanical frequency
  double kappa_m = constants::two_pi * 5.9e3;  // mechanical amplitude decay
  double kappa_F = constants::two_pi * 7e6;
  double kappa_S = constants::two_pi * 7e6;
  double g_F = constants::two_pi * 1.2e3;  // g_S = 2 g_F
  double chi = constants::two_pi * 700.0;
  double Delta = -constants::two_pi * 70e6;  // drive detuning omega_F - omega_c
  double T_env = 0.8;                        // K
  double lambda_F = 1554e-9;                 // m
  double P_in = 1e-6;                        // W

  double g_S() const { return 2.0 * g_F; }
  double Q_m() const { return omega_m / (2.0 * kappa_m); }

  void set_quality_factor(double q) { kappa_m = omega_m / (2.0 * q); }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(Errc::InvalidParams, std::string(name) + " must be positive and finite");
      }
    };
    positive(omega_m, "omega_m");
    positive(kappa_m, "kappa_m");
    positive(kappa_F, "kappa_F");
    positive(kappa_S, "kappa_S");
    positive(lambda_F, "lambda_F");
    if (!(g_F >= 0.0) || !std::isfinite(g_F)) throw Error(Errc::InvalidParams, "g_F must be >= 0");
    if (!(chi >= 0.0) || !std::isfinite(chi)) throw Error(Errc::InvalidParams, "chi must be >= 0");
    if (!std::isfinite(Delta)) throw Error(Errc::InvalidParams, "Delta must be finite");
    if (!(T_env >= 0.0) || !std::isfinite(T_env)) throw Error(Errc::InvalidParams, "T_env must be >= 0");
    if (!(P_in >= 0.0) || !std::isfinite(P_in)) throw Error(Errc::InvalidParams, "P_in must be >= 0");
  }

  /// High-Q reference working point: Q_m = 597000, Delta = -omega_m, 0.27 W.
  static SystemParams high_q_reference() {
    SystemParams p;
    p.set_quality_factor(597000.0);
    p.Delta = -p.omega_m;
    p.P_in = 0.27;
    return p;
  }
};

inline double thermal_occupation(const SystemParams& p) {
  return constants::k_B * p.T_env / (constants::hbar * p.omega_m);
}

/// tau_d = 1/(kappa_m n_th), seconds.
inline double decoherence_time(const SystemParams& p) {
  const double n = thermal_occupation(p);
  if (!(n > 0.0)) throw Error(Errc::ZeroTemperature, "decoherence time is unbounded at T_env = 0");
  return 1.0 / (p.kappa_m * n);
}

/// Drive amplitude sqrt(P / (hbar omega_c)) in s^(-1/2).
inline double input_amplitude(const SystemParams& p) {
  const double omega_c = constants::two_pi * constants::c / p.lambda_F;
  return std::sqrt(p.P_in / (constants::hbar * omega_c));
}

struct MeanFields {
  MeanFieldMode mode = MeanFieldMode::paper;
  double u = 0.0;  // |a_F|^2 on the selected branch
  std::complex<double> a_F{};  // real in the rotated gauge
  std::complex<double> a_S{};
  double phi = 0.0;  // phase of a_F before the gauge rotation
  double x_bar = 0.0;
  double p_bar = 0.0;
  std::optional<double> alpha;  // g_F/(sqrt(2) chi); absent when chi = 0
  double beta = 0.0;            // chi |a_F|, rad/s
  double detuning_F = 0.0;      // effective detunings entering the drift matrix
  double detuning_S = 0.0;
  std::vector<double> roots;  // all positive roots of the solved mean-field equation
};

namespace detail {

struct CubicTerms {
  std::complex<double> k;  // 2 chi^2 / (i Delta_S - kappa_S)
  std::complex<double> z;  // i Delta_F - kappa_F
};

inline CubicTerms cubic_terms(const SystemParams& p, double detuning_F, double detuning_S) {
  using namespace std::complex_literals;
  return {2.0 * p.chi * p.chi / (1i * detuning_S - p.kappa_S), 1i * detuning_F - p.kappa_F};
}

/// Real roots of a t^3 + b t^2 + c t + d, polished by Newton steps.
inline std::vector<double> real_cubic_roots(double a, double b, double c, double d) {
  std::vector<double> roots;
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
  if (std::abs(a) <= 1e-14 * scale) {
    if (std::abs(b) <= 1e-14 * scale) {
      if (c != 0.0) roots.push_back(-d / c);
    } else {
      const double disc = c * c - 4.0 * b * d;
      if (disc >= 0.0) {
        const double q = -0.5 * (c + std::copysign(std::sqrt(disc), c));
        if (q != 0.0) roots.push_back(d / q);
        roots.push_back(q / b);
      }
    }
  } else {
    const double bn = b / a, cn = c / a, dn = d / a;
    const double p = cn - bn * bn / 3.0;
    const double q = 2.0 * bn * bn * bn / 27.0 - bn * cn / 3.0 + dn;
    const double disc = q * q / 4.0 + p * p * p / 27.0;
    const double shift = -bn / 3.0;
    if (disc > 0.0) {
      const double sq = std::sqrt(disc);
      roots.push_back(std::cbrt(-q / 2.0 + sq) + std::cbrt(-q / 2.0 - sq) + shift);
    } else {
      const double r = std::sqrt(std::max(0.0, -p / 3.0));
      const double arg = r > 0.0 ? std::clamp(-q / (2.0 * r * r * r), -1.0, 1.0) : 0.0;
      const double theta = std::acos(arg);
      for (int j = 0; j < 3; ++j) {
        roots.push_back(2.0 * r * std::cos((theta - 2.0 * std::numbers::pi * j) / 3.0) + shift);
      }
    }
  }
  for (double& t : roots) {
    for (int it = 0; it < 4; ++it) {
      const long double tl = t;
      const long double f = ((a * tl + b) * tl + c) * tl + d;
      const long double df = (3.0L * a * tl + 2.0L * b) * tl + c;
      if (df == 0.0L) break;
      t = static_cast<double>(tl - f / df);
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Bisection on a bracketing interval [lo, hi] with f(lo) < 0 < f(hi) (or reverse).
template <class F>
double bisect(F&& f, double lo, double hi, double f_lo) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if ((fm < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Positive roots of f on [lo, hi] found by a log-spaced sign-change scan.
template <class F>
std::vector<double> scan_positive_roots(F&& f, double lo, double hi, int points_per_decade) {
  std::vector<double> roots;
  const int n = std::max(2, static_cast<int>(std::ceil(std::log10(hi / lo) * points_per_decade)));
  double u_prev = lo;
  double f_prev = f(lo);
  for (int i = 1; i <= n; ++i) {
    const double u = lo * std::pow(hi / lo, static_cast<double>(i) / n);
    const double fu = f(u);
    if (fu == 0.0) {
      roots.push_back(u);
    } else if ((fu < 0.0) != (f_prev < 0.0) && f_prev != 0.0) {
      roots.push_back(bisect(f, u_prev, u, f_prev));
    }
    u_prev = u;
    f_prev = fu;
  }
  return roots;
}

/// Static displacement x_bar solving x = (g_F u + g_S |a_S(x)|^2)/omega_m.
inline double static_displacement(const SystemParams& p, double u) {
  const double lo = p.g_F * u / p.omega_m;
  const double hi = lo + p.g_S() * p.chi * p.chi * u * u / (p.kappa_S * p.kappa_S * p.omega_m);
  auto h = [&](double x) {
    const double ds = 2.0 * p.Delta + p.g_S() * x;
    const double as2 = p.chi * p.chi * u * u / (ds * ds + p.kappa_S * p.kappa_S);
    return (p.g_F * u + p.g_S() * as2) / p.omega_m - x;
  };
  // Fixed-point iteration converges fast while g_S |a_S|^2 << g_F u.
  double x = lo;
  for (int it = 0; it < 50; ++it) {
    const double next = x + h(x);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(next))) return next;
    x = next;
  }
  if (hi <= lo) return lo;
  return bisect(h, lo, hi, h(lo));
}

}  // namespace detail

/// Relative residual of the mean-field amplitude equation at |a_F|^2 = u for
/// the given effective detunings; `neglect_cubic` drops the SHG back-action term.
inline double mean_field_residual(const SystemParams& p, double u, double detuning_F, double detuning_S,
                                  bool neglect_cubic = false) {
  const auto t = detail::cubic_terms(p, detuning_F, detuning_S);
  const std::complex<double> k = neglect_cubic ? std::complex<double>{} : t.k;
  const double rhs = std::sqrt(2.0 * p.kappa_F) * input_amplitude(p);
  const double lhs = std::abs(k * u + t.z) * std::sqrt(u);
  if (rhs == 0.0) return lhs;
  return std::abs(lhs - rhs) / rhs;
}

/// Positive roots u = |a_F|^2 of |k u + z|^2 u = 2 kappa_F a_in^2 with bare detunings.
inline std::vector<double> mean_field_cubic_roots(const SystemParams& p) {
  const double a_in = input_amplitude(p);
  if (a_in == 0.0) return {};
  const auto t = detail::cubic_terms(p, p.Delta, 2.0 * p.Delta);
  const double rhs = 2.0 * p.kappa_F * a_in * a_in;
  const double z2 = std::norm(t.z);
  const double u0 = rhs / z2;
  // Normalized by u = u0 s: A s^3 + B s^2 + s - 1 = 0.
  const double a = std::norm(t.k) * u0 * u0 / z2;
  const double b = 2.0 * (t.k * std::conj(t.z)).real() * u0 / z2;
  std::vector<double> roots;
  for (double s : detail::real_cubic_roots(a, b, 1.0, -1.0)) {
    if (s > 0.0 && std::isfinite(s)) roots.push_back(s * u0);
  }
  const bool ok = !roots.empty() && std::all_of(roots.begin(), roots.end(), [&](double u) {
    return mean_field_residual(p, u, p.Delta, 2.0 * p.Delta) < 1e-9;
  });
  if (!ok) {
    auto f = [&](double u) { return std::norm(t.k * u + t.z) * u - rhs; };
    roots = detail::scan_positive_roots(f, u0 * 1e-6, u0 * 1e6, 400);
  }
  return roots;
}

namespace detail {

inline std::vector<double> self_consistent_roots(const SystemParams& p) {
  const double a_in = input_amplitude(p);
  if (a_in == 0.0) return {};
  const double rhs = 2.0 * p.kappa_F * a_in * a_in;
  auto f = [&](double u) {
    const double x = static_displacement(p, u);
    const auto t = cubic_terms(p, p.Delta + p.g_F * x, 2.0 * p.Delta + p.g_S() * x);
    return std::norm(t.k * u + t.z) * u - rhs;
  };
  const double u0 = rhs / (p.Delta * p.Delta + p.kappa_F * p.kappa_F);
  double hi = u0 * 1e3;
  for (int it = 0; it < 60 && f(hi) <= 0.0; ++it) hi *= 4.0;
  return scan_positive_roots(f, u0 * 1e-6, hi, 60);
}

}  // namespace detail

inline MeanFields steady_state_mean_fields(const SystemParams& p, MeanFieldMode mode = MeanFieldMode::paper) {
  p.validate();
  MeanFields mf;
  mf.mode = mode;
  mf.detuning_F = p.Delta;
  mf.detuning_S = 2.0 * p.Delta;
  if (p.chi > 0.0) mf.alpha = p.g_F / (std::numbers::sqrt2 * p.chi);

  const double a_in = input_amplitude(p);
  if (a_in == 0.0) return mf;

  switch (mode) {
    case MeanFieldMode::paper:
      mf.roots = mean_field_cubic_roots(p);
      mf.u = 2.0 * p.kappa_F * a_in * a_in / (p.Delta * p.Delta + p.kappa_F * p.kappa_F);
      break;
    case MeanFieldMode::cubic:
      mf.roots = mean_field_cubic_roots(p);
      if (mf.roots.empty()) throw Error(Errc::NoPositiveRoot, "mean-field cubic has no positive root");
      mf.u = mf.roots.front();
      break;
    case MeanFieldMode::self_consistent:
      mf.roots = detail::self_consistent_roots(p);
      if (mf.roots.empty()) throw Error(Errc::NoPositiveRoot, "self-consistent mean field has no positive root");
      mf.u = mf.roots.front();
      mf.x_bar = detail::static_displacement(p, mf.u);
      mf.detuning_F = p.Delta + p.g_F * mf.x_bar;
      mf.detuning_S = 2.0 * p.Delta + p.g_S() * mf.x_bar;
      break;
  }

  using namespace std::complex_literals;
  const auto t = detail::cubic_terms(p, mf.detuning_F, mf.detuning_S);
  const std::complex<double> k = mode == MeanFieldMode::paper ? std::complex<double>{} : t.k;
  mf.phi = -std::arg(k * mf.u + t.z);
  mf.a_F = std::sqrt(mf.u);
  mf.a_S = p.chi * mf.u / (1i * mf.detuning_S - p.kappa_S);
  mf.beta = p.chi * std::sqrt(mf.u);
  return mf;
}

/// Residual of the equation `fields.mode` actually solves, at the selected branch.
inline double mean_field_residual(const SystemParams& p, const MeanFields& mf) {
  return mean_field_residual(p, mf.u, mf.detuning_F, mf.detuning_S, mf.mode == MeanFieldMode::paper);
}

/// Linearized drift matrix (rad/s).
struct DriftMatrix {
  Mat6 entries = Mat6::Zero();
  double operator()(int i, int j) const { return entries(i, j); }
};

/// Symmetrized input-noise matrix (rad/s), diagonal.
struct DiffusionMatrix {
  Mat6 entries = Mat6::Zero();
  double operator()(int i, int j) const { return entries(i, j); }
};

/// Drift matrix from the complex mean amplitudes (a_j = a_j^r + i a_j^i).
inline DriftMatrix drift_matrix(const SystemParams& p, const MeanFields& mf) {
  if (std::abs(mf.a_F.imag()) > 1e-12 * std::max(1.0, std::abs(mf.a_F))) {
    throw Error(Errc::GaugeViolation, "a_F must be real in the rotated gauge");
  }
  const double fr = mf.a_F.real(), fi = mf.a_F.imag();
  const double sr = mf.a_S.real(), si = mf.a_S.imag();
  const double chi2 = 2.0 * p.chi;
  const double gf = std::numbers::sqrt2 * p.g_F;
  const double gs = std::numbers::sqrt2 * p.g_S();
  const double dF = mf.detuning_F, dS = mf.detuning_S;

  DriftMatrix a;
  a.entries << -p.kappa_F + chi2 * sr, -dF + chi2 * si, chi2 * fr, chi2 * fi, -gf * fi, 0.0,
      dF + chi2 * si, -p.kappa_F - chi2 * sr, -chi2 * fi, chi2 * fr, gf * fr, 0.0,
      -chi2 * fr, chi2 * fi, -p.kappa_S, -dS, -gs * si, 0.0,
      -chi2 * fi, -chi2 * fr, dS, -p.kappa_S, gs * sr, 0.0,
      0.0, 0.0, 0.0, 0.0, 0.0, p.omega_m,
      gf * fr, gf * fi, gs * sr, gs * si, -p.omega_m, -2.0 * p.kappa_m;
  return a;
}

/// The same drift matrix written in terms of alpha = g_F/(sqrt(2) chi) and
/// beta = chi a_F (a_F real, g_S = 2 g_F). Needs chi > 0.
inline DriftMatrix drift_matrix_rescaled(const SystemParams& p, const MeanFields& mf) {
  if (!mf.alpha) throw Error(Errc::InvalidParams, "rescaled drift matrix needs chi > 0");
  const double al = *mf.alpha, be = mf.beta, b2 = be * be;
  const double dF = mf.detuning_F, dS = mf.detuning_S;
  const double q = dS * dS + p.kappa_S * p.kappa_S;
  const double ks = p.kappa_S;

  DriftMatrix a;
  a.entries << -p.kappa_F - 2.0 * ks / q * b2, -dF - 2.0 * dS / q * b2, 2.0 * be, 0.0, 0.0, 0.0,
      dF - 2.0 * dS / q * b2, -p.kappa_F + 2.0 * ks / q * b2, 0.0, 2.0 * be, 2.0 * al * be, 0.0,
      -2.0 * be, 0.0, -ks, -dS, 4.0 * dS / q * al * b2, 0.0,
      0.0, -2.0 * be, dS, -ks, -4.0 * ks / q * al * b2, 0.0,
      0.0, 0.0, 0.0, 0.0, 0.0, p.omega_m,
      2.0 * al * be, 0.0, -4.0 * ks / q * al * b2, -4.0 * dS / q * al * b2, -p.omega_m, -2.0 * p.kappa_m;
  return a;
}

/// Vacuum optical inputs contribute kappa per quadrature; the mechanical bath
/// 2 kappa_m (2 n_th + 1) on the momentum.
inline DiffusionMatrix diffusion_matrix(const SystemParams& p) {
  DiffusionMatrix d;
  d.entries.diagonal() << p.kappa_F, p.kappa_F, p.kappa_S, p.kappa_S, 0.0,
      2.0 * p.kappa_m * (2.0 * thermal_occupation(p) + 1.0);
  return d;
}

}  // namespace trimode::model
