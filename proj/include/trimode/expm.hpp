#pragma once

// Matrix exponential by scaling and squaring with diagonal Pade approximants
// of degree 3, 5, 7, 9 or 13, chosen from the 1-norm (Higham 2005 thresholds).

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>

namespace trimode::linalg {

namespace detail {

inline double one_norm(const Eigen::MatrixXd& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

template <std::size_t N>
Eigen::MatrixXd pade_low(const Eigen::MatrixXd& a, const std::array<double, N>& b) {
  const auto n = a.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a2 = a * a;
  Eigen::MatrixXd power = id;
  Eigen::MatrixXd u_even = b[1] * id;
  Eigen::MatrixXd v = b[0] * id;
  for (std::size_t k = 2; k + 1 < N; k += 2) {
    power = power * a2;
    u_even += b[k + 1] * power;
    v += b[k] * power;
  }
  const Eigen::MatrixXd u = a * u_even;
  return (v - u).partialPivLu().solve(v + u);
}

inline Eigen::MatrixXd pade13(const Eigen::MatrixXd& a) {
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  const auto n = a.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a2 = a * a;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a4 * a2;
  const Eigen::MatrixXd u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Eigen::MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const double norm = detail::one_norm(a);
  if (norm <= 1.495585217958292e-2) return detail::pade_low(a, std::array<double, 4>{120, 60, 12, 1});
  if (norm <= 2.539398330063230e-1) {
    return detail::pade_low(a, std::array<double, 6>{30240, 15120, 3360, 420, 30, 1});
  }
  if (norm <= 9.504178996162932e-1) {
    return detail::pade_low(a, std::array<double, 8>{17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1});
  }
  if (norm <= 2.097847961257068) {
    return detail::pade_low(a, std::array<double, 10>{17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                                      30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0});
  }
  constexpr double theta13 = 5.371920351148152;
  const int s = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
  Eigen::MatrixXd r = detail::pade13(a / std::ldexp(1.0, s));
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

}  // namespace trimode::linalg
