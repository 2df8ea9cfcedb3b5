#pragma once

// Entanglement structure of a three-mode (F, S, M) Gaussian state: the three
// two-mode reductions, the three one-versus-two-mode bipartitions, a scalar
// tripartite measure and the separability class certified by NPT.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "trimode/error.hpp"
#include "trimode/gaussian.hpp"

namespace trimode::entanglement {

enum class ModeLabel { F = 0, S = 1, M = 2 };

inline constexpr std::array<const char*, 3> kModeNames = {"F", "S", "M"};

enum class GiedkeKind {
  fully_inseparable,
  one_mode_biseparable,
  two_mode_biseparable,
  three_mode_biseparable,
  fully_separable_class,
};

/// `separable_cuts` lists the modes whose one-vs-two cut is PPT. When all
/// three cuts are PPT the NPT test cannot tell three-mode biseparable from
/// fully separable states, so `fully_separable_class` covers both.
struct GiedkeClass {
  GiedkeKind kind = GiedkeKind::fully_separable_class;
  std::vector<ModeLabel> separable_cuts;

  std::string label() const {
    auto names = [this] {
      std::string s;
      for (std::size_t i = 0; i < separable_cuts.size(); ++i) {
        if (i) s += ',';
        s += kModeNames[static_cast<std::size_t>(separable_cuts[i])];
      }
      return s;
    };
    switch (kind) {
      case GiedkeKind::fully_inseparable: return "fully_inseparable";
      case GiedkeKind::one_mode_biseparable: return "one_mode_biseparable(" + names() + ")";
      case GiedkeKind::two_mode_biseparable: return "two_mode_biseparable(" + names() + ")";
      case GiedkeKind::three_mode_biseparable: return "three_mode_biseparable";
      case GiedkeKind::fully_separable_class: return "fully_separable_class";
    }
    return "";
  }

  friend bool operator==(const GiedkeClass&, const GiedkeClass&) = default;
};

inline GiedkeClass parse_giedke_label(const std::string& s) {
  GiedkeClass g;
  auto parse_modes = [&](std::size_t open) {
    for (std::size_t i = open + 1; i < s.size() && s[i] != ')'; ++i) {
      if (s[i] == 'F') g.separable_cuts.push_back(ModeLabel::F);
      if (s[i] == 'S') g.separable_cuts.push_back(ModeLabel::S);
      if (s[i] == 'M') g.separable_cuts.push_back(ModeLabel::M);
    }
  };
  if (s == "fully_inseparable") {
    g.kind = GiedkeKind::fully_inseparable;
  } else if (s.rfind("one_mode_biseparable(", 0) == 0) {
    g.kind = GiedkeKind::one_mode_biseparable;
    parse_modes(s.find('('));
  } else if (s.rfind("two_mode_biseparable(", 0) == 0) {
    g.kind = GiedkeKind::two_mode_biseparable;
    parse_modes(s.find('('));
  } else if (s == "three_mode_biseparable") {
    g.kind = GiedkeKind::three_mode_biseparable;
  } else if (s == "fully_separable_class") {
    g.kind = GiedkeKind::fully_separable_class;
    g.separable_cuts = {ModeLabel::F, ModeLabel::S, ModeLabel::M};
  } else {
    throw Error(Errc::InvalidConfig, "unknown separability class '" + s + "'");
  }
  return g;
}

struct EntanglementReport {
  // reductions
  double E_SM = 0.0;
  double E_FM = 0.0;
  double E_FS = 0.0;
  // one-vs-two bipartitions
  double E_F_SM = 0.0;
  double E_S_FM = 0.0;
  double E_M_FS = 0.0;
  double E_tri = 0.0;
  GiedkeClass giedke_class;
  bool stable = true;

  friend bool operator==(const EntanglementReport&, const EntanglementReport&) = default;
};

inline constexpr const char* kTripartiteConstruction =
    "E_tri = ln(1 + 2 (N_F N_S N_M)^(1/3)), N_i = (exp(E_i|jk) - 1)/2";

/// ln(1 + 2 (N_1 N_2 N_3)^(1/3)) from the three bipartition log-negativities.
inline double tripartite_from_bipartitions(double e1, double e2, double e3) {
  const double n1 = std::expm1(e1) / 2.0, n2 = std::expm1(e2) / 2.0, n3 = std::expm1(e3) / 2.0;
  if (n1 <= 0.0 || n2 <= 0.0 || n3 <= 0.0) return 0.0;
  return std::log1p(2.0 * std::cbrt(n1 * n2 * n3));
}

namespace detail {
inline void require_three_modes(const gaussian::CovarianceMatrix& v) {
  if (v.n_modes() != 3) throw Error(Errc::DimensionMismatch, "expected a three-mode covariance matrix");
  if (!gaussian::is_physical(v)) throw Error(Errc::UnphysicalState, "covariance matrix violates uncertainty");
}
}  // namespace detail

inline double tripartite_log_negativity(const gaussian::CovarianceMatrix& v) {
  detail::require_three_modes(v);
  return tripartite_from_bipartitions(gaussian::log_negativity(v, {0}), gaussian::log_negativity(v, {1}),
                                      gaussian::log_negativity(v, {2}));
}

inline GiedkeClass classify(double e_f_sm, double e_s_fm, double e_m_fs) {
  GiedkeClass g;
  const std::array<double, 3> e = {e_f_sm, e_s_fm, e_m_fs};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(e[i] > 0.0)) g.separable_cuts.push_back(static_cast<ModeLabel>(i));
  }
  switch (g.separable_cuts.size()) {
    case 0: g.kind = GiedkeKind::fully_inseparable; break;
    case 1: g.kind = GiedkeKind::one_mode_biseparable; break;
    case 2: g.kind = GiedkeKind::two_mode_biseparable; break;
    default: g.kind = GiedkeKind::fully_separable_class; break;
  }
  return g;
}

inline EntanglementReport analyze(const gaussian::CovarianceMatrix& v) {
  detail::require_three_modes(v);
  EntanglementReport r;
  r.E_SM = gaussian::log_negativity(gaussian::reduce(v, {1, 2}), {0});
  r.E_FM = gaussian::log_negativity(gaussian::reduce(v, {0, 2}), {0});
  r.E_FS = gaussian::log_negativity(gaussian::reduce(v, {0, 1}), {0});
  r.E_F_SM = gaussian::log_negativity(v, {0});
  r.E_S_FM = gaussian::log_negativity(v, {1});
  r.E_M_FS = gaussian::log_negativity(v, {2});
  r.E_tri = tripartite_from_bipartitions(r.E_F_SM, r.E_S_FM, r.E_M_FS);
  r.giedke_class = classify(r.E_F_SM, r.E_S_FM, r.E_M_FS);
  return r;
}

}  // namespace trimode::entanglement
