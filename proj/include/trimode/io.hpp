#pragma once

// Configuration parsing and JSON / CSV serialization of the pipeline records.
// All frequencies in config files are in Hz and multiplied by 2 pi on load;
// every emitted record carries the resolved rad/s values.

#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "trimode/dynamics.hpp"
#include "trimode/entanglement.hpp"
#include "trimode/error.hpp"
#include "trimode/model.hpp"
#include "trimode/sweep.hpp"

namespace trimode::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// numbers

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw Error(Errc::InvalidConfig, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

namespace detail {

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

inline json complex_json(std::complex<double> z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline std::complex<double> complex_from(const json& j) { return {j.at("re").get<double>(), j.at("im").get<double>()}; }

inline double number(const json& j, std::string_view key) {
  const auto& v = j.at(std::string(key));
  if (!v.is_number()) throw Error(Errc::InvalidConfig, "'" + std::string(key) + "' must be a number");
  return v.get<double>();
}

inline int integer(const json& j, std::string_view key) {
  const auto& v = j.at(std::string(key));
  if (!v.is_number_integer()) throw Error(Errc::InvalidConfig, "'" + std::string(key) + "' must be an integer");
  return v.get<int>();
}

inline std::string text(const json& j, std::string_view key) {
  const auto& v = j.at(std::string(key));
  if (!v.is_string()) throw Error(Errc::InvalidConfig, "'" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, std::string_view where) {
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) {
      throw Error(Errc::InvalidConfig, "unknown key '" + k + "' in " + std::string(where));
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// config

struct Config {
  model::SystemParams params;
  model::MeanFieldMode mode = model::MeanFieldMode::paper;
  double detector_bandwidth_hz = 500e6;
  std::optional<sweep::SweepGrid> sweep;
  bool chi_in_rad_s = false;
};

/// Keys: omega_m_hz, kappa_m_hz | Q_m (exactly one), kappa_F_hz, kappa_S_hz,
/// g_F_hz, chi_hz, chi_units ("hz" | "rad_s"), Delta_hz, T_env, lambda_F,
/// P_in, detector_bandwidth_hz, mode, and an optional "sweep" block with
/// y_axis, delta_min_hz, delta_max_hz, n_x, y_min, y_max, n_y.
/// Missing physical keys fall back to the default working point.
inline Config parse_config(const json& j) {
  using namespace detail;
  using model::constants::two_pi;
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");
  reject_unknown(j,
                 {"omega_m_hz", "kappa_m_hz", "Q_m", "kappa_F_hz", "kappa_S_hz", "g_F_hz", "chi_hz", "chi_units",
                  "Delta_hz", "T_env", "lambda_F", "P_in", "detector_bandwidth_hz", "mode", "sweep"},
                 "config");
  const bool has_kappa = j.contains("kappa_m_hz"), has_q = j.contains("Q_m");
  if (has_kappa == has_q) throw Error(Errc::InvalidConfig, "exactly one of kappa_m_hz and Q_m must be given");

  Config c;
  auto& p = c.params;
  if (j.contains("omega_m_hz")) p.omega_m = two_pi * number(j, "omega_m_hz");
  if (has_kappa) {
    p.kappa_m = two_pi * number(j, "kappa_m_hz");
  } else {
    const double q = number(j, "Q_m");
    if (!(q > 0.0) || !std::isfinite(q)) throw Error(Errc::InvalidConfig, "Q_m must be positive");
    p.set_quality_factor(q);
  }
  if (j.contains("kappa_F_hz")) p.kappa_F = two_pi * number(j, "kappa_F_hz");
  if (j.contains("kappa_S_hz")) p.kappa_S = two_pi * number(j, "kappa_S_hz");
  if (j.contains("g_F_hz")) p.g_F = two_pi * number(j, "g_F_hz");
  if (j.contains("chi_units")) {
    const auto u = text(j, "chi_units");
    if (u != "hz" && u != "rad_s") throw Error(Errc::InvalidConfig, "chi_units must be 'hz' or 'rad_s'");
    c.chi_in_rad_s = u == "rad_s";
  }
  if (j.contains("chi_hz")) p.chi = (c.chi_in_rad_s ? 1.0 : two_pi) * number(j, "chi_hz");
  if (j.contains("Delta_hz")) p.Delta = two_pi * number(j, "Delta_hz");
  if (j.contains("T_env")) p.T_env = number(j, "T_env");
  if (j.contains("lambda_F")) p.lambda_F = number(j, "lambda_F");
  if (j.contains("P_in")) p.P_in = number(j, "P_in");
  if (j.contains("detector_bandwidth_hz")) {
    c.detector_bandwidth_hz = number(j, "detector_bandwidth_hz");
    if (!(c.detector_bandwidth_hz > 0.0)) throw Error(Errc::InvalidConfig, "detector_bandwidth_hz must be positive");
  }
  if (j.contains("mode")) c.mode = model::parse_mode(text(j, "mode"));
  try {
    p.validate();
  } catch (const Error& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }

  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    if (!s.is_object()) throw Error(Errc::InvalidConfig, "sweep must be an object");
    reject_unknown(s, {"y_axis", "delta_min_hz", "delta_max_hz", "n_x", "y_min", "y_max", "n_y"}, "sweep");
    const auto axis = s.contains("y_axis") ? sweep::parse_y_axis(text(s, "y_axis")) : sweep::YAxis::P_in;
    auto g = sweep::SweepGrid::defaults(p, axis);
    g.mode = c.mode;
    if (s.contains("delta_min_hz")) g.delta_min = two_pi * number(s, "delta_min_hz");
    if (s.contains("delta_max_hz")) g.delta_max = two_pi * number(s, "delta_max_hz");
    if (s.contains("n_x")) g.n_x = integer(s, "n_x");
    if (s.contains("y_min")) g.y_min = number(s, "y_min");
    if (s.contains("y_max")) g.y_max = number(s, "y_max");
    if (s.contains("n_y")) g.n_y = integer(s, "n_y");
    g.validate();
    c.sweep = g;
  }
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
}

// ---------------------------------------------------------------------------
// records

inline json to_json(const model::SystemParams& p) {
  using model::constants::two_pi;
  return {
      {"omega_m", p.omega_m},
      {"kappa_m", p.kappa_m},
      {"kappa_F", p.kappa_F},
      {"kappa_S", p.kappa_S},
      {"g_F", p.g_F},
      {"g_S", p.g_S()},
      {"chi", p.chi},
      {"Delta", p.Delta},
      {"T_env", p.T_env},
      {"lambda_F", p.lambda_F},
      {"P_in", p.P_in},
      {"Q_m", p.Q_m()},
      {"n_th", model::thermal_occupation(p)},
      {"units", "angular frequencies in rad/s (config Hz values multiplied by 2*pi)"},
      {"two_pi", two_pi},
  };
}

inline model::SystemParams params_from_json(const json& j) {
  model::SystemParams p;
  p.omega_m = j.at("omega_m").get<double>();
  p.kappa_m = j.at("kappa_m").get<double>();
  p.kappa_F = j.at("kappa_F").get<double>();
  p.kappa_S = j.at("kappa_S").get<double>();
  p.g_F = j.at("g_F").get<double>();
  p.chi = j.at("chi").get<double>();
  p.Delta = j.at("Delta").get<double>();
  p.T_env = j.at("T_env").get<double>();
  p.lambda_F = j.at("lambda_F").get<double>();
  p.P_in = j.at("P_in").get<double>();
  return p;
}

inline json to_json(const model::MeanFields& m) {
  return {
      {"mode", std::string(model::to_string(m.mode))},
      {"u", m.u},
      {"a_F", detail::complex_json(m.a_F)},
      {"a_S", detail::complex_json(m.a_S)},
      {"phi", m.phi},
      {"x_bar", m.x_bar},
      {"p_bar", m.p_bar},
      {"alpha", detail::optional_number(m.alpha)},
      {"beta", m.beta},
      {"detuning_F", m.detuning_F},
      {"detuning_S", m.detuning_S},
      {"roots", m.roots},
  };
}

inline model::MeanFields mean_fields_from_json(const json& j) {
  model::MeanFields m;
  m.mode = model::parse_mode(j.at("mode").get<std::string>());
  m.u = j.at("u").get<double>();
  m.a_F = detail::complex_from(j.at("a_F"));
  m.a_S = detail::complex_from(j.at("a_S"));
  m.phi = j.at("phi").get<double>();
  m.x_bar = j.at("x_bar").get<double>();
  m.p_bar = j.at("p_bar").get<double>();
  m.alpha = detail::read_optional(j, "alpha");
  m.beta = j.at("beta").get<double>();
  m.detuning_F = j.at("detuning_F").get<double>();
  m.detuning_S = j.at("detuning_S").get<double>();
  m.roots = j.at("roots").get<std::vector<double>>();
  return m;
}

inline json to_json(const dynamics::StabilityReport& r) {
  json ev = json::array();
  for (const auto& z : r.eigenvalues) ev.push_back(detail::complex_json(z));
  return {
      {"stable", r.stable},
      {"max_real_eigenvalue", r.max_real_eigenvalue},
      {"routh_hurwitz_pass", r.routh_hurwitz_pass},
      {"char_poly_coeffs", r.char_poly_coeffs},
      {"hurwitz_determinants", r.hurwitz_determinants},
      {"eigenvalues", ev},
  };
}

inline dynamics::StabilityReport stability_from_json(const json& j) {
  dynamics::StabilityReport r;
  r.stable = j.at("stable").get<bool>();
  r.max_real_eigenvalue = j.at("max_real_eigenvalue").get<double>();
  r.routh_hurwitz_pass = j.at("routh_hurwitz_pass").get<bool>();
  r.char_poly_coeffs = j.at("char_poly_coeffs").get<std::vector<double>>();
  r.hurwitz_determinants = j.at("hurwitz_determinants").get<std::vector<double>>();
  for (const auto& z : j.at("eigenvalues")) r.eigenvalues.push_back(detail::complex_from(z));
  return r;
}

inline json to_json(const entanglement::EntanglementReport& r) {
  return {
      {"E_SM", r.E_SM},
      {"E_FM", r.E_FM},
      {"E_FS", r.E_FS},
      {"E_F_SM", r.E_F_SM},
      {"E_S_FM", r.E_S_FM},
      {"E_M_FS", r.E_M_FS},
      {"E_tri", r.E_tri},
      {"E_tri_construction", entanglement::kTripartiteConstruction},
      {"giedke_class", r.giedke_class.label()},
      {"stable", r.stable},
  };
}

inline entanglement::EntanglementReport entanglement_from_json(const json& j) {
  entanglement::EntanglementReport r;
  r.E_SM = j.at("E_SM").get<double>();
  r.E_FM = j.at("E_FM").get<double>();
  r.E_FS = j.at("E_FS").get<double>();
  r.E_F_SM = j.at("E_F_SM").get<double>();
  r.E_S_FM = j.at("E_S_FM").get<double>();
  r.E_M_FS = j.at("E_M_FS").get<double>();
  r.E_tri = j.at("E_tri").get<double>();
  r.giedke_class = entanglement::parse_giedke_label(j.at("giedke_class").get<std::string>());
  r.stable = j.at("stable").get<bool>();
  return r;
}

inline json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto m = n ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != m) throw Error(Errc::DimensionMismatch, "ragged matrix");
    for (Eigen::Index k = 0; k < m; ++k) out(i, k) = j.at(i).at(k).get<double>();
  }
  return out;
}

inline json to_json(const sweep::SweepGrid& g) {
  return {
      {"x_axis", "Delta"},
      {"delta_min", g.delta_min},
      {"delta_max", g.delta_max},
      {"n_x", g.n_x},
      {"y_axis", std::string(sweep::to_string(g.y_axis))},
      {"y_spacing", g.y_axis == sweep::YAxis::P_in ? "log10" : "linear"},
      {"y_units", g.y_axis == sweep::YAxis::P_in ? "W" : "multiples of base chi"},
      {"y_min", g.y_min},
      {"y_max", g.y_max},
      {"n_y", g.n_y},
      {"mode", std::string(model::to_string(g.mode))},
      {"base_params", to_json(g.base)},
  };
}

inline sweep::SweepGrid grid_from_json(const json& j) {
  sweep::SweepGrid g;
  g.delta_min = j.at("delta_min").get<double>();
  g.delta_max = j.at("delta_max").get<double>();
  g.n_x = j.at("n_x").get<int>();
  g.y_axis = sweep::parse_y_axis(j.at("y_axis").get<std::string>());
  g.y_min = j.at("y_min").get<double>();
  g.y_max = j.at("y_max").get<double>();
  g.n_y = j.at("n_y").get<int>();
  g.mode = model::parse_mode(j.at("mode").get<std::string>());
  g.base = params_from_json(j.at("base_params"));
  return g;
}

// ---------------------------------------------------------------------------
// sweep CSV

inline constexpr std::string_view kCsvHeader =
    "delta_rad_s,y_value,stable,e_sm,e_fm,e_fs,e_f_sm,e_s_fm,e_m_fs,e_tri,u,n_roots";

inline void write_csv(std::ostream& os, const sweep::SweepResult& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  os << kCsvHeader << '\n';
  for (const auto& c : r.cells) {
    os << format_double(c.delta) << ',' << format_double(c.y) << ','
       << (c.stable ? (*c.stable ? "1" : "0") : "") << ',' << opt(c.E_SM) << ',' << opt(c.E_FM) << ','
       << opt(c.E_FS) << ',' << opt(c.E_F_SM) << ',' << opt(c.E_S_FM) << ',' << opt(c.E_M_FS) << ','
       << opt(c.E_tri) << ',' << format_double(c.u) << ',' << c.n_roots << '\n';
  }
}

/// Parses the CSV columns back into cells (diagnostic fields stay empty).
inline std::vector<sweep::SweepCell> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw Error(Errc::Io, "unexpected CSV header");
  std::vector<sweep::SweepCell> cells;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 12) throw Error(Errc::Io, "CSV row has " + std::to_string(f.size()) + " fields");
    auto opt = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return parse_double(s);
    };
    sweep::SweepCell c;
    c.delta = parse_double(f[0]);
    c.y = parse_double(f[1]);
    if (!f[2].empty()) c.stable = f[2] == "1";
    c.E_SM = opt(f[3]);
    c.E_FM = opt(f[4]);
    c.E_FS = opt(f[5]);
    c.E_F_SM = opt(f[6]);
    c.E_S_FM = opt(f[7]);
    c.E_M_FS = opt(f[8]);
    c.E_tri = opt(f[9]);
    c.u = parse_double(f[10]);
    c.n_roots = static_cast<int>(parse_double(f[11]));
    cells.push_back(c);
  }
  return cells;
}

/// Boundary polylines in physical coordinates (Delta in rad/s, y in axis units).
inline json boundaries_json(const sweep::SweepResult& r, const sweep::RegionMap& map) {
  json out = json::object();
  for (std::size_t f = 0; f < sweep::kFlagNames.size(); ++f) {
    json lines = json::array();
    for (const auto& line : map.boundaries[f]) {
      json pts = json::array();
      for (const auto& p : line) pts.push_back({r.grid.x_value(p.x), r.grid.y_value(p.y)});
      lines.push_back(std::move(pts));
    }
    std::size_t count = 0;
    for (auto v : map.flags[f]) count += v;
    out[std::string(sweep::kFlagNames[f])] = {{"cells_true", count}, {"polylines", std::move(lines)}};
  }
  return out;
}

}  // namespace trimode::io
