#pragma once

// Two-dimensional parameter sweeps (detuning x input power or SHG rate) and
// region extraction for plotting.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "trimode/error.hpp"
#include "trimode/gaussian.hpp"
#include "trimode/model.hpp"
#include "trimode/pipeline.hpp"

namespace trimode::sweep {

enum class YAxis { P_in, chi };

constexpr std::string_view to_string(YAxis y) { return y == YAxis::P_in ? "P_in" : "chi"; }

inline YAxis parse_y_axis(std::string_view s) {
  if (s == "P_in") return YAxis::P_in;
  if (s == "chi") return YAxis::chi;
  throw Error(Errc::InvalidConfig, "y_axis must be 'P_in' or 'chi'");
}

/// Delta on the x axis (rad/s, linear). The y axis is either P_in in W
/// (log-spaced) or chi in multiples of base.chi (linear).
struct SweepGrid {
  double delta_min = 0.0;
  double delta_max = 0.0;
  int n_x = 201;
  YAxis y_axis = YAxis::P_in;
  double y_min = 1e-9;
  double y_max = 1e-1;
  int n_y = 201;
  model::SystemParams base;
  model::MeanFieldMode mode = model::MeanFieldMode::paper;

  static SweepGrid defaults(const model::SystemParams& base, YAxis axis = YAxis::P_in) {
    SweepGrid g;
    g.base = base;
    g.delta_min = -2.0 * base.omega_m;
    g.delta_max = 2.0 * base.omega_m;
    g.y_axis = axis;
    if (axis == YAxis::chi) {
      g.y_min = 0.0;
      g.y_max = 5.0;
    }
    return g;
  }

  void validate() const {
    if (n_x < 2 || n_y < 2) throw Error(Errc::InvalidConfig, "sweep needs at least 2 points per axis");
    if (!std::isfinite(delta_min) || !std::isfinite(delta_max) || !(delta_max > delta_min)) {
      throw Error(Errc::InvalidConfig, "Delta range must be finite with max > min");
    }
    if (!std::isfinite(y_min) || !std::isfinite(y_max) || !(y_max > y_min)) {
      throw Error(Errc::InvalidConfig, "y range must be finite with max > min");
    }
    if (y_axis == YAxis::P_in && !(y_min > 0.0)) throw Error(Errc::InvalidConfig, "log-spaced P_in must be > 0");
    if (y_axis == YAxis::chi && !(y_min >= 0.0)) throw Error(Errc::InvalidConfig, "chi multiples must be >= 0");
    base.validate();
  }

  std::size_t size() const { return static_cast<std::size_t>(n_x) * static_cast<std::size_t>(n_y); }

  /// Fractional indices are allowed (used for contour coordinates).
  double x_value(double i) const { return delta_min + (delta_max - delta_min) * i / (n_x - 1); }

  double y_value(double j) const {
    if (y_axis == YAxis::P_in) {
      const double lo = std::log10(y_min), hi = std::log10(y_max);
      return std::pow(10.0, lo + (hi - lo) * j / (n_y - 1));
    }
    return y_min + (y_max - y_min) * j / (n_y - 1);
  }

  model::SystemParams params_at(int i, int j) const {
    model::SystemParams p = base;
    p.Delta = x_value(i);
    if (y_axis == YAxis::P_in) {
      p.P_in = y_value(j);
    } else {
      p.chi = base.chi * y_value(j);
    }
    return p;
  }
};

struct SweepCell {
  double delta = 0.0;
  double y = 0.0;
  std::optional<bool> stable;  // empty when the pipeline failed before a verdict
  std::optional<double> E_SM, E_FM, E_FS, E_F_SM, E_S_FM, E_M_FS, E_tri;
  double u = 0.0;
  int n_roots = 0;
  // diagnostics, not part of the CSV
  std::optional<double> lyapunov_residual;
  std::optional<double> min_symplectic_eigenvalue;
  std::string error;
};

struct SweepResult {
  SweepGrid grid;
  std::vector<SweepCell> cells;  // row-major in y: index = j * n_x + i

  const SweepCell& at(int i, int j) const { return cells[static_cast<std::size_t>(j) * grid.n_x + i]; }
};

inline SweepCell evaluate_cell(const SweepGrid& grid, int i, int j) {
  SweepCell cell;
  cell.delta = grid.x_value(i);
  cell.y = grid.y_value(j);
  try {
    const auto params = grid.params_at(i, j);
    const auto fields = model::steady_state_mean_fields(params, grid.mode);
    cell.u = fields.u;
    cell.n_roots = static_cast<int>(fields.roots.size());
    const auto ev = evaluate_point(params, grid.mode);
    cell.stable = ev.stability.stable;
    if (ev.report) {
      const auto& r = *ev.report;
      cell.E_SM = r.E_SM;
      cell.E_FM = r.E_FM;
      cell.E_FS = r.E_FS;
      cell.E_F_SM = r.E_F_SM;
      cell.E_S_FM = r.E_S_FM;
      cell.E_M_FS = r.E_M_FS;
      cell.E_tri = r.E_tri;
      cell.lyapunov_residual = dynamics::lyapunov_residual(ev.drift.entries, ev.covariance->matrix(),
                                                           ev.diffusion.entries);
      cell.min_symplectic_eigenvalue = gaussian::symplectic_eigenvalues(*ev.covariance).front();
    }
  } catch (const Error& e) {
    cell.stable.reset();
    cell.error = e.what();
  }
  return cell;
}

/// Evaluates every cell independently on `workers` threads; output order is
/// the grid order regardless of scheduling.
inline SweepResult run_sweep(const SweepGrid& grid, int workers = 1) {
  grid.validate();
  if (workers < 1) throw Error(Errc::InvalidConfig, "workers must be >= 1");
  SweepResult res;
  res.grid = grid;
  res.cells.resize(grid.size());

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next.fetch_add(1); k < res.cells.size(); k = next.fetch_add(1)) {
      const int i = static_cast<int>(k % static_cast<std::size_t>(grid.n_x));
      const int j = static_cast<int>(k / static_cast<std::size_t>(grid.n_x));
      res.cells[k] = evaluate_cell(grid, i, j);
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::min<std::size_t>(workers, res.cells.size()));
  std::vector<std::jthread> pool;
  pool.reserve(n_threads - 1);
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  return res;
}

// ---------------------------------------------------------------------------
// Regions

inline constexpr std::array<std::string_view, 8> kFlagNames = {"stable", "e_sm",   "e_fm",   "e_fs",
                                                               "e_f_sm", "e_s_fm", "e_m_fs", "e_tri"};

struct Point {
  double x = 0.0;
  double y = 0.0;
};
using Polyline = std::vector<Point>;

struct RegionMap {
  int n_x = 0;
  int n_y = 0;
  /// flags[f][j * n_x + i] for each name in kFlagNames
  std::array<std::vector<std::uint8_t>, kFlagNames.size()> flags;
  /// Boundary polylines per flag in fractional grid-index coordinates.
  std::array<std::vector<Polyline>, kFlagNames.size()> boundaries;
};

namespace detail {

struct Segment {
  Point a, b;
};

/// Marching squares on a 0/1 field sampled at integer nodes, padded with zeros
/// so every contour closes. Segment endpoints sit on edge midpoints.
inline std::vector<Segment> marching_squares(const std::vector<std::uint8_t>& field, int nx, int ny) {
  auto at = [&](int i, int j) -> int {
    if (i < 0 || j < 0 || i >= nx || j >= ny) return 0;
    return field[static_cast<std::size_t>(j) * nx + i] ? 1 : 0;
  };
  std::vector<Segment> segs;
  for (int j = -1; j < ny; ++j) {
    for (int i = -1; i < nx; ++i) {
      const int idx = at(i, j) | (at(i + 1, j) << 1) | (at(i + 1, j + 1) << 2) | (at(i, j + 1) << 3);
      if (idx == 0 || idx == 15) continue;
      const Point bottom{i + 0.5, static_cast<double>(j)};
      const Point right{i + 1.0, j + 0.5};
      const Point top{i + 0.5, j + 1.0};
      const Point left{static_cast<double>(i), j + 0.5};
      switch (idx) {
        case 1: case 14: segs.push_back({left, bottom}); break;
        case 2: case 13: segs.push_back({bottom, right}); break;
        case 3: case 12: segs.push_back({left, right}); break;
        case 4: case 11: segs.push_back({right, top}); break;
        case 6: case 9: segs.push_back({bottom, top}); break;
        case 7: case 8: segs.push_back({left, top}); break;
        case 5:  // saddle: keep the two set corners apart
          segs.push_back({left, bottom});
          segs.push_back({right, top});
          break;
        case 10:
          segs.push_back({bottom, right});
          segs.push_back({top, left});
          break;
        default: break;
      }
    }
  }
  return segs;
}

inline std::vector<Polyline> join_segments(const std::vector<Segment>& segs) {
  // Endpoints are multiples of 0.5, so doubled coordinates are exact keys.
  using Key = std::pair<long long, long long>;
  auto key = [](const Point& p) { return Key{std::llround(2.0 * p.x), std::llround(2.0 * p.y)}; };
  std::multimap<Key, std::size_t> by_end;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    by_end.emplace(key(segs[s].a), s);
    by_end.emplace(key(segs[s].b), s);
  }
  std::vector<bool> used(segs.size(), false);
  auto take_next = [&](const Point& p) -> std::optional<std::size_t> {
    auto [lo, hi] = by_end.equal_range(key(p));
    for (auto it = lo; it != hi; ++it) {
      if (!used[it->second]) return it->second;
    }
    return std::nullopt;
  };

  std::vector<Polyline> lines;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (used[s]) continue;
    used[s] = true;
    Polyline line{segs[s].a, segs[s].b};
    while (auto n = take_next(line.back())) {
      used[*n] = true;
      const auto& sg = segs[*n];
      line.push_back(key(sg.a) == key(line.back()) ? sg.b : sg.a);
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace detail

inline RegionMap classify_regions(const SweepResult& result) {
  RegionMap map;
  map.n_x = result.grid.n_x;
  map.n_y = result.grid.n_y;
  for (auto& f : map.flags) f.assign(result.cells.size(), 0);
  auto positive = [](const std::optional<double>& v) -> std::uint8_t { return v && *v > 0.0 ? 1 : 0; };
  for (std::size_t k = 0; k < result.cells.size(); ++k) {
    const auto& c = result.cells[k];
    map.flags[0][k] = c.stable.value_or(false) ? 1 : 0;
    map.flags[1][k] = positive(c.E_SM);
    map.flags[2][k] = positive(c.E_FM);
    map.flags[3][k] = positive(c.E_FS);
    map.flags[4][k] = positive(c.E_F_SM);
    map.flags[5][k] = positive(c.E_S_FM);
    map.flags[6][k] = positive(c.E_M_FS);
    map.flags[7][k] = positive(c.E_tri);
  }
  for (std::size_t f = 0; f < map.flags.size(); ++f) {
    map.boundaries[f] = detail::join_segments(detail::marching_squares(map.flags[f], map.n_x, map.n_y));
  }
  return map;
}

}  // namespace trimode::sweep
