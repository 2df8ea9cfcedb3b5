#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "trimode/sweep.hpp"

using namespace trimode;
using sweep::Point;
using sweep::Polyline;
using sweep::SweepGrid;
using sweep::YAxis;

namespace {

SweepGrid small_grid(double q, int n) {
  auto base = model::SystemParams::high_q_reference();
  base.set_quality_factor(q);
  auto g = SweepGrid::defaults(base);
  g.n_x = n;
  g.n_y = n;
  return g;
}

bool same_bits(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || std::memcmp(&*a, &*b, sizeof(double)) == 0;
}

bool identical(const sweep::SweepCell& a, const sweep::SweepCell& b) {
  return std::memcmp(&a.delta, &b.delta, sizeof(double)) == 0 && std::memcmp(&a.y, &b.y, sizeof(double)) == 0 &&
         a.stable == b.stable && same_bits(a.E_SM, b.E_SM) && same_bits(a.E_FM, b.E_FM) &&
         same_bits(a.E_FS, b.E_FS) && same_bits(a.E_F_SM, b.E_F_SM) && same_bits(a.E_S_FM, b.E_S_FM) &&
         same_bits(a.E_M_FS, b.E_M_FS) && same_bits(a.E_tri, b.E_tri) &&
         std::memcmp(&a.u, &b.u, sizeof(double)) == 0 && a.n_roots == b.n_roots && a.error == b.error;
}

double shoelace(const Polyline& line) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < line.size(); ++k) s += line[k].x * line[k + 1].y - line[k + 1].x * line[k].y;
  return 0.5 * std::abs(s);
}

bool closed(const Polyline& line) {
  return line.size() >= 4 && line.front().x == line.back().x && line.front().y == line.back().y;
}

std::vector<Polyline> contours(const std::vector<std::uint8_t>& field, int nx, int ny) {
  return sweep::detail::join_segments(sweep::detail::marching_squares(field, nx, ny));
}

}  // namespace

TEST(Grid, AxesAndParams) {
  auto g = small_grid(5970.0, 5);
  EXPECT_DOUBLE_EQ(g.x_value(0), -2.0 * g.base.omega_m);
  EXPECT_DOUBLE_EQ(g.x_value(4), 2.0 * g.base.omega_m);
  EXPECT_DOUBLE_EQ(g.x_value(2), 0.0);
  EXPECT_NEAR(g.y_value(0), 1e-9, 1e-24);
  EXPECT_NEAR(g.y_value(4), 1e-1, 1e-16);
  EXPECT_NEAR(g.y_value(2), 1e-5, 1e-20);
  const auto p = g.params_at(1, 3);
  EXPECT_EQ(p.Delta, g.x_value(1));
  EXPECT_EQ(p.P_in, g.y_value(3));
  EXPECT_EQ(p.chi, g.base.chi);

  auto c = SweepGrid::defaults(g.base, YAxis::chi);
  c.n_x = c.n_y = 6;
  EXPECT_DOUBLE_EQ(c.y_value(5), 5.0);
  EXPECT_DOUBLE_EQ(c.params_at(0, 2).chi, 2.0 * g.base.chi);
  EXPECT_EQ(c.params_at(0, 2).P_in, g.base.P_in);
  EXPECT_EQ(sweep::parse_y_axis(sweep::to_string(YAxis::chi)), YAxis::chi);
  EXPECT_THROW(sweep::parse_y_axis("Delta"), Error);
}

TEST(Grid, InvalidGridsThrow) {
  auto expect_config = [](const SweepGrid& g) {
    try {
      g.validate();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidConfig);
    }
  };
  auto g = small_grid(5970.0, 5);
  g.n_x = 1;
  expect_config(g);
  g = small_grid(5970.0, 5);
  std::swap(g.delta_min, g.delta_max);
  expect_config(g);
  g = small_grid(5970.0, 5);
  g.y_min = 0.0;
  expect_config(g);
  g = small_grid(5970.0, 5);
  g.y_max = std::numeric_limits<double>::infinity();
  expect_config(g);
  auto c = SweepGrid::defaults(g.base, YAxis::chi);
  c.y_min = -1.0;
  expect_config(c);
  EXPECT_THROW(sweep::run_sweep(small_grid(5970.0, 2), 0), Error);
}

TEST(Sweep, UncoupledGridIsStableAndSeparable) {
  auto g = small_grid(5970.0, 2);
  g.base.chi = 0.0;
  g.base.g_F = 0.0;
  const auto r = sweep::run_sweep(g, 2);
  ASSERT_EQ(r.cells.size(), 4u);
  for (const auto& c : r.cells) {
    ASSERT_TRUE(c.stable.has_value());
    EXPECT_TRUE(*c.stable);
    for (const auto& e : {c.E_SM, c.E_FM, c.E_FS, c.E_F_SM, c.E_S_FM, c.E_M_FS, c.E_tri}) {
      ASSERT_TRUE(e.has_value());
      EXPECT_EQ(*e, 0.0);
    }
    EXPECT_TRUE(c.error.empty());
  }
}

TEST(Sweep, CellMatchesPointEvaluation) {
  const auto g = small_grid(597000.0, 9);
  for (auto [i, j] : {std::pair{2, 8}, std::pair{4, 4}, std::pair{7, 1}}) {
    const auto cell = sweep::evaluate_cell(g, i, j);
    const auto ev = evaluate_point(g.params_at(i, j));
    ASSERT_EQ(cell.stable.value(), ev.stability.stable);
    EXPECT_EQ(cell.u, ev.fields.u);
    if (ev.report) {
      EXPECT_EQ(*cell.E_SM, ev.report->E_SM);
      EXPECT_EQ(*cell.E_M_FS, ev.report->E_M_FS);
      EXPECT_EQ(*cell.E_tri, ev.report->E_tri);
    } else {
      EXPECT_FALSE(cell.E_tri.has_value());
    }
  }
}

TEST(Sweep, DeterministicAcrossWorkerCounts) {
  const auto g = small_grid(5970.0, 21);
  const auto ref = sweep::run_sweep(g, 1);
  const int hw = std::max(2, static_cast<int>(std::thread::hardware_concurrency()));
  for (int w : {4, hw}) {
    const auto got = sweep::run_sweep(g, w);
    ASSERT_EQ(got.cells.size(), ref.cells.size());
    for (std::size_t k = 0; k < ref.cells.size(); ++k) EXPECT_TRUE(identical(got.cells[k], ref.cells[k])) << k;
  }
}

TEST(Sweep, UnstableCellsCarryNoMeasures) {
  const auto r = sweep::run_sweep(small_grid(597000.0, 15), 2);
  int unstable = 0;
  for (const auto& c : r.cells) {
    ASSERT_TRUE(c.stable.has_value()) << c.error;
    if (*c.stable) {
      EXPECT_TRUE(c.E_tri.has_value());
      EXPECT_LE(*c.lyapunov_residual, 1e-10);
      EXPECT_GE(*c.min_symplectic_eigenvalue, 0.5 - 1e-9);
      continue;
    }
    ++unstable;
    for (const auto& e : {c.E_SM, c.E_FM, c.E_FS, c.E_F_SM, c.E_S_FM, c.E_M_FS, c.E_tri}) EXPECT_FALSE(e);
    EXPECT_FALSE(c.lyapunov_residual);
  }
  EXPECT_GT(unstable, 0);
}

TEST(Sweep, BlueSideDestabilizesAtLowerPower) {
  const auto r = sweep::run_sweep(small_grid(597000.0, 21), 2);
  double blue = std::numeric_limits<double>::infinity(), red = blue;
  for (const auto& c : r.cells) {
    if (c.stable.value_or(true)) continue;
    (c.delta > 0.0 ? blue : red) = std::min(c.delta > 0.0 ? blue : red, c.y);
  }
  EXPECT_TRUE(std::isfinite(blue));
  EXPECT_LT(blue, red);
}

TEST(Sweep, CoarseGridIsSubsampleOfRefinedGrid) {
  // Shared nodes of nested grids are evaluated at bitwise-identical parameters.
  const auto coarse = sweep::run_sweep(small_grid(5970.0, 11), 1);
  const auto fine = sweep::run_sweep(small_grid(5970.0, 21), 1);
  for (int j = 0; j < 11; ++j) {
    for (int i = 0; i < 11; ++i) EXPECT_TRUE(identical(coarse.at(i, j), fine.at(2 * i, 2 * j))) << i << "," << j;
  }
}

TEST(Regions, FlagsFollowCells) {
  const auto r = sweep::run_sweep(small_grid(5970.0, 11), 1);
  const auto map = sweep::classify_regions(r);
  EXPECT_EQ(map.n_x, 11);
  for (std::size_t k = 0; k < r.cells.size(); ++k) {
    EXPECT_EQ(map.flags[0][k], r.cells[k].stable.value_or(false) ? 1 : 0);
    EXPECT_EQ(map.flags[7][k], r.cells[k].E_tri.value_or(0.0) > 0.0 ? 1 : 0);
  }
  for (const auto& lines : map.boundaries) {
    for (const auto& l : lines) EXPECT_TRUE(closed(l));
  }
}

TEST(MarchingSquares, EmptyAndFullFields) {
  EXPECT_TRUE(contours(std::vector<std::uint8_t>(12, 0), 4, 3).empty());
  const auto full = contours(std::vector<std::uint8_t>(12, 1), 4, 3);
  ASSERT_EQ(full.size(), 1u);
  EXPECT_TRUE(closed(full[0]));
  // boundary runs half a cell outside the sampled nodes: (4 x 3) rectangle minus corner triangles
  EXPECT_DOUBLE_EQ(shoelace(full[0]), 4.0 * 3.0 - 0.5);
}

TEST(MarchingSquares, SingleCellIsDiamond) {
  std::vector<std::uint8_t> f(9, 0);
  f[4] = 1;
  const auto lines = contours(f, 3, 3);
  ASSERT_EQ(lines.size(), 1u);
  ASSERT_EQ(lines[0].size(), 5u);
  EXPECT_TRUE(closed(lines[0]));
  EXPECT_DOUBLE_EQ(shoelace(lines[0]), 0.5);
  for (const auto& p : lines[0]) EXPECT_DOUBLE_EQ(std::abs(p.x - 1.0) + std::abs(p.y - 1.0), 0.5);
}

TEST(MarchingSquares, BlockAndSaddle) {
  std::vector<std::uint8_t> block(16, 0);
  for (int j = 1; j < 3; ++j)
    for (int i = 1; i < 3; ++i) block[static_cast<std::size_t>(j * 4 + i)] = 1;
  const auto b = contours(block, 4, 4);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].size(), 9u);
  EXPECT_DOUBLE_EQ(shoelace(b[0]), 3.5);

  // diagonal pair: the saddle square keeps the two set nodes in separate regions
  const std::vector<std::uint8_t> saddle{1, 0, 0, 1};
  const auto s = contours(saddle, 2, 2);
  ASSERT_EQ(s.size(), 2u);
  for (const auto& l : s) {
    EXPECT_TRUE(closed(l));
    EXPECT_DOUBLE_EQ(shoelace(l), 0.5);
  }
}

TEST(MarchingSquares, RandomFieldsGiveClosedContours) {
  std::mt19937_64 rng(71);
  std::bernoulli_distribution bit(0.45);
  for (int trial = 0; trial < 30; ++trial) {
    const int nx = 3 + trial % 7, ny = 2 + trial % 5;
    std::vector<std::uint8_t> f(static_cast<std::size_t>(nx * ny));
    int set = 0;
    for (auto& v : f) set += (v = bit(rng) ? 1 : 0);
    const auto lines = contours(f, nx, ny);
    double area = 0.0;
    for (const auto& l : lines) {
      EXPECT_TRUE(closed(l));
      area += shoelace(l);
    }
    if (set == 0) {
      EXPECT_TRUE(lines.empty());
    } else {
      EXPECT_GT(area, 0.0);
    }
  }
}
