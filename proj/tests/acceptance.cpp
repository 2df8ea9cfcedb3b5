// Acceptance report: one PASS/FAIL line per criterion, with the measured
// values and wall time. Exit status is nonzero only for failures that are not
// listed with --expect-fail <id> (ids: 1 2 3 4a 4b 4c 4t 5 6).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "trimode/cli.hpp"
#include "trimode/trimode.hpp"

using namespace trimode;
using Eigen::MatrixXd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  std::string id;
  bool pass = false;
  std::string detail;
};

std::vector<Outcome> g_outcomes;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << detail << std::endl;
  g_outcomes.push_back({id, pass, detail});
}

void note(const std::string& id, bool pass, const std::string& detail) {
  std::cout << "    " << id << " " << (pass ? "pass" : "fail") << "  " << detail << std::endl;
  g_outcomes.push_back({id, pass, detail});
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

sweep::SweepResult sweep_at_q(double q, int n, int w) {
  auto base = model::SystemParams::high_q_reference();
  base.set_quality_factor(q);
  auto g = sweep::SweepGrid::defaults(base);
  g.n_x = g.n_y = n;
  return sweep::run_sweep(g, w);
}

// ---------------------------------------------------------------------------

void criterion_1() {
  const auto t0 = Clock::now();
  auto cfg = io::parse_config({{"omega_m_hz", 70e6}, {"Q_m", 597000}, {"kappa_F_hz", 7e6}, {"kappa_S_hz", 7e6},
                               {"g_F_hz", 1.2e3}, {"chi_hz", 700}, {"Delta_hz", -70e6}, {"T_env", 0.8},
                               {"lambda_F", 1554e-9}, {"P_in", 0.27}});
  const auto res = cli::cmd_entangle(cfg, {model::MeanFieldMode::paper});
  const double dt = seconds_since(t0);
  const auto& e = res.report.at("records").at(0).at("entanglement");
  const std::vector<std::pair<const char*, double>> target = {{"E_SM", 0.10},   {"E_FM", 0.42},   {"E_FS", 0.01},
                                                              {"E_F_SM", 0.44}, {"E_S_FM", 0.15}, {"E_M_FS", 0.45}};
  bool ok = !e.is_null();
  std::string detail;
  for (const auto& [k, v] : target) {
    const double got = ok ? e.at(k).get<double>() : std::nan("");
    ok = ok && std::abs(got - v) <= 0.05;
    detail += std::string(k) + "=" + fmt(got, 3) + " ";
  }
  ok = ok && dt < 1.0;
  report("1", ok, detail + "(target +-0.05; " + fmt(dt, 3) + " s, limit 1 s)");
}

void criterion_2_3() {
  const auto t0 = Clock::now();
  auto cfg = io::Config{};
  cfg.params = model::SystemParams::high_q_reference();
  const auto res = cli::cmd_infer(cfg);
  const double dt = seconds_since(t0);
  const double f = res.report.at("fidelity").at("M").get<double>();
  report("2", f > 0.99 && dt < 1.0,
         "mechanical fidelity " + fmt(f, 6) + " at 500 MHz (> 0.99; " + fmt(dt, 3) + " s, limit 1 s)");

  const auto ev = evaluate_point(cfg.params);
  auto residual = [&](double tau) {
    const auto det = inference::DetectorModel::from_tau(tau);
    const auto exact = inference::inferred_covariance(ev.drift, ev.diffusion, *ev.covariance, det);
    const auto first = inference::inferred_covariance_first_order(*ev.covariance, ev.diffusion, det);
    return (exact.matrix() - first.matrix()).norm();
  };
  const double r2 = residual(2e-9), r1 = residual(1e-9);
  report("3", r2 / r1 >= 3.5,
         "residual 2 ns " + fmt(r2) + ", 1 ns " + fmt(r1) + ", ratio " + fmt(r2 / r1) + " (>= 3.5)");
}

/// Mean Delta/omega_m of the cells where `flag` holds, split by sign of Delta.
struct SideCentroids {
  double red = std::nan(""), blue = std::nan("");
  int n_red = 0, n_blue = 0;
};

SideCentroids centroids(const sweep::SweepResult& r, const std::vector<std::uint8_t>& flag) {
  SideCentroids c;
  double sr = 0.0, sb = 0.0;
  for (std::size_t k = 0; k < r.cells.size(); ++k) {
    if (!flag[k]) continue;
    const double x = r.cells[k].delta / r.grid.base.omega_m;
    if (x < 0.0) {
      sr += x;
      ++c.n_red;
    } else if (x > 0.0) {
      sb += x;
      ++c.n_blue;
    }
  }
  if (c.n_red) c.red = sr / c.n_red;
  if (c.n_blue) c.blue = sb / c.n_blue;
  return c;
}

/// Every populated side must sit within +-0.25 of +-target; at least one side populated.
bool centroids_near(const SideCentroids& c, double target) {
  if (!c.n_red && !c.n_blue) return false;
  const bool red = !c.n_red || std::abs(c.red + target) <= 0.25;
  const bool blue = !c.n_blue || std::abs(c.blue - target) <= 0.25;
  return red && blue;
}

std::string describe(const SideCentroids& c) {
  return "red " + (c.n_red ? fmt(c.red, 3) : std::string("-")) + " (" + std::to_string(c.n_red) + " cells), blue " +
         (c.n_blue ? fmt(c.blue, 3) : std::string("-")) + " (" + std::to_string(c.n_blue) + " cells)";
}

void criterion_4(std::vector<sweep::SweepResult>& keep) {
  const int w = workers();
  const auto t0 = Clock::now();
  auto low = sweep_at_q(5970.0, 101, w);
  auto high = sweep_at_q(597000.0, 101, w);
  const double dt = seconds_since(t0);
  const auto map = sweep::classify_regions(low);
  const double wm = low.grid.base.omega_m;

  // (a) F|S region at P_in <= 1e-6 W
  bool has_zero = false, outside = false;
  int n_fs = 0;
  for (std::size_t k = 0; k < low.cells.size(); ++k) {
    const auto& c = low.cells[k];
    if (!map.flags[3][k] || c.y > 1e-6 * (1.0 + 1e-12)) continue;
    ++n_fs;
    has_zero = has_zero || c.delta == 0.0;
    outside = outside || std::abs(c.delta) > 0.5 * wm;
  }
  const bool a_ok = has_zero && !outside;

  // (b) region centroids
  const auto sm = centroids(low, map.flags[1]);
  const auto fm = centroids(low, map.flags[2]);
  const bool sm_ok = centroids_near(sm, 1.0), fm_ok = centroids_near(fm, 0.5);
  const bool b_ok = sm_ok && fm_ok;
  // diagnostic only: where each negativity peaks along the grid row nearest 1e-6 W
  int row = 0;
  for (int j = 0; j < low.grid.n_y; ++j) {
    if (std::abs(std::log10(low.grid.y_value(j)) + 6.0) < std::abs(std::log10(low.grid.y_value(row)) + 6.0)) row = j;
  }
  auto peak = [&](auto member) {
    double best = 0.0, at = std::nan("");
    for (int i = 0; i < low.grid.n_x; ++i) {
      const auto& v = low.at(i, row).*member;
      if (v && *v > best) {
        best = *v;
        at = low.at(i, row).delta / wm;
      }
    }
    return at;
  };
  const double sm_peak = peak(&sweep::SweepCell::E_SM), fm_peak = peak(&sweep::SweepCell::E_FM);

  // (c) minimum unstable power per side at high Q
  double blue = std::numeric_limits<double>::infinity(), red = blue;
  for (const auto& c : high.cells) {
    if (c.stable.value_or(true)) continue;
    if (c.delta > 0.0) blue = std::min(blue, c.y);
    if (c.delta < 0.0) red = std::min(red, c.y);
  }
  const bool c_ok = std::isfinite(blue) && blue < red;

  const bool time_ok = dt < 120.0;
  report("4", a_ok && b_ok && c_ok && time_ok,
         "two 101x101 sweeps in " + fmt(dt, 3) + " s on " + std::to_string(w) + " workers (limit 120 s at 8)");
  note("4a", a_ok,
       "F|S cells at P_in <= 1e-6 W: " + std::to_string(n_fs) + ", Delta=0 present " + (has_zero ? "yes" : "no") +
           ", any |Delta| > omega_m/2 " + (outside ? "yes" : "no"));
  note("4b", b_ok,
       "centroids in units of omega_m; S|M " + describe(sm) + " [target +-1, " + (sm_ok ? "ok" : "off") +
           "]; F|M " + describe(fm) + " [target +-0.5, " + (fm_ok ? "ok" : "off") + "]; peak Delta/omega_m at P_in=" + fmt(low.grid.y_value(row), 3) +
           " W: S|M " + fmt(sm_peak, 3) + ", F|M " + fmt(fm_peak, 3));
  note("4c", c_ok, "min unstable P_in at Q_m=597000: blue " + fmt(blue) + " W, red " + fmt(red) + " W");
  note("4t", time_ok, "wall time " + fmt(dt, 3) + " s");
  keep.push_back(std::move(low));
  keep.push_back(std::move(high));
}

void criterion_5(const std::vector<sweep::SweepResult>& sweeps) {
  const auto t0 = Clock::now();
  std::vector<std::string> failed;
  auto check = [&](const char* name, bool ok) {
    if (!ok) failed.emplace_back(name);
  };

  // residual and physicality on every stable cell of the acceptance sweeps
  std::size_t stable = 0;
  bool residual_ok = true, physical_ok = true, failures_ok = true;
  double worst_residual = 0.0;
  for (const auto& r : sweeps) {
    for (const auto& c : r.cells) {
      failures_ok = failures_ok && c.error.empty();
      if (!c.stable.value_or(false)) continue;
      ++stable;
      worst_residual = std::max(worst_residual, *c.lyapunov_residual);
      residual_ok = residual_ok && *c.lyapunov_residual <= 1e-10;
      physical_ok = physical_ok && *c.min_symplectic_eigenvalue >= 0.5 - gaussian::kPhysicalTolerance;
    }
  }
  check("lyapunov_residual", residual_ok);
  check("physical", physical_ok);
  check("no_failed_cells", failures_ok);

  // dual drift construction over a grid
  {
    auto g = sweep::SweepGrid::defaults(model::SystemParams::high_q_reference());
    g.n_x = g.n_y = 31;
    double worst = 0.0;
    for (int j = 0; j < g.n_y; ++j) {
      for (int i = 0; i < g.n_x; ++i) {
        const auto p = g.params_at(i, j);
        const auto mf = model::steady_state_mean_fields(p);
        if (!mf.alpha) continue;
        const auto a = model::drift_matrix(p, mf), b = model::drift_matrix_rescaled(p, mf);
        worst = std::max(worst, (a.entries - b.entries).norm() / a.entries.norm());
      }
    }
    check("dual_drift", worst <= 1e-10);
  }

  std::mt19937_64 rng(2024);
  // symplectic invariance
  {
    bool ok = true;
    for (int t = 0; t < 50; ++t) {
      const int n = 1 + t % 3;
      std::vector<double> nu(static_cast<std::size_t>(n));
      std::uniform_real_distribution<double> u(0.5, 4.0);
      for (auto& x : nu) x = u(rng);
      const gaussian::CovarianceMatrix v(oracle::williamson_state(nu, oracle::random_symplectic(n, rng)));
      const MatrixXd s = oracle::random_symplectic(n, rng);
      const auto a = gaussian::symplectic_eigenvalues(v);
      const auto b = gaussian::symplectic_eigenvalues(gaussian::CovarianceMatrix(s * v.matrix() * s.transpose()));
      for (std::size_t k = 0; k < a.size(); ++k) ok = ok && std::abs(a[k] - b[k]) <= 1e-9 * std::max(1.0, a[k]);
    }
    check("symplectic_invariance", ok);
  }
  // two-mode squeezed negativity
  {
    bool ok = true;
    for (double r : {0.05, 0.3, 0.5, 1.0, 1.7}) {
      ok = ok && std::abs(gaussian::log_negativity(gaussian::CovarianceMatrix::two_mode_squeezed(r), {0}) -
                          2.0 * r) <= 1e-9;
    }
    check("tms_log_negativity", ok);
  }
  // Lyapunov vs time integral
  {
    bool ok = true;
    for (int t = 0; t < 20; ++t) {
      const int n = t % 2 ? 6 : 4;
      MatrixXd a = oracle::random_matrix(n, n, rng);
      Eigen::EigenSolver<MatrixXd> es(a, false);
      double max_re = -1e300;
      for (int i = 0; i < n; ++i) max_re = std::max(max_re, es.eigenvalues()[i].real());
      a -= (max_re + 0.05 + 0.9 * (t / 19.0)) * MatrixXd::Identity(n, n);
      const MatrixXd b = oracle::random_matrix(n, n, rng);
      const MatrixXd d = b * b.transpose();
      const MatrixXd expect = oracle::lyapunov_by_quadrature(a, d);
      ok = ok && (dynamics::steady_state_covariance(a, d).matrix() - expect).norm() <= 1e-6 * expect.norm();
    }
    check("lyapunov_vs_time_integral", ok);
  }
  // fidelity vs Fock-basis oracle
  {
    bool ok = true;
    std::uniform_real_distribution<double> nb(0.0, 0.6), rr(0.0, 0.45), th(0.0, 3.14159);
    for (int t = 0; t < 50; ++t) {
      const auto a = oracle::fock_gaussian(nb(rng), rr(rng), th(rng), 90);
      const auto b = oracle::fock_gaussian(nb(rng), rr(rng), th(rng), 90);
      const double got = gaussian::gaussian_fidelity_single_mode(gaussian::CovarianceMatrix(a.v),
                                                                 gaussian::CovarianceMatrix(b.v));
      ok = ok && std::abs(got - oracle::uhlmann_fidelity(a.rho, b.rho)) <= 1e-6;
    }
    check("fidelity_vs_fock", ok);
  }
  // sweep determinism across worker counts
  {
    const auto ref = sweep_at_q(5970.0, 25, 1);
    bool ok = true;
    for (int w : {2, 4, 8}) {
      const auto got = sweep_at_q(5970.0, 25, w);
      std::ostringstream a, b;
      io::write_csv(a, ref);
      io::write_csv(b, got);
      ok = ok && a.str() == b.str();
    }
    check("sweep_determinism", ok);
  }

  std::string detail = std::to_string(stable) + " stable sweep cells, worst Lyapunov residual " +
                       fmt(worst_residual, 3) + "; " + fmt(seconds_since(t0), 3) + " s";
  if (!failed.empty()) {
    detail += "; failing:";
    for (const auto& f : failed) detail += " " + f;
  }
  report("5", failed.empty(), detail);
}

void criterion_6() {
  auto scan = [](double q, double p_in) {
    auto p = model::SystemParams::high_q_reference();
    p.set_quality_factor(q);
    p.P_in = p_in;
    std::vector<std::pair<double, bool>> out;  // (Delta/omega_m, E_tri > 0)
    for (int i = 0; i <= 100; ++i) {
      p.Delta = p.omega_m * (-2.0 + 4.0 * i / 100.0);
      const auto ev = evaluate_point(p);
      out.emplace_back(p.Delta / p.omega_m, ev.report && ev.report->E_tri > 0.0);
    }
    return out;
  };
  const auto hi = scan(597000.0, std::pow(10.0, -2.5));
  int first = -1, last = -1, count = 0, window = 0;
  for (int i = 0; i < static_cast<int>(hi.size()); ++i) {
    const double x = hi[static_cast<std::size_t>(i)].first;
    if (x < -1.0 - 1e-12 || x > 1e-12) continue;
    ++window;
    if (!hi[static_cast<std::size_t>(i)].second) continue;
    if (first < 0) first = i;
    last = i;
    ++count;
  }
  const bool contiguous = count > 0 && count == last - first + 1;
  const bool most = 2 * count > window;

  const auto lo = scan(5970.0, std::pow(10.0, -1.5));
  const auto lo_count = std::count_if(lo.begin(), lo.end(), [](const auto& c) { return c.second; });

  const bool ok = contiguous && most && lo_count == 0;
  std::string span = count ? "[" + fmt(hi[static_cast<std::size_t>(first)].first, 3) + ", " +
                                 fmt(hi[static_cast<std::size_t>(last)].first, 3) + "]"
                           : std::string("none");
  report("6", ok,
         "Q_m=597000, P_in=10^-2.5 W: E_tri > 0 on " + std::to_string(count) + "/" + std::to_string(window) +
             " cells of Delta/omega_m in [-1, 0], span " + span + (contiguous ? " contiguous" : " NOT contiguous") +
             "; Q_m=5970, P_in=10^-1.5 W: " + std::to_string(lo_count) + " E_tri > 0 cells over Delta in [-2, 2] omega_m");
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> expected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--expect-fail") == 0 && i + 1 < argc) expected.insert(argv[++i]);
  }

  std::vector<sweep::SweepResult> sweeps;
  try {
    criterion_1();
    criterion_2_3();
    criterion_4(sweeps);
    criterion_5(sweeps);
    criterion_6();
  } catch (const std::exception& e) {
    std::cout << "acceptance run aborted: " << e.what() << std::endl;
    return 1;
  }

  int unexpected = 0;
  for (const auto& o : g_outcomes) {
    if (o.pass && expected.count(o.id)) std::cout << "note: " << o.id << " was expected to fail but passed" << std::endl;
    if (o.pass || expected.count(o.id)) continue;
    // a top-level failure is excused when all of its failing sub-checks are expected
    const bool parent_excused = std::all_of(g_outcomes.begin(), g_outcomes.end(), [&](const Outcome& s) {
      return s.id.size() <= o.id.size() || s.id.compare(0, o.id.size(), o.id) != 0 || s.pass || expected.count(s.id);
    });
    const bool has_children = std::any_of(g_outcomes.begin(), g_outcomes.end(), [&](const Outcome& s) {
      return s.id.size() > o.id.size() && s.id.compare(0, o.id.size(), o.id) == 0;
    });
    if (has_children && parent_excused) continue;
    ++unexpected;
  }
  if (!expected.empty()) {
    std::cout << "expected failures:";
    for (const auto& id : expected) std::cout << " " << id;
    std::cout << std::endl;
  }
  std::cout << (unexpected ? "acceptance: unexpected failures: " + std::to_string(unexpected)
                           : std::string("acceptance: no unexpected failures"))
            << std::endl;
  return unexpected ? 1 : 0;
}
