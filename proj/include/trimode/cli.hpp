#pragma once

// Command-line front end. Every subcommand prints a JSON report on stdout;
// exit codes are 0 ok, 2 configuration, 3 physics, 4 I/O.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "trimode/dynamics.hpp"
#include "trimode/entanglement.hpp"
#include "trimode/error.hpp"
#include "trimode/inference.hpp"
#include "trimode/io.hpp"
#include "trimode/model.hpp"
#include "trimode/pipeline.hpp"
#include "trimode/sweep.hpp"

namespace trimode::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kConfig = 2, kPhysics = 3, kIo = 4 };

inline int exit_code(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Config: return kConfig;
    case ErrorCategory::Physics: return kPhysics;
    case ErrorCategory::Io: return kIo;
  }
  return kPhysics;
}

struct Result {
  json report;
  int code = kOk;
};

namespace detail {

inline json error_json(const Error& e) { return {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}; }

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw Error(Errc::Io, "failed writing '" + path + "'");
}

inline json header(const io::Config& c) {
  return {{"version", kVersion}, {"params", io::to_json(c.params)}};
}

}  // namespace detail

/// Mean fields for each requested mode.
inline Result cmd_steady(const io::Config& c, const std::vector<model::MeanFieldMode>& modes) {
  Result r{detail::header(c)};
  r.report["records"] = json::array();
  for (auto m : modes) {
    json rec = {{"mode", std::string(model::to_string(m))}};
    try {
      const auto mf = model::steady_state_mean_fields(c.params, m);
      rec["mean_fields"] = io::to_json(mf);
      rec["residual"] = mf.u > 0.0 ? model::mean_field_residual(c.params, mf) : 0.0;
      json roots = json::array();
      for (double u : mf.roots) {
        roots.push_back({{"u", u}, {"residual", model::mean_field_residual(c.params, u, mf.detuning_F,
                                                                           mf.detuning_S, false)}});
      }
      rec["cubic_roots"] = roots;
    } catch (const Error& e) {
      rec["error"] = detail::error_json(e);
      r.code = std::max(r.code, exit_code(e));
    }
    r.report["records"].push_back(rec);
  }
  return r;
}

/// Full pipeline at the configured point, one labeled record per mode.
inline Result cmd_entangle(const io::Config& c, const std::vector<model::MeanFieldMode>& modes) {
  Result r{detail::header(c)};
  r.report["records"] = json::array();
  for (auto m : modes) {
    json rec = {{"mode", std::string(model::to_string(m))}};
    try {
      const auto ev = evaluate_point(c.params, m);
      rec["mean_fields"] = io::to_json(ev.fields);
      rec["stability"] = io::to_json(ev.stability);
      if (ev.report) {
        rec["entanglement"] = io::to_json(*ev.report);
      } else {
        rec["entanglement"] = nullptr;
        rec["error"] = {{"code", "UnstableSystem"}, {"message", "drift matrix is not stable"}};
        r.code = std::max<int>(r.code, kPhysics);
      }
    } catch (const Error& e) {
      rec["entanglement"] = nullptr;
      rec["error"] = detail::error_json(e);
      r.code = std::max(r.code, exit_code(e));
    }
    r.report["records"].push_back(rec);
  }
  return r;
}

/// Runs the sweep and writes <out> (CSV), <out>.meta.json and <out>.boundaries.json.
inline Result cmd_sweep(const io::Config& c, const std::string& out_path, int workers) {
  if (out_path.empty()) throw Error(Errc::InvalidConfig, "sweep needs --out PATH");
  auto grid = c.sweep.value_or(sweep::SweepGrid::defaults(c.params));
  grid.base = c.params;
  grid.mode = c.mode;
  grid.validate();

  const auto t0 = std::chrono::steady_clock::now();
  const auto res = sweep::run_sweep(grid, workers);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto regions = sweep::classify_regions(res);

  std::ostringstream csv;
  io::write_csv(csv, res);
  detail::write_text(out_path, csv.str());

  std::size_t n_stable = 0, n_failed = 0;
  for (const auto& cell : res.cells) {
    n_stable += cell.stable.value_or(false) ? 1 : 0;
    n_failed += cell.stable ? 0 : 1;
  }
  json meta = detail::header(c);
  meta["timestamp"] = detail::utc_timestamp();
  meta["grid"] = io::to_json(grid);
  meta["grid_note"] = "defaults: 201x201, Delta in [-2 omega_m, 2 omega_m], P_in in [1e-9, 1e-1] W log10";
  meta["cells"] = res.cells.size();
  meta["stable_cells"] = n_stable;
  meta["failed_cells"] = n_failed;
  meta["csv"] = out_path;
  meta["boundaries"] = out_path + ".boundaries.json";
  json failures = json::array();
  for (std::size_t k = 0; k < res.cells.size(); ++k) {
    if (!res.cells[k].error.empty()) failures.push_back({{"index", k}, {"error", res.cells[k].error}});
  }
  meta["failures"] = failures;
  detail::write_text(out_path + ".meta.json", meta.dump(2) + "\n");
  detail::write_text(out_path + ".boundaries.json", io::boundaries_json(res, regions).dump() + "\n");

  meta["elapsed_s"] = seconds;
  meta["workers"] = workers;
  return {meta, kOk};
}

/// Exact and first-order inferred covariances and per-mode fidelities.
inline Result cmd_infer(const io::Config& c) {
  Result r{detail::header(c)};
  const auto ev = evaluate_point(c.params, c.mode);
  if (!ev.covariance) throw Error(Errc::UnstableSystem, "drift matrix is not stable");
  const auto det = inference::DetectorModel::from_bandwidth(c.detector_bandwidth_hz);
  const auto& v = *ev.covariance;
  const auto vt = inference::inferred_covariance(ev.drift, ev.diffusion, v, det);
  const auto v1 = inference::inferred_covariance_first_order(v, ev.diffusion, det);

  r.report["mode"] = std::string(model::to_string(c.mode));
  r.report["detector"] = {{"bandwidth_hz", det.bandwidth}, {"tau_s", det.tau}};
  r.report["V"] = io::matrix_json(v.matrix());
  r.report["V_inferred_exact"] = io::matrix_json(vt.matrix());
  r.report["V_inferred_first_order"] = io::matrix_json(v1.matrix());

  json fid = json::object();
  for (int k = 0; k < 3; ++k) {
    const std::string name = entanglement::kModeNames[static_cast<std::size_t>(k)];
    try {
      fid[name] = inference::inference_fidelity(v, vt, k);
    } catch (const Error& e) {
      fid[name] = nullptr;
      fid[name + "_error"] = detail::error_json(e);
    }
  }
  r.report["fidelity"] = fid;

  auto residual = [&](double tau) {
    const auto d = inference::DetectorModel::from_tau(tau);
    const auto exact = inference::inferred_covariance(ev.drift, ev.diffusion, v, d);
    const auto first = inference::inferred_covariance_first_order(v, ev.diffusion, d);
    return (exact.matrix() - first.matrix()).norm();
  };
  const double r1 = residual(det.tau), r2 = residual(det.tau / 2.0);
  r.report["first_order_residual"] = r1;
  r.report["first_order_residual_half_tau"] = r2;
  r.report["residual_ratio"] = r2 > 0.0 ? json(r1 / r2) : json(nullptr);
  return r;
}

/// Internal invariant checks at the configured point. With `corrupt` the
/// covariance is scaled by 0.2 before checking (test hook).
inline Result cmd_validate(const io::Config& c, bool corrupt = false) {
  Result r{detail::header(c)};
  json checks = json::array();
  bool ok = true;
  auto add = [&](const std::string& name, bool pass, double value, double tol) {
    checks.push_back({{"name", name}, {"pass", pass}, {"value", value}, {"tolerance", tol}});
    ok = ok && pass;
  };

  const auto mf = model::steady_state_mean_fields(c.params, c.mode);
  add("gauge_a_F_real", mf.a_F.imag() == 0.0 && mf.a_F.real() >= 0.0, std::abs(mf.a_F.imag()), 0.0);
  if (mf.mode != model::MeanFieldMode::paper && mf.u > 0.0) {
    const double res = model::mean_field_residual(c.params, mf);
    add("mean_field_residual", res <= 1e-9, res, 1e-9);
  }
  const auto a = model::drift_matrix(c.params, mf);
  const auto d = model::diffusion_matrix(c.params);
  if (mf.alpha) {
    const auto b = model::drift_matrix_rescaled(c.params, mf);
    const double diff = (a.entries - b.entries).norm() / a.entries.norm();
    add("dual_drift_construction", diff <= 1e-10, diff, 1e-10);
  }
  const auto stab = dynamics::stability(a);
  add("stable", stab.stable, stab.max_real_eigenvalue, 0.0);
  add("routh_hurwitz_agrees", stab.stable == stab.routh_hurwitz_pass, stab.max_real_eigenvalue, 0.0);
  if (stab.stable) {
    Eigen::MatrixXd v = dynamics::steady_state_covariance(a, d).matrix();
    if (corrupt) v *= 0.2;
    const double res = dynamics::lyapunov_residual(a.entries, v, d.entries);
    add("lyapunov_residual", res <= dynamics::kLyapunovResidual, res, dynamics::kLyapunovResidual);
    double nu_min = 0.0;
    try {
      nu_min = gaussian::symplectic_eigenvalues(gaussian::CovarianceMatrix(v)).front();
    } catch (const Error&) {
      nu_min = 0.0;
    }
    add("physical", nu_min >= 0.5 - gaussian::kPhysicalTolerance, nu_min, gaussian::kPhysicalTolerance);
  }
  r.report["mode"] = std::string(model::to_string(c.mode));
  r.report["checks"] = checks;
  r.report["pass"] = ok;
  r.code = ok ? kOk : kPhysics;
  return r;
}

// ---------------------------------------------------------------------------

inline int resolve_workers(std::optional<int> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("TRIMODE_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw Error(Errc::InvalidConfig, "TRIMODE_WORKERS must be a positive integer");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Linearized quantum dynamics of a second-harmonic-generating optomechanical cavity"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kVersion);

  std::string config_path, out_path;
  std::optional<int> workers;
  std::vector<std::string> modes;
  bool corrupt = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_path, "output path");
    sub->add_option("--workers", workers, "worker threads (fallback: TRIMODE_WORKERS)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--mode", modes, "mean-field mode(s): paper | cubic | self_consistent")->delimiter(',');
  };
  auto* steady = app.add_subcommand("steady", "mean-field solution");
  auto* entangle = app.add_subcommand("entangle", "entanglement at one parameter point");
  auto* sweep_cmd = app.add_subcommand("sweep", "Delta x (P_in | chi) sweep to CSV");
  auto* infer = app.add_subcommand("infer", "finite-bandwidth state inference");
  auto* validate = app.add_subcommand("validate", "internal invariant checks");
  for (auto* s : {steady, entangle, sweep_cmd, infer, validate}) add_common(s);
  validate->add_flag("--corrupt-covariance", corrupt)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    auto config = io::load_config(config_path);
    std::vector<model::MeanFieldMode> mode_list;
    for (const auto& m : modes) mode_list.push_back(model::parse_mode(m));
    if (mode_list.empty()) mode_list.push_back(config.mode);
    config.mode = mode_list.front();
    if (config.sweep) config.sweep->mode = config.mode;

    Result res;
    if (*steady) {
      res = cmd_steady(config, mode_list);
    } else if (*entangle) {
      res = cmd_entangle(config, mode_list);
    } else if (*sweep_cmd) {
      res = cmd_sweep(config, out_path, resolve_workers(workers));
    } else if (*infer) {
      res = cmd_infer(config);
    } else {
      res = cmd_validate(config, corrupt);
    }
    const auto text = res.report.dump(2) + "\n";
    out << text;
    if (!out_path.empty() && !*sweep_cmd) detail::write_text(out_path, text);
    return res.code;
  } catch (const Error& e) {
    out << json{{"error", detail::error_json(e)}}.dump(2) << "\n";
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  }
}

}  // namespace trimode::cli
