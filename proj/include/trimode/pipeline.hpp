#pragma once

#include <optional>

#include "trimode/dynamics.hpp"
#include "trimode/entanglement.hpp"
#include "trimode/gaussian.hpp"
#include "trimode/model.hpp"

namespace trimode {

/// Everything computed for one parameter point: mean fields -> A, D ->
/// stability -> Lyapunov -> entanglement. The last two are empty when the
/// drift matrix is not stable.
struct PointEvaluation {
  model::SystemParams params;
  model::MeanFields fields;
  model::DriftMatrix drift;
  model::DiffusionMatrix diffusion;
  dynamics::StabilityReport stability;
  std::optional<gaussian::CovarianceMatrix> covariance;
  std::optional<entanglement::EntanglementReport> report;
};

inline PointEvaluation evaluate_point(const model::SystemParams& params,
                                      model::MeanFieldMode mode = model::MeanFieldMode::paper) {
  PointEvaluation ev;
  ev.params = params;
  ev.fields = model::steady_state_mean_fields(params, mode);
  ev.drift = model::drift_matrix(params, ev.fields);
  ev.diffusion = model::diffusion_matrix(params);
  ev.stability = dynamics::stability(ev.drift);
  if (ev.stability.stable) {
    ev.covariance = dynamics::steady_state_covariance(ev.drift, ev.diffusion);
    ev.report = entanglement::analyze(*ev.covariance);
  }
  return ev;
}

}  // namespace trimode
