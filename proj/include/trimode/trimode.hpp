#pragma once

#include "trimode/error.hpp"
#include "trimode/gaussian.hpp"
#include "trimode/model.hpp"
#include "trimode/expm.hpp"
#include "trimode/dynamics.hpp"
#include "trimode/entanglement.hpp"
#include "trimode/inference.hpp"
#include "trimode/pipeline.hpp"
#include "trimode/sweep.hpp"
