#pragma once

// Varying-coefficient Fréchet regression for metric-space-valued responses:
// kernels and smoothing weights, response metric spaces, the VFR engine,
// baseline Fréchet regressions, bandwidth selection, simulation designs and
// dataset/model I/O.

#include "fvcm/baselines.hpp"
#include "fvcm/data_io.hpp"
#include "fvcm/errors.hpp"
#include "fvcm/kernels.hpp"
#include "fvcm/metric_spaces.hpp"
#include "fvcm/model_selection.hpp"
#include "fvcm/parallel.hpp"
#include "fvcm/simulation.hpp"
#include "fvcm/training.hpp"
#include "fvcm/vfr.hpp"
