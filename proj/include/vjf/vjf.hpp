#pragma once

// Online variational joint filtering: streaming dual estimation of nonlinear
// latent dynamics, observation model, and recognition network, with phase
// portrait analysis and long-horizon prediction.

#include "vjf/adam.hpp"
#include "vjf/analysis.hpp"
#include "vjf/core.hpp"
#include "vjf/dekf.hpp"
#include "vjf/filter.hpp"
#include "vjf/finite_diff.hpp"
#include "vjf/gaussian.hpp"
#include "vjf/generative.hpp"
#include "vjf/io.hpp"
#include "vjf/recognition.hpp"
#include "vjf/run_config.hpp"
#include "vjf/simulators.hpp"
#include "vjf/tape.hpp"
