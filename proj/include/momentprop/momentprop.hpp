/**
 * @file momentprop.hpp
 * @brief Umbrella header.
 */
#pragma once

#include "momentprop/carleman.hpp"
#include "momentprop/csv.hpp"
#include "momentprop/demo_models.hpp"
#include "momentprop/distributions.hpp"
#include "momentprop/engine.hpp"
#include "momentprop/error_bounds.hpp"
#include "momentprop/errors.hpp"
#include "momentprop/expression.hpp"
#include "momentprop/initial_moments.hpp"
#include "momentprop/kron.hpp"
#include "momentprop/model_io.hpp"
#include "momentprop/oracles.hpp"
#include "momentprop/propagation.hpp"
#include "momentprop/propagator_cache.hpp"
#include "momentprop/reduced_propagation.hpp"
#include "momentprop/rng.hpp"
#include "momentprop/safety_analysis.hpp"
#include "momentprop/system_model.hpp"
#include "momentprop/tail_probability.hpp"
