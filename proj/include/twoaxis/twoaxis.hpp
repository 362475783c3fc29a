#pragma once

#include "twoaxis/cavity_field.hpp"
#include "twoaxis/cli_io.hpp"
#include "twoaxis/error.hpp"
#include "twoaxis/experiments.hpp"
#include "twoaxis/linalg.hpp"
#include "twoaxis/model_builder.hpp"
#include "twoaxis/propagator.hpp"
#include "twoaxis/spin_algebra.hpp"
#include "twoaxis/squeezing_metrics.hpp"
