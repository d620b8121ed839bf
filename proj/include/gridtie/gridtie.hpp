#pragma once

#include "gridtie/affine.hpp"
#include "gridtie/analysis.hpp"
#include "gridtie/converter.hpp"
#include "gridtie/coordination.hpp"
#include "gridtie/engine.hpp"
#include "gridtie/errors.hpp"
#include "gridtie/hbridge.hpp"
#include "gridtie/io.hpp"
#include "gridtie/rng.hpp"
#include "gridtie/scenario.hpp"
#include "gridtie/trace.hpp"
#include "gridtie/version.hpp"
