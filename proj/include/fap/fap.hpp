#pragma once

// Umbrella header.

#include "fap/analytic.hpp"
#include "fap/error.hpp"
#include "fap/model.hpp"
#include "fap/pde_oracle.hpp"
#include "fap/quadrature.hpp"
#include "fap/simulate.hpp"
#include "fap/specfun.hpp"
#include "fap/stats.hpp"
#include "fap/validation.hpp"
