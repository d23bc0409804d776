#pragma once

#include "lightstack/core.hpp"
#include "lightstack/field_solver.hpp"
#include "lightstack/forces.hpp"
#include "lightstack/equilibria.hpp"
#include "lightstack/montecarlo.hpp"
#include "lightstack/sweeps.hpp"
