#pragma once

#include "analytic.hpp"
#include "grid.hpp"
#include "problem.hpp"
#include "regions.hpp"
#include "simulate.hpp"
#include "solver.hpp"
