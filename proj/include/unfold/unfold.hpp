#pragma once

#include "unfold/constraints.hpp"
#include "unfold/errors.hpp"
#include "unfold/grid.hpp"
#include "unfold/intensity.hpp"
#include "unfold/intervals.hpp"
#include "unfold/io.hpp"
#include "unfold/kernel.hpp"
#include "unfold/model.hpp"
#include "unfold/numeric.hpp"
#include "unfold/program.hpp"
#include "unfold/sim.hpp"
#include "unfold/spline.hpp"
