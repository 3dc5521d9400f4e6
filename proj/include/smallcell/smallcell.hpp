#pragma once

// Umbrella header for the small-cell speed-based power control toolkit.

#include "smallcell/analytic.hpp"
#include "smallcell/cell_sizing.hpp"
#include "smallcell/config_io.hpp"
#include "smallcell/errors.hpp"
#include "smallcell/experiment.hpp"
#include "smallcell/geometry.hpp"
#include "smallcell/numerics.hpp"
#include "smallcell/power_opt.hpp"
#include "smallcell/power_policy.hpp"
#include "smallcell/simulator.hpp"
#include "smallcell/speed_classes.hpp"
#include "smallcell/speed_model.hpp"
#include "smallcell/traffic.hpp"
#include "smallcell/units.hpp"
