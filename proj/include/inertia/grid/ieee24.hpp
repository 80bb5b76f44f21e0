#pragma once

#include "inertia/grid/power_system.hpp"

namespace inertia::grid {

struct Ieee24Options {
  double damping = 1.0;        // pu on machine base
  double xd_transient = 0.25;  // pu on machine base
};

/// IEEE RTS-24 single-area case: 24 buses, 38 branches, 38 machines.
/// Network data is the published 100 MVA case converted to a system base
/// equal to the total machine rating.
PowerSystem build_ieee24(const Ieee24Options& opts = {});

}  // namespace inertia::grid
