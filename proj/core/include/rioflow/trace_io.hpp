#pragma once

#include <string>

#include "rioflow/sim.hpp"

namespace rioflow {

/// Value-change dump of a tick trace. The timescale is the coarsest VCD unit
/// in which the grid period is an integer; otherwise 1 ps with rounded times.
/// Array signals are split into `name[i]` scalars; f64 signals are `real`.
std::string to_vcd(const TickTrace &t);

/// `tick,signal,value` lines, one per change, arrays split like to_vcd.
std::string to_csv(const TickTrace &t);

/// `$timescale` unit and grid period in that unit for a grid rate.
struct VcdTimescale {
    std::string unit; // e.g. "1ns"
    std::int64_t period = 0; // 0 when the period is not an integer in any unit
};
VcdTimescale vcd_timescale(std::int64_t grid_hz);

} // namespace rioflow
