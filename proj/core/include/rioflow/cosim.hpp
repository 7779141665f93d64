#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rioflow/elaborate.hpp"
#include "rioflow/netlist.hpp"
#include "rioflow/runtime.hpp"
#include "rioflow/sim.hpp"

namespace rioflow {

struct CosimConfig {
    std::int64_t ticks = 1000; // grid ticks
    std::uint64_t seed = 1;
    /// Host firings granted per grid tick.
    std::int64_t host_firings_per_tick = 4;
    std::int64_t max_firings = 10'000'000;
    std::map<std::string, Value> inputs; // top-level controls
    std::map<std::string, std::vector<std::int16_t>> pcm;
    ScanIo *scan_io = nullptr; // stimulus for the scan engine, if the project declares one
    bool record = true;
    /// Stop before the budget once the host is done, every fifo is empty and
    /// every armed analog output has drained its buffer.
    bool until_idle = false;
    DmaModel dma;
    std::size_t ao_buffer = 64;
};

struct CosimResult {
    std::int64_t ticks = 0;
    std::int64_t grid_hz = 0;
    std::int64_t firings = 0;
    std::int64_t underruns = 0;
    std::int64_t overflows = 0;
    bool host_done = false;
    std::map<std::string, Value> indicators;
    std::map<std::string, ChannelStats> channels;
    std::map<std::string, std::int64_t> iterations; // per SCTL
    std::map<std::string, std::vector<AoEvent>> ao;
    std::map<std::string, std::int64_t> ao_ticks_per_sample;
    std::vector<Netlist> netlists;
    TickTrace trace;
};

/// Runs the top VI of an elaborated project with the host partition under
/// the dataflow executor and every SCTL as a clocked netlist, coupled through
/// timed channels. Throws E_DEADLOCK when the host waits forever on a
/// project without fabric activity, E_LIMIT past max_firings.
CosimResult cosimulate(const Project &p, const DepthTable &t, const CosimConfig &cfg);

/// Evaluates the fabric diagram outside its SCTLs. With `sctl_out` empty,
/// nodes downstream of an SCTL are skipped. Returns the in-port values of
/// every SCTL (keyed `sctl.port`) and the indicator values reached.
std::map<std::string, Value> eval_fabric_glue(const Diagram &fabric, const std::map<std::string, Value> &controls,
                                              const std::map<std::string, std::map<std::string, Value>> &sctl_out);

} // namespace rioflow
