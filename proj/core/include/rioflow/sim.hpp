#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rioflow/comm.hpp"
#include "rioflow/ip.hpp"
#include "rioflow/netlist.hpp"
#include "rioflow/scan.hpp"

namespace rioflow {

struct TraceSignal {
    std::string name;
    WireType type;
    std::int64_t hz = 0; // clock of the domain that updates it
};

struct TraceChange {
    std::int64_t tick;
    int signal;
    Value value;
};

struct TraceEvent {
    std::int64_t tick;
    std::string code; // E_OVERFLOW, E_UNDERRUN
    std::string subject;
    std::string message;
};

/// Grid-tick trace. Values are stored as changes; every signal has a change
/// at tick 0, so series() yields one value per simulated tick.
struct TickTrace {
    std::int64_t grid_hz = 0;
    std::int64_t ticks = 0;
    std::vector<TraceSignal> signals;
    std::vector<TraceChange> changes; // ordered by tick, then signal
    std::vector<TraceEvent> events;

    int find(const std::string &name) const;
    /// Value of `name` after each tick, `ticks` entries. Throws E_UNKNOWN_NODE.
    std::vector<Value> series(const std::string &name) const;
    /// Ticks at which `name` changed (tick 0 included).
    std::vector<std::int64_t> change_ticks(const std::string &name) const;
};

/// Cycle simulator for netlists, CLIP blocks and analog outputs. Every clock
/// domain is placed on an integer grid whose rate is the least common
/// multiple of all domain rates; a domain of rate f advances on grid ticks
/// that are multiples of grid/f.
///
/// Per grid tick: pre-tick hook (host phase), scan cycle, DMA advance,
/// netlists in insertion order, fifo/register commits, CLIPs, AO emission,
/// trace sampling. Fabric fifo writes become readable after the tick in
/// which they are written; a write into a fifo without room is dropped and
/// recorded as E_OVERFLOW.
class Simulator {
public:
    explicit Simulator(ChannelSet &channels);
    ~Simulator();
    Simulator(const Simulator &) = delete;
    Simulator &operator=(const Simulator &) = delete;

    /// Adds a netlist clocked at n.hz. The Netlist must outlive the simulator.
    std::size_t add_netlist(const Netlist &n, const std::map<std::string, Value> &inputs = {},
                            const Project *p = nullptr);
    /// Free-running CLIP block; its inputs are tied to zero, its outputs are
    /// traced as `<instance>.<port>`.
    void add_clip(const std::string &instance, const IpDescriptor &d, std::int64_t hz);
    VirtualAO &add_ao(const std::string &name, std::int64_t clock_hz, std::int64_t rate_hz,
                      double gain = 1.0 / 32768.0, std::size_t buffer = 64);
    void attach_scan(ScanEngine &engine, ScanIo &io);
    /// Called at the start of each grid tick with the tick index.
    void set_pre_tick(std::function<void(std::int64_t)> fn) { pre_tick_ = std::move(fn); }
    void set_record(bool on) { record_ = on; }

    /// Grid rate. Fixed by the first step; adding domains afterwards throws.
    std::int64_t grid_hz() const;
    std::int64_t tick() const { return tick_; }
    void step();
    void run(std::int64_t ticks);

    std::size_t netlist_count() const;
    NetlistState &netlist(std::size_t k);
    NetlistState *find_netlist(const std::string &name);
    const IpInstance &clip(const std::string &instance) const;
    VirtualAO *find_ao(const std::string &name);
    std::vector<VirtualAO *> aos();
    ChannelSet &channels() { return channels_; }

    std::int64_t overflows() const { return overflows_; }
    std::int64_t underruns() const;
    const TickTrace &trace() const { return trace_; }

private:
    struct Impl;
    friend struct SimPorts;
    void freeze();
    void sample_trace();

    ChannelSet &channels_;
    std::unique_ptr<Impl> impl_;
    std::function<void(std::int64_t)> pre_tick_;
    bool record_ = true;
    bool frozen_ = false;
    std::int64_t grid_hz_ = 0;
    std::int64_t tick_ = 0;
    std::int64_t overflows_ = 0;
    TickTrace trace_;
};

} // namespace rioflow
