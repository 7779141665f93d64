#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rioflow/elaborate.hpp"
#include "rioflow/ip.hpp"
#include "rioflow/primitives.hpp"

namespace rioflow {

struct NetSignal {
    std::string name;
    WireType type;
    std::optional<Value> constant; // tied-off input or folded Const
};

/// One combinational operation. Signals are indices into Netlist::signals.
struct NetOp {
    std::string id;
    std::string op;
    PrimClass cls = PrimClass::Arith;
    PrimArgs args;
    std::vector<int> in;
    std::vector<int> out;
    double depth_ns = 0.0;
    ResourceEstimate resources;
};

enum class RegKind : std::uint8_t { Shift, Input, Output, Param, Index };

const char *to_string(RegKind k);

/// Boundary register. `q` is the signal it drives during a tick, `d` the
/// signal it latches at the end of the tick (-1 when it never changes).
struct NetRegister {
    std::string name;
    RegKind kind = RegKind::Shift;
    WireType type;
    int q = -1;
    int d = -1;
};

struct ChannelPort {
    std::string channel;
    std::string node;
    bool write = false;
    ChannelKind kind = ChannelKind::Fifo;
    WireType element;
    std::int64_t capacity = 0;
    bool holds_storage = false; // fifo buffer is billed to this netlist
};

/// Clocked register-transfer form of one SCTL body.
struct Netlist {
    std::string name;
    std::string clock;
    std::int64_t hz = 0;
    double critical_path_ns = 0.0;
    std::vector<NetSignal> signals;
    std::vector<NetOp> ops; // topological order
    std::vector<NetRegister> registers;
    std::vector<ChannelPort> channel_ports;
    int stop = -1; // signal of the stop terminal, -1 when unwired

    const NetRegister *find_register(const std::string &name) const;
    std::size_t count_ops(const std::string &op) const;
};

/// Compiles a typed SCTL node. Runs check_sctl first (E_SCTL_TIMING,
/// E_SCTL_ILLEGAL_NODE); with `enforce_timing` false an infeasible body still
/// compiles. `p` supplies channel and IP declarations.
Netlist compile_sctl(const Node &sctl, const DepthTable &t, const Project *p = nullptr,
                     std::optional<std::int64_t> clock_hz = std::nullopt, bool enforce_timing = true);

/// Sum of the op rows, the register rows and the fifo buffers billed here.
ResourceEstimate estimate(const Netlist &n, const DepthTable &t);

struct HlsDirectivesIn {
    std::int64_t unroll = 1;
    std::optional<std::int64_t> target_ii;
};

struct HlsEstimate {
    std::int64_t ii = 1;
    std::int64_t multipliers = 0;
    ResourceEstimate resources;
    std::optional<std::int64_t> target_ii;
    bool met = true;
};

/// Multiplier-bound pipeline model: II = max(1, ceil(N_mul / U)) and the
/// multiplier DSPs scale with U. Throws E_TARGET_UNREACHABLE when the target
/// II is below 1.
HlsEstimate hls_estimate(const Diagram &body, const HlsDirectivesIn &d, const DepthTable &t,
                         const Project *p = nullptr);

/// Channel, register and AO access of a running netlist.
class FabricPorts {
public:
    virtual ~FabricPorts() = default;
    virtual std::optional<Value> fifo_read(const std::string &ch) = 0;
    /// Returns false when the fifo has no room this tick. Accepted writes
    /// become visible to readers after the tick.
    virtual bool fifo_write(const std::string &ch, const Value &v) = 0;
    virtual Value reg_read(const std::string &ch) = 0;
    virtual void reg_write(const std::string &ch, const Value &v) = 0;
    virtual void ao_write(const std::string &name, const Value &v) = 0;
};

/// Cycle state of one netlist. Evaluation runs on raw machine words with
/// shift amounts fixed at construction; it does not go through `fire`.
class NetlistState {
public:
    /// `inputs` are the SCTL's in-port values (input tunnels and shift
    /// register initial values); missing ones start at zero.
    NetlistState(const Netlist &n, const std::map<std::string, Value> &inputs, const Project *p = nullptr);
    ~NetlistState();
    NetlistState(NetlistState &&) noexcept;

    /// One clock tick: latch parameters, evaluate, latch registers.
    /// A halted netlist (stop seen) does nothing.
    void tick(FabricPorts &io);

    bool halted() const;
    std::int64_t iterations() const;
    /// Current value of a register (post-latch).
    Value reg(const std::string &name) const;
    /// Values that reached the body's sinks in the most recent tick, keyed
    /// like ExecConfig::on_iteration (indicators, shift registers, stop).
    std::map<std::string, Value> sinks() const;
    const Netlist &netlist() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace rioflow
