#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rioflow/ir.hpp"

namespace rioflow {

/// Inlines every sub-VI node. Inlined node ids are prefixed with the
/// instance path (`u1/n1`). Throws E_RECURSION or E_UNRESOLVED_SUBVI.
Project expand(const Project &p);

/// Types every port of the diagram. Where an i32 meets an f64 or fixed-point
/// expectation an explicit Convert node is inserted (one per source and
/// target type). Throws E_TYPE_MISMATCH.
Diagram infer_types(const Diagram &d, const Project &p);
/// infer_types applied to every VI.
Project infer_types(const Project &p);

/// expand followed by infer_types.
Project elaborate(const Project &p);

/// Sets a clock rate, declaring the clock when the project does not.
void set_clock(Project &p, const std::string &name, std::int64_t hz);

/// Type carried by a wire of a typed diagram (the type of its source).
std::optional<WireType> wire_type(const Diagram &d, const Wire &w);

// ---------------------------------------------------------------------------
// Target characteristics

struct DepthEntry {
    double depth_ns = 0.0;
    std::int64_t lut = 0;
    std::int64_t lut_per_bit = 0;
    std::int64_t ff = 0;
    std::int64_t ff_per_bit = 0;
    std::int64_t dsp = 0;
    std::int64_t bram = 0;
};

/// Combinational depth and resource cost per primitive. Besides primitive
/// names it holds two storage rows: "register" (cost per bit) and "fifo"
/// (bram per 1024 bytes of buffer).
struct DepthTable {
    std::map<std::string, DepthEntry> entries;

    static DepthTable defaults();
    /// Defaults overlaid with a JSON map {primitive: {depth_ns, lut, ...}}.
    static DepthTable from_json(const std::string &json_text);
    static DepthTable load(const std::string &path);
    /// Defaults, or the file named by RIOFLOW_DEPTH_TABLE when set.
    static DepthTable from_env();

    const DepthEntry *find(const std::string &name) const;
    /// Depth of one node (Ip nodes take depth_ns from their descriptor when
    /// combinational, 0 when pipelined).
    double depth(const Node &n, const Project *p = nullptr) const;
    /// Resource row of one node, per-bit costs scaled by its widest port.
    ResourceEstimate resources(const Node &n, const Project *p = nullptr) const;
    ResourceEstimate register_cost(const WireType &t) const;
    ResourceEstimate fifo_cost(const WireType &element, std::int64_t capacity) const;
};

// ---------------------------------------------------------------------------
// Partitioning

struct FabricLoop {
    std::string id;
    std::string clock;
    std::int64_t hz = 0;
    std::size_t netlist_slot = 0;
};

struct ChannelBinding {
    std::string channel;
    Target writer = Target::Host;
    Target reader = Target::Host;
    std::vector<std::string> writer_nodes;
    std::vector<std::string> reader_nodes;
    bool dma = false;
};

struct ScanBinding {
    std::string channel;
    bool output = false;
    std::vector<std::string> nodes;
};

struct DeploymentPlan {
    std::string top;
    Diagram host;   // host partition of the top VI
    Diagram fabric; // SCTLs plus pure fabric nodes outside them
    std::vector<FabricLoop> fabric_loops;
    std::vector<ChannelBinding> channels;
    std::vector<ScanBinding> scan;
    std::map<std::string, Target> assignment; // top-level node id -> side
};

/// Splits the top VI of a typed, expanded project into host and fabric
/// diagrams. Throws with E_BOUNDARY_WIRE, E_HOST_PRIM_IN_FABRIC,
/// E_FABRIC_PRIM_IN_HOST, E_CHANNEL_ENDPOINT, E_CHANNEL_OWNERSHIP, ...
DeploymentPlan partition(const Project &p);

// ---------------------------------------------------------------------------
// SCTL timing

struct TimingReport {
    std::string sctl;
    std::string clock;
    std::int64_t hz = 0;
    double path_ns = 0.0;
    double period_ns = 0.0;
    double slack_ns = 0.0;
    bool feasible = true;
    std::vector<std::string> critical_path;
};

/// True for nodes whose outputs come from a register or channel port, so a
/// combinational path restarts there (FifoRead, RegRead, pipelined IP).
bool starts_path(const Node &n, const Project *p);

/// Longest combinational path of an SCTL body. Throws E_SCTL_ILLEGAL_NODE for
/// host-only content; never throws for timing.
TimingReport analyze_sctl(const Node &sctl, std::int64_t clock_hz, const DepthTable &t, const Project *p = nullptr);
/// analyze_sctl that throws E_SCTL_TIMING when the path exceeds the period.
TimingReport check_sctl(const Node &sctl, std::int64_t clock_hz, const DepthTable &t, const Project *p = nullptr);

} // namespace rioflow
