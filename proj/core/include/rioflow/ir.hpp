#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rioflow/diagnostics.hpp"
#include "rioflow/fixed_point.hpp"
#include "rioflow/types.hpp"

namespace rioflow {

enum class Target : std::uint8_t { Host, Fabric, Inherit };

const char *to_string(Target t);

/// A named, typed node terminal. Primitive ports start untyped until
/// inference unless the primitive fixes their type. Optional inputs may stay
/// unwired and then read `default_value` (or the zero of their type).
struct Port {
    std::string name;
    std::optional<WireType> type;
    bool optional = false;
    std::optional<Value> default_value;

    friend bool operator==(const Port &, const Port &) = default;
};

/// `node` empty means a boundary terminal of the enclosing diagram (control,
/// indicator, shift register, parameter, loop index or stop terminal).
struct Endpoint {
    std::string node;
    std::string port;

    bool boundary() const { return node.empty(); }
    std::string to_string() const { return node.empty() ? port : node + "." + port; }

    friend bool operator==(const Endpoint &, const Endpoint &) = default;
    friend auto operator<=>(const Endpoint &, const Endpoint &) = default;
};

/// One source fanning out to one or more destinations.
struct Wire {
    Endpoint src;
    std::vector<Endpoint> dsts;
    SourceSpan span;
    std::vector<SourceSpan> dst_spans; // parallel to dsts when parsed
};

struct BoundaryPort {
    std::string name;
    WireType type;
    SourceSpan span;
};

/// Configuration carried by a primitive node; which fields matter depends on
/// the primitive (Const: type+value, Convert: type+overflow, channel ops: ref
/// and timeout, FileReadPCM: ref+count, ArrayBuild: count, Biquad: coefficients).
struct PrimArgs {
    std::optional<WireType> type;
    std::optional<Value> value;
    std::string ref;
    std::optional<fxp::Overflow> overflow;
    std::optional<std::int64_t> count;
    std::optional<std::int64_t> timeout;
    std::vector<double> coefficients;

    friend bool operator==(const PrimArgs &, const PrimArgs &) = default;
};

struct HlsDirectives {
    std::int64_t unroll = 1;
    std::optional<std::int64_t> target_ii;
    bool annotated = false;

    friend bool operator==(const HlsDirectives &, const HlsDirectives &) = default;
};

enum class NodeKind : std::uint8_t { Primitive, SubVi, WhileLoop, ForLoop, Case, Sctl };

const char *to_string(NodeKind k);

struct Node;

/// A block diagram. Boundary terminals:
///  - sources: controls, params, shift registers (left terminal), `i` when has_index
///  - sinks:   indicators, shift registers (right terminal), `stop` when has_stop
struct Diagram {
    std::vector<BoundaryPort> controls;
    std::vector<BoundaryPort> indicators;
    std::vector<BoundaryPort> params;
    std::vector<BoundaryPort> shifts;
    bool has_index = false;
    bool has_stop = false;
    std::vector<Node> nodes;
    std::vector<Wire> wires;

    const Node *find_node(const std::string &id) const;
    Node *find_node(const std::string &id);

    /// Type of a boundary source terminal, if it exists.
    std::optional<WireType> source_type(const std::string &name) const;
    /// Type of a boundary sink terminal, if it exists.
    std::optional<WireType> sink_type(const std::string &name) const;
    std::vector<std::string> source_names() const;
    std::vector<std::string> sink_names() const;
};

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Primitive;
    std::string op; // primitive name or sub-VI name
    PrimArgs args;
    std::vector<Port> in_ports;
    std::vector<Port> out_ports;
    Target target = Target::Inherit;

    // Structures: loops and SCTL own one body; Case owns one body per label
    // followed by the default body when has_default.
    std::vector<Diagram> bodies;
    std::vector<std::int32_t> case_labels;
    bool has_default = false;
    std::string clock; // SCTL only
    HlsDirectives hls; // loops only

    SourceSpan span;

    bool is_structure() const { return kind != NodeKind::Primitive && kind != NodeKind::SubVi; }
    const Port *in_port(const std::string &name) const;
    const Port *out_port(const std::string &name) const;
    Port *in_port(const std::string &name);
    Port *out_port(const std::string &name);
};

struct VIGraph {
    std::string name;
    Target target = Target::Inherit;
    Diagram diagram;
    SourceSpan span;
};

struct ClockDecl {
    std::string name;
    std::int64_t hz = 0;
    SourceSpan span;
};

/// Transfer-latency model of a DMA engine, in ticks of the bound clock.
struct DmaModel {
    std::int64_t base_latency = 8;
    std::int64_t per_element = 1;
    std::int64_t burst = 4;

    friend bool operator==(const DmaModel &, const DmaModel &) = default;
};

enum class ChannelKind : std::uint8_t { Fifo, Register };

struct ChannelDecl {
    std::string name;
    ChannelKind kind = ChannelKind::Fifo;
    WireType element;
    std::int64_t capacity = 1; // fifo only
    Target writer = Target::Host;
    Target reader = Target::Host;
    bool endpoints_declared = true; // registers may omit endpoints (either side may access)
    std::optional<Value> initial;   // register only
    std::optional<DmaModel> dma;    // per-channel override
    SourceSpan span;
};

struct ScanChannelDecl {
    std::string name;
    bool output = false;
    WireType type = WireType::float64();
    double gain = 1.0;
    double offset = 0.0;
    int bits = 16;
    SourceSpan span;
};

struct ScanDecl {
    std::int64_t period_us = 0;
    std::vector<ScanChannelDecl> channels;
    SourceSpan span;
};

struct AoDecl {
    std::string name;
    std::string clock;
    std::int64_t rate_hz = 0;
    double gain = 1.0 / 32768.0;
    SourceSpan span;
};

enum class IpStyle : std::uint8_t { Clip, Ipin };

struct IpPort {
    std::string name;
    bool output = false;
    WireType type = WireType::int32();
};

/// Behavior model of imported IP. Linear: s' = A s + B u + c, outputs = s'.
/// Table: outputs looked up by the exact input tuple, `table_default` otherwise.
struct IpBehavior {
    enum class Kind : std::uint8_t { Linear, Table } kind = Kind::Linear;
    std::vector<std::vector<std::int64_t>> a;
    std::vector<std::vector<std::int64_t>> b;
    std::vector<std::int64_t> c;
    std::vector<std::int64_t> initial_state;
    std::vector<std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>> table;
    std::vector<std::int64_t> table_default;
};

struct ResourceEstimate {
    std::int64_t lut = 0;
    std::int64_t ff = 0;
    std::int64_t dsp = 0;
    std::int64_t bram = 0;

    ResourceEstimate &operator+=(const ResourceEstimate &o)
    {
        lut += o.lut;
        ff += o.ff;
        dsp += o.dsp;
        bram += o.bram;
        return *this;
    }
    friend ResourceEstimate operator+(ResourceEstimate a, const ResourceEstimate &b) { return a += b; }
    friend bool operator==(const ResourceEstimate &, const ResourceEstimate &) = default;
};

struct IpDescriptor {
    std::string name;
    IpStyle style = IpStyle::Ipin;
    std::vector<IpPort> ports;
    IpBehavior behavior;
    std::int64_t latency = 0; // IPIN only
    double depth_ns = 0.0;    // IPIN with latency 0 only
    std::string clock;        // CLIP only
    ResourceEstimate resources;

    std::vector<IpPort> inputs() const;
    std::vector<IpPort> outputs() const;
};

struct IpDecl {
    std::string name;
    std::string path;
    SourceSpan span;
};

struct ClipDecl {
    std::string name; // instance name; its pins are `<name>.<port>`
    std::string ip;
    SourceSpan span;
};

struct Project {
    std::string file;
    std::map<std::string, VIGraph> vis;
    std::string top;
    std::vector<ClockDecl> clocks;
    std::vector<ChannelDecl> channels;
    std::optional<ScanDecl> scan;
    std::vector<AoDecl> aos;
    std::vector<IpDecl> ip_decls;
    std::map<std::string, IpDescriptor> ips; // loaded descriptors by IP name
    std::vector<ClipDecl> clips;

    const ClockDecl *find_clock(const std::string &name) const;
    const ChannelDecl *find_channel(const std::string &name) const;
    const ScanChannelDecl *find_scan_channel(const std::string &name) const;
    const AoDecl *find_ao(const std::string &name) const;
    const IpDescriptor *find_ip(const std::string &name) const;
};

/// Fabric clock assumed when an SCTL names a clock the project never declares.
inline constexpr std::int64_t kDefaultFabricClockHz = 40'000'000;

std::int64_t clock_hz(const Project &p, const std::string &clock);

/// Structural equality that ignores source spans and the order of nodes and
/// wires (wires compare by source, destinations as a sorted list).
bool equivalent(const Diagram &a, const Diagram &b);
bool equivalent(const Node &a, const Node &b);
bool equivalent(const Project &a, const Project &b);

} // namespace rioflow
