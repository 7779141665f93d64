#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rioflow/ir.hpp"

namespace rioflow {

enum class PrimClass : std::uint8_t {
    Arith,
    Compare,
    Logic,
    Not,
    Select,
    Const,
    Convert,
    ArrayIndex,
    ArrayBuild,
    Biquad,
    FifoRead,
    FifoWrite,
    RegRead,
    RegWrite,
    ScanRead,
    ScanWrite,
    FileReadPCM,
    AoWrite,
    Ip,
};

struct PrimitiveInfo {
    std::string_view name;
    PrimClass cls;
    bool host_only;   // never legal inside an SCTL
    bool fabric_only; // only legal inside an SCTL
    bool touches_io;  // reads or writes channels, files or I/O
};

const std::vector<PrimitiveInfo> &primitive_table();
const PrimitiveInfo *find_primitive(std::string_view name);

/// Port lists of a primitive node. `ip` is required for `Ip` nodes.
std::vector<Port> primitive_inputs(const std::string &op, const PrimArgs &args, const IpDescriptor *ip = nullptr);
std::vector<Port> primitive_outputs(const std::string &op, const PrimArgs &args, const IpDescriptor *ip = nullptr);

/// Builds a primitive node with its port lists filled in.
Node make_primitive(std::string id, std::string op, PrimArgs args = {}, const IpDescriptor *ip = nullptr);

/// True when `found` may be widened to `expected` by an inserted Convert
/// (i32 to f64 or to fixed point, elementwise for arrays of equal length).
bool promotable(const WireType &found, const WireType &expected);

/// Result of type checking one primitive: per input, the type it must be
/// converted to (nullopt when it is used as is), and the output types.
struct TypeResolution {
    std::vector<std::optional<WireType>> promote;
    std::vector<WireType> outputs;
};

/// Checks input types against the primitive's signature. Throws Error with
/// E_TYPE_MISMATCH (subject "node.port") when no promotion can make them fit.
/// `project` supplies channel, scan, AO and IP declarations.
TypeResolution resolve_types(const Node &node, const std::vector<WireType> &inputs, const Project *project);

/// Evaluates a stateless primitive on already-conforming inputs. Channel,
/// file and IP primitives are rejected; the runtime handles those.
std::vector<Value> fire(const Node &node, std::span<const Value> inputs);
/// Convenience overload that derives output types from the inputs.
std::vector<Value> fire(std::string_view prim, std::span<const Value> inputs, const PrimArgs &args = {});

/// Value conversion as performed by the Convert primitive.
Value convert_value(const Value &v, const WireType &scalar_target, fxp::Overflow mode);

struct BiquadCoefficients {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
};

struct BiquadState {
    double s1 = 0.0, s2 = 0.0;
};

/// Direct-form-II-transposed biquad over a block, updating `state`.
std::vector<double> biquad(std::span<const double> x, const BiquadCoefficients &c, BiquadState &state);

} // namespace rioflow
