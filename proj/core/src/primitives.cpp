#include "rioflow/primitives.hpp"

#include <algorithm>
#include <limits>

namespace rioflow {

namespace {

using fxp::wide;

const std::vector<PrimitiveInfo> kTable = {
    {"Add", PrimClass::Arith, false, false, false},
    {"Sub", PrimClass::Arith, false, false, false},
    {"Mul", PrimClass::Arith, false, false, false},
    {"Div", PrimClass::Arith, true, false, false},
    {"Gt", PrimClass::Compare, false, false, false},
    {"Lt", PrimClass::Compare, false, false, false},
    {"Eq", PrimClass::Compare, false, false, false},
    {"And", PrimClass::Logic, false, false, false},
    {"Or", PrimClass::Logic, false, false, false},
    {"Not", PrimClass::Not, false, false, false},
    {"Select", PrimClass::Select, false, false, false},
    {"Const", PrimClass::Const, false, false, false},
    {"Convert", PrimClass::Convert, false, false, false},
    {"ArrayIndex", PrimClass::ArrayIndex, false, false, false},
    {"ArrayBuild", PrimClass::ArrayBuild, false, false, false},
    {"Biquad", PrimClass::Biquad, true, false, false},
    {"FifoRead", PrimClass::FifoRead, false, false, true},
    {"FifoWrite", PrimClass::FifoWrite, false, false, true},
    {"RegRead", PrimClass::RegRead, false, false, true},
    {"RegWrite", PrimClass::RegWrite, false, false, true},
    {"ScanRead", PrimClass::ScanRead, true, false, true},
    {"ScanWrite", PrimClass::ScanWrite, true, false, true},
    {"FileReadPCM", PrimClass::FileReadPCM, true, false, true},
    {"AoWrite", PrimClass::AoWrite, false, true, true},
    {"Ip", PrimClass::Ip, false, true, true},
};

Port port(std::string name, std::optional<WireType> type = std::nullopt)
{
    return Port{std::move(name), std::move(type), false, std::nullopt};
}

Port optional_port(std::string name, WireType type, Value dflt)
{
    return Port{std::move(name), std::move(type), true, std::move(dflt)};
}

const WireType kBiquadState = WireType::array(WireType::float64(), 2);

const char *arith_output(std::string_view op)
{
    if (op == "Add")
        return "sum";
    if (op == "Sub")
        return "diff";
    if (op == "Mul")
        return "prod";
    return "quot";
}

[[noreturn]] void mismatch(const Node &node, const std::string &port, const WireType &found, const std::string &expected)
{
    throw Error("E_TYPE_MISMATCH", "found " + found.to_string() + ", expected " + expected, node.id + "." + port,
                node.span);
}

/// Shape broadcast: equal shapes, or one side scalar.
std::optional<WireType> broadcast_shape(const WireType &a, const WireType &b)
{
    if (a.is(TypeKind::Array) && b.is(TypeKind::Array)) {
        if (a.length() != b.length())
            return std::nullopt;
        auto inner = broadcast_shape(a.element(), b.element());
        if (!inner)
            return std::nullopt;
        return WireType::array(*inner, a.length());
    }
    if (a.is(TypeKind::Array))
        return b.is_scalar() ? std::optional(a) : std::nullopt;
    if (b.is(TypeKind::Array))
        return a.is_scalar() ? std::optional(b) : std::nullopt;
    return a;
}

struct NumericPair {
    std::optional<WireType> promote_x;
    std::optional<WireType> promote_y;
    WireType sx, sy; // scalar types after promotion
};

/// i32 widens to f64 or to fxp<32,32> next to the other operand; f64 and
/// fixed point never mix.
std::optional<NumericPair> numeric_pair(const WireType &x, const WireType &y)
{
    const WireType &sx = x.scalar();
    const WireType &sy = y.scalar();
    if (!sx.is_numeric() || !sy.is_numeric())
        return std::nullopt;
    NumericPair r{std::nullopt, std::nullopt, sx, sy};
    if (sx.kind() == sy.kind())
        return r;
    auto widen = [](const WireType &other) {
        return other.is(TypeKind::Float64) ? WireType::float64() : fxp::promoted_int32();
    };
    if (sx.is(TypeKind::Int32)) {
        r.sx = widen(sy);
        r.promote_x = x.with_scalar(r.sx);
        return r;
    }
    if (sy.is(TypeKind::Int32)) {
        r.sy = widen(sx);
        r.promote_y = y.with_scalar(r.sy);
        return r;
    }
    return std::nullopt;
}

const ChannelDecl &channel_of(const Node &node, const Project *project, ChannelKind kind)
{
    const ChannelDecl *c = project ? project->find_channel(node.args.ref) : nullptr;
    if (!c)
        throw Error("E_UNKNOWN_CHANNEL", "channel '" + node.args.ref + "' is not declared", node.id, node.span);
    if (c->kind != kind)
        throw Error("E_CHANNEL_KIND",
                    "channel '" + c->name + "' is not a " + (kind == ChannelKind::Fifo ? "fifo" : "register"),
                    node.id, node.span);
    return *c;
}

/// Expected-type check used for sinks with a declared type.
std::optional<WireType> expect(const Node &node, const std::string &port, const WireType &found,
                               const WireType &expected)
{
    if (found == expected)
        return std::nullopt;
    if (promotable(found, expected))
        return expected;
    mismatch(node, port, found, expected.to_string());
}

} // namespace

const std::vector<PrimitiveInfo> &primitive_table() { return kTable; }

const PrimitiveInfo *find_primitive(std::string_view name)
{
    for (const auto &p : kTable)
        if (p.name == name)
            return &p;
    return nullptr;
}

std::vector<Port> primitive_inputs(const std::string &op, const PrimArgs &args, const IpDescriptor *ip)
{
    const PrimitiveInfo *info = find_primitive(op);
    if (!info)
        return {};
    switch (info->cls) {
    case PrimClass::Arith:
    case PrimClass::Compare:
    case PrimClass::Logic:
        return {port("x"), port("y")};
    case PrimClass::Not:
    case PrimClass::Convert:
        return {port("x")};
    case PrimClass::Select:
        return {port("s", WireType::boolean()), port("t"), port("f")};
    case PrimClass::Const:
    case PrimClass::RegRead:
    case PrimClass::ScanRead:
    case PrimClass::FileReadPCM:
        return {};
    case PrimClass::ArrayIndex:
        return {port("array"), port("index", WireType::int32())};
    case PrimClass::ArrayBuild: {
        std::vector<Port> ports;
        for (std::int64_t i = 0; i < args.count.value_or(0); ++i)
            ports.push_back(port("e" + std::to_string(i)));
        return ports;
    }
    case PrimClass::Biquad:
        return {port("x"), optional_port("state", kBiquadState, Value::zero(kBiquadState))};
    case PrimClass::FifoRead:
        return {optional_port("en", WireType::boolean(), Value::boolean(true))};
    case PrimClass::FifoWrite:
    case PrimClass::AoWrite:
        return {port("value"), optional_port("en", WireType::boolean(), Value::boolean(true))};
    case PrimClass::RegWrite:
    case PrimClass::ScanWrite:
        return {port("value")};
    case PrimClass::Ip: {
        std::vector<Port> ports;
        if (ip)
            for (const auto &p : ip->inputs())
                ports.push_back(port(p.name, p.type));
        return ports;
    }
    }
    return {};
}

std::vector<Port> primitive_outputs(const std::string &op, const PrimArgs &args, const IpDescriptor *ip)
{
    const PrimitiveInfo *info = find_primitive(op);
    if (!info)
        return {};
    switch (info->cls) {
    case PrimClass::Arith:
        return {port(arith_output(op))};
    case PrimClass::Compare:
    case PrimClass::Logic:
    case PrimClass::Not:
    case PrimClass::Select:
        return {port("result")};
    case PrimClass::Const:
        return {port("value", args.type)};
    case PrimClass::Convert:
    case PrimClass::RegRead:
    case PrimClass::ScanRead:
        return {port("value")};
    case PrimClass::ArrayIndex:
        return {port("element")};
    case PrimClass::ArrayBuild:
        return {port("array")};
    case PrimClass::Biquad:
        return {port("y"), port("state_out", kBiquadState)};
    case PrimClass::FifoRead:
        return {port("value"), port("ok", WireType::boolean())};
    case PrimClass::FifoWrite:
        return {port("ok", WireType::boolean())};
    case PrimClass::RegWrite:
    case PrimClass::ScanWrite:
    case PrimClass::AoWrite:
        return {};
    case PrimClass::FileReadPCM:
        return {port("samples", WireType::array(WireType::float64(), static_cast<std::size_t>(args.count.value_or(0)))),
                port("count", WireType::int32()), port("eof", WireType::boolean())};
    case PrimClass::Ip: {
        std::vector<Port> ports;
        if (ip)
            for (const auto &p : ip->outputs())
                ports.push_back(port(p.name, p.type));
        return ports;
    }
    }
    return {};
}

Node make_primitive(std::string id, std::string op, PrimArgs args, const IpDescriptor *ip)
{
    Node n;
    n.id = std::move(id);
    n.kind = NodeKind::Primitive;
    n.in_ports = primitive_inputs(op, args, ip);
    n.out_ports = primitive_outputs(op, args, ip);
    n.op = std::move(op);
    n.args = std::move(args);
    return n;
}

bool promotable(const WireType &found, const WireType &expected)
{
    if (found.is(TypeKind::Array) || expected.is(TypeKind::Array)) {
        return found.is(TypeKind::Array) && expected.is(TypeKind::Array) && found.length() == expected.length() &&
               promotable(found.element(), expected.element());
    }
    return found.is(TypeKind::Int32) && (expected.is(TypeKind::Float64) || expected.is(TypeKind::FixedPoint));
}

TypeResolution resolve_types(const Node &node, const std::vector<WireType> &inputs, const Project *project)
{
    const PrimitiveInfo *info = find_primitive(node.op);
    if (!info)
        throw Error("E_UNKNOWN_PRIMITIVE", "unknown primitive '" + node.op + "'", node.id, node.span);
    if (inputs.size() != node.in_ports.size())
        throw Error("E_ARITY", node.op + " takes " + std::to_string(node.in_ports.size()) + " inputs", node.id,
                    node.span);

    TypeResolution r;
    r.promote.assign(inputs.size(), std::nullopt);
    auto port_name = [&](std::size_t i) { return node.in_ports[i].name; };

    switch (info->cls) {
    case PrimClass::Arith:
    case PrimClass::Compare: {
        const WireType &x = inputs[0];
        const WireType &y = inputs[1];
        auto shape = broadcast_shape(x, y);
        if (!shape)
            mismatch(node, port_name(1), y, "shape compatible with " + x.to_string());
        WireType out_scalar;
        if (info->cls == PrimClass::Compare && node.op == "Eq" && x.scalar() == y.scalar() &&
            !x.scalar().is_numeric()) {
            out_scalar = WireType::boolean();
        } else {
            auto pair = numeric_pair(x, y);
            if (!pair) {
                const bool x_bad = !x.scalar().is_numeric();
                mismatch(node, port_name(x_bad ? 0 : 1), x_bad ? x : y,
                         x_bad ? "a numeric type" : "a numeric type compatible with " + x.to_string());
            }
            r.promote[0] = pair->promote_x;
            r.promote[1] = pair->promote_y;
            if (info->cls == PrimClass::Compare) {
                out_scalar = WireType::boolean();
            } else if (pair->sx.is(TypeKind::FixedPoint)) {
                if (node.op == "Div")
                    mismatch(node, port_name(0), x, "i32 or f64 (fixed-point Div is not supported)");
                out_scalar = node.op == "Mul" ? fxp::product_type(pair->sx, pair->sy) : fxp::sum_type(pair->sx, pair->sy);
            } else {
                out_scalar = pair->sx;
            }
        }
        r.outputs.push_back(shape->with_scalar(out_scalar));
        return r;
    }
    case PrimClass::Logic: {
        const WireType &x = inputs[0];
        const WireType &y = inputs[1];
        auto shape = broadcast_shape(x, y);
        const WireType &sx = x.scalar();
        if (!sx.is(TypeKind::Boolean) && !sx.is(TypeKind::Int32))
            mismatch(node, "x", x, "bool or i32");
        if (!shape || y.scalar() != sx)
            mismatch(node, "y", y, sx.to_string());
        r.outputs.push_back(shape->with_scalar(sx));
        return r;
    }
    case PrimClass::Not: {
        const WireType &sx = inputs[0].scalar();
        if (!sx.is(TypeKind::Boolean) && !sx.is(TypeKind::Int32))
            mismatch(node, "x", inputs[0], "bool or i32");
        r.outputs.push_back(inputs[0]);
        return r;
    }
    case PrimClass::Select: {
        if (inputs[0] != WireType::boolean())
            mismatch(node, "s", inputs[0], "bool");
        const WireType &t = inputs[1];
        const WireType &f = inputs[2];
        if (t == f) {
            r.outputs.push_back(t);
            return r;
        }
        if (promotable(t, f)) {
            r.promote[1] = f;
            r.outputs.push_back(f);
            return r;
        }
        if (promotable(f, t)) {
            r.promote[2] = t;
            r.outputs.push_back(t);
            return r;
        }
        mismatch(node, "f", f, t.to_string());
    }
    case PrimClass::Const:
        if (!node.args.type)
            throw Error("E_BAD_ARGS", "Const needs a type", node.id, node.span);
        r.outputs.push_back(*node.args.type);
        return r;
    case PrimClass::Convert: {
        if (!node.args.type || !node.args.type->is_scalar())
            throw Error("E_BAD_ARGS", "Convert needs a scalar target type", node.id, node.span);
        const WireType &sx = inputs[0].scalar();
        if (!sx.is_scalar() || !(sx.is_numeric() || sx.is(TypeKind::Boolean)))
            mismatch(node, "x", inputs[0], "bool or numeric");
        r.outputs.push_back(inputs[0].with_scalar(*node.args.type));
        return r;
    }
    case PrimClass::ArrayIndex:
        if (!inputs[0].is(TypeKind::Array))
            mismatch(node, "array", inputs[0], "an array");
        if (inputs[1] != WireType::int32())
            mismatch(node, "index", inputs[1], "i32");
        r.outputs.push_back(inputs[0].element());
        return r;
    case PrimClass::ArrayBuild: {
        if (inputs.empty())
            throw Error("E_BAD_ARGS", "ArrayBuild needs at least one element", node.id, node.span);
        WireType elem = inputs[0];
        for (std::size_t i = 1; i < inputs.size(); ++i)
            if (promotable(elem, inputs[i]))
                elem = inputs[i];
        for (std::size_t i = 0; i < inputs.size(); ++i)
            r.promote[i] = expect(node, port_name(i), inputs[i], elem);
        r.outputs.push_back(WireType::array(elem, inputs.size()));
        return r;
    }
    case PrimClass::Biquad: {
        if (node.args.coefficients.size() != 5)
            throw Error("E_BAD_ARGS", "Biquad needs 5 coefficients (b0 b1 b2 a1 a2)", node.id, node.span);
        const WireType want = inputs[0].with_scalar(WireType::float64());
        if (!inputs[0].scalar().is_numeric() || inputs[0].scalar().is(TypeKind::FixedPoint) ||
            (inputs[0].is(TypeKind::Array) && !inputs[0].element().is_scalar()))
            mismatch(node, "x", inputs[0], "f64 or [f64; n]");
        r.promote[0] = expect(node, "x", inputs[0], want);
        if (inputs[1] != kBiquadState)
            mismatch(node, "state", inputs[1], kBiquadState.to_string());
        r.outputs = {want, kBiquadState};
        return r;
    }
    case PrimClass::FifoRead: {
        const auto &c = channel_of(node, project, ChannelKind::Fifo);
        if (inputs[0] != WireType::boolean())
            mismatch(node, "en", inputs[0], "bool");
        r.outputs = {c.element, WireType::boolean()};
        return r;
    }
    case PrimClass::FifoWrite: {
        const auto &c = channel_of(node, project, ChannelKind::Fifo);
        r.promote[0] = expect(node, "value", inputs[0], c.element);
        if (inputs[1] != WireType::boolean())
            mismatch(node, "en", inputs[1], "bool");
        r.outputs = {WireType::boolean()};
        return r;
    }
    case PrimClass::RegRead:
        r.outputs = {channel_of(node, project, ChannelKind::Register).element};
        return r;
    case PrimClass::RegWrite:
        r.promote[0] = expect(node, "value", inputs[0], channel_of(node, project, ChannelKind::Register).element);
        return r;
    case PrimClass::ScanRead:
    case PrimClass::ScanWrite: {
        const ScanChannelDecl *c = project ? project->find_scan_channel(node.args.ref) : nullptr;
        if (!c)
            throw Error("E_UNKNOWN_CHANNEL", "scan channel '" + node.args.ref + "' is not declared", node.id,
                        node.span);
        if (info->cls == PrimClass::ScanRead) {
            r.outputs = {c->type};
        } else {
            if (!c->output)
                throw Error("E_CHANNEL_KIND", "scan channel '" + c->name + "' is an input", node.id, node.span);
            r.promote[0] = expect(node, "value", inputs[0], c->type);
        }
        return r;
    }
    case PrimClass::FileReadPCM:
        if (node.args.ref.empty() || !node.args.count || *node.args.count < 0)
            throw Error("E_BAD_ARGS", "FileReadPCM needs an input name and a frame length", node.id, node.span);
        r.outputs = {WireType::array(WireType::float64(), static_cast<std::size_t>(*node.args.count)),
                     WireType::int32(), WireType::boolean()};
        return r;
    case PrimClass::AoWrite: {
        if (project && !project->find_ao(node.args.ref))
            throw Error("E_UNKNOWN_CHANNEL", "analog output '" + node.args.ref + "' is not declared", node.id,
                        node.span);
        if (!inputs[0].is_scalar() || !inputs[0].is_numeric())
            mismatch(node, "value", inputs[0], "a numeric scalar");
        if (inputs[1] != WireType::boolean())
            mismatch(node, "en", inputs[1], "bool");
        return r;
    }
    case PrimClass::Ip: {
        const IpDescriptor *ip = project ? project->find_ip(node.args.ref) : nullptr;
        if (!ip)
            throw Error("E_UNKNOWN_IP", "IP '" + node.args.ref + "' is not imported", node.id, node.span);
        const auto ins = ip->inputs();
        for (std::size_t i = 0; i < inputs.size() && i < ins.size(); ++i)
            r.promote[i] = expect(node, port_name(i), inputs[i], ins[i].type);
        for (const auto &p : ip->outputs())
            r.outputs.push_back(p.type);
        return r;
    }
    }
    throw Error("E_UNKNOWN_PRIMITIVE", "unknown primitive '" + node.op + "'", node.id, node.span);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

wide aligned(const Value &v, int fraction_bits)
{
    return static_cast<wide>(v.raw()) << (fraction_bits - v.type().fraction_bits());
}

Value arith_scalar(std::string_view op, const Value &a, const Value &b, const WireType &out, const Node &node)
{
    switch (out.kind()) {
    case TypeKind::Int32: {
        const auto x = static_cast<std::uint32_t>(a.as_i32());
        const auto y = static_cast<std::uint32_t>(b.as_i32());
        if (op == "Add")
            return Value::int32(static_cast<std::int32_t>(x + y));
        if (op == "Sub")
            return Value::int32(static_cast<std::int32_t>(x - y));
        if (op == "Mul")
            return Value::int32(static_cast<std::int32_t>(x * y));
        if (b.as_i32() == 0)
            throw Error("E_RUNTIME", "div_by_zero", node.id, node.span);
        if (a.as_i32() == std::numeric_limits<std::int32_t>::min() && b.as_i32() == -1)
            return a;
        return Value::int32(a.as_i32() / b.as_i32());
    }
    case TypeKind::Float64: {
        const double x = a.as_f64();
        const double y = b.as_f64();
        if (op == "Add")
            return Value::float64(x + y);
        if (op == "Sub")
            return Value::float64(x - y);
        if (op == "Mul")
            return Value::float64(x * y);
        return Value::float64(x / y);
    }
    case TypeKind::FixedPoint: {
        if (op == "Mul") {
            const wide p = static_cast<wide>(a.raw()) * static_cast<wide>(b.raw());
            const int pf = a.type().fraction_bits() + b.type().fraction_bits();
            return Value::fixed_raw(out, fxp::saturate(fxp::shift_round(p, pf - out.fraction_bits()), out.word_bits()));
        }
        const int f = std::max(a.type().fraction_bits(), b.type().fraction_bits());
        const wide s = op == "Add" ? aligned(a, f) + aligned(b, f) : aligned(a, f) - aligned(b, f);
        return Value::fixed_raw(out, fxp::saturate(fxp::shift_round(s, f - out.fraction_bits()), out.word_bits()));
    }
    default:
        break;
    }
    throw Error("E_TYPE_MISMATCH", "arithmetic on " + out.to_string(), node.id, node.span);
}

int compare_scalar(const Value &a, const Value &b)
{
    switch (a.type().kind()) {
    case TypeKind::Boolean:
    case TypeKind::Int32:
        return a.raw() < b.raw() ? -1 : (a.raw() > b.raw() ? 1 : 0);
    case TypeKind::Float64: {
        const double x = a.as_f64(), y = b.as_f64();
        if (x < y)
            return -1;
        if (x > y)
            return 1;
        return x == y ? 0 : 2; // unordered
    }
    case TypeKind::FixedPoint: {
        const int f = std::max(a.type().fraction_bits(), b.type().fraction_bits());
        const wide x = aligned(a, f), y = aligned(b, f);
        return x < y ? -1 : (x > y ? 1 : 0);
    }
    default:
        return a == b ? 0 : 2;
    }
}

template <class F>
Value zip(const Value &a, const Value &b, const WireType &out, F &&f)
{
    if (out.is(TypeKind::Array)) {
        std::vector<Value> elems;
        elems.reserve(out.length());
        for (std::size_t i = 0; i < out.length(); ++i) {
            const Value &x = a.type().is(TypeKind::Array) ? a.elements()[i] : a;
            const Value &y = b.type().is(TypeKind::Array) ? b.elements()[i] : b;
            elems.push_back(zip(x, y, out.element(), f));
        }
        return Value::array(out.element(), std::move(elems));
    }
    return f(a, b, out);
}

template <class F>
Value map1(const Value &a, const WireType &out, F &&f)
{
    if (out.is(TypeKind::Array)) {
        std::vector<Value> elems;
        elems.reserve(out.length());
        for (std::size_t i = 0; i < out.length(); ++i)
            elems.push_back(map1(a.elements()[i], out.element(), f));
        return Value::array(out.element(), std::move(elems));
    }
    return f(a, out);
}

Value convert_scalar(const Value &v, const WireType &to, fxp::Overflow mode)
{
    const WireType i32fx = fxp::promoted_int32();
    const WireType &from = v.type();
    if (to.is(TypeKind::Boolean)) {
        if (from.is(TypeKind::Float64))
            return Value::boolean(v.as_f64() != 0.0);
        return Value::boolean(v.raw() != 0);
    }
    switch (from.kind()) {
    case TypeKind::Boolean:
    case TypeKind::Int32: {
        const std::int64_t i = v.raw();
        if (to.is(TypeKind::Int32))
            return Value::int32(static_cast<std::int32_t>(i));
        if (to.is(TypeKind::Float64))
            return Value::float64(static_cast<double>(i));
        return Value::fixed_raw(to, fxp::convert(i, i32fx, to, mode));
    }
    case TypeKind::Float64:
        if (to.is(TypeKind::Float64))
            return v;
        if (to.is(TypeKind::Int32))
            return Value::int32(static_cast<std::int32_t>(fxp::from_double(v.as_f64(), i32fx, mode)));
        return Value::fixed_raw(to, fxp::from_double(v.as_f64(), to, mode));
    case TypeKind::FixedPoint:
        if (to.is(TypeKind::Float64))
            return Value::float64(fxp::to_double(v.raw(), from));
        if (to.is(TypeKind::Int32))
            return Value::int32(static_cast<std::int32_t>(fxp::convert(v.raw(), from, i32fx, mode)));
        return Value::fixed_raw(to, fxp::convert(v.raw(), from, to, mode));
    default:
        break;
    }
    throw Error("E_TYPE_MISMATCH", "cannot convert " + from.to_string() + " to " + to.to_string());
}

std::vector<double> to_doubles(const Value &v)
{
    if (v.type().is(TypeKind::Array)) {
        std::vector<double> xs;
        xs.reserve(v.elements().size());
        for (const auto &e : v.elements())
            xs.push_back(e.as_f64());
        return xs;
    }
    return {v.as_f64()};
}

Value from_doubles(const std::vector<double> &xs, bool array)
{
    if (!array)
        return Value::float64(xs.front());
    std::vector<Value> elems;
    elems.reserve(xs.size());
    for (double x : xs)
        elems.push_back(Value::float64(x));
    return Value::array(WireType::float64(), std::move(elems));
}

} // namespace

Value convert_value(const Value &v, const WireType &scalar_target, fxp::Overflow mode)
{
    return map1(v, v.type().with_scalar(scalar_target),
                [&](const Value &x, const WireType &t) { return convert_scalar(x, t, mode); });
}

std::vector<double> biquad(std::span<const double> x, const BiquadCoefficients &c, BiquadState &state)
{
    std::vector<double> y(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double out = c.b0 * x[n] + state.s1;
        state.s1 = c.b1 * x[n] - c.a1 * out + state.s2;
        state.s2 = c.b2 * x[n] - c.a2 * out;
        y[n] = out;
    }
    return y;
}

std::vector<Value> fire(const Node &node, std::span<const Value> inputs)
{
    const PrimitiveInfo *info = find_primitive(node.op);
    if (!info)
        throw Error("E_UNKNOWN_PRIMITIVE", "unknown primitive '" + node.op + "'", node.id, node.span);
    if (info->touches_io)
        throw Error("E_RUNTIME", node.op + " needs a runtime environment", node.id, node.span);

    std::vector<WireType> types;
    types.reserve(inputs.size());
    for (const auto &v : inputs)
        types.push_back(v.type());
    const TypeResolution res = resolve_types(node, types, nullptr);
    for (std::size_t i = 0; i < res.promote.size(); ++i)
        if (res.promote[i])
            throw Error("E_TYPE_MISMATCH",
                        "input " + node.in_ports[i].name + " needs conversion to " + res.promote[i]->to_string(),
                        node.id, node.span);

    switch (info->cls) {
    case PrimClass::Arith:
        return {zip(inputs[0], inputs[1], res.outputs[0], [&](const Value &a, const Value &b, const WireType &out) {
            return arith_scalar(node.op, a, b, out, node);
        })};
    case PrimClass::Compare:
        return {zip(inputs[0], inputs[1], res.outputs[0], [&](const Value &a, const Value &b, const WireType &) {
            const int c = compare_scalar(a, b);
            if (node.op == "Gt")
                return Value::boolean(c == 1);
            if (node.op == "Lt")
                return Value::boolean(c == -1);
            return Value::boolean(c == 0);
        })};
    case PrimClass::Logic:
        return {zip(inputs[0], inputs[1], res.outputs[0], [&](const Value &a, const Value &b, const WireType &out) {
            const bool is_and = node.op == "And";
            if (out.is(TypeKind::Boolean))
                return Value::boolean(is_and ? (a.as_bool() && b.as_bool()) : (a.as_bool() || b.as_bool()));
            return Value::int32(is_and ? (a.as_i32() & b.as_i32()) : (a.as_i32() | b.as_i32()));
        })};
    case PrimClass::Not:
        return {map1(inputs[0], res.outputs[0], [](const Value &a, const WireType &out) {
            return out.is(TypeKind::Boolean) ? Value::boolean(!a.as_bool()) : Value::int32(~a.as_i32());
        })};
    case PrimClass::Select:
        return {inputs[0].as_bool() ? inputs[1] : inputs[2]};
    case PrimClass::Const:
        return {node.args.value ? *node.args.value : Value::zero(*node.args.type)};
    case PrimClass::Convert:
        return {convert_value(inputs[0], *node.args.type, node.args.overflow.value_or(fxp::Overflow::Saturate))};
    case PrimClass::ArrayIndex: {
        const auto &elems = inputs[0].elements();
        const std::int32_t i = inputs[1].as_i32();
        if (i < 0 || static_cast<std::size_t>(i) >= elems.size())
            return {Value::zero(res.outputs[0])};
        return {elems[static_cast<std::size_t>(i)]};
    }
    case PrimClass::ArrayBuild:
        return {Value::array(inputs[0].type(), std::vector<Value>(inputs.begin(), inputs.end()))};
    case PrimClass::Biquad: {
        const auto &k = node.args.coefficients;
        BiquadCoefficients c{k[0], k[1], k[2], k[3], k[4]};
        BiquadState st{inputs[1].elements()[0].as_f64(), inputs[1].elements()[1].as_f64()};
        const auto y = biquad(to_doubles(inputs[0]), c, st);
        return {from_doubles(y, inputs[0].type().is(TypeKind::Array)),
                Value::array(WireType::float64(), {Value::float64(st.s1), Value::float64(st.s2)})};
    }
    default:
        break;
    }
    throw Error("E_RUNTIME", node.op + " is not a pure primitive", node.id, node.span);
}

std::vector<Value> fire(std::string_view prim, std::span<const Value> inputs, const PrimArgs &args)
{
    Node n = make_primitive(std::string(prim), std::string(prim), args);
    if (find_primitive(prim) && find_primitive(prim)->cls == PrimClass::ArrayBuild && !args.count) {
        n.args.count = static_cast<std::int64_t>(inputs.size());
        n.in_ports = primitive_inputs(n.op, n.args);
    }
    return fire(n, inputs);
}

} // namespace rioflow
