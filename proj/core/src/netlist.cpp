#include "rioflow/netlist.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rioflow/validate.hpp"

namespace rioflow {

const char *to_string(RegKind k)
{
    switch (k) {
    case RegKind::Shift:
        return "shift";
    case RegKind::Input:
        return "input";
    case RegKind::Output:
        return "output";
    case RegKind::Param:
        return "param";
    case RegKind::Index:
        return "index";
    }
    return "?";
}

const NetRegister *Netlist::find_register(const std::string &name) const
{
    for (const auto &r : registers)
        if (r.name == name)
            return &r;
    return nullptr;
}

std::size_t Netlist::count_ops(const std::string &op) const
{
    return static_cast<std::size_t>(std::count_if(ops.begin(), ops.end(), [&](const NetOp &o) { return o.op == op; }));
}

// ---------------------------------------------------------------------------
// compile_sctl

namespace {

void check_fabric_type(const WireType &t, const std::string &subject, const SourceSpan &span)
{
    if (t.is(TypeKind::Cluster) || (t.is(TypeKind::Array) && !t.element().is_scalar()))
        throw Error("E_SCTL_ILLEGAL_NODE", "fabric wires carry scalars or arrays of scalars, not " + t.to_string(),
                    subject, span);
}

} // namespace

Netlist compile_sctl(const Node &sctl, const DepthTable &t, const Project *p, std::optional<std::int64_t> hz_opt,
                     bool enforce_timing)
{
    if (sctl.kind != NodeKind::Sctl)
        throw Error("E_STRUCTURE", "compile_sctl expects an SCTL node", sctl.id, sctl.span);
    const std::int64_t hz = hz_opt ? *hz_opt : (p ? clock_hz(*p, sctl.clock) : kDefaultFabricClockHz);
    const TimingReport timing = enforce_timing ? check_sctl(sctl, hz, t, p) : analyze_sctl(sctl, hz, t, p);

    Netlist n;
    n.name = sctl.id;
    n.clock = sctl.clock;
    n.hz = hz;
    n.critical_path_ns = timing.path_ns;
    if (sctl.bodies.empty())
        return n;
    const Diagram &body = sctl.bodies[0];

    std::map<Endpoint, int> source_sig;
    auto add_signal = [&](std::string name, const WireType &type, std::optional<Value> constant = std::nullopt) {
        check_fabric_type(type, sctl.id + "/" + name, sctl.span);
        n.signals.push_back({std::move(name), type, std::move(constant)});
        return static_cast<int>(n.signals.size()) - 1;
    };

    std::set<std::string> used_sources;
    for (const auto &w : body.wires)
        if (w.src.boundary())
            used_sources.insert(w.src.port);

    for (const auto &c : body.controls) {
        const int s = add_signal(c.name, c.type);
        source_sig[{"", c.name}] = s;
        n.registers.push_back({c.name, RegKind::Input, c.type, s, -1});
    }
    for (const auto &prm : body.params) {
        const int s = add_signal(prm.name, prm.type);
        source_sig[{"", prm.name}] = s;
        n.registers.push_back({prm.name, RegKind::Param, prm.type, s, -1});
    }
    for (const auto &sh : body.shifts) {
        const int s = add_signal(sh.name, sh.type);
        source_sig[{"", sh.name}] = s;
        n.registers.push_back({sh.name, RegKind::Shift, sh.type, s, -1});
    }
    if (used_sources.count("i")) {
        const int s = add_signal("i", WireType::int32());
        source_sig[{"", "i"}] = s;
        n.registers.push_back({"i", RegKind::Index, WireType::int32(), s, -1});
    }

    std::map<Endpoint, Endpoint> driver;
    for (const auto &w : body.wires)
        for (const auto &d : w.dsts)
            driver[d] = w.src;

    std::set<std::string> billed;
    auto bill = [&](const ChannelDecl *c, bool fabric_reader_here, bool write) {
        if (!c || c->kind != ChannelKind::Fifo || billed.count(c->name))
            return false;
        const bool here = write ? c->reader != Target::Fabric : fabric_reader_here;
        if (here)
            billed.insert(c->name);
        return here;
    };

    for (const auto &id : topo_order(body)) {
        const Node &node = *body.find_node(id);
        const PrimitiveInfo *info = find_primitive(node.op);
        if (info->cls == PrimClass::Const) {
            const Value v = node.args.value ? *node.args.value : Value::zero(*node.args.type);
            source_sig[{node.id, "value"}] = add_signal(node.id + ".value", v.type(), v);
            continue;
        }
        NetOp op;
        op.id = node.id;
        op.op = node.op;
        op.cls = info->cls;
        op.args = node.args;
        op.depth_ns = t.depth(node, p);
        op.resources = t.resources(node, p);
        for (const auto &port : node.in_ports) {
            auto d = driver.find(Endpoint{node.id, port.name});
            if (d == driver.end()) {
                const Value v = port.default_value ? *port.default_value : Value::zero(*port.type);
                op.in.push_back(add_signal(node.id + "." + port.name, v.type(), v));
            } else {
                op.in.push_back(source_sig.at(d->second));
            }
        }
        for (const auto &port : node.out_ports) {
            const int s = add_signal(node.id + "." + port.name, *port.type);
            source_sig[{node.id, port.name}] = s;
            op.out.push_back(s);
        }
        const ChannelDecl *ch = p ? p->find_channel(node.args.ref) : nullptr;
        switch (info->cls) {
        case PrimClass::FifoRead:
        case PrimClass::FifoWrite:
        case PrimClass::RegRead:
        case PrimClass::RegWrite: {
            const bool write = info->cls == PrimClass::FifoWrite || info->cls == PrimClass::RegWrite;
            ChannelPort cp;
            cp.channel = node.args.ref;
            cp.node = node.id;
            cp.write = write;
            if (ch) {
                cp.kind = ch->kind;
                cp.element = ch->element;
                cp.capacity = ch->kind == ChannelKind::Fifo ? ch->capacity : 0;
                cp.holds_storage = bill(ch, !write, write);
            }
            n.channel_ports.push_back(std::move(cp));
            break;
        }
        default:
            break;
        }
        n.ops.push_back(std::move(op));
    }
    for (const auto &prm : body.params) {
        ChannelPort cp;
        cp.channel = prm.name;
        cp.node = prm.name;
        cp.kind = ChannelKind::Register;
        cp.element = prm.type;
        n.channel_ports.push_back(std::move(cp));
    }

    auto sink_driver = [&](const std::string &name) -> int {
        auto d = driver.find(Endpoint{"", name});
        return d == driver.end() ? -1 : source_sig.at(d->second);
    };
    for (auto &r : n.registers)
        if (r.kind == RegKind::Shift)
            r.d = sink_driver(r.name);
    for (const auto &ind : body.indicators) {
        const int q = add_signal(ind.name, ind.type);
        n.registers.push_back({ind.name, RegKind::Output, ind.type, q, sink_driver(ind.name)});
    }
    n.stop = body.has_stop ? sink_driver("stop") : -1;
    return n;
}

ResourceEstimate estimate(const Netlist &n, const DepthTable &t)
{
    ResourceEstimate r;
    for (const auto &op : n.ops)
        r += op.resources;
    for (const auto &reg : n.registers)
        r += t.register_cost(reg.type);
    for (const auto &cp : n.channel_ports)
        if (cp.holds_storage)
            r += t.fifo_cost(cp.element, cp.capacity);
    return r;
}

HlsEstimate hls_estimate(const Diagram &body, const HlsDirectivesIn &d, const DepthTable &t, const Project *p)
{
    if (d.target_ii && *d.target_ii < 1)
        throw Error("E_TARGET_UNREACHABLE", "target II " + std::to_string(*d.target_ii) + " is below 1");
    if (d.unroll < 1)
        throw Error("E_CONFIG", "unroll factor must be at least 1");
    HlsEstimate e;
    e.target_ii = d.target_ii;
    std::int64_t mul_dsp = 0;
    std::function<void(const Diagram &)> walk = [&](const Diagram &g) {
        for (const auto &node : g.nodes) {
            for (const auto &b : node.bodies)
                walk(b);
            if (node.kind != NodeKind::Primitive)
                continue;
            const PrimitiveInfo *info = find_primitive(node.op);
            if (info && info->host_only)
                throw Error("E_HOST_PRIM_IN_FABRIC", node.op + " cannot be synthesized", node.id, node.span);
            ResourceEstimate r = t.resources(node, p);
            if (node.op == "Mul") {
                ++e.multipliers;
                mul_dsp = std::max(mul_dsp, r.dsp);
                r.dsp = 0;
            }
            e.resources += r;
        }
    };
    walk(body);
    e.ii = std::max<std::int64_t>(1, (e.multipliers + d.unroll - 1) / d.unroll);
    if (e.multipliers > 0)
        e.resources.dsp += d.unroll * mul_dsp;
    e.met = !d.target_ii || e.ii <= *d.target_ii;
    return e;
}

// ---------------------------------------------------------------------------
// Word-level evaluation

namespace {

using wide = __int128;

struct Word {
    std::int64_t i = 0;
    double f = 0.0;
};

using Sig = std::vector<Word>;

wide shl_sat(wide v, int s)
{
    if (s <= 0)
        return v;
    const wide lim = (wide{1} << 125);
    for (int k = 0; k < s; ++k) {
        if (v >= lim || v <= -lim)
            return v < 0 ? -lim : lim;
        v *= 2;
    }
    return v;
}

// Scale by 2^-s, ties to even.
wide scale_down(wide v, int s)
{
    if (s <= 0)
        return shl_sat(v, -s);
    if (s >= 127)
        return 0;
    wide q = v >> s;
    const wide r = v - (q << s);
    const wide half = wide{1} << (s - 1);
    if (r > half || (r == half && (q & 1) != 0))
        ++q;
    return q;
}

std::int64_t clamp_bits(wide v, int w)
{
    if (w >= 64)
        return v > INT64_MAX ? INT64_MAX : (v < INT64_MIN ? INT64_MIN : static_cast<std::int64_t>(v));
    const wide hi = (wide{1} << (w - 1)) - 1;
    const wide lo = -(wide{1} << (w - 1));
    return static_cast<std::int64_t>(v > hi ? hi : (v < lo ? lo : v));
}

std::int64_t wrap_bits(wide v, int w)
{
    const auto u = static_cast<std::uint64_t>(static_cast<unsigned __int128>(v));
    if (w >= 64)
        return static_cast<std::int64_t>(u);
    const std::uint64_t m = (std::uint64_t{1} << w) - 1;
    std::uint64_t x = u & m;
    if (x >> (w - 1))
        x |= ~m;
    return static_cast<std::int64_t>(x);
}

std::int64_t fit_bits(wide v, int w, bool wrap)
{
    return wrap ? wrap_bits(v, w) : clamp_bits(v, w);
}

std::int64_t real_to_raw(double x, int frac, int w, bool wrap)
{
    if (std::isnan(x))
        return 0;
    const double s = std::nearbyint(std::ldexp(x, frac));
    const double top = std::ldexp(1.0, w - 1);
    if (!wrap) {
        if (s >= top)
            return clamp_bits(wide{1} << 126, w);
        if (s < -top)
            return clamp_bits(-(wide{1} << 126), w);
        return static_cast<std::int64_t>(s);
    }
    if (std::isinf(s))
        return 0;
    return wrap_bits(static_cast<wide>(std::fmod(s, std::ldexp(1.0, w))), w);
}

Sig to_sig(const Value &v)
{
    if (v.type().is(TypeKind::Array)) {
        Sig s;
        s.reserve(v.elements().size());
        for (const auto &e : v.elements())
            s.push_back(to_sig(e).front());
        return s;
    }
    Word w;
    if (v.type().is(TypeKind::Float64))
        w.f = v.as_f64();
    else
        w.i = v.raw();
    return {w};
}

Value scalar_value(const Word &w, const WireType &t)
{
    switch (t.kind()) {
    case TypeKind::Boolean:
        return Value::boolean(w.i != 0);
    case TypeKind::Int32:
        return Value::int32(static_cast<std::int32_t>(w.i));
    case TypeKind::Float64:
        return Value::float64(w.f);
    case TypeKind::FixedPoint:
        return Value::fixed_raw(t, w.i);
    default:
        return Value::zero(t);
    }
}

Value from_sig(const Sig &s, const WireType &t)
{
    if (t.is(TypeKind::Array)) {
        std::vector<Value> elems;
        elems.reserve(t.length());
        for (std::size_t k = 0; k < t.length(); ++k)
            elems.push_back(scalar_value(s[k], t.element()));
        return Value::array(t.element(), std::move(elems));
    }
    return scalar_value(s.front(), t);
}

enum class Micro : std::uint8_t {
    AddI,
    SubI,
    MulI,
    AddF,
    SubF,
    MulF,
    AddX,
    SubX,
    MulX,
    CmpI,
    CmpF,
    CmpX,
    AndB,
    OrB,
    AndI,
    OrI,
    NotB,
    NotI,
    Select,
    Convert,
    Index,
    Build,
    FifoRead,
    FifoWrite,
    RegRead,
    RegWrite,
    AoWrite,
    Ip,
};

enum class Cmp : std::uint8_t { Gt, Lt, Eq };

struct Compiled {
    Micro m;
    Cmp cmp = Cmp::Eq;
    std::vector<int> in;
    std::vector<int> out;
    bool a_arr = false;
    bool b_arr = false;
    std::size_t len = 1; // elements of the (first) output
    int la = 0, lb = 0; // alignment left shifts
    int rs = 0;         // result scale-down
    int w = 0;          // result word bits
    bool wrap = false;
    // Convert
    TypeKind from = TypeKind::Int32;
    TypeKind to = TypeKind::Int32;
    int ff = 0, fo = 0;
    std::string ref;
    WireType out_type;
    std::size_t ip = 0;
};

Micro arith(const std::string &op, TypeKind k)
{
    const int base = op == "Add" ? 0 : op == "Sub" ? 1 : 2;
    switch (k) {
    case TypeKind::Int32:
        return static_cast<Micro>(static_cast<int>(Micro::AddI) + base);
    case TypeKind::Float64:
        return static_cast<Micro>(static_cast<int>(Micro::AddF) + base);
    default:
        return static_cast<Micro>(static_cast<int>(Micro::AddX) + base);
    }
}

} // namespace

struct NetlistState::Impl {
    const Netlist *net;
    std::vector<Sig> sig;
    std::vector<Compiled> code;
    std::vector<IpInstance> ips;
    std::map<std::string, Sig> regs;
    std::map<std::string, Value> last_sinks;
    bool halted = false;
    std::int64_t iters = 0;

    Impl(const Netlist &n, const std::map<std::string, Value> &inputs, const Project *p) : net(&n)
    {
        sig.resize(n.signals.size());
        for (std::size_t k = 0; k < n.signals.size(); ++k) {
            const auto &s = n.signals[k];
            sig[k] = to_sig(s.constant ? *s.constant : Value::zero(s.type));
        }
        for (const auto &r : n.registers) {
            Sig v = to_sig(Value::zero(r.type));
            if (r.kind == RegKind::Input || r.kind == RegKind::Shift) {
                auto it = inputs.find(r.name);
                if (it != inputs.end()) {
                    if (it->second.type() != r.type)
                        throw Error("E_TYPE_MISMATCH", "input '" + r.name + "' of " + n.name + " must be " +
                                                           r.type.to_string());
                    v = to_sig(it->second);
                }
            }
            regs[r.name] = v;
        }
        for (const auto &op : n.ops)
            code.push_back(compile(op, p));
    }

    const WireType &type_of(int s) const { return net->signals[static_cast<std::size_t>(s)].type; }

    Compiled compile(const NetOp &op, const Project *p)
    {
        Compiled c;
        c.in = op.in;
        c.out = op.out;
        c.ref = op.args.ref;
        if (!op.out.empty()) {
            c.out_type = type_of(op.out[0]);
            c.len = c.out_type.is(TypeKind::Array) ? c.out_type.length() : 1;
        }
        if (op.in.size() >= 1)
            c.a_arr = type_of(op.in[0]).is(TypeKind::Array);
        if (op.in.size() >= 2)
            c.b_arr = type_of(op.in[1]).is(TypeKind::Array);
        switch (op.cls) {
        case PrimClass::Arith: {
            const WireType &a = type_of(op.in[0]).scalar();
            const WireType &b = type_of(op.in[1]).scalar();
            const WireType &o = c.out_type.scalar();
            if (op.op == "Div")
                throw Error("E_SCTL_ILLEGAL_NODE", "Div is not available on the fabric", op.id);
            c.m = arith(op.op, o.kind());
            if (o.is(TypeKind::FixedPoint)) {
                c.w = o.word_bits();
                if (op.op == "Mul") {
                    c.rs = a.fraction_bits() + b.fraction_bits() - o.fraction_bits();
                } else {
                    const int f = std::max(a.fraction_bits(), b.fraction_bits());
                    c.la = f - a.fraction_bits();
                    c.lb = f - b.fraction_bits();
                    c.rs = f - o.fraction_bits();
                }
            }
            break;
        }
        case PrimClass::Compare: {
            const WireType &a = type_of(op.in[0]).scalar();
            const WireType &b = type_of(op.in[1]).scalar();
            c.cmp = op.op == "Gt" ? Cmp::Gt : op.op == "Lt" ? Cmp::Lt : Cmp::Eq;
            if (a.is(TypeKind::Float64)) {
                c.m = Micro::CmpF;
            } else if (a.is(TypeKind::FixedPoint)) {
                c.m = Micro::CmpX;
                const int f = std::max(a.fraction_bits(), b.fraction_bits());
                c.la = f - a.fraction_bits();
                c.lb = f - b.fraction_bits();
            } else {
                c.m = Micro::CmpI;
            }
            break;
        }
        case PrimClass::Logic: {
            const bool b = c.out_type.scalar().is(TypeKind::Boolean);
            c.m = op.op == "And" ? (b ? Micro::AndB : Micro::AndI) : (b ? Micro::OrB : Micro::OrI);
            break;
        }
        case PrimClass::Not:
            c.m = c.out_type.scalar().is(TypeKind::Boolean) ? Micro::NotB : Micro::NotI;
            break;
        case PrimClass::Select:
            c.m = Micro::Select;
            break;
        case PrimClass::Convert: {
            c.m = Micro::Convert;
            const WireType &from = type_of(op.in[0]).scalar();
            const WireType &to = c.out_type.scalar();
            c.from = from.kind();
            c.to = to.kind();
            c.ff = from.is(TypeKind::FixedPoint) ? from.fraction_bits() : 0;
            c.fo = to.is(TypeKind::FixedPoint) ? to.fraction_bits() : 0;
            c.w = to.is(TypeKind::FixedPoint) ? to.word_bits() : 32;
            c.wrap = op.args.overflow == fxp::Overflow::Wrap;
            break;
        }
        case PrimClass::ArrayIndex:
            c.m = Micro::Index;
            break;
        case PrimClass::ArrayBuild:
            c.m = Micro::Build;
            break;
        case PrimClass::FifoRead:
            c.m = Micro::FifoRead;
            break;
        case PrimClass::FifoWrite:
            c.m = Micro::FifoWrite;
            break;
        case PrimClass::RegRead:
            c.m = Micro::RegRead;
            break;
        case PrimClass::RegWrite:
            c.m = Micro::RegWrite;
            break;
        case PrimClass::AoWrite:
            c.m = Micro::AoWrite;
            break;
        case PrimClass::Ip: {
            const IpDescriptor *d = p ? p->find_ip(op.args.ref) : nullptr;
            if (!d)
                throw Error("E_UNKNOWN_IP", "IP '" + op.args.ref + "' is not declared", op.id);
            c.m = Micro::Ip;
            c.ip = ips.size();
            ips.emplace_back(*d);
            break;
        }
        default:
            throw Error("E_SCTL_ILLEGAL_NODE", op.op + " has no fabric implementation", op.id);
        }
        return c;
    }

    Value value_of(int s) const { return from_sig(sig[static_cast<std::size_t>(s)], type_of(s)); }

    template <class F>
    void zip(const Compiled &c, F &&f)
    {
        const Sig &a = sig[static_cast<std::size_t>(c.in[0])];
        const Sig &b = sig[static_cast<std::size_t>(c.in[1])];
        Sig &o = sig[static_cast<std::size_t>(c.out[0])];
        o.resize(c.len);
        for (std::size_t k = 0; k < c.len; ++k)
            o[k] = f(a[c.a_arr ? k : 0], b[c.b_arr ? k : 0]);
    }

    template <class F>
    void map1(const Compiled &c, F &&f)
    {
        const Sig &a = sig[static_cast<std::size_t>(c.in[0])];
        Sig &o = sig[static_cast<std::size_t>(c.out[0])];
        o.resize(c.len);
        for (std::size_t k = 0; k < c.len; ++k)
            o[k] = f(a[c.a_arr ? k : 0]);
    }

    static Word i32(std::uint32_t v) { return {static_cast<std::int32_t>(v), 0.0}; }
    static Word flag(bool b) { return {b ? 1 : 0, 0.0}; }

    Word convert(const Compiled &c, const Word &x) const
    {
        if (c.to == TypeKind::Boolean)
            return flag(c.from == TypeKind::Float64 ? x.f != 0.0 : x.i != 0);
        Word r;
        switch (c.from) {
        case TypeKind::Float64:
            if (c.to == TypeKind::Float64)
                return x;
            r.i = real_to_raw(x.f, c.fo, c.w, c.wrap);
            return r;
        case TypeKind::FixedPoint:
            if (c.to == TypeKind::Float64) {
                r.f = std::ldexp(static_cast<double>(x.i), -c.ff);
                return r;
            }
            r.i = fit_bits(scale_down(x.i, c.ff - c.fo), c.w, c.wrap);
            return r;
        default: // bool, i32
            if (c.to == TypeKind::Float64) {
                r.f = static_cast<double>(x.i);
                return r;
            }
            if (c.to == TypeKind::Int32) {
                r.i = static_cast<std::int32_t>(x.i);
                return r;
            }
            r.i = fit_bits(scale_down(x.i, -c.fo), c.w, c.wrap);
            return r;
        }
    }

    void eval(const Compiled &c, FabricPorts &io)
    {
        switch (c.m) {
        case Micro::AddI:
            return zip(c, [](Word a, Word b) { return i32(static_cast<std::uint32_t>(a.i) + static_cast<std::uint32_t>(b.i)); });
        case Micro::SubI:
            return zip(c, [](Word a, Word b) { return i32(static_cast<std::uint32_t>(a.i) - static_cast<std::uint32_t>(b.i)); });
        case Micro::MulI:
            return zip(c, [](Word a, Word b) { return i32(static_cast<std::uint32_t>(a.i) * static_cast<std::uint32_t>(b.i)); });
        case Micro::AddF:
            return zip(c, [](Word a, Word b) { return Word{0, a.f + b.f}; });
        case Micro::SubF:
            return zip(c, [](Word a, Word b) { return Word{0, a.f - b.f}; });
        case Micro::MulF:
            return zip(c, [](Word a, Word b) { return Word{0, a.f * b.f}; });
        case Micro::AddX:
            return zip(c, [&](Word a, Word b) {
                return Word{clamp_bits(scale_down(shl_sat(a.i, c.la) + shl_sat(b.i, c.lb), c.rs), c.w), 0.0};
            });
        case Micro::SubX:
            return zip(c, [&](Word a, Word b) {
                return Word{clamp_bits(scale_down(shl_sat(a.i, c.la) - shl_sat(b.i, c.lb), c.rs), c.w), 0.0};
            });
        case Micro::MulX:
            return zip(c, [&](Word a, Word b) {
                return Word{clamp_bits(scale_down(static_cast<wide>(a.i) * b.i, c.rs), c.w), 0.0};
            });
        case Micro::CmpI:
            return zip(c, [&](Word a, Word b) {
                return flag(c.cmp == Cmp::Gt ? a.i > b.i : c.cmp == Cmp::Lt ? a.i < b.i : a.i == b.i);
            });
        case Micro::CmpF:
            return zip(c, [&](Word a, Word b) {
                return flag(c.cmp == Cmp::Gt ? a.f > b.f : c.cmp == Cmp::Lt ? a.f < b.f : a.f == b.f);
            });
        case Micro::CmpX:
            return zip(c, [&](Word a, Word b) {
                const wide x = shl_sat(a.i, c.la), y = shl_sat(b.i, c.lb);
                return flag(c.cmp == Cmp::Gt ? x > y : c.cmp == Cmp::Lt ? x < y : x == y);
            });
        case Micro::AndB:
            return zip(c, [](Word a, Word b) { return flag(a.i != 0 && b.i != 0); });
        case Micro::OrB:
            return zip(c, [](Word a, Word b) { return flag(a.i != 0 || b.i != 0); });
        case Micro::AndI:
            return zip(c, [](Word a, Word b) { return i32(static_cast<std::uint32_t>(a.i & b.i)); });
        case Micro::OrI:
            return zip(c, [](Word a, Word b) { return i32(static_cast<std::uint32_t>(a.i | b.i)); });
        case Micro::NotB:
            return map1(c, [](Word a) { return flag(a.i == 0); });
        case Micro::NotI:
            return map1(c, [](Word a) { return i32(~static_cast<std::uint32_t>(a.i)); });
        case Micro::Select: {
            const bool s = sig[static_cast<std::size_t>(c.in[0])].front().i != 0;
            sig[static_cast<std::size_t>(c.out[0])] = sig[static_cast<std::size_t>(c.in[s ? 1 : 2])];
            return;
        }
        case Micro::Convert:
            return map1(c, [&](Word a) { return convert(c, a); });
        case Micro::Index: {
            const Sig &a = sig[static_cast<std::size_t>(c.in[0])];
            const std::int64_t k = static_cast<std::int32_t>(sig[static_cast<std::size_t>(c.in[1])].front().i);
            sig[static_cast<std::size_t>(c.out[0])] =
                k >= 0 && static_cast<std::size_t>(k) < a.size() ? Sig{a[static_cast<std::size_t>(k)]} : Sig{Word{}};
            return;
        }
        case Micro::Build: {
            Sig o;
            for (int s : c.in)
                o.push_back(sig[static_cast<std::size_t>(s)].front());
            sig[static_cast<std::size_t>(c.out[0])] = std::move(o);
            return;
        }
        case Micro::FifoRead: {
            const bool en = sig[static_cast<std::size_t>(c.in[0])].front().i != 0;
            std::optional<Value> v = en ? io.fifo_read(c.ref) : std::nullopt;
            sig[static_cast<std::size_t>(c.out[0])] = v ? to_sig(*v) : to_sig(Value::zero(type_of(c.out[0])));
            sig[static_cast<std::size_t>(c.out[1])] = {flag(v.has_value())};
            return;
        }
        case Micro::FifoWrite: {
            const bool en = sig[static_cast<std::size_t>(c.in[1])].front().i != 0;
            const bool ok = en && io.fifo_write(c.ref, value_of(c.in[0]));
            sig[static_cast<std::size_t>(c.out[0])] = {flag(ok)};
            return;
        }
        case Micro::RegRead:
            sig[static_cast<std::size_t>(c.out[0])] = to_sig(io.reg_read(c.ref));
            return;
        case Micro::RegWrite:
            io.reg_write(c.ref, value_of(c.in[0]));
            return;
        case Micro::AoWrite:
            if (sig[static_cast<std::size_t>(c.in[1])].front().i != 0)
                io.ao_write(c.ref, value_of(c.in[0]));
            return;
        case Micro::Ip: {
            std::vector<Value> in;
            for (int s : c.in)
                in.push_back(value_of(s));
            const auto out = ips[c.ip].step(in);
            for (std::size_t k = 0; k < c.out.size() && k < out.size(); ++k)
                sig[static_cast<std::size_t>(c.out[k])] = to_sig(out[k]);
            return;
        }
        }
    }

    void tick(FabricPorts &io)
    {
        if (halted)
            return;
        for (const auto &r : net->registers) {
            if (r.kind == RegKind::Param)
                regs[r.name] = to_sig(io.reg_read(r.name));
            if (r.q >= 0 && r.kind != RegKind::Output)
                sig[static_cast<std::size_t>(r.q)] = regs[r.name];
        }
        for (const auto &c : code)
            eval(c, io);
        last_sinks.clear();
        for (const auto &r : net->registers) {
            if (r.kind == RegKind::Index) {
                Sig &v = regs[r.name];
                v.front().i = static_cast<std::int32_t>(static_cast<std::uint32_t>(v.front().i) + 1u);
            } else if ((r.kind == RegKind::Shift || r.kind == RegKind::Output) && r.d >= 0) {
                regs[r.name] = sig[static_cast<std::size_t>(r.d)];
                last_sinks[r.name] = from_sig(regs[r.name], r.type);
            }
        }
        ++iters;
        if (net->stop >= 0) {
            const bool stop = sig[static_cast<std::size_t>(net->stop)].front().i != 0;
            last_sinks["stop"] = Value::boolean(stop);
            halted = stop;
        }
    }
};

NetlistState::NetlistState(const Netlist &n, const std::map<std::string, Value> &inputs, const Project *p)
    : impl_(std::make_unique<Impl>(n, inputs, p))
{
}

NetlistState::~NetlistState() = default;
NetlistState::NetlistState(NetlistState &&) noexcept = default;

void NetlistState::tick(FabricPorts &io)
{
    impl_->tick(io);
}

bool NetlistState::halted() const
{
    return impl_->halted;
}

std::int64_t NetlistState::iterations() const
{
    return impl_->iters;
}

Value NetlistState::reg(const std::string &name) const
{
    auto it = impl_->regs.find(name);
    const NetRegister *r = impl_->net->find_register(name);
    if (it == impl_->regs.end() || !r)
        throw Error("E_UNKNOWN_NODE", "no register '" + name + "' in " + impl_->net->name, name);
    return from_sig(it->second, r->type);
}

std::map<std::string, Value> NetlistState::sinks() const
{
    return impl_->last_sinks;
}

const Netlist &NetlistState::netlist() const
{
    return *impl_->net;
}

} // namespace rioflow
