#include "rioflow/elaborate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rioflow/primitives.hpp"
#include "rioflow/validate.hpp"

namespace rioflow {

// ---------------------------------------------------------------------------
// expand

namespace {

struct Edge {
    Endpoint src;
    Endpoint dst;
    SourceSpan span;
};

class Expander {
public:
    explicit Expander(const Project &p) : p_(p) {}

    const VIGraph &vi(const std::string &name, const SourceSpan &span)
    {
        if (auto it = done_.find(name); it != done_.end())
            return it->second;
        auto src = p_.vis.find(name);
        if (src == p_.vis.end())
            throw Error("E_UNRESOLVED_SUBVI", "sub-VI '" + name + "' is not defined", name, span);
        if (std::find(stack_.begin(), stack_.end(), name) != stack_.end()) {
            std::string path;
            auto it = std::find(stack_.begin(), stack_.end(), name);
            for (; it != stack_.end(); ++it)
                path += *it + " -> ";
            throw Error("E_RECURSION", "recursive sub-VI reference " + path + name, name, span);
        }
        stack_.push_back(name);
        VIGraph out = src->second;
        diagram(out.diagram);
        stack_.pop_back();
        return done_.emplace(name, std::move(out)).first->second;
    }

private:
    void diagram(Diagram &d)
    {
        for (std::size_t k = 0; k < d.nodes.size();) {
            Node &n = d.nodes[k];
            for (auto &b : n.bodies)
                diagram(b);
            if (n.kind != NodeKind::SubVi) {
                ++k;
                continue;
            }
            Node inst = std::move(n);
            const VIGraph &child = vi(inst.op, inst.span);
            if (!child.diagram.params.empty())
                throw Error("E_SUBVI_PARAM", "sub-VI '" + child.name + "' declares run-time parameters", inst.id,
                            inst.span);
            const std::size_t added = inline_child(d, k, inst, child);
            k += added;
        }
    }

    /// Replaces d.nodes[at] (already moved into `inst`) with the child's nodes.
    std::size_t inline_child(Diagram &d, std::size_t at, const Node &inst, const VIGraph &child)
    {
        const std::string prefix = inst.id + "/";
        std::vector<Node> nodes;
        for (const auto &cn : child.diagram.nodes) {
            Node c = cn;
            c.id = prefix + cn.id;
            if (c.target == Target::Inherit)
                c.target = inst.target != Target::Inherit ? inst.target : child.target;
            nodes.push_back(std::move(c));
        }
        d.nodes.erase(d.nodes.begin() + static_cast<std::ptrdiff_t>(at));
        d.nodes.insert(d.nodes.begin() + static_cast<std::ptrdiff_t>(at), nodes.begin(), nodes.end());

        auto junction = [&](const Endpoint &e) { return e.node == inst.id; };
        std::vector<Edge> edges;
        for (const auto &w : d.wires)
            for (std::size_t i = 0; i < w.dsts.size(); ++i)
                edges.push_back({w.src, w.dsts[i], i < w.dst_spans.size() ? w.dst_spans[i] : w.span});
        for (const auto &w : child.diagram.wires) {
            auto map = [&](const Endpoint &e) {
                return e.boundary() ? Endpoint{inst.id, e.port} : Endpoint{prefix + e.node, e.port};
            };
            for (const auto &dst : w.dsts)
                edges.push_back({map(w.src), map(dst), inst.span});
        }

        std::multimap<Endpoint, const Edge *> from;
        for (const auto &e : edges)
            from.emplace(e.src, &e);
        std::vector<Wire> wires;
        std::map<Endpoint, std::size_t> index;
        std::function<void(const Endpoint &, const Endpoint &, const SourceSpan &, const SourceSpan &)> emit =
            [&](const Endpoint &src, const Endpoint &dst, const SourceSpan &wspan, const SourceSpan &dspan) {
                if (junction(dst)) {
                    auto [lo, hi] = from.equal_range(dst);
                    for (auto it = lo; it != hi; ++it)
                        emit(src, it->second->dst, wspan, dspan);
                    return;
                }
                auto [it, fresh] = index.emplace(src, wires.size());
                if (fresh) {
                    Wire w;
                    w.src = src;
                    w.span = wspan;
                    wires.push_back(std::move(w));
                }
                wires[it->second].dsts.push_back(dst);
                wires[it->second].dst_spans.push_back(dspan);
            };
        for (const auto &e : edges)
            if (!junction(e.src))
                emit(e.src, e.dst, e.span, e.span);
        d.wires = std::move(wires);
        return nodes.size();
    }

    const Project &p_;
    std::map<std::string, VIGraph> done_;
    std::vector<std::string> stack_;
};

} // namespace

Project expand(const Project &p)
{
    Expander ex(p);
    Project out = p;
    for (auto &[name, vi] : out.vis)
        vi = ex.vi(name, vi.span);
    return out;
}

// ---------------------------------------------------------------------------
// infer_types

namespace {

std::string type_tag(const WireType &t)
{
    std::string s = t.to_string();
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out += c;
        else if (c == ',' || c == ';')
            out += '_';
    }
    return out;
}

class Typer {
public:
    Typer(Diagram &d, const Project &p) : d_(d), p_(p) {}

    void run()
    {
        for (const auto &w : d_.wires)
            for (const auto &dst : w.dsts)
                driver_[dst] = w.src;
        for (const auto &name : d_.source_names())
            types_[Endpoint{"", name}] = *d_.source_type(name);

        for (const auto &id : topo_order(d_)) {
            const std::size_t idx = index_of(id);
            type_node(idx);
        }
        // Boundary sinks.
        for (const auto &name : d_.sink_names()) {
            const Endpoint sink{"", name};
            auto it = driver_.find(sink);
            if (it == driver_.end())
                continue;
            const WireType expected = *d_.sink_type(name);
            const WireType found = source_type(it->second, sink);
            conform(sink, found, expected);
        }
    }

private:
    std::size_t index_of(const std::string &id) const
    {
        for (std::size_t i = 0; i < d_.nodes.size(); ++i)
            if (d_.nodes[i].id == id)
                return i;
        throw Error("E_UNKNOWN_NODE", "unknown node '" + id + "'", id);
    }

    WireType source_type(const Endpoint &src, const Endpoint &dst) const
    {
        auto it = types_.find(src);
        if (it == types_.end())
            throw Error("E_TYPE_MISMATCH", "source '" + src.to_string() + "' has no type", dst.to_string(),
                        span_of(dst));
        return it->second;
    }

    SourceSpan span_of(const Endpoint &dst) const
    {
        for (const auto &w : d_.wires)
            for (std::size_t i = 0; i < w.dsts.size(); ++i)
                if (w.dsts[i] == dst)
                    return i < w.dst_spans.size() ? w.dst_spans[i] : w.span;
        return {};
    }

    /// Makes the value arriving at `dst` have type `expected`, inserting a
    /// Convert when promotion is legal.
    void conform(const Endpoint &dst, const WireType &found, const WireType &expected)
    {
        if (found == expected)
            return;
        const Endpoint src = driver_.at(dst);
        if (!promotable(found, expected))
            throw Error("E_TYPE_MISMATCH",
                        "wire " + src.to_string() + " -> " + dst.to_string() + ": found " + found.to_string() +
                            ", expected " + expected.to_string(),
                        src.to_string() + " -> " + dst.to_string(), span_of(dst));
        insert_convert(dst, src, expected);
    }

    void insert_convert(const Endpoint &dst, const Endpoint &src, const WireType &expected)
    {
        const auto key = std::make_pair(src, expected.to_string());
        std::string id;
        if (auto it = converts_.find(key); it != converts_.end()) {
            id = it->second;
        } else {
            const std::string base = "cvt_" + (src.boundary() ? src.port : src.node + "_" + src.port) + "_" +
                                     type_tag(expected.scalar());
            id = base;
            for (int k = 2; d_.find_node(id); ++k)
                id = base + "_" + std::to_string(k);
            PrimArgs args;
            args.type = expected.scalar();
            Node c = make_primitive(id, "Convert", args);
            c.in_ports[0].type = types_.at(src);
            c.out_ports[0].type = expected;
            d_.nodes.push_back(std::move(c));
            add_dst(src, Endpoint{id, "x"}, span_of(dst));
            driver_[Endpoint{id, "x"}] = src;
            types_[Endpoint{id, "value"}] = expected;
            converts_.emplace(key, id);
        }
        const SourceSpan sp = span_of(dst);
        remove_dst(src, dst);
        add_dst(Endpoint{id, "value"}, dst, sp);
        driver_[dst] = Endpoint{id, "value"};
    }

    void remove_dst(const Endpoint &src, const Endpoint &dst)
    {
        for (auto it = d_.wires.begin(); it != d_.wires.end(); ++it) {
            if (it->src != src)
                continue;
            for (std::size_t i = 0; i < it->dsts.size(); ++i) {
                if (it->dsts[i] == dst) {
                    it->dsts.erase(it->dsts.begin() + static_cast<std::ptrdiff_t>(i));
                    if (i < it->dst_spans.size())
                        it->dst_spans.erase(it->dst_spans.begin() + static_cast<std::ptrdiff_t>(i));
                    break;
                }
            }
            if (it->dsts.empty())
                d_.wires.erase(it);
            return;
        }
    }

    void add_dst(const Endpoint &src, const Endpoint &dst, const SourceSpan &sp)
    {
        for (auto &w : d_.wires) {
            if (w.src == src) {
                w.dsts.push_back(dst);
                w.dst_spans.push_back(sp);
                return;
            }
        }
        Wire w;
        w.src = src;
        w.dsts = {dst};
        w.dst_spans = {sp};
        w.span = sp;
        d_.wires.push_back(std::move(w));
    }

    void type_node(std::size_t idx)
    {
        // Note: d_.nodes may grow (Convert insertion), so re-fetch by index.
        std::vector<WireType> inputs;
        {
            const Node &n = d_.nodes[idx];
            for (const auto &port : n.in_ports) {
                const Endpoint dst{n.id, port.name};
                auto it = driver_.find(dst);
                if (it != driver_.end()) {
                    inputs.push_back(source_type(it->second, dst));
                } else if (port.type) {
                    inputs.push_back(*port.type);
                } else {
                    throw Error("E_UNWIRED_INPUT", "input '" + port.name + "' is not wired", n.id + "." + port.name,
                                n.span);
                }
            }
        }
        Node &n = d_.nodes[idx];
        std::vector<std::optional<WireType>> promote(inputs.size());
        std::vector<WireType> outputs;
        if (n.kind == NodeKind::Primitive) {
            TypeResolution r = resolve_types(n, inputs, &p_);
            promote = std::move(r.promote);
            outputs = std::move(r.outputs);
        } else {
            if (n.is_structure())
                for (auto &b : n.bodies)
                    b = infer_types(b, p_);
            for (std::size_t i = 0; i < n.in_ports.size(); ++i) {
                const WireType expected = *n.in_ports[i].type;
                if (inputs[i] == expected)
                    continue;
                const Endpoint dst{n.id, n.in_ports[i].name};
                if (!driver_.count(dst) || !promotable(inputs[i], expected)) {
                    const std::string src = driver_.count(dst) ? driver_.at(dst).to_string() : "?";
                    throw Error("E_TYPE_MISMATCH",
                                "wire " + src + " -> " + dst.to_string() + ": found " + inputs[i].to_string() +
                                    ", expected " + expected.to_string(),
                                src + " -> " + dst.to_string(), span_of(dst));
                }
                promote[i] = expected;
            }
            for (const auto &port : n.out_ports)
                outputs.push_back(*port.type);
        }
        const std::string id = n.id;
        std::vector<std::string> in_names;
        for (const auto &port : n.in_ports)
            in_names.push_back(port.name);
        for (std::size_t i = 0; i < in_names.size(); ++i) {
            const Endpoint dst{id, in_names[i]};
            if (promote[i] && driver_.count(dst)) {
                insert_convert(dst, driver_.at(dst), *promote[i]);
                inputs[i] = *promote[i];
            }
        }
        Node &m = d_.nodes[idx];
        for (std::size_t i = 0; i < m.in_ports.size(); ++i)
            m.in_ports[i].type = inputs[i];
        for (std::size_t i = 0; i < m.out_ports.size() && i < outputs.size(); ++i) {
            m.out_ports[i].type = outputs[i];
            types_[Endpoint{id, m.out_ports[i].name}] = outputs[i];
        }
    }

    Diagram &d_;
    const Project &p_;
    std::map<Endpoint, Endpoint> driver_;
    std::map<Endpoint, WireType> types_;
    std::map<std::pair<Endpoint, std::string>, std::string> converts_;
};

} // namespace

Diagram infer_types(const Diagram &d, const Project &p)
{
    Diagram out = d;
    Typer(out, p).run();
    return out;
}

Project infer_types(const Project &p)
{
    Project out = p;
    for (auto &[name, vi] : out.vis)
        vi.diagram = infer_types(vi.diagram, p);
    return out;
}

Project elaborate(const Project &p)
{
    return infer_types(expand(p));
}

void set_clock(Project &p, const std::string &name, std::int64_t hz)
{
    if (hz <= 0)
        throw Error("E_CONFIG", "clock '" + name + "' must have a positive rate", name);
    for (auto &c : p.clocks)
        if (c.name == name) {
            c.hz = hz;
            return;
        }
    p.clocks.push_back({name, hz, {}});
}

std::optional<WireType> wire_type(const Diagram &d, const Wire &w)
{
    if (w.src.boundary())
        return d.source_type(w.src.port);
    const Node *n = d.find_node(w.src.node);
    if (!n)
        return std::nullopt;
    const Port *port = n->out_port(w.src.port);
    return port ? port->type : std::nullopt;
}

// ---------------------------------------------------------------------------
// DepthTable

DepthTable DepthTable::defaults()
{
    DepthTable t;
    auto logic = [](double ns) { return DepthEntry{ns, 0, 1, 0, 0, 0, 0}; };
    for (const char *op : {"Add", "Sub", "Gt", "Lt", "Eq", "And", "Or", "Not"})
        t.entries[op] = logic(5.0);
    t.entries["Select"] = logic(3.0);
    t.entries["ArrayIndex"] = logic(3.0);
    t.entries["Mul"] = DepthEntry{15.0, 0, 0, 0, 0, 1, 0};
    t.entries["Convert"] = DepthEntry{2.0, 0, 0, 0, 0, 0, 0};
    for (const char *op : {"Const", "ArrayBuild", "FifoRead", "FifoWrite", "RegRead", "RegWrite", "AoWrite"})
        t.entries[op] = DepthEntry{};
    t.entries["register"] = DepthEntry{0.0, 0, 0, 0, 1, 0, 0};
    t.entries["fifo"] = DepthEntry{0.0, 0, 0, 0, 0, 0, 1};
    return t;
}

DepthTable DepthTable::from_json(const std::string &json_text)
{
    DepthTable t = defaults();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception &e) {
        throw Error("E_CONFIG", std::string("depth table is not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        throw Error("E_CONFIG", "depth table must be a JSON object");
    for (const auto &[name, row] : j.items()) {
        if (!row.is_object())
            throw Error("E_CONFIG", "depth table row must be an object", name);
        DepthEntry &e = t.entries[name];
        auto num = [&](const char *k, auto &field) {
            if (!row.contains(k))
                return;
            if (!row[k].is_number() || row[k].template get<double>() < 0)
                throw Error("E_CONFIG", std::string(k) + " must be a non-negative number", name);
            field = row[k].template get<std::remove_reference_t<decltype(field)>>();
        };
        num("depth_ns", e.depth_ns);
        num("lut", e.lut);
        num("lut_per_bit", e.lut_per_bit);
        num("ff", e.ff);
        num("ff_per_bit", e.ff_per_bit);
        num("dsp", e.dsp);
        num("bram", e.bram);
    }
    return t;
}

DepthTable DepthTable::load(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("E_CONFIG", "cannot read depth table '" + path + "'", path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

DepthTable DepthTable::from_env()
{
    const char *path = std::getenv("RIOFLOW_DEPTH_TABLE");
    if (path && *path)
        return load(path);
    return defaults();
}

const DepthEntry *DepthTable::find(const std::string &name) const
{
    auto it = entries.find(name);
    return it == entries.end() ? nullptr : &it->second;
}

double DepthTable::depth(const Node &n, const Project *p) const
{
    if (n.kind != NodeKind::Primitive)
        return 0.0;
    if (n.op == "Ip") {
        const IpDescriptor *ip = p ? p->find_ip(n.args.ref) : nullptr;
        return ip && ip->latency == 0 ? ip->depth_ns : 0.0;
    }
    const DepthEntry *e = find(n.op);
    return e ? e->depth_ns : 0.0;
}

namespace {

std::int64_t widest_port(const Node &n)
{
    std::size_t w = 0;
    for (const auto *list : {&n.in_ports, &n.out_ports})
        for (const auto &port : *list)
            if (port.type)
                w = std::max(w, port.type->bit_width());
    return static_cast<std::int64_t>(w);
}

} // namespace

ResourceEstimate DepthTable::resources(const Node &n, const Project *p) const
{
    if (n.kind != NodeKind::Primitive)
        return {};
    if (n.op == "Ip") {
        const IpDescriptor *ip = p ? p->find_ip(n.args.ref) : nullptr;
        return ip ? ip->resources : ResourceEstimate{};
    }
    const DepthEntry *e = find(n.op);
    if (!e)
        return {};
    const std::int64_t bits = widest_port(n);
    return {e->lut + e->lut_per_bit * bits, e->ff + e->ff_per_bit * bits, e->dsp, e->bram};
}

ResourceEstimate DepthTable::register_cost(const WireType &t) const
{
    const DepthEntry *e = find("register");
    if (!e)
        return {};
    const auto bits = static_cast<std::int64_t>(t.bit_width());
    return {e->lut + e->lut_per_bit * bits, e->ff + e->ff_per_bit * bits, e->dsp, e->bram};
}

ResourceEstimate DepthTable::fifo_cost(const WireType &element, std::int64_t capacity) const
{
    const DepthEntry *e = find("fifo");
    if (!e)
        return {};
    const auto bytes = static_cast<std::int64_t>(element.byte_width()) * capacity;
    const std::int64_t kib = (bytes + 1023) / 1024;
    return {e->lut, e->ff, e->dsp, e->bram * kib};
}

// ---------------------------------------------------------------------------
// partition

namespace {

template <class F>
void walk(const Diagram &d, F &&f)
{
    for (const auto &n : d.nodes) {
        f(n);
        for (const auto &b : n.bodies)
            walk(b, f);
    }
}

} // namespace

DeploymentPlan partition(const Project &p)
{
    auto vit = p.vis.find(p.top);
    if (vit == p.vis.end())
        throw Error("E_NO_TOP", "top-level VI '" + p.top + "' is not defined", p.top);
    const VIGraph &top = vit->second;
    const Diagram &d = top.diagram;

    Diagnostics ds;
    auto add = [&](std::string code, std::string msg, std::string subject, const SourceSpan &span) {
        ds.push_back({std::move(code), std::move(msg), std::move(subject), span});
    };

    DeploymentPlan plan;
    plan.top = top.name;
    const Target vi_side = top.target == Target::Fabric ? Target::Fabric : Target::Host;
    for (const auto &n : d.nodes) {
        Target side = n.kind == NodeKind::Sctl ? Target::Fabric : (n.target != Target::Inherit ? n.target : vi_side);
        if (n.kind == NodeKind::Sctl && n.target == Target::Host)
            add("E_HOST_PRIM_IN_FABRIC", "an SCTL always runs on the fabric", n.id, n.span);
        plan.assignment[n.id] = side;
    }

    // Per-node legality, including structure bodies.
    struct Use {
        std::string node;
        Target side;
        std::string sctl;
        SourceSpan span;
    };
    std::map<std::string, std::vector<Use>> fifo_writers, fifo_readers, reg_writers, reg_readers, scan_writers,
        ao_writers;
    std::set<std::string> scan_readers;
    for (const auto &n : d.nodes) {
        const Target side = plan.assignment[n.id];
        const bool in_sctl = n.kind == NodeKind::Sctl;
        if (side == Target::Fabric && !in_sctl && n.kind != NodeKind::Primitive)
            add("E_SCTL_REQUIRED", "fabric logic outside an SCTL must be plain primitives", n.id, n.span);
        auto visit = [&](const Node &m, const std::string &qual) {
            if (m.target != Target::Inherit && &m != &n && m.target != side) {
                add(side == Target::Fabric ? "E_HOST_PRIM_IN_FABRIC" : "E_TARGET_CONFLICT",
                    "node target differs from its enclosing structure", qual, m.span);
            }
            if (m.kind != NodeKind::Primitive)
                return;
            const PrimitiveInfo *info = find_primitive(m.op);
            if (!info)
                return;
            if (side == Target::Fabric && info->host_only)
                add("E_HOST_PRIM_IN_FABRIC", m.op + " cannot run on the fabric", qual, m.span);
            if (side == Target::Host && info->fabric_only)
                add("E_FABRIC_PRIM_IN_HOST", m.op + " needs an SCTL on the fabric", qual, m.span);
            if (side == Target::Fabric && !in_sctl && info->touches_io)
                add("E_SCTL_REQUIRED", m.op + " on the fabric must sit inside an SCTL", qual, m.span);
            const Use use{qual, side, in_sctl ? n.id : std::string(), m.span};
            switch (info->cls) {
            case PrimClass::FifoWrite:
                fifo_writers[m.args.ref].push_back(use);
                break;
            case PrimClass::FifoRead:
                fifo_readers[m.args.ref].push_back(use);
                break;
            case PrimClass::RegWrite:
                reg_writers[m.args.ref].push_back(use);
                break;
            case PrimClass::RegRead:
                reg_readers[m.args.ref].push_back(use);
                break;
            case PrimClass::ScanWrite:
                scan_writers[m.args.ref].push_back(use);
                break;
            case PrimClass::ScanRead:
                scan_readers.insert(m.args.ref);
                break;
            case PrimClass::AoWrite:
                ao_writers[m.args.ref].push_back(use);
                break;
            default:
                break;
            }
        };
        visit(n, n.id);
        for (const auto &b : n.bodies)
            walk(b, [&](const Node &m) { visit(m, n.id + "/" + m.id); });
        if (in_sctl && !n.bodies.empty())
            for (const auto &prm : n.bodies[0].params) {
                const ChannelDecl *c = p.find_channel(prm.name);
                if (!c || c->kind != ChannelKind::Register)
                    add("E_UNKNOWN_CHANNEL", "SCTL parameter '" + prm.name + "' needs a register channel of that name",
                        n.id + "/" + prm.name, prm.span);
                else
                    reg_readers[prm.name].push_back(Use{n.id + "/" + prm.name, Target::Fabric, n.id, prm.span});
            }
    }

    // Direct wires between the two sides.
    for (const auto &w : d.wires) {
        if (w.src.boundary())
            continue;
        const Target s = plan.assignment[w.src.node];
        for (std::size_t i = 0; i < w.dsts.size(); ++i) {
            const Endpoint &dst = w.dsts[i];
            if (dst.boundary())
                continue;
            if (plan.assignment[dst.node] != s)
                add("E_BOUNDARY_WIRE",
                    "wire " + w.src.to_string() + " -> " + dst.to_string() +
                        " crosses the host/fabric boundary; use a channel",
                    w.src.to_string() + " -> " + dst.to_string(), i < w.dst_spans.size() ? w.dst_spans[i] : w.span);
        }
    }

    // Channel endpoints.
    std::set<std::string> used;
    for (const auto *m : {&fifo_writers, &fifo_readers, &reg_writers, &reg_readers})
        for (const auto &[name, uses] : *m)
            used.insert(name);
    for (const auto &name : used) {
        const ChannelDecl *c = p.find_channel(name);
        if (!c) {
            add("E_UNKNOWN_CHANNEL", "channel '" + name + "' is not declared", name, {});
            continue;
        }
        const bool fifo = c->kind == ChannelKind::Fifo;
        auto &writers = fifo ? fifo_writers[name] : reg_writers[name];
        auto &readers = fifo ? fifo_readers[name] : reg_readers[name];
        if (c->endpoints_declared) {
            for (const auto &u : writers)
                if (u.side != c->writer)
                    add("E_CHANNEL_ENDPOINT",
                        "channel '" + name + "' is written from the " + to_string(u.side) + " but declared " +
                            to_string(c->writer) + " -> " + to_string(c->reader),
                        u.node, u.span);
            for (const auto &u : readers)
                if (u.side != c->reader)
                    add("E_CHANNEL_ENDPOINT",
                        "channel '" + name + "' is read from the " + to_string(u.side) + " but declared " +
                            to_string(c->writer) + " -> " + to_string(c->reader),
                        u.node, u.span);
        }
        if (fifo) {
            std::set<std::string> wl, rl;
            for (const auto &u : writers)
                wl.insert(u.sctl.empty() ? "host" : u.sctl);
            for (const auto &u : readers)
                rl.insert(u.sctl.empty() ? "host" : u.sctl);
            if (wl.size() > 1 || rl.size() > 1)
                add("E_CHANNEL_OWNERSHIP", "fifo '" + name + "' has more than one producer or consumer loop", name,
                    c->span);
        }
        ChannelBinding b;
        b.channel = name;
        b.writer = c->writer;
        b.reader = c->reader;
        for (const auto &u : writers)
            b.writer_nodes.push_back(u.node);
        for (const auto &u : readers)
            b.reader_nodes.push_back(u.node);
        b.dma = fifo && c->writer != c->reader;
        plan.channels.push_back(std::move(b));
    }

    // Ownership of scan and analog-output channels.
    if (p.scan) {
        for (const auto &sc : p.scan->channels) {
            if (p.find_channel(sc.name) || p.find_ao(sc.name))
                add("E_CHANNEL_OWNERSHIP", "scan channel '" + sc.name + "' is also declared as another channel",
                    sc.name, sc.span);
            ScanBinding b;
            b.channel = sc.name;
            b.output = sc.output;
            if (auto it = scan_writers.find(sc.name); it != scan_writers.end()) {
                if (it->second.size() > 1)
                    add("E_CHANNEL_OWNERSHIP", "scan output '" + sc.name + "' has more than one writer", sc.name,
                        sc.span);
                for (const auto &u : it->second)
                    b.nodes.push_back(u.node);
            }
            plan.scan.push_back(std::move(b));
        }
    }
    for (const auto &[name, uses] : ao_writers) {
        const AoDecl *ao = p.find_ao(name);
        if (!ao)
            continue;
        if (p.find_channel(name))
            add("E_CHANNEL_OWNERSHIP", "analog output '" + name + "' is also declared as a channel", name, ao->span);
        if (uses.size() > 1)
            add("E_CHANNEL_OWNERSHIP", "analog output '" + name + "' has more than one writer", name, ao->span);
        for (const auto &u : uses) {
            const Node *s = d.find_node(u.sctl);
            if (s && s->clock != ao->clock)
                add("E_CLOCK_MISMATCH",
                    "analog output '" + name + "' is bound to clock '" + ao->clock + "' but written from clock '" +
                        s->clock + "'",
                    u.node, u.span);
        }
    }
    for (const auto &ao : p.aos)
        if (!p.find_clock(ao.clock))
            add("E_UNKNOWN_CLOCK", "analog output clock '" + ao.clock + "' is not declared", ao.name, ao.span);

    if (!ds.empty())
        throw Error(std::move(ds));

    // Build the two partitions.
    auto side_of = [&](const Endpoint &e) -> std::optional<Target> {
        if (e.boundary())
            return std::nullopt;
        return plan.assignment[e.node];
    };
    for (Target t : {Target::Host, Target::Fabric}) {
        Diagram &part = t == Target::Host ? plan.host : plan.fabric;
        part.controls = d.controls;
        part.params = d.params;
        for (const auto &n : d.nodes)
            if (plan.assignment[n.id] == t)
                part.nodes.push_back(n);
        std::set<std::string> driven;
        for (const auto &w : d.wires) {
            const auto ss = side_of(w.src);
            Wire copy = w;
            copy.dsts.clear();
            copy.dst_spans.clear();
            for (std::size_t i = 0; i < w.dsts.size(); ++i) {
                const auto ds_side = side_of(w.dsts[i]);
                const bool mine = ds_side ? *ds_side == t : (ss ? *ss == t : false);
                if (!mine || (ss && *ss != t))
                    continue;
                copy.dsts.push_back(w.dsts[i]);
                if (i < w.dst_spans.size())
                    copy.dst_spans.push_back(w.dst_spans[i]);
                if (w.dsts[i].boundary())
                    driven.insert(w.dsts[i].port);
            }
            if (!copy.dsts.empty())
                part.wires.push_back(std::move(copy));
        }
        for (const auto &ind : d.indicators)
            if (driven.count(ind.name))
                part.indicators.push_back(ind);
    }
    // A boundary-to-boundary wire (control straight to indicator) stays on the host.
    for (const auto &w : d.wires) {
        if (!w.src.boundary())
            continue;
        Wire copy = w;
        copy.dsts.clear();
        copy.dst_spans.clear();
        for (std::size_t i = 0; i < w.dsts.size(); ++i)
            if (w.dsts[i].boundary()) {
                copy.dsts.push_back(w.dsts[i]);
                if (i < w.dst_spans.size())
                    copy.dst_spans.push_back(w.dst_spans[i]);
            }
        if (copy.dsts.empty())
            continue;
        bool merged = false;
        for (auto &hw : plan.host.wires)
            if (hw.src == copy.src) {
                hw.dsts.insert(hw.dsts.end(), copy.dsts.begin(), copy.dsts.end());
                hw.dst_spans.insert(hw.dst_spans.end(), copy.dst_spans.begin(), copy.dst_spans.end());
                merged = true;
            }
        if (!merged)
            plan.host.wires.push_back(copy);
        for (const auto &dst : copy.dsts)
            if (const auto it = std::find_if(d.indicators.begin(), d.indicators.end(),
                                             [&](const BoundaryPort &b) { return b.name == dst.port; });
                it != d.indicators.end())
                plan.host.indicators.push_back(*it);
    }

    std::size_t slot = 0;
    for (const auto &n : plan.fabric.nodes)
        if (n.kind == NodeKind::Sctl)
            plan.fabric_loops.push_back(FabricLoop{n.id, n.clock, clock_hz(p, n.clock), slot++});
    return plan;
}

// ---------------------------------------------------------------------------
// SCTL timing

bool starts_path(const Node &n, const Project *p)
{
    if (n.kind != NodeKind::Primitive)
        return false;
    if (n.op == "FifoRead" || n.op == "RegRead")
        return true;
    if (n.op == "Ip") {
        const IpDescriptor *ip = p ? p->find_ip(n.args.ref) : nullptr;
        return ip && ip->latency > 0;
    }
    return false;
}

TimingReport analyze_sctl(const Node &sctl, std::int64_t clock_hz, const DepthTable &t, const Project *p)
{
    TimingReport r;
    r.sctl = sctl.id;
    r.clock = sctl.clock;
    r.hz = clock_hz;
    r.period_ns = 1e9 / static_cast<double>(clock_hz);
    if (sctl.bodies.empty()) {
        r.slack_ns = r.period_ns;
        return r;
    }
    const Diagram &body = sctl.bodies[0];
    for (const auto &n : body.nodes) {
        if (n.kind != NodeKind::Primitive) {
            throw Error("E_SCTL_ILLEGAL_NODE", std::string(to_string(n.kind)) + " is not allowed inside an SCTL",
                        sctl.id + "/" + n.id, n.span);
        }
        const PrimitiveInfo *info = find_primitive(n.op);
        if (!info || info->host_only)
            throw Error("E_SCTL_ILLEGAL_NODE", n.op + " is not allowed inside an SCTL", sctl.id + "/" + n.id, n.span);
    }

    const auto order = topo_order(body);
    std::map<std::string, std::vector<std::string>> preds;
    for (const auto &[a, b] : node_edges(body))
        preds[b].push_back(a);
    std::map<std::string, double> arrival;
    std::map<std::string, std::string> via;
    for (const auto &id : order) {
        const Node *n = body.find_node(id);
        double best = 0.0;
        std::string from;
        for (const auto &pr : preds[id]) {
            if (starts_path(*body.find_node(pr), p))
                continue;
            if (arrival[pr] > best || (from.empty() && arrival[pr] >= best)) {
                if (arrival[pr] > best || from.empty()) {
                    best = arrival[pr];
                    from = pr;
                }
            }
        }
        arrival[id] = best + t.depth(*n, p);
        via[id] = from;
    }
    std::string end;
    for (const auto &id : order)
        if (end.empty() || arrival[id] > arrival[end])
            end = id;
    if (!end.empty() && arrival[end] > 0.0) {
        r.path_ns = arrival[end];
        for (std::string cur = end; !cur.empty(); cur = via[cur])
            r.critical_path.push_back(cur);
        std::reverse(r.critical_path.begin(), r.critical_path.end());
    }
    r.slack_ns = r.period_ns - r.path_ns;
    // A tiny tolerance keeps exact fits (e.g. 25 ns at 40 MHz) feasible.
    r.feasible = r.path_ns <= r.period_ns * (1.0 + 1e-12);
    return r;
}

TimingReport check_sctl(const Node &sctl, std::int64_t clock_hz, const DepthTable &t, const Project *p)
{
    TimingReport r = analyze_sctl(sctl, clock_hz, t, p);
    if (!r.feasible) {
        std::string path;
        for (const auto &id : r.critical_path)
            path += (path.empty() ? "" : " -> ") + id;
        std::ostringstream msg;
        msg << "critical path " << path << " takes " << r.path_ns << " ns > period " << r.period_ns << " ns";
        throw Error("E_SCTL_TIMING", msg.str(), sctl.id, sctl.span);
    }
    return r;
}

} // namespace rioflow
