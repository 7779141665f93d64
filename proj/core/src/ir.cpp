#include "rioflow/ir.hpp"

#include <algorithm>

namespace rioflow {

const char *to_string(Target t)
{
    switch (t) {
    case Target::Host:
        return "host";
    case Target::Fabric:
        return "fabric";
    case Target::Inherit:
        return "inherit";
    }
    return "?";
}

const char *to_string(NodeKind k)
{
    switch (k) {
    case NodeKind::Primitive:
        return "primitive";
    case NodeKind::SubVi:
        return "sub";
    case NodeKind::WhileLoop:
        return "while";
    case NodeKind::ForLoop:
        return "for";
    case NodeKind::Case:
        return "case";
    case NodeKind::Sctl:
        return "sctl";
    }
    return "?";
}

const Node *Diagram::find_node(const std::string &id) const
{
    for (const auto &n : nodes)
        if (n.id == id)
            return &n;
    return nullptr;
}

Node *Diagram::find_node(const std::string &id)
{
    for (auto &n : nodes)
        if (n.id == id)
            return &n;
    return nullptr;
}

static const BoundaryPort *find_port(const std::vector<BoundaryPort> &ports, const std::string &name)
{
    for (const auto &p : ports)
        if (p.name == name)
            return &p;
    return nullptr;
}

std::optional<WireType> Diagram::source_type(const std::string &name) const
{
    for (const auto *list : {&controls, &params, &shifts})
        if (const auto *p = find_port(*list, name))
            return p->type;
    if (has_index && name == "i")
        return WireType::int32();
    return std::nullopt;
}

std::optional<WireType> Diagram::sink_type(const std::string &name) const
{
    for (const auto *list : {&indicators, &shifts})
        if (const auto *p = find_port(*list, name))
            return p->type;
    if (has_stop && name == "stop")
        return WireType::boolean();
    return std::nullopt;
}

std::vector<std::string> Diagram::source_names() const
{
    std::vector<std::string> names;
    for (const auto *list : {&controls, &params, &shifts})
        for (const auto &p : *list)
            names.push_back(p.name);
    if (has_index)
        names.emplace_back("i");
    return names;
}

std::vector<std::string> Diagram::sink_names() const
{
    std::vector<std::string> names;
    for (const auto *list : {&indicators, &shifts})
        for (const auto &p : *list)
            names.push_back(p.name);
    if (has_stop)
        names.emplace_back("stop");
    return names;
}

const Port *Node::in_port(const std::string &name) const
{
    for (const auto &p : in_ports)
        if (p.name == name)
            return &p;
    return nullptr;
}

const Port *Node::out_port(const std::string &name) const
{
    for (const auto &p : out_ports)
        if (p.name == name)
            return &p;
    return nullptr;
}

Port *Node::in_port(const std::string &name)
{
    for (auto &p : in_ports)
        if (p.name == name)
            return &p;
    return nullptr;
}

Port *Node::out_port(const std::string &name)
{
    for (auto &p : out_ports)
        if (p.name == name)
            return &p;
    return nullptr;
}

std::vector<IpPort> IpDescriptor::inputs() const
{
    std::vector<IpPort> r;
    for (const auto &p : ports)
        if (!p.output)
            r.push_back(p);
    return r;
}

std::vector<IpPort> IpDescriptor::outputs() const
{
    std::vector<IpPort> r;
    for (const auto &p : ports)
        if (p.output)
            r.push_back(p);
    return r;
}

const ClockDecl *Project::find_clock(const std::string &name) const
{
    for (const auto &c : clocks)
        if (c.name == name)
            return &c;
    return nullptr;
}

const ChannelDecl *Project::find_channel(const std::string &name) const
{
    for (const auto &c : channels)
        if (c.name == name)
            return &c;
    return nullptr;
}

const ScanChannelDecl *Project::find_scan_channel(const std::string &name) const
{
    if (!scan)
        return nullptr;
    for (const auto &c : scan->channels)
        if (c.name == name)
            return &c;
    return nullptr;
}

const AoDecl *Project::find_ao(const std::string &name) const
{
    for (const auto &a : aos)
        if (a.name == name)
            return &a;
    return nullptr;
}

const IpDescriptor *Project::find_ip(const std::string &name) const
{
    auto it = ips.find(name);
    return it == ips.end() ? nullptr : &it->second;
}

std::int64_t clock_hz(const Project &p, const std::string &clock)
{
    if (const auto *c = p.find_clock(clock))
        return c->hz;
    return kDefaultFabricClockHz;
}

namespace {

bool same_ports(const std::vector<BoundaryPort> &a, const std::vector<BoundaryPort> &b)
{
    return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                      [](const BoundaryPort &x, const BoundaryPort &y) { return x.name == y.name && x.type == y.type; });
}

using WireKey = std::pair<Endpoint, std::vector<Endpoint>>;

std::vector<WireKey> wire_keys(const Diagram &d)
{
    std::vector<WireKey> keys;
    for (const auto &w : d.wires) {
        auto dsts = w.dsts;
        std::sort(dsts.begin(), dsts.end());
        keys.emplace_back(w.src, std::move(dsts));
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

} // namespace

bool equivalent(const Node &a, const Node &b)
{
    if (a.id != b.id || a.kind != b.kind || a.op != b.op || !(a.args == b.args) || a.target != b.target ||
        a.in_ports != b.in_ports || a.out_ports != b.out_ports || a.case_labels != b.case_labels ||
        a.has_default != b.has_default || a.clock != b.clock || !(a.hls == b.hls) || a.bodies.size() != b.bodies.size())
        return false;
    for (std::size_t i = 0; i < a.bodies.size(); ++i)
        if (!equivalent(a.bodies[i], b.bodies[i]))
            return false;
    return true;
}

bool equivalent(const Diagram &a, const Diagram &b)
{
    if (!same_ports(a.controls, b.controls) || !same_ports(a.indicators, b.indicators) ||
        !same_ports(a.params, b.params) || !same_ports(a.shifts, b.shifts) || a.has_index != b.has_index ||
        a.has_stop != b.has_stop || a.nodes.size() != b.nodes.size())
        return false;
    for (const auto &n : a.nodes) {
        const Node *m = b.find_node(n.id);
        if (!m || !equivalent(n, *m))
            return false;
    }
    return wire_keys(a) == wire_keys(b);
}

bool equivalent(const Project &a, const Project &b)
{
    if (a.top != b.top || a.vis.size() != b.vis.size())
        return false;
    for (const auto &[name, vi] : a.vis) {
        auto it = b.vis.find(name);
        if (it == b.vis.end() || it->second.target != vi.target || !equivalent(vi.diagram, it->second.diagram))
            return false;
    }
    auto same_clocks = [](const ClockDecl &x, const ClockDecl &y) { return x.name == y.name && x.hz == y.hz; };
    auto same_channels = [](const ChannelDecl &x, const ChannelDecl &y) {
        return x.name == y.name && x.kind == y.kind && x.element == y.element && x.capacity == y.capacity &&
               x.writer == y.writer && x.reader == y.reader && x.endpoints_declared == y.endpoints_declared &&
               x.initial == y.initial;
    };
    if (!std::is_permutation(a.clocks.begin(), a.clocks.end(), b.clocks.begin(), b.clocks.end(), same_clocks) ||
        !std::is_permutation(a.channels.begin(), a.channels.end(), b.channels.begin(), b.channels.end(),
                             same_channels))
        return false;
    if (a.scan.has_value() != b.scan.has_value())
        return false;
    if (a.scan) {
        if (a.scan->period_us != b.scan->period_us || a.scan->channels.size() != b.scan->channels.size())
            return false;
        for (std::size_t i = 0; i < a.scan->channels.size(); ++i) {
            const auto &x = a.scan->channels[i];
            const auto &y = b.scan->channels[i];
            if (x.name != y.name || x.output != y.output || x.type != y.type || x.gain != y.gain ||
                x.offset != y.offset || x.bits != y.bits)
                return false;
        }
    }
    auto same_ao = [](const AoDecl &x, const AoDecl &y) {
        return x.name == y.name && x.clock == y.clock && x.rate_hz == y.rate_hz && x.gain == y.gain;
    };
    auto same_ip = [](const IpDecl &x, const IpDecl &y) { return x.name == y.name && x.path == y.path; };
    auto same_clip = [](const ClipDecl &x, const ClipDecl &y) { return x.name == y.name && x.ip == y.ip; };
    return std::is_permutation(a.aos.begin(), a.aos.end(), b.aos.begin(), b.aos.end(), same_ao) &&
           std::is_permutation(a.ip_decls.begin(), a.ip_decls.end(), b.ip_decls.begin(), b.ip_decls.end(),
                               same_ip) &&
           std::is_permutation(a.clips.begin(), a.clips.end(), b.clips.begin(), b.clips.end(), same_clip);
}

} // namespace rioflow
