#include "rioflow/validate.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <set>

#include "rioflow/primitives.hpp"

namespace rioflow {

namespace {

enum class Context : std::uint8_t { Top, While, For, Case, Sctl };

struct Checker {
    Diagnostics out;
    const Project *project = nullptr;

    void add(std::string code, std::string message, std::string subject, const SourceSpan &span)
    {
        out.push_back({std::move(code), std::move(message), std::move(subject), span});
    }

    void check_diagram(const Diagram &d, Context ctx, const std::string &path);
    void check_node(const Node &n, Context ctx, const std::string &path);
};

std::string qualify(const std::string &path, const std::string &id) { return path.empty() ? id : path + "/" + id; }

const char *reserved_index = "i";
const char *reserved_stop = "stop";

void Checker::check_node(const Node &n, Context ctx, const std::string &path)
{
    const std::string subject = qualify(path, n.id);

    std::set<std::string> seen;
    for (const auto &p : n.in_ports)
        if (!seen.insert(p.name).second)
            add("E_DUP_NAME", "duplicate input port '" + p.name + "'", subject, n.span);
    seen.clear();
    for (const auto &p : n.out_ports)
        if (!seen.insert(p.name).second)
            add("E_DUP_NAME", "duplicate output port '" + p.name + "'", subject, n.span);

    const bool in_sctl = ctx == Context::Sctl;
    switch (n.kind) {
    case NodeKind::Primitive: {
        const PrimitiveInfo *info = find_primitive(n.op);
        if (!info) {
            add("E_UNKNOWN_PRIMITIVE", "unknown primitive '" + n.op + "'", subject, n.span);
            return;
        }
        if (in_sctl && info->host_only)
            add("E_SCTL_ILLEGAL_NODE", n.op + " is not allowed inside an SCTL", subject, n.span);
        return;
    }
    case NodeKind::SubVi:
        if (project && !project->vis.count(n.op))
            add("E_UNRESOLVED_SUBVI", "sub-VI '" + n.op + "' is not defined", subject, n.span);
        return;
    case NodeKind::WhileLoop:
    case NodeKind::ForLoop:
        if (in_sctl)
            add("E_SCTL_ILLEGAL_NODE", std::string(to_string(n.kind)) + " loop is not allowed inside an SCTL", subject,
                n.span);
        if (n.bodies.size() != 1) {
            add("E_STRUCTURE", "loop must have exactly one body", subject, n.span);
            return;
        }
        check_diagram(n.bodies[0], n.kind == NodeKind::WhileLoop ? Context::While : Context::For, subject);
        return;
    case NodeKind::Sctl:
        if (ctx != Context::Top)
            add("E_SCTL_ILLEGAL_NODE", "an SCTL must sit directly in a VI diagram", subject, n.span);
        if (n.bodies.size() != 1) {
            add("E_STRUCTURE", "SCTL must have exactly one body", subject, n.span);
            return;
        }
        for (const auto &p : n.bodies[0].params)
            if (p.type != WireType::int32())
                add("E_TYPE_MISMATCH", "SCTL parameter '" + p.name + "' must be i32", subject, p.span);
        check_diagram(n.bodies[0], Context::Sctl, subject);
        return;
    case NodeKind::Case: {
        if (in_sctl)
            add("E_SCTL_ILLEGAL_NODE", "case structures are not allowed inside an SCTL (use Select)", subject, n.span);
        if (!n.has_default)
            add("E_CASE_NO_DEFAULT", "case structure needs a default frame", subject, n.span);
        const std::size_t expected = n.case_labels.size() + (n.has_default ? 1 : 0);
        if (n.bodies.size() != expected || n.bodies.empty()) {
            add("E_STRUCTURE", "case frame count does not match its labels", subject, n.span);
            return;
        }
        std::set<std::int32_t> labels;
        for (auto l : n.case_labels)
            if (!labels.insert(l).second)
                add("E_DUP_NAME", "duplicate case label " + std::to_string(l), subject, n.span);
        auto same = [](const std::vector<BoundaryPort> &a, const std::vector<BoundaryPort> &b) {
            return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](const auto &x, const auto &y) {
                return x.name == y.name && x.type == y.type;
            });
        };
        for (std::size_t i = 0; i < n.bodies.size(); ++i) {
            const Diagram &f = n.bodies[i];
            if (!same(f.controls, n.bodies[0].controls) || !same(f.indicators, n.bodies[0].indicators))
                add("E_STRUCTURE", "case frames must share tunnels", subject, n.span);
            check_diagram(f, Context::Case, subject);
        }
        return;
    }
    }
}

void Checker::check_diagram(const Diagram &d, Context ctx, const std::string &path)
{
    // Boundary names.
    std::set<std::string> names;
    auto declare = [&](const BoundaryPort &p) {
        if (!names.insert(p.name).second)
            add("E_DUP_NAME", "duplicate terminal '" + p.name + "'", qualify(path, p.name), p.span);
        if ((d.has_index && p.name == reserved_index) || (d.has_stop && p.name == reserved_stop))
            add("E_DUP_NAME", "'" + p.name + "' is reserved inside loops", qualify(path, p.name), p.span);
    };
    for (const auto *list : {&d.controls, &d.indicators, &d.params, &d.shifts})
        for (const auto &p : *list)
            declare(p);

    std::map<std::string, const Node *> nodes;
    for (const auto &n : d.nodes) {
        if (!nodes.emplace(n.id, &n).second)
            add("E_DUP_NAME", "duplicate node id '" + n.id + "'", qualify(path, n.id), n.span);
        check_node(n, ctx, path);
    }

    const auto sources = d.source_names();
    const auto sinks = d.sink_names();
    const std::set<std::string> source_set(sources.begin(), sources.end());
    const std::set<std::string> sink_set(sinks.begin(), sinks.end());

    std::map<Endpoint, int> drivers;
    for (const auto &w : d.wires) {
        const std::string wname = qualify(path, w.src.to_string());
        if (w.src.boundary()) {
            if (!source_set.count(w.src.port))
                add("E_UNKNOWN_PORT", "'" + w.src.port + "' is not a source terminal", wname, w.span);
        } else if (auto it = nodes.find(w.src.node); it == nodes.end()) {
            add("E_UNKNOWN_NODE", "unknown node '" + w.src.node + "'", wname, w.span);
        } else if (!it->second->out_port(w.src.port)) {
            add("E_UNKNOWN_PORT", "node '" + w.src.node + "' has no output '" + w.src.port + "'", wname, w.span);
        }
        if (w.dsts.empty())
            add("E_EMPTY_WIRE", "wire has no destination", wname, w.span);
        for (std::size_t k = 0; k < w.dsts.size(); ++k) {
            const Endpoint &dst = w.dsts[k];
            const SourceSpan &span = k < w.dst_spans.size() ? w.dst_spans[k] : w.span;
            const std::string dname = qualify(path, dst.to_string());
            if (dst.boundary()) {
                if (!sink_set.count(dst.port)) {
                    add("E_UNKNOWN_PORT", "'" + dst.port + "' is not a sink terminal", dname, span);
                    continue;
                }
            } else if (auto it = nodes.find(dst.node); it == nodes.end()) {
                add("E_UNKNOWN_NODE", "unknown node '" + dst.node + "'", dname, span);
                continue;
            } else if (!it->second->in_port(dst.port)) {
                add("E_UNKNOWN_PORT", "node '" + dst.node + "' has no input '" + dst.port + "'", dname, span);
                continue;
            }
            if (++drivers[dst] == 2)
                add("E_MULTI_DRIVER", "'" + dst.to_string() + "' has more than one source", dname, span);
        }
    }

    for (const auto &n : d.nodes)
        for (const auto &p : n.in_ports)
            if (!p.optional && !drivers.count(Endpoint{n.id, p.name}))
                add("E_UNWIRED_INPUT", "input '" + p.name + "' is not wired", qualify(path, n.id + "." + p.name),
                    n.span);
    auto require_driven = [&](const BoundaryPort &p) {
        if (!drivers.count(Endpoint{"", p.name}))
            add("E_UNDRIVEN_INDICATOR", "'" + p.name + "' is never driven", qualify(path, p.name), p.span);
    };
    for (const auto &p : d.indicators)
        require_driven(p);
    for (const auto &p : d.shifts)
        require_driven(p);
    if (d.has_stop && ctx == Context::While && !drivers.count(Endpoint{"", reserved_stop}))
        add("E_UNDRIVEN_INDICATOR", "while loop stop terminal is never driven", qualify(path, reserved_stop), {});

    try {
        topo_order(d);
    } catch (const Error &e) {
        Diagnostic diag = e.diagnostic();
        diag.subject = qualify(path, diag.subject);
        out.push_back(std::move(diag));
    }
}

} // namespace

std::vector<std::pair<std::string, std::string>> node_edges(const Diagram &d)
{
    std::set<std::pair<std::string, std::string>> edges;
    for (const auto &w : d.wires) {
        if (w.src.boundary())
            continue;
        for (const auto &dst : w.dsts)
            if (!dst.boundary())
                edges.emplace(w.src.node, dst.node);
    }
    return {edges.begin(), edges.end()};
}

std::vector<std::string> topo_order(const Diagram &d)
{
    std::map<std::string, int> indegree;
    for (const auto &n : d.nodes)
        indegree[n.id];
    std::map<std::string, std::vector<std::string>> succ;
    for (const auto &[a, b] : node_edges(d)) {
        if (!indegree.count(a) || !indegree.count(b))
            continue;
        succ[a].push_back(b);
        ++indegree[b];
    }
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto &[id, deg] : indegree)
        if (deg == 0)
            ready.push(id);
    std::vector<std::string> order;
    while (!ready.empty()) {
        std::string id = ready.top();
        ready.pop();
        for (const auto &s : succ[id])
            if (--indegree[s] == 0)
                ready.push(s);
        order.push_back(std::move(id));
    }
    if (order.size() == indegree.size())
        return order;

    // Report one concrete cycle among the leftover nodes.
    std::set<std::string> left;
    for (const auto &[id, deg] : indegree)
        if (deg > 0)
            left.insert(id);
    std::vector<std::string> stack;
    std::set<std::string> on_stack, done;
    std::vector<std::string> cycle;
    std::function<bool(const std::string &)> dfs = [&](const std::string &v) {
        stack.push_back(v);
        on_stack.insert(v);
        for (const auto &s : succ[v]) {
            if (!left.count(s) || done.count(s))
                continue;
            if (on_stack.count(s)) {
                auto it = std::find(stack.begin(), stack.end(), s);
                cycle.assign(it, stack.end());
                return true;
            }
            if (dfs(s))
                return true;
        }
        stack.pop_back();
        on_stack.erase(v);
        done.insert(v);
        return false;
    };
    for (const auto &v : left)
        if (!done.count(v) && dfs(v))
            break;
    std::string text;
    for (const auto &c : cycle)
        text += c + " -> ";
    text += cycle.empty() ? "?" : cycle.front();
    const Node *first = cycle.empty() ? nullptr : d.find_node(cycle.front());
    throw Error("E_CYCLE", "dependency cycle " + text, cycle.empty() ? std::string() : cycle.front(),
                first ? first->span : SourceSpan{});
}

void sync_structure_ports(Node &n)
{
    if (!n.is_structure() || n.bodies.empty())
        return;
    const Diagram &b = n.bodies.front();
    n.in_ports.clear();
    n.out_ports.clear();
    if (n.kind == NodeKind::ForLoop)
        n.in_ports.push_back({"N", WireType::int32(), false, std::nullopt});
    if (n.kind == NodeKind::Case)
        n.in_ports.push_back({"sel", WireType::int32(), false, std::nullopt});
    for (const auto &c : b.controls)
        n.in_ports.push_back({c.name, c.type, false, std::nullopt});
    for (const auto &s : b.shifts)
        n.in_ports.push_back({s.name, s.type, true, Value::zero(s.type)});
    for (const auto &i : b.indicators)
        n.out_ports.push_back({i.name, i.type, false, std::nullopt});
    for (const auto &s : b.shifts)
        n.out_ports.push_back({s.name, s.type, false, std::nullopt});
}

void sync_subvi_ports(Node &n, const VIGraph &vi)
{
    n.in_ports.clear();
    n.out_ports.clear();
    for (const auto &c : vi.diagram.controls)
        n.in_ports.push_back({c.name, c.type, false, std::nullopt});
    for (const auto &i : vi.diagram.indicators)
        n.out_ports.push_back({i.name, i.type, false, std::nullopt});
}

Diagnostics validate(const VIGraph &vi, const Project *project)
{
    Checker c;
    c.project = project;
    c.check_diagram(vi.diagram, Context::Top, vi.name);
    return std::move(c.out);
}

Diagnostics validate(const Diagram &d)
{
    Checker c;
    c.check_diagram(d, Context::Top, "");
    return std::move(c.out);
}

Diagnostics validate(const Project &p)
{
    Diagnostics out;
    auto add = [&](std::string code, std::string msg, std::string subject, const SourceSpan &span) {
        out.push_back({std::move(code), std::move(msg), std::move(subject), span});
    };
    if (!p.vis.empty() && !p.vis.count(p.top))
        add("E_NO_TOP", "top-level VI '" + p.top + "' is not defined", p.top, {});

    std::set<std::string> names;
    for (const auto &c : p.clocks) {
        if (!names.insert("clock:" + c.name).second)
            add("E_DUP_NAME", "duplicate clock '" + c.name + "'", c.name, c.span);
        if (c.hz <= 0)
            add("E_BAD_CLOCK", "clock frequency must be positive", c.name, c.span);
    }
    for (const auto &c : p.channels) {
        if (!names.insert("chan:" + c.name).second)
            add("E_DUP_CHANNEL", "duplicate channel '" + c.name + "'", c.name, c.span);
        if (c.kind == ChannelKind::Fifo && c.capacity < 1)
            add("E_BAD_CHANNEL", "fifo capacity must be at least 1", c.name, c.span);
        if (c.dma && (c.dma->base_latency < 0 || c.dma->per_element < 1 || c.dma->burst < 1))
            add("E_BAD_CHANNEL", "DMA model needs B >= 0, P >= 1, burst >= 1", c.name, c.span);
    }
    if (p.scan) {
        if (p.scan->period_us <= 0)
            add("E_BAD_SCAN", "scan period must be positive", "scan", p.scan->span);
        for (const auto &c : p.scan->channels) {
            if (!names.insert("scan:" + c.name).second)
                add("E_DUP_NAME", "duplicate scan channel '" + c.name + "'", c.name, c.span);
            if (!c.type.is_scalar() || !c.type.is_numeric())
                add("E_TYPE_MISMATCH", "scan channels carry numeric scalars", c.name, c.span);
        }
    }
    for (const auto &a : p.aos) {
        if (!names.insert("ao:" + a.name).second)
            add("E_DUP_NAME", "duplicate analog output '" + a.name + "'", a.name, a.span);
        if (a.rate_hz <= 0)
            add("E_BAD_AO", "sample rate must be positive", a.name, a.span);
    }
    for (const auto &c : p.clips)
        if (!names.insert("clip:" + c.name).second)
            add("E_DUP_NAME", "duplicate CLIP instance '" + c.name + "'", c.name, c.span);

    for (const auto &[name, vi] : p.vis) {
        auto ds = validate(vi, &p);
        out.insert(out.end(), ds.begin(), ds.end());
    }
    return out;
}

} // namespace rioflow
