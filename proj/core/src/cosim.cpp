#include "rioflow/cosim.hpp"

#include <set>

#include "rioflow/primitives.hpp"
#include "rioflow/validate.hpp"

namespace rioflow {

std::map<std::string, Value> eval_fabric_glue(const Diagram &fabric, const std::map<std::string, Value> &controls,
                                              const std::map<std::string, std::map<std::string, Value>> &sctl_out)
{
    std::map<Endpoint, Value> have;
    for (const auto &[name, v] : controls)
        have[{"", name}] = v;
    std::map<Endpoint, Endpoint> driver;
    for (const auto &w : fabric.wires)
        for (const auto &d : w.dsts)
            driver[d] = w.src;
    auto input = [&](const Node &n, const Port &port) -> std::optional<Value> {
        auto d = driver.find({n.id, port.name});
        if (d == driver.end())
            return port.default_value ? port.default_value : std::optional<Value>(Value::zero(*port.type));
        auto v = have.find(d->second);
        if (v == have.end())
            return std::nullopt;
        return v->second;
    };

    std::map<std::string, Value> out;
    for (const auto &id : topo_order(fabric)) {
        const Node &n = *fabric.find_node(id);
        std::vector<Value> in;
        bool ready = true;
        for (const auto &port : n.in_ports) {
            auto v = input(n, port);
            if (!v) {
                ready = false;
                break;
            }
            in.push_back(*v);
        }
        if (n.kind == NodeKind::Sctl) {
            if (ready)
                for (std::size_t k = 0; k < n.in_ports.size(); ++k)
                    out[n.id + "." + n.in_ports[k].name] = in[k];
            auto it = sctl_out.find(n.id);
            if (it == sctl_out.end())
                continue;
            for (const auto &port : n.out_ports)
                if (auto v = it->second.find(port.name); v != it->second.end())
                    have[{n.id, port.name}] = v->second;
            continue;
        }
        if (!ready)
            continue;
        const auto vals = fire(n, in);
        for (std::size_t k = 0; k < vals.size() && k < n.out_ports.size(); ++k)
            have[{n.id, n.out_ports[k].name}] = vals[k];
    }
    for (const auto &ind : fabric.indicators) {
        auto d = driver.find({"", ind.name});
        if (d == driver.end())
            continue;
        if (auto v = have.find(d->second); v != have.end())
            out[ind.name] = v->second;
    }
    return out;
}

namespace {

/// Host-side view of the co-simulated channels.
class TimedIo : public LocalIo {
public:
    TimedIo(const Project &p, ChannelSet &ch, const std::int64_t *tick) : LocalIo(&p), ch_(ch), tick_(tick)
    {
        set_clock(tick);
    }

    bool fifo_write(const std::string &ch, const Value &v) override { return ch_.at(ch).timed_write(v, *tick_); }
    std::optional<Value> fifo_read(const std::string &ch) override { return ch_.at(ch).timed_read(*tick_); }
    void reg_write(const std::string &ch, const Value &v) override { ch_.at(ch).reg_write(v); }
    Value reg_read(const std::string &ch) override { return ch_.at(ch).reg_read(); }

private:
    ChannelSet &ch_;
    const std::int64_t *tick_;
};

} // namespace

CosimResult cosimulate(const Project &p, const DepthTable &t, const CosimConfig &cfg)
{
    if (cfg.ticks < 0)
        throw Error("E_CONFIG", "tick budget must not be negative");
    if (cfg.host_firings_per_tick < 1)
        throw Error("E_CONFIG", "host firings per tick must be at least 1");
    const DeploymentPlan plan = partition(p);

    CosimResult res;
    for (const auto &loop : plan.fabric_loops) {
        const Node *n = plan.fabric.find_node(loop.id);
        res.netlists.push_back(compile_sctl(*n, t, &p, loop.hz));
    }

    std::map<std::string, Value> controls = cfg.inputs;
    for (const auto &c : p.vis.at(p.top).diagram.controls) {
        auto it = controls.find(c.name);
        if (it == controls.end())
            throw Error("E_MISSING_INPUT", "no value for control '" + c.name + "'", c.name, c.span);
        if (it->second.type() != c.type)
            throw Error("E_TYPE_MISMATCH",
                        "control '" + c.name + "' is " + c.type.to_string() + ", got " + it->second.type().to_string(),
                        c.name, c.span);
    }
    const auto glue_in = eval_fabric_glue(plan.fabric, controls, {});

    ChannelSet channels = ChannelSet::from_project(p, cfg.dma);
    Simulator sim(channels);
    sim.set_record(cfg.record);
    for (const auto &n : res.netlists) {
        std::map<std::string, Value> in;
        const Node *node = plan.fabric.find_node(n.name);
        for (const auto &port : node->in_ports)
            if (auto it = glue_in.find(n.name + "." + port.name); it != glue_in.end())
                in[port.name] = it->second;
        sim.add_netlist(n, in, &p);
    }
    for (const auto &c : p.clips) {
        const IpDescriptor *d = p.find_ip(c.ip);
        if (!d)
            throw Error("E_UNKNOWN_IP", "CLIP '" + c.name + "' names unknown IP '" + c.ip + "'", c.name, c.span);
        sim.add_clip(c.name, *d, clock_hz(p, d->clock));
    }
    for (const auto &a : p.aos)
        sim.add_ao(a.name, clock_hz(p, a.clock), a.rate_hz, a.gain, cfg.ao_buffer);

    std::optional<ScanEngine> scan;
    Stimulus idle_stimulus;
    if (p.scan) {
        scan.emplace(*p.scan);
        sim.attach_scan(*scan, cfg.scan_io ? *cfg.scan_io : idle_stimulus);
    }

    std::int64_t now = 0;
    TimedIo io(p, channels, &now);
    for (const auto &[name, samples] : cfg.pcm)
        io.set_pcm(name, samples);
    if (scan)
        io.attach_scan(&*scan);

    ExecConfig ec;
    ec.seed = cfg.seed;
    ec.max_firings = cfg.max_firings;
    ec.trace = false;
    std::map<std::string, Value> host_in;
    for (const auto &c : plan.host.controls)
        host_in[c.name] = controls.at(c.name);
    Executor host(plan.host, host_in, ec, &p, io);
    const bool fabric_active = !res.netlists.empty() || !p.clips.empty();
    sim.set_pre_tick([&](std::int64_t tick) {
        now = tick;
        if (host.done())
            return;
        const StepStatus s = host.run_for(cfg.host_firings_per_tick);
        if (s != StepStatus::Blocked || fabric_active || host.next_deadline())
            return;
        for (const auto &name : channels.names())
            if (channels.at(name).in_flight() > 0)
                return;
        std::string who;
        for (const auto &w : host.waiting())
            who += (who.empty() ? "" : ", ") + w;
        throw Error("E_DEADLOCK", "no node can fire; waiting on channels: " + who, who);
    });

    auto idle = [&] {
        if (!host.done())
            return false;
        for (const auto &name : channels.names()) {
            const Channel &c = channels.at(name);
            if (c.kind() == ChannelKind::Fifo && c.occupancy() > 0)
                return false;
        }
        for (VirtualAO *ao : sim.aos())
            if (ao->buffered() > 0 || !ao->armed())
                return false;
        return true;
    };
    for (std::int64_t k = 0; k < cfg.ticks; ++k) {
        sim.step();
        if (cfg.until_idle && idle())
            break;
    }

    res.ticks = sim.tick();
    res.grid_hz = sim.grid_hz();
    res.firings = host.firings();
    res.host_done = host.done();
    res.underruns = sim.underruns();
    res.overflows = sim.overflows();
    for (const auto &name : channels.names())
        res.channels[name] = channels.at(name).stats();
    for (VirtualAO *ao : sim.aos()) {
        res.ao[ao->name()] = ao->log();
        res.ao_ticks_per_sample[ao->name()] = ao->ticks_per_sample();
    }

    std::map<std::string, std::map<std::string, Value>> sctl_out;
    for (std::size_t k = 0; k < sim.netlist_count(); ++k) {
        NetlistState &st = sim.netlist(k);
        const Netlist &n = st.netlist();
        res.iterations[n.name] = st.iterations();
        for (const auto &r : n.registers)
            if (r.kind == RegKind::Output || r.kind == RegKind::Shift)
                sctl_out[n.name][r.name] = st.reg(r.name);
    }
    for (const auto &[name, v] : eval_fabric_glue(plan.fabric, controls, sctl_out))
        if (name.find('.') == std::string::npos)
            res.indicators[name] = v;
    for (const auto &[name, v] : host.outputs())
        res.indicators[name] = v;
    res.trace = sim.trace();
    return res;
}

} // namespace rioflow
