#include "rioflow/sim.hpp"

#include <numeric>

namespace rioflow {

int TickTrace::find(const std::string &name) const
{
    for (std::size_t k = 0; k < signals.size(); ++k)
        if (signals[k].name == name)
            return static_cast<int>(k);
    return -1;
}

std::vector<Value> TickTrace::series(const std::string &name) const
{
    const int s = find(name);
    if (s < 0)
        throw Error("E_UNKNOWN_NODE", "no traced signal '" + name + "'", name);
    std::vector<Value> out;
    out.reserve(static_cast<std::size_t>(ticks));
    Value cur = Value::zero(signals[static_cast<std::size_t>(s)].type);
    std::size_t k = 0;
    for (std::int64_t t = 0; t < ticks; ++t) {
        for (; k < changes.size() && changes[k].tick <= t; ++k)
            if (changes[k].signal == s)
                cur = changes[k].value;
        out.push_back(cur);
    }
    return out;
}

std::vector<std::int64_t> TickTrace::change_ticks(const std::string &name) const
{
    const int s = find(name);
    if (s < 0)
        throw Error("E_UNKNOWN_NODE", "no traced signal '" + name + "'", name);
    std::vector<std::int64_t> out;
    for (const auto &c : changes)
        if (c.signal == s)
            out.push_back(c.tick);
    return out;
}

namespace {

struct Domain {
    std::int64_t hz = 0;     // 0 for the scan domain (rate given by period_us)
    std::int64_t period_us = 0;
    std::int64_t div = 1;
    std::int64_t count = 0;  // ticks of this domain so far
    bool now = false;        // ticks on the current grid tick
};

struct NetEntry {
    const Netlist *net;
    std::unique_ptr<NetlistState> st;
    std::size_t dom;
};

struct ClipEntry {
    std::string name;
    IpInstance inst;
    std::vector<Value> inputs;
    std::size_t dom;
};

struct AoEntry {
    std::unique_ptr<VirtualAO> ao;
    std::size_t dom;
};

struct Probe {
    std::function<Value()> read;
    Value last;
};

} // namespace

struct Simulator::Impl {
    std::vector<Domain> domains;
    std::vector<NetEntry> nets;
    std::vector<ClipEntry> clips;
    std::vector<AoEntry> aos;
    ScanEngine *scan = nullptr;
    ScanIo *scan_io = nullptr;
    std::size_t scan_dom = 0;
    std::vector<Probe> probes;

    std::map<std::string, std::vector<Value>> staged_fifo;
    std::vector<std::pair<std::string, Value>> staged_reg;

    std::size_t domain(std::int64_t hz)
    {
        if (hz <= 0)
            throw Error("E_CONFIG", "clock rates must be positive");
        for (std::size_t k = 0; k < domains.size(); ++k)
            if (domains[k].hz == hz)
                return k;
        domains.push_back({hz, 0});
        return domains.size() - 1;
    }
};

struct SimPorts : FabricPorts {
    Simulator &sim;
    Simulator::Impl &im;
    std::int64_t tick;

    SimPorts(Simulator &s, Simulator::Impl &i, std::int64_t t) : sim(s), im(i), tick(t) {}

    std::optional<Value> fifo_read(const std::string &ch) override { return sim.channels_.at(ch).timed_read(tick); }

    bool fifo_write(const std::string &ch, const Value &v) override
    {
        Channel &c = sim.channels_.at(ch);
        auto &staged = im.staged_fifo[ch];
        if (c.occupancy() + static_cast<std::int64_t>(staged.size()) >= c.capacity()) {
            c.note_drop();
            ++sim.overflows_;
            sim.trace_.events.push_back({sim.tick_, "E_OVERFLOW", ch, "fifo full, element dropped"});
            return false;
        }
        if (v.type() != c.element())
            throw Error("E_TYPE", "channel '" + ch + "' carries " + c.element().to_string(), ch);
        staged.push_back(v);
        return true;
    }

    Value reg_read(const std::string &ch) override { return sim.channels_.at(ch).reg_read(); }

    void reg_write(const std::string &ch, const Value &v) override
    {
        sim.channels_.at(ch);
        im.staged_reg.emplace_back(ch, v);
    }

    void ao_write(const std::string &name, const Value &v) override
    {
        VirtualAO *ao = sim.find_ao(name);
        if (!ao)
            throw Error("E_BAD_AO", "analog output '" + name + "' is not bound in the simulation", name);
        if (!ao->push(v.to_double())) {
            ++sim.overflows_;
            sim.trace_.events.push_back({sim.tick_, "E_OVERFLOW", name, "analog output buffer full"});
        }
    }
};

Simulator::Simulator(ChannelSet &channels) : channels_(channels), impl_(std::make_unique<Impl>()) {}

Simulator::~Simulator() = default;

std::size_t Simulator::add_netlist(const Netlist &n, const std::map<std::string, Value> &inputs, const Project *p)
{
    if (frozen_)
        throw Error("E_CONFIG", "simulation already started");
    const std::size_t dom = impl_->domain(n.hz);
    impl_->nets.push_back({&n, std::make_unique<NetlistState>(n, inputs, p), dom});
    return impl_->nets.size() - 1;
}

void Simulator::add_clip(const std::string &instance, const IpDescriptor &d, std::int64_t hz)
{
    if (frozen_)
        throw Error("E_CONFIG", "simulation already started");
    ClipEntry e{instance, IpInstance(d), {}, impl_->domain(hz)};
    for (const auto &port : d.inputs())
        e.inputs.push_back(Value::zero(port.type));
    impl_->clips.push_back(std::move(e));
}

VirtualAO &Simulator::add_ao(const std::string &name, std::int64_t clock_hz, std::int64_t rate_hz, double gain,
                             std::size_t buffer)
{
    if (frozen_)
        throw Error("E_CONFIG", "simulation already started");
    if (find_ao(name))
        throw Error("E_BAD_AO", "analog output '" + name + "' bound twice", name);
    const std::size_t dom = impl_->domain(clock_hz);
    impl_->aos.push_back({std::make_unique<VirtualAO>(name, clock_hz, rate_hz, gain, buffer), dom});
    return *impl_->aos.back().ao;
}

void Simulator::attach_scan(ScanEngine &engine, ScanIo &io)
{
    if (frozen_)
        throw Error("E_CONFIG", "simulation already started");
    impl_->scan = &engine;
    impl_->scan_io = &io;
    impl_->domains.push_back({0, engine.config().period_us});
    impl_->scan_dom = impl_->domains.size() - 1;
}

void Simulator::freeze()
{
    if (frozen_)
        return;
    frozen_ = true;
    constexpr std::int64_t kMaxGrid = 1'000'000'000'000'000;
    std::int64_t grid = 1;
    for (const auto &d : impl_->domains) {
        const std::int64_t need = d.hz > 0 ? d.hz : 1'000'000 / std::gcd<std::int64_t>(1'000'000, d.period_us);
        const std::int64_t g = std::gcd(grid, need);
        if (grid / g > kMaxGrid / need)
            throw Error("E_CONFIG", "clock rates have no practical common tick grid");
        grid = grid / g * need;
    }
    grid_hz_ = grid;
    for (auto &d : impl_->domains)
        d.div = d.hz > 0 ? grid / d.hz
                         : static_cast<std::int64_t>(static_cast<__int128>(grid) * d.period_us / 1'000'000);
    trace_.grid_hz = grid;

    auto add = [&](std::string name, WireType type, std::int64_t hz, std::function<Value()> read) {
        trace_.signals.push_back({std::move(name), std::move(type), hz});
        impl_->probes.push_back({std::move(read), Value()});
    };
    for (auto &e : impl_->nets) {
        NetlistState *st = e.st.get();
        for (const auto &r : e.net->registers) {
            const std::string reg = r.name;
            add(e.net->name + "." + r.name, r.type, e.net->hz, [st, reg] { return st->reg(reg); });
        }
    }
    for (auto &c : impl_->clips) {
        const auto outs = c.inst.descriptor().outputs();
        for (std::size_t k = 0; k < outs.size(); ++k) {
            const IpInstance *inst = &c.inst;
            const WireType t = outs[k].type;
            add(c.name + "." + outs[k].name, t, impl_->domains[c.dom].hz, [inst, k, t] {
                return k < inst->outputs().size() ? inst->outputs()[k] : Value::zero(t);
            });
        }
    }
    for (auto &a : impl_->aos) {
        const VirtualAO *ao = a.ao.get();
        add(ao->name(), WireType::int32(), impl_->domains[a.dom].hz, [ao] {
            return Value::int32(ao->log().empty() ? 0 : static_cast<std::int32_t>(ao->log().back().code));
        });
    }
    for (const auto &name : channels_.names()) {
        Channel *c = channels_.find(name);
        if (c->kind() == ChannelKind::Register) {
            add(name, c->element(), grid, [c] { return c->reg_read(); });
        } else {
            add(name + ".occupancy", WireType::int32(), grid,
                [c] { return Value::int32(static_cast<std::int32_t>(c->occupancy())); });
            add(name + ".writes", WireType::int32(), grid,
                [c] { return Value::int32(static_cast<std::int32_t>(c->stats().writes)); });
            add(name + ".reads", WireType::int32(), grid,
                [c] { return Value::int32(static_cast<std::int32_t>(c->stats().reads)); });
        }
    }
}

std::int64_t Simulator::grid_hz() const
{
    const_cast<Simulator *>(this)->freeze();
    return grid_hz_;
}

void Simulator::sample_trace()
{
    for (std::size_t k = 0; k < impl_->probes.size(); ++k) {
        Probe &p = impl_->probes[k];
        Value v = p.read();
        if (tick_ == 0 || !(v == p.last)) {
            trace_.changes.push_back({tick_, static_cast<int>(k), v});
            p.last = std::move(v);
        }
    }
}

void Simulator::step()
{
    freeze();
    Impl &im = *impl_;
    for (auto &d : im.domains)
        d.now = tick_ % d.div == 0;

    if (pre_tick_)
        pre_tick_(tick_);
    if (im.scan && im.domains[im.scan_dom].now)
        im.scan->tick(*im.scan_io);
    channels_.advance(tick_);

    SimPorts ports(*this, im, tick_);
    for (auto &e : im.nets)
        if (im.domains[e.dom].now)
            e.st->tick(ports);
    for (auto &[ch, vals] : im.staged_fifo) {
        Channel &c = channels_.at(ch);
        for (const auto &v : vals)
            c.timed_write(v, tick_);
        vals.clear();
    }
    for (const auto &[ch, v] : im.staged_reg)
        channels_.at(ch).reg_write(v);
    im.staged_reg.clear();

    for (auto &c : im.clips)
        if (im.domains[c.dom].now)
            c.inst.step(c.inputs);
    for (auto &a : im.aos) {
        const Domain &d = im.domains[a.dom];
        if (!d.now)
            continue;
        if (auto ev = a.ao->emit(d.count); ev && ev->underrun)
            trace_.events.push_back({tick_, "E_UNDERRUN", a.ao->name(), "analog output buffer empty"});
    }
    for (auto &d : im.domains)
        if (d.now)
            ++d.count;

    if (record_)
        sample_trace();
    ++tick_;
    trace_.ticks = tick_;
}

void Simulator::run(std::int64_t ticks)
{
    for (std::int64_t k = 0; k < ticks; ++k)
        step();
}

std::size_t Simulator::netlist_count() const
{
    return impl_->nets.size();
}

NetlistState &Simulator::netlist(std::size_t k)
{
    return *impl_->nets.at(k).st;
}

NetlistState *Simulator::find_netlist(const std::string &name)
{
    for (auto &e : impl_->nets)
        if (e.net->name == name)
            return e.st.get();
    return nullptr;
}

const IpInstance &Simulator::clip(const std::string &instance) const
{
    for (const auto &c : impl_->clips)
        if (c.name == instance)
            return c.inst;
    throw Error("E_UNKNOWN_IP", "no CLIP instance '" + instance + "'", instance);
}

VirtualAO *Simulator::find_ao(const std::string &name)
{
    for (auto &a : impl_->aos)
        if (a.ao->name() == name)
            return a.ao.get();
    return nullptr;
}

std::vector<VirtualAO *> Simulator::aos()
{
    std::vector<VirtualAO *> out;
    for (auto &a : impl_->aos)
        out.push_back(a.ao.get());
    return out;
}

std::int64_t Simulator::underruns() const
{
    std::int64_t n = 0;
    for (const auto &a : impl_->aos)
        n += a.ao->underruns();
    return n;
}

} // namespace rioflow
