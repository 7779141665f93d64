#include "rioflow/runtime.hpp"

#include <algorithm>
#include <deque>

#include "rioflow/ip.hpp"
#include "rioflow/primitives.hpp"
#include "rioflow/scan.hpp"

namespace rioflow {

// ---------------------------------------------------------------------------
// LocalIo

LocalIo::LocalIo(const Project *p) : project_(p)
{
    if (p)
        channels_ = ChannelSet::from_project(*p);
}

std::int64_t LocalIo::now() const
{
    return clock_ ? *clock_ : -1;
}

bool LocalIo::fifo_write(const std::string &ch, const Value &v)
{
    return channels_.at(ch).try_write(v);
}

std::optional<Value> LocalIo::fifo_read(const std::string &ch)
{
    return channels_.at(ch).try_read();
}

void LocalIo::reg_write(const std::string &ch, const Value &v)
{
    channels_.at(ch).reg_write(v);
}

Value LocalIo::reg_read(const std::string &ch)
{
    return channels_.at(ch).reg_read();
}

Value LocalIo::scan_read(const std::string &ch)
{
    if (scan_)
        return scan_->read(ch);
    if (auto it = scan_values_.find(ch); it != scan_values_.end())
        return it->second;
    const ScanChannelDecl *decl = project_ ? project_->find_scan_channel(ch) : nullptr;
    if (!decl)
        throw Error("E_UNKNOWN_CHANNEL", "scan channel '" + ch + "' is not declared", ch);
    return Value::zero(decl->type);
}

void LocalIo::scan_write(const std::string &ch, const Value &v)
{
    if (scan_)
        return scan_->write(ch, v);
    scan_values_[ch] = v;
}

void LocalIo::set_pcm(const std::string &name, std::vector<std::int16_t> samples)
{
    pcm_[name] = Pcm{std::move(samples), 0};
}

PcmFrame LocalIo::pcm_read(const std::string &name, std::int64_t frame)
{
    auto it = pcm_.find(name);
    if (it == pcm_.end())
        throw Error("E_IO", "no PCM input bound to '" + name + "'", name);
    Pcm &src = it->second;
    PcmFrame out;
    out.samples.assign(static_cast<std::size_t>(frame), 0.0);
    while (out.count < frame && src.pos < src.samples.size())
        out.samples[static_cast<std::size_t>(out.count++)] = src.samples[src.pos++] / 32768.0;
    out.eof = src.pos >= src.samples.size();
    return out;
}

void LocalIo::ao_write(const std::string &name, const Value &v)
{
    ao_[name].push_back(v);
}

// ---------------------------------------------------------------------------
// Executor

namespace {

struct Dst {
    int node; // -1: boundary sink
    int port;
    std::string sink;
};

struct DiagInfo {
    std::vector<std::vector<std::vector<Dst>>> out_routes; // node, out port
    std::map<std::string, std::vector<Dst>> src_routes;    // boundary source
    std::vector<std::vector<char>> wired;                   // node, in port
    std::vector<int> required;
};

DiagInfo build_info(const Diagram &d)
{
    DiagInfo info;
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < d.nodes.size(); ++i)
        index[d.nodes[i].id] = static_cast<int>(i);
    info.out_routes.resize(d.nodes.size());
    info.wired.resize(d.nodes.size());
    info.required.assign(d.nodes.size(), 0);
    for (std::size_t i = 0; i < d.nodes.size(); ++i) {
        info.out_routes[i].resize(d.nodes[i].out_ports.size());
        info.wired[i].assign(d.nodes[i].in_ports.size(), 0);
    }
    auto port_index = [](const std::vector<Port> &ports, const std::string &name) {
        for (std::size_t k = 0; k < ports.size(); ++k)
            if (ports[k].name == name)
                return static_cast<int>(k);
        return -1;
    };
    for (const auto &w : d.wires) {
        std::vector<Dst> dsts;
        for (const auto &e : w.dsts) {
            if (e.boundary()) {
                dsts.push_back({-1, -1, e.port});
                continue;
            }
            const int n = index.at(e.node);
            const int k = port_index(d.nodes[static_cast<std::size_t>(n)].in_ports, e.port);
            if (k < 0)
                throw Error("E_UNKNOWN_PORT", "unknown port '" + e.to_string() + "'", e.to_string());
            dsts.push_back({n, k, {}});
            info.wired[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] = 1;
            ++info.required[static_cast<std::size_t>(n)];
        }
        if (w.src.boundary()) {
            auto &r = info.src_routes[w.src.port];
            r.insert(r.end(), dsts.begin(), dsts.end());
        } else {
            const int n = index.at(w.src.node);
            const int k = port_index(d.nodes[static_cast<std::size_t>(n)].out_ports, w.src.port);
            if (k < 0)
                throw Error("E_UNKNOWN_PORT", "unknown port '" + w.src.to_string() + "'", w.src.to_string());
            auto &r = info.out_routes[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
            r.insert(r.end(), dsts.begin(), dsts.end());
        }
    }
    return info;
}

Value port_default(const Port &p)
{
    if (p.default_value)
        return *p.default_value;
    return p.type ? Value::zero(*p.type) : Value();
}

} // namespace

struct Executor::Impl {
    struct Loop;

    struct Frame {
        const Diagram *d = nullptr;
        const DiagInfo *info = nullptr;
        std::string prefix;
        bool in_sctl = false;
        std::vector<std::vector<std::optional<Value>>> in;
        std::vector<int> have;
        std::vector<char> state; // 0 waiting for inputs, 1 ready or running, 2 done
        std::map<std::string, Value> sinks;
        std::size_t remaining = 0;
        Loop *owner = nullptr;
    };

    struct Loop {
        Frame *parent = nullptr;
        std::size_t idx = 0;
        const Node *n = nullptr;
        std::map<std::string, Value> inputs;
        std::vector<Value> consumed;
        std::map<std::string, Value> shifts;
        std::map<std::string, Value> last;
        std::int64_t iter = 0;
        std::int64_t trip = 0;
        std::size_t body_index = 0;
        std::unique_ptr<Frame> body;
    };

    struct Ref {
        Frame *f;
        std::size_t idx;
    };

    struct Wait {
        Frame *f;
        std::size_t idx;
        std::int64_t since;
        std::int64_t timeout;
    };

    Executor &self;
    Diagram top_diagram;
    ExecConfig cfg;
    const Project *project;
    IoEnv &io;
    std::mt19937_64 rng;
    std::map<const Diagram *, DiagInfo> infos;
    std::unique_ptr<Frame> top;
    std::map<std::pair<Frame *, std::size_t>, std::unique_ptr<Loop>> loops;
    std::vector<std::unique_ptr<Loop>> graveyard;
    std::vector<std::unique_ptr<Frame>> dead_frames;
    std::vector<Ref> ready;
    std::deque<Ref> starts;
    std::deque<Frame *> completed;
    std::vector<Wait> waits;
    std::map<std::string, IpInstance> ips;
    std::int64_t iterations = 0;
    bool finished = false;

    Impl(Executor &e, Diagram d, ExecConfig c, const Project *p, IoEnv &env)
        : self(e), top_diagram(std::move(d)), cfg(std::move(c)), project(p), io(env), rng(cfg.seed)
    {
    }

    std::int64_t now() const
    {
        const std::int64_t t = io.now();
        return t >= 0 ? t : self.firings_;
    }

    const DiagInfo &info_for(const Diagram &d)
    {
        auto it = infos.find(&d);
        if (it == infos.end())
            it = infos.emplace(&d, build_info(d)).first;
        return it->second;
    }

    std::unique_ptr<Frame> make_frame(const Diagram &d, std::string prefix, bool in_sctl, Loop *owner,
                                      const std::map<std::string, Value> &sources)
    {
        auto f = std::make_unique<Frame>();
        f->d = &d;
        f->info = &info_for(d);
        f->prefix = std::move(prefix);
        f->in_sctl = in_sctl;
        f->owner = owner;
        f->in.resize(d.nodes.size());
        for (std::size_t i = 0; i < d.nodes.size(); ++i)
            f->in[i].resize(d.nodes[i].in_ports.size());
        f->have.assign(d.nodes.size(), 0);
        f->state.assign(d.nodes.size(), 0);
        f->remaining = d.nodes.size();
        Frame *raw = f.get();
        for (std::size_t i = 0; i < d.nodes.size(); ++i)
            if (raw->info->required[i] == 0)
                node_ready(*raw, i);
        for (const auto &[name, dsts] : raw->info->src_routes) {
            auto v = sources.find(name);
            if (v == sources.end())
                throw Error("E_MISSING_INPUT", "no value for '" + name + "'", raw->prefix + name);
            for (const auto &dst : dsts)
                deliver(*raw, dst, v->second);
        }
        if (raw->remaining == 0)
            completed.push_back(raw);
        return f;
    }

    void deliver(Frame &f, const Dst &dst, const Value &v)
    {
        if (dst.node < 0) {
            f.sinks[dst.sink] = v;
            return;
        }
        const auto n = static_cast<std::size_t>(dst.node);
        f.in[n][static_cast<std::size_t>(dst.port)] = v;
        if (++f.have[n] == f.info->required[n])
            node_ready(f, n);
    }

    void node_ready(Frame &f, std::size_t idx)
    {
        f.state[idx] = 1;
        if (f.d->nodes[idx].kind == NodeKind::Primitive)
            ready.push_back({&f, idx});
        else
            starts.push_back({&f, idx});
    }

    std::vector<Value> gather(const Frame &f, std::size_t idx) const
    {
        const Node &n = f.d->nodes[idx];
        std::vector<Value> in;
        in.reserve(n.in_ports.size());
        for (std::size_t k = 0; k < n.in_ports.size(); ++k)
            in.push_back(f.in[idx][k] ? *f.in[idx][k] : port_default(n.in_ports[k]));
        return in;
    }

    void count_step()
    {
        if (self.firings_ + iterations >= cfg.max_firings)
            throw Error("E_LIMIT", "execution exceeded " + std::to_string(cfg.max_firings) + " firings");
    }

    void complete_node(Frame &f, std::size_t idx, std::vector<Value> consumed, const std::vector<Value> &produced)
    {
        const Node &n = f.d->nodes[idx];
        if (cfg.trace)
            self.trace_.records.push_back({self.firings_, f.prefix + n.id, std::move(consumed), produced});
        for (std::size_t k = 0; k < produced.size() && k < f.info->out_routes[idx].size(); ++k)
            for (const auto &dst : f.info->out_routes[idx][k])
                deliver(f, dst, produced[k]);
        ++self.firings_;
        f.state[idx] = 2;
        if (--f.remaining == 0)
            completed.push_back(&f);
    }

    // --- structures -------------------------------------------------------

    void start_structure(Frame &f, std::size_t idx)
    {
        const Node &n = f.d->nodes[idx];
        auto loop = std::make_unique<Loop>();
        loop->parent = &f;
        loop->idx = idx;
        loop->n = &n;
        loop->consumed = gather(f, idx);
        for (std::size_t k = 0; k < n.in_ports.size(); ++k)
            loop->inputs[n.in_ports[k].name] = loop->consumed[k];
        if (!n.bodies.empty())
            for (const auto &s : n.bodies[0].shifts)
                loop->shifts[s.name] = loop->inputs.at(s.name);
        Loop *l = loop.get();
        loops[{&f, idx}] = std::move(loop);
        switch (n.kind) {
        case NodeKind::ForLoop:
            l->trip = l->inputs.at("N").as_i32();
            if (l->trip <= 0)
                return finish_structure(*l);
            break;
        case NodeKind::Case: {
            const std::int32_t sel = l->inputs.at("sel").as_i32();
            auto it = std::find(n.case_labels.begin(), n.case_labels.end(), sel);
            if (it != n.case_labels.end())
                l->body_index = static_cast<std::size_t>(it - n.case_labels.begin());
            else if (n.has_default)
                l->body_index = n.case_labels.size();
            else
                throw Error("E_RUNTIME", "no case frame for selector " + std::to_string(sel), f.prefix + n.id);
            break;
        }
        default:
            break;
        }
        start_body(*l);
    }

    void start_body(Loop &l)
    {
        const Node &n = *l.n;
        const Diagram &body = n.bodies[l.body_index];
        std::map<std::string, Value> sources;
        for (const auto &c : body.controls)
            sources[c.name] = l.inputs.at(c.name);
        for (const auto &[name, v] : l.shifts)
            sources[name] = v;
        if (body.has_index)
            sources["i"] = Value::int32(static_cast<std::int32_t>(l.iter));
        for (const auto &prm : body.params)
            sources[prm.name] = io.reg_read(prm.name);
        if (l.body)
            dead_frames.push_back(std::move(l.body));
        const bool sctl = l.parent->in_sctl || n.kind == NodeKind::Sctl;
        l.body = make_frame(body, l.parent->prefix + n.id + "/", sctl, &l, sources);
    }

    void end_iteration(Loop &l)
    {
        const Node &n = *l.n;
        const auto &sinks = l.body->sinks;
        const Diagram &body = n.bodies[l.body_index];
        for (const auto &s : body.shifts)
            if (auto it = sinks.find(s.name); it != sinks.end())
                l.shifts[s.name] = it->second;
        for (const auto &ind : body.indicators)
            if (auto it = sinks.find(ind.name); it != sinks.end())
                l.last[ind.name] = it->second;
        ++l.iter;
        if (n.kind != NodeKind::Case) {
            count_step();
            ++iterations;
        }
        auto stop_it = sinks.find("stop");
        const bool stop = stop_it != sinks.end() && stop_it->second.as_bool();
        bool again = false;
        switch (n.kind) {
        case NodeKind::WhileLoop:
            again = !stop;
            break;
        case NodeKind::ForLoop:
            again = l.iter < l.trip;
            break;
        case NodeKind::Sctl:
            if (cfg.on_iteration)
                cfg.on_iteration(l.parent->prefix + n.id, l.iter - 1, sinks);
            again = !stop && l.iter < cfg.sctl_iterations;
            break;
        default:
            break;
        }
        if (again)
            start_body(l);
        else
            finish_structure(l);
    }

    void finish_structure(Loop &l)
    {
        const Node &n = *l.n;
        std::vector<Value> produced;
        for (const auto &p : n.out_ports) {
            if (auto it = l.last.find(p.name); it != l.last.end())
                produced.push_back(it->second);
            else if (auto s = l.shifts.find(p.name); s != l.shifts.end())
                produced.push_back(s->second);
            else
                produced.push_back(Value::zero(*p.type));
        }
        Frame &f = *l.parent;
        const std::size_t idx = l.idx;
        complete_node(f, idx, std::move(l.consumed), produced);
        auto it = loops.find({&f, idx});
        if (l.body)
            dead_frames.push_back(std::move(l.body));
        graveyard.push_back(std::move(it->second));
        loops.erase(it);
    }

    void settle()
    {
        while (!starts.empty() || !completed.empty()) {
            if (!starts.empty()) {
                Ref r = starts.front();
                starts.pop_front();
                start_structure(*r.f, r.idx);
                continue;
            }
            Frame *f = completed.front();
            completed.pop_front();
            if (f == top.get())
                finished = true;
            else
                end_iteration(*f->owner);
        }
    }

    // --- primitives -------------------------------------------------------

    /// Fires a primitive. Returns false when a channel operation must wait.
    /// `force_timeout` completes a blocked channel operation as failed.
    bool fire_leaf(Frame &f, std::size_t idx, bool force_timeout)
    {
        const Node &n = f.d->nodes[idx];
        const PrimitiveInfo *info = find_primitive(n.op);
        std::vector<Value> in = gather(f, idx);
        std::vector<Value> out;
        const std::string path = f.prefix + n.id;
        auto zero_out = [&](std::size_t k) { return Value::zero(*n.out_ports[k].type); };
        auto blocked = [&]() -> bool {
            const std::int64_t timeout = f.in_sctl ? 0 : n.args.timeout.value_or(-1);
            if (timeout == 0 || force_timeout)
                return false;
            for (const auto &w : waits)
                if (w.f == &f && w.idx == idx)
                    return true;
            waits.push_back({&f, idx, now(), timeout});
            return true;
        };
        try {
            switch (info->cls) {
            case PrimClass::FifoRead:
                if (!in[0].as_bool()) {
                    out = {zero_out(0), Value::boolean(false)};
                } else if (auto v = io.fifo_read(n.args.ref)) {
                    out = {*v, Value::boolean(true)};
                } else {
                    if (blocked())
                        return false;
                    out = {zero_out(0), Value::boolean(false)};
                }
                break;
            case PrimClass::FifoWrite:
                if (!in[1].as_bool()) {
                    out = {Value::boolean(false)};
                } else if (io.fifo_write(n.args.ref, in[0])) {
                    out = {Value::boolean(true)};
                } else {
                    if (blocked())
                        return false;
                    out = {Value::boolean(false)};
                }
                break;
            case PrimClass::RegRead:
                out = {io.reg_read(n.args.ref)};
                break;
            case PrimClass::RegWrite:
                io.reg_write(n.args.ref, in[0]);
                break;
            case PrimClass::ScanRead:
                out = {io.scan_read(n.args.ref)};
                break;
            case PrimClass::ScanWrite:
                io.scan_write(n.args.ref, in[0]);
                break;
            case PrimClass::FileReadPCM: {
                PcmFrame fr = io.pcm_read(n.args.ref, n.args.count.value_or(0));
                std::vector<Value> xs;
                xs.reserve(fr.samples.size());
                for (double s : fr.samples)
                    xs.push_back(Value::float64(s));
                out = {Value::array(WireType::float64(), std::move(xs)), Value::int32(fr.count),
                       Value::boolean(fr.eof)};
                break;
            }
            case PrimClass::AoWrite:
                if (in[1].as_bool())
                    io.ao_write(n.args.ref, in[0]);
                break;
            case PrimClass::Ip: {
                auto it = ips.find(path);
                if (it == ips.end()) {
                    const IpDescriptor *d = project ? project->find_ip(n.args.ref) : nullptr;
                    if (!d)
                        throw Error("E_UNKNOWN_IP", "IP '" + n.args.ref + "' is not declared", path);
                    it = ips.emplace(path, IpInstance(*d)).first;
                }
                out = it->second.step(in);
                break;
            }
            default:
                out = fire(n, in);
                break;
            }
        } catch (const Error &e) {
            if (e.code() == "E_RUNTIME" && e.diagnostic().subject != path)
                throw Error("E_RUNTIME", e.diagnostic().message, path, n.span);
            throw;
        }
        for (auto it = waits.begin(); it != waits.end(); ++it)
            if (it->f == &f && it->idx == idx) {
                waits.erase(it);
                break;
            }
        count_step();
        complete_node(f, idx, std::move(in), out);
        return true;
    }

    StepStatus step()
    {
        settle();
        graveyard.clear();
        dead_frames.clear();
        if (finished)
            return StepStatus::Done;
        while (!ready.empty()) {
            const std::size_t k = static_cast<std::size_t>(rng() % ready.size());
            Ref r = ready[k];
            ready[k] = ready.back();
            ready.pop_back();
            if (fire_leaf(*r.f, r.idx, false)) {
                settle();
                return StepStatus::Fired;
            }
        }
        // Only waiting channel operations remain: retry them in order.
        for (std::size_t k = 0; k < waits.size(); ++k) {
            Wait w = waits[k];
            const bool expired = w.timeout > 0 && now() - w.since >= w.timeout;
            if (fire_leaf(*w.f, w.idx, expired)) {
                settle();
                return StepStatus::Fired;
            }
        }
        return finished ? StepStatus::Done : StepStatus::Blocked;
    }

    bool expire_one_wait()
    {
        std::optional<std::size_t> best;
        for (std::size_t k = 0; k < waits.size(); ++k) {
            if (waits[k].timeout < 0)
                continue;
            if (!best || waits[k].since + waits[k].timeout < waits[*best].since + waits[*best].timeout)
                best = k;
        }
        if (!best)
            return false;
        Wait w = waits[*best];
        fire_leaf(*w.f, w.idx, true);
        settle();
        return true;
    }
};

Executor::Executor(Diagram d, std::map<std::string, Value> inputs, ExecConfig cfg, const Project *p, IoEnv &io)
{
    if (cfg.max_firings <= 0)
        throw Error("E_CONFIG", "max firings must be positive");
    impl_ = std::make_unique<Impl>(*this, std::move(d), std::move(cfg), p, io);
    const Diagram &top = impl_->top_diagram;
    for (const auto *list : {&top.controls, &top.params}) {
        for (const auto &c : *list) {
            auto it = inputs.find(c.name);
            if (it == inputs.end()) {
                if (list == &top.params && p && p->find_channel(c.name)) {
                    inputs[c.name] = io.reg_read(c.name);
                    continue;
                }
                throw Error("E_MISSING_INPUT", "no value for control '" + c.name + "'", c.name, c.span);
            }
            if (it->second.type() != c.type)
                throw Error("E_TYPE_MISMATCH",
                            "control '" + c.name + "' is " + c.type.to_string() + ", got " +
                                it->second.type().to_string(),
                            c.name, c.span);
        }
    }
    impl_->top = impl_->make_frame(top, "", false, nullptr, inputs);
}

Executor::~Executor() = default;

StepStatus Executor::step()
{
    return impl_->step();
}

StepStatus Executor::run_for(std::int64_t budget)
{
    StepStatus s = StepStatus::Fired;
    for (std::int64_t k = 0; k < budget; ++k) {
        s = step();
        if (s != StepStatus::Fired)
            return s;
    }
    return impl_->finished ? StepStatus::Done : s;
}

bool Executor::expire_one_wait()
{
    return impl_->expire_one_wait();
}

bool Executor::done() const
{
    return impl_->finished;
}

std::map<std::string, Value> Executor::outputs() const
{
    std::map<std::string, Value> out;
    for (const auto &ind : impl_->top_diagram.indicators) {
        auto it = impl_->top->sinks.find(ind.name);
        if (it != impl_->top->sinks.end())
            out[ind.name] = it->second;
    }
    return out;
}

std::vector<std::string> Executor::waiting() const
{
    std::vector<std::string> out;
    for (const auto &w : impl_->waits)
        out.push_back(w.f->prefix + w.f->d->nodes[w.idx].id);
    return out;
}

std::optional<std::int64_t> Executor::next_deadline() const
{
    std::optional<std::int64_t> best;
    for (const auto &w : impl_->waits)
        if (w.timeout >= 0 && (!best || w.since + w.timeout < *best))
            best = w.since + w.timeout;
    return best;
}

RunResult run(const Diagram &d, const std::map<std::string, Value> &inputs, const ExecConfig &cfg, const Project *p,
              IoEnv *io)
{
    LocalIo local(p);
    IoEnv &env = io ? *io : local;
    Executor ex(d, inputs, cfg, p, env);
    for (;;) {
        const StepStatus s = ex.step();
        if (s == StepStatus::Done)
            break;
        if (s == StepStatus::Blocked && !ex.expire_one_wait()) {
            std::string who;
            for (const auto &w : ex.waiting())
                who += (who.empty() ? "" : ", ") + w;
            throw Error("E_DEADLOCK", "no node can fire; waiting on channels: " + who, who);
        }
    }
    RunResult r;
    r.outputs = ex.outputs();
    r.firings = ex.firings();
    r.trace = ex.trace();
    for (const auto &ind : d.indicators)
        if (!r.outputs.count(ind.name))
            throw Error("E_DEADLOCK", "indicator '" + ind.name + "' was never written", ind.name, ind.span);
    return r;
}

} // namespace rioflow
