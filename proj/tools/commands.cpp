#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <ostream>

#include <json.hpp>

#include "rioflow/cosim.hpp"
#include "rioflow/elaborate.hpp"
#include "rioflow/files.hpp"
#include "rioflow/gtext.hpp"
#include "rioflow/netlist.hpp"
#include "rioflow/runtime.hpp"
#include "rioflow/scan.hpp"
#include "rioflow/trace_io.hpp"

namespace rioflow::cli {

using json = nlohmann::ordered_json;

int exit_code_for(const std::string &code)
{
    if (code == "E_IO" || code == "E_USAGE" || code == "E_CONFIG")
        return kUsage;
    if (code == "E_DEADLOCK" || code == "E_LIMIT" || code == "E_RUNTIME" || code == "E_UNDERRUN" ||
        code == "E_MISSING_INPUT")
        return kRuntime;
    return kDesignError;
}

namespace {

struct RunConfig {
    std::int64_t host_firings_per_tick = 4;
    std::int64_t max_firings = 10'000'000;
    std::size_t ao_buffer = 64;
    std::int64_t underrun_threshold = 0;
    DmaModel dma;
};

struct Session {
    Project project; // parsed, overrides applied
    Project elab;
    DepthTable table;
    RunConfig cfg;
    std::map<std::string, Value> controls;
};

void print(std::ostream &err, const Error &e)
{
    for (const auto &d : e.diagnostics())
        err << d.to_string() << "\n";
}

int guarded(std::ostream &err, const std::function<int()> &fn)
{
    try {
        return fn();
    } catch (const Error &e) {
        print(err, e);
        return exit_code_for(e.code());
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kRuntime;
    }
}

DmaModel dma_from(const json &j, DmaModel base)
{
    if (!j.is_object())
        throw Error("E_CONFIG", "a DMA model must be an object");
    base.base_latency = j.value("base_latency", base.base_latency);
    base.per_element = j.value("per_element", base.per_element);
    base.burst = j.value("burst", base.burst);
    if (base.base_latency < 0 || base.per_element < 1 || base.burst < 1)
        throw Error("E_CONFIG", "DMA model needs base_latency >= 0, per_element >= 1, burst >= 1");
    return base;
}

void apply_config(Session &s, const std::string &path)
{
    if (path.empty())
        return;
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception &e) {
        throw Error("E_CONFIG", std::string("config is not valid JSON: ") + e.what(), path);
    }
    try {
        s.cfg.host_firings_per_tick = j.value("host_firings_per_tick", s.cfg.host_firings_per_tick);
        s.cfg.max_firings = j.value("max_firings", s.cfg.max_firings);
        s.cfg.ao_buffer = j.value("ao_buffer", s.cfg.ao_buffer);
        s.cfg.underrun_threshold = j.value("underrun_threshold", s.cfg.underrun_threshold);
        if (j.contains("dma")) {
            const json &d = j["dma"];
            if (d.contains("default"))
                s.cfg.dma = dma_from(d["default"], s.cfg.dma);
            if (d.contains("channels"))
                for (const auto &[name, m] : d["channels"].items()) {
                    auto it = std::find_if(s.project.channels.begin(), s.project.channels.end(),
                                           [&](const ChannelDecl &c) { return c.name == name; });
                    if (it == s.project.channels.end())
                        throw Error("E_CONFIG", "DMA override for unknown channel '" + name + "'", name);
                    it->dma = dma_from(m, it->dma.value_or(s.cfg.dma));
                }
        }
    } catch (const json::exception &e) {
        throw Error("E_CONFIG", std::string("bad config value: ") + e.what(), path);
    }
}

Session load(const Options &o)
{
    if (o.project.empty())
        throw Error("E_USAGE", "no project file given");
    Session s;
    s.project = parse_file(o.project);
    for (const auto &[name, hz] : o.clocks)
        set_clock(s.project, name, hz);
    apply_config(s, o.config);
    s.table = DepthTable::from_env();

    const Diagram &top = s.project.vis.at(s.project.top).diagram;
    for (const auto &[name, text] : o.params) {
        auto ch = std::find_if(s.project.channels.begin(), s.project.channels.end(),
                               [&](const ChannelDecl &c) { return c.name == name && c.kind == ChannelKind::Register; });
        if (ch != s.project.channels.end()) {
            ch->initial = parse_literal_text(text, ch->element);
            continue;
        }
        auto c = std::find_if(top.controls.begin(), top.controls.end(),
                              [&](const BoundaryPort &b) { return b.name == name; });
        if (c == top.controls.end())
            throw Error("E_USAGE", "'" + name + "' is neither a register channel nor a control of the top VI", name);
        s.controls[name] = parse_literal_text(text, c->type);
    }
    for (const auto &c : top.controls)
        if (!s.controls.count(c.name))
            s.controls[c.name] = Value::zero(c.type);
    s.elab = elaborate(s.project);
    return s;
}

json value_json(const Value &v)
{
    switch (v.type().kind()) {
    case TypeKind::Boolean:
        return v.as_bool();
    case TypeKind::Int32:
        return v.as_i32();
    case TypeKind::Float64:
    case TypeKind::FixedPoint: {
        const double d = v.to_double();
        if (std::isfinite(d))
            return d;
        return v.to_string();
    }
    default: {
        json a = json::array();
        for (const auto &e : v.elements())
            a.push_back(value_json(e));
        return a;
    }
    }
}

json resources_json(const ResourceEstimate &r)
{
    return json{{"lut", r.lut}, {"ff", r.ff}, {"dsp", r.dsp}, {"bram", r.bram}};
}

json stats_json(const ChannelStats &s)
{
    return json{{"writes", s.writes},
                {"reads", s.reads},
                {"timeouts", s.timeouts},
                {"drops", s.drops},
                {"max_occupancy", s.max_occupancy}};
}

void ensure_dir(const std::string &dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw Error("E_IO", "cannot create output directory '" + dir + "': " + ec.message(), dir);
}

std::string out_path(const Options &o, const std::string &file)
{
    return (std::filesystem::path(o.out) / file).string();
}

void write_traces(const Options &o, const TickTrace &t)
{
    if (o.trace.count("vcd"))
        write_file_atomic(out_path(o, "trace.vcd"), to_vcd(t));
    if (o.trace.count("csv"))
        write_file_atomic(out_path(o, "trace.csv"), to_csv(t));
}

void collect_pcm_inputs(const Diagram &d, std::set<std::string> &names)
{
    for (const auto &n : d.nodes) {
        if (n.kind == NodeKind::Primitive && n.op == "FileReadPCM")
            names.insert(n.args.ref);
        for (const auto &b : n.bodies)
            collect_pcm_inputs(b, names);
    }
}

std::map<std::string, std::vector<std::int16_t>> load_pcm(const Options &o, const Project &p,
                                                         const std::function<std::vector<std::int16_t>()> &fallback)
{
    std::set<std::string> names;
    for (const auto &[vi, g] : p.vis)
        collect_pcm_inputs(g.diagram, names);
    std::map<std::string, std::vector<std::int16_t>> pcm;
    for (const auto &[name, path] : o.inputs) {
        if (!names.count(name))
            throw Error("E_USAGE", "the project reads no PCM input named '" + name + "'", name);
        pcm[name] = read_pcm(path);
    }
    for (const auto &name : names)
        if (!pcm.count(name)) {
            if (!fallback)
                throw Error("E_USAGE", "PCM input '" + name + "' needs --input " + name + "=PATH", name);
            pcm[name] = fallback();
        }
    return pcm;
}

std::string fmt(const char *f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------

int check_impl(const Options &o, std::ostream &out, std::ostream &err)
{
    const Session s = load(o);
    const DeploymentPlan plan = partition(s.elab);
    Diagnostics found;
    for (const auto &loop : plan.fabric_loops) {
        try {
            compile_sctl(*plan.fabric.find_node(loop.id), s.table, &s.elab, loop.hz);
        } catch (const Error &e) {
            found.insert(found.end(), e.diagnostics().begin(), e.diagnostics().end());
        }
    }
    if (!found.empty()) {
        print(err, Error(found));
        return kDesignError;
    }
    out << o.project << ": ok (" << s.project.vis.size() << " VI" << (s.project.vis.size() == 1 ? "" : "s") << ", "
        << plan.fabric_loops.size() << " fabric loop" << (plan.fabric_loops.size() == 1 ? "" : "s") << ")\n";
    return kOk;
}

void annotated_loops(const Diagram &d, const std::string &prefix, std::vector<std::pair<std::string, const Node *>> &out)
{
    for (const auto &n : d.nodes) {
        if ((n.kind == NodeKind::WhileLoop || n.kind == NodeKind::ForLoop) && n.hls.annotated)
            out.emplace_back(prefix + n.id, &n);
        for (const auto &b : n.bodies)
            annotated_loops(b, prefix + n.id + "/", out);
    }
}

int estimate_impl(const Options &o, std::ostream &out, std::ostream &err)
{
    const Session s = load(o);
    const DeploymentPlan plan = partition(s.elab);
    int code = kOk;
    json report;
    report["project"] = o.project;
    json sctls = json::array();
    ResourceEstimate total;
    std::string table = "SCTL                 clock         MHz   path_ns  period_ns  slack_ns     lut      ff   dsp  bram\n";
    for (const auto &loop : plan.fabric_loops) {
        const Node &node = *plan.fabric.find_node(loop.id);
        const TimingReport tr = analyze_sctl(node, loop.hz, s.table, &s.elab);
        const Netlist n = compile_sctl(node, s.table, &s.elab, loop.hz, false);
        const ResourceEstimate r = estimate(n, s.table);
        total += r;
        json path = json::array();
        for (const auto &id : tr.critical_path)
            path.push_back(id);
        sctls.push_back(json{{"name", loop.id},
                             {"clock", loop.clock},
                             {"hz", loop.hz},
                             {"critical_path_ns", tr.path_ns},
                             {"period_ns", tr.period_ns},
                             {"slack_ns", tr.slack_ns},
                             {"feasible", tr.feasible},
                             {"critical_path", path},
                             {"resources", resources_json(r)}});
        char line[256];
        std::snprintf(line, sizeof line, "%-20s %-10s %6.3f %9.3f %10.3f %9.3f %7lld %7lld %5lld %5lld%s\n",
                      loop.id.c_str(), loop.clock.c_str(), static_cast<double>(loop.hz) / 1e6, tr.path_ns,
                      tr.period_ns, tr.slack_ns, static_cast<long long>(r.lut), static_cast<long long>(r.ff),
                      static_cast<long long>(r.dsp), static_cast<long long>(r.bram), tr.feasible ? "" : "  INFEASIBLE");
        table += line;
        if (!tr.feasible) {
            try {
                check_sctl(node, loop.hz, s.table, &s.elab);
            } catch (const Error &e) {
                print(err, e);
            }
            code = kDesignError;
        }
    }
    {
        char line[256];
        std::snprintf(line, sizeof line, "%-69s %7lld %7lld %5lld %5lld\n", "total", static_cast<long long>(total.lut),
                      static_cast<long long>(total.ff), static_cast<long long>(total.dsp),
                      static_cast<long long>(total.bram));
        table += line;
    }
    report["sctl"] = sctls;
    report["total"] = resources_json(total);

    std::vector<std::pair<std::string, const Node *>> loops;
    annotated_loops(s.elab.vis.at(s.elab.top).diagram, "", loops);
    json hls = json::array();
    if (!loops.empty())
        table += "\nloop                 unroll  target_ii    ii  mul  met     lut      ff   dsp  bram\n";
    for (const auto &[path, node] : loops) {
        try {
            const HlsEstimate e =
                hls_estimate(node->bodies.front(), {node->hls.unroll, node->hls.target_ii}, s.table, &s.elab);
            hls.push_back(json{{"name", path},
                               {"unroll", node->hls.unroll},
                               {"target_ii", e.target_ii ? json(*e.target_ii) : json(nullptr)},
                               {"ii", e.ii},
                               {"multipliers", e.multipliers},
                               {"met", e.met},
                               {"resources", resources_json(e.resources)}});
            char line[256];
            std::snprintf(line, sizeof line, "%-20s %6lld %10s %5lld %4lld %4s %7lld %7lld %5lld %5lld\n", path.c_str(),
                          static_cast<long long>(node->hls.unroll),
                          e.target_ii ? std::to_string(*e.target_ii).c_str() : "-", static_cast<long long>(e.ii),
                          static_cast<long long>(e.multipliers), e.met ? "yes" : "no",
                          static_cast<long long>(e.resources.lut), static_cast<long long>(e.resources.ff),
                          static_cast<long long>(e.resources.dsp), static_cast<long long>(e.resources.bram));
            table += line;
        } catch (const Error &e) {
            Diagnostic d = e.diagnostic();
            if (d.subject.empty())
                d.subject = path;
            if (!d.span.known())
                d.span = node->span;
            err << d.to_string() << "\n";
            hls.push_back(json{{"name", path}, {"error", d.code}});
            code = kDesignError;
        }
    }
    report["loops"] = hls;

    ensure_dir(o.out);
    write_file_atomic(out_path(o, "estimate.json"), report.dump(2) + "\n");
    out << table;
    return code;
}

/// Host-mode trace: one tick per SCTL iteration, sinks as signals.
struct HostTrace {
    TickTrace t;
    std::map<std::string, Value> last;

    void record(const std::string &sctl, std::int64_t iter, const std::map<std::string, Value> &sinks)
    {
        for (const auto &[name, v] : sinks) {
            const std::string sig = sctl + "." + name;
            int k = t.find(sig);
            if (k < 0) {
                t.signals.push_back({sig, v.type(), t.grid_hz});
                k = static_cast<int>(t.signals.size()) - 1;
            }
            auto it = last.find(sig);
            if (it != last.end() && it->second == v)
                continue;
            last[sig] = v;
            t.changes.push_back({iter, k, v});
            t.ticks = std::max(t.ticks, iter + 1);
        }
    }

    void finish()
    {
        std::stable_sort(t.changes.begin(), t.changes.end(), [](const TraceChange &a, const TraceChange &b) {
            return a.tick != b.tick ? a.tick < b.tick : a.signal < b.signal;
        });
    }
};

int sim_impl(const Options &o, std::ostream &out, std::ostream &)
{
    if (o.mode != "host" && o.mode != "cosim")
        throw Error("E_USAGE", "--mode must be 'host' or 'cosim'");
    const std::int64_t ticks = o.ticks.value_or(1000);
    if (ticks <= 0)
        throw Error("E_USAGE", "--ticks must be positive");
    const Session s = load(o);
    const DeploymentPlan plan = partition(s.elab);
    for (const auto &loop : plan.fabric_loops)
        check_sctl(*plan.fabric.find_node(loop.id), loop.hz, s.table, &s.elab);
    const auto pcm = load_pcm(o, s.elab, nullptr);

    std::optional<Stimulus> stim;
    if (!o.stimulus.empty()) {
        stim.emplace();
        stim->load_csv_file(o.stimulus);
    }

    json summary;
    summary["mode"] = o.mode;
    TickTrace trace;
    if (o.mode == "host") {
        HostTrace ht;
        ht.t.grid_hz = plan.fabric_loops.empty() ? 1 : plan.fabric_loops.front().hz;
        LocalIo io(&s.elab);
        for (const auto &[name, samples] : pcm)
            io.set_pcm(name, samples);
        std::optional<ScanEngine> scan;
        if (s.elab.scan) {
            scan.emplace(*s.elab.scan);
            io.attach_scan(&*scan);
            Stimulus idle;
            scan->tick(stim ? *stim : idle);
        }
        ExecConfig ec;
        ec.seed = o.seed;
        ec.max_firings = s.cfg.max_firings;
        ec.trace = false;
        ec.sctl_iterations = ticks;
        ec.on_iteration = [&](const std::string &sctl, std::int64_t iter, const std::map<std::string, Value> &sinks) {
            ht.record(sctl, iter, sinks);
        };
        const Diagram &top = s.elab.vis.at(s.elab.top).diagram;
        const RunResult r = run(top, s.controls, ec, &s.elab, &io);
        ht.finish();
        trace = std::move(ht.t);
        summary["ticks"] = ticks;
        summary["firings"] = r.firings;
        summary["underruns"] = 0;
        summary["overflows"] = 0;
        json ch = json::object();
        for (const auto &name : io.channels().names())
            ch[name] = stats_json(io.channels().at(name).stats());
        summary["channels"] = ch;
        json ind = json::object();
        for (const auto &[name, v] : r.outputs)
            ind[name] = value_json(v);
        summary["indicators"] = ind;
    } else {
        CosimConfig cc;
        cc.ticks = ticks;
        cc.seed = o.seed;
        cc.host_firings_per_tick = s.cfg.host_firings_per_tick;
        cc.max_firings = s.cfg.max_firings;
        cc.inputs = s.controls;
        cc.pcm = pcm;
        cc.scan_io = stim ? &*stim : nullptr;
        cc.record = true;
        cc.dma = s.cfg.dma;
        cc.ao_buffer = s.cfg.ao_buffer;
        const CosimResult r = cosimulate(s.elab, s.table, cc);
        trace = r.trace;
        summary["ticks"] = r.ticks;
        summary["grid_hz"] = r.grid_hz;
        summary["firings"] = r.firings;
        summary["underruns"] = r.underruns;
        summary["overflows"] = r.overflows;
        summary["host_done"] = r.host_done;
        json it = json::object();
        for (const auto &[name, n] : r.iterations)
            it[name] = n;
        summary["iterations"] = it;
        json ch = json::object();
        for (const auto &[name, st] : r.channels)
            ch[name] = stats_json(st);
        summary["channels"] = ch;
        json ind = json::object();
        for (const auto &[name, v] : r.indicators)
            ind[name] = value_json(v);
        summary["indicators"] = ind;
        json ev = json::array();
        for (const auto &e : r.trace.events)
            ev.push_back(json{{"tick", e.tick}, {"code", e.code}, {"subject", e.subject}});
        summary["events"] = ev;
    }

    ensure_dir(o.out);
    write_file_atomic(out_path(o, "summary.json"), summary.dump(2) + "\n");
    write_traces(o, trace);
    out << "ticks " << summary["ticks"].get<std::int64_t>() << ", firings " << summary["firings"].get<std::int64_t>()
        << ", underruns " << summary["underruns"].get<std::int64_t>() << ", overflows "
        << summary["overflows"].get<std::int64_t>() << "\n";
    for (const auto &[name, v] : summary["indicators"].items())
        out << "  " << name << " = " << v.dump() << "\n";
    return kOk;
}

int demo_impl(const Options &o, std::ostream &out, std::ostream &err)
{
    Options opt = o;
    Session probe = load(opt);
    if (probe.elab.aos.empty())
        throw Error("E_USAGE", "the demo project declares no analog output");
    const AoDecl &dac = probe.elab.aos.front();
    const std::int64_t clk = clock_hz(probe.elab, dac.clock);
    const std::int64_t tps = VirtualAO::ticks_per_sample(clk, dac.rate_hz);
    const ChannelDecl *period = probe.elab.find_channel("period");
    if (period && period->kind == ChannelKind::Register && !opt.params.count("period"))
        opt.params["period"] = std::to_string(tps);
    const Session s = opt.params.count("period") && !o.params.count("period") ? load(opt) : std::move(probe);

    const DeploymentPlan plan = partition(s.elab);
    for (const auto &loop : plan.fabric_loops)
        check_sctl(*plan.fabric.find_node(loop.id), loop.hz, s.table, &s.elab);
    const auto pcm = load_pcm(opt, s.elab, [&] { return tone(1000.0, 0.5, dac.rate_hz, opt.samples); });
    std::int64_t n_in = 0;
    for (const auto &[name, v] : pcm)
        n_in = std::max<std::int64_t>(n_in, static_cast<std::int64_t>(v.size()));

    CosimConfig cc;
    cc.ticks = opt.ticks.value_or((n_in + 256) * tps * 2 + 100'000);
    cc.seed = opt.seed;
    cc.host_firings_per_tick = s.cfg.host_firings_per_tick;
    cc.max_firings = s.cfg.max_firings;
    cc.inputs = s.controls;
    cc.pcm = pcm;
    cc.record = !opt.trace.empty();
    cc.until_idle = true;
    cc.dma = s.cfg.dma;
    cc.ao_buffer = s.cfg.ao_buffer;
    const CosimResult r = cosimulate(s.elab, s.table, cc);

    const auto &log = r.ao.at(dac.name);
    std::vector<std::int16_t> samples;
    std::int64_t min_delta = 0, max_delta = 0;
    for (std::size_t k = 0; k < log.size(); ++k) {
        if (!log[k].underrun)
            samples.push_back(static_cast<std::int16_t>(log[k].code));
        if (k > 0) {
            const std::int64_t d = log[k].tick - log[k - 1].tick;
            min_delta = k == 1 ? d : std::min(min_delta, d);
            max_delta = k == 1 ? d : std::max(max_delta, d);
        }
    }

    json report;
    report["clock_hz"] = clk;
    report["rate_hz"] = dac.rate_hz;
    report["ticks_per_sample"] = tps;
    report["input_samples"] = n_in;
    report["output_samples"] = static_cast<std::int64_t>(samples.size());
    report["emissions"] = static_cast<std::int64_t>(log.size());
    report["min_delta"] = min_delta;
    report["max_delta"] = max_delta;
    report["jitter_ticks"] = max_delta - min_delta;
    report["underruns"] = r.underruns;
    report["overflows"] = r.overflows;
    report["ticks"] = r.ticks;
    report["firings"] = r.firings;
    report["host_done"] = r.host_done;
    json ch = json::object();
    for (const auto &[name, st] : r.channels)
        ch[name] = stats_json(st);
    report["channels"] = ch;
    json ind = json::object();
    for (const auto &[name, v] : r.indicators)
        ind[name] = value_json(v);
    report["indicators"] = ind;

    ensure_dir(opt.out);
    write_pcm(out_path(opt, "output.pcm"), samples);
    write_file_atomic(out_path(opt, "demo.json"), report.dump(2) + "\n");
    write_traces(opt, r.trace);

    out << "fabric clock " << fmt("%.6g", static_cast<double>(clk) / 1e6) << " MHz, " << tps
        << " ticks per sample\n";
    out << "samples in " << n_in << ", out " << samples.size() << ", ticks " << r.ticks << "\n";
    out << "emission delta min " << min_delta << ", max " << max_delta << ", jitter " << (max_delta - min_delta)
        << " ticks\n";
    out << "underruns " << r.underruns << ", overflows " << r.overflows << "\n";
    if (r.underruns > s.cfg.underrun_threshold) {
        err << "error E_UNDERRUN: " << r.underruns << " underruns exceed the threshold of "
            << s.cfg.underrun_threshold << "\n";
        return kRuntime;
    }
    return kOk;
}

} // namespace

int cmd_check(const Options &o, std::ostream &out, std::ostream &err)
{
    return guarded(err, [&] { return check_impl(o, out, err); });
}

int cmd_sim(const Options &o, std::ostream &out, std::ostream &err)
{
    return guarded(err, [&] { return sim_impl(o, out, err); });
}

int cmd_estimate(const Options &o, std::ostream &out, std::ostream &err)
{
    return guarded(err, [&] { return estimate_impl(o, out, err); });
}

int cmd_demo(const Options &o, std::ostream &out, std::ostream &err)
{
    return guarded(err, [&] { return demo_impl(o, out, err); });
}

int cmd_tone(const std::string &path, double freq_hz, double amplitude, std::int64_t rate_hz, std::int64_t samples,
             std::ostream &out, std::ostream &err)
{
    return guarded(err, [&] {
        if (rate_hz <= 0 || samples < 0 || !(amplitude >= 0.0 && amplitude <= 1.0))
            throw Error("E_USAGE", "tone needs rate > 0, samples >= 0 and 0 <= amplitude <= 1");
        write_pcm(path, tone(freq_hz, amplitude, rate_hz, samples));
        out << "wrote " << samples << " samples to " << path << "\n";
        return kOk;
    });
}

} // namespace rioflow::cli
