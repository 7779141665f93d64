// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "commands.hpp"
#include "oracles.hpp"
#include "random_programs.hpp"
#include "rioflow/comm.hpp"
#include "rioflow/cosim.hpp"
#include "rioflow/elaborate.hpp"
#include "rioflow/files.hpp"
#include "rioflow/gtext.hpp"
#include "rioflow/netlist.hpp"
#include "rioflow/runtime.hpp"
#include "rioflow/scan.hpp"
#include "rioflow/sim.hpp"

using namespace rioflow;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string &title, double limit_s, const std::function<Verdict()> &body)
{
    const auto t0 = Clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception &e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (limit_s > 0 && secs >= limit_s) {
        v.pass = false;
        v.detail += "; over the " + std::to_string(static_cast<int>(limit_s)) + " s limit";
    }
    failures += !v.pass;
    std::printf("%s %2d %-28s %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string demo_path(const std::string &name) { return std::string(RIOFLOW_DEMO_DIR) + "/" + name; }

Project typed(const std::string &text)
{
    ParseOptions o;
    o.file = "generated.gtext";
    return elaborate(parse(text, o));
}

const Node &top_node(const Project &p, const std::string &id) { return *p.vis.at(p.top).diagram.find_node(id); }

std::size_t count_nodes(const Diagram &d)
{
    std::size_t n = 0;
    for (const auto &node : d.nodes) {
        ++n;
        for (const auto &b : node.bodies)
            n += count_nodes(b);
    }
    return n;
}

struct DequePorts : FabricPorts {
    std::map<std::string, std::deque<Value>> fifos;
    std::map<std::string, Value> regs;

    std::optional<Value> fifo_read(const std::string &ch) override
    {
        auto &q = fifos[ch];
        if (q.empty())
            return std::nullopt;
        Value v = q.front();
        q.pop_front();
        return v;
    }
    bool fifo_write(const std::string &ch, const Value &v) override
    {
        fifos[ch].push_back(v);
        return true;
    }
    Value reg_read(const std::string &ch) override { return regs.at(ch); }
    void reg_write(const std::string &ch, const Value &v) override { regs[ch] = v; }
    void ao_write(const std::string &, const Value &) override {}
};

class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("rioflow-acc-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::string file(const std::string &n) const { return (path_ / n).string(); }

private:
    std::filesystem::path path_;
};

int run_demo(const cli::Options &o)
{
    std::ostringstream out, err;
    const int code = cli::cmd_demo(o, out, err);
    if (code != 0)
        std::fprintf(stderr, "%s", err.str().c_str());
    return code;
}

// 1
Verdict determinacy()
{
    int diagrams = 0, mismatches = 0;
    std::uint64_t g = 0;
    while (diagrams < 200) {
        testgen::Rng rng(1000 + g++);
        testgen::HostOptions o;
        o.max_nodes = 8;
        const Project p = typed(testgen::host_project(rng, o));
        if (count_nodes(p.vis.at(p.top).diagram) > 12)
            continue;
        const auto in = testgen::random_controls(rng, p);
        ExecConfig cfg;
        cfg.trace = false;
        const Diagram &d = p.vis.at(p.top).diagram;
        std::map<std::string, Value> first;
        for (std::uint64_t seed = 1; seed <= 50; ++seed) {
            cfg.seed = seed;
            const auto out = run(d, in, cfg, &p).outputs;
            if (seed == 1)
                first = out;
            else
                mismatches += out != first;
        }
        ++diagrams;
    }
    return {mismatches == 0,
            std::to_string(diagrams) + " diagrams x 50 seeds, " + std::to_string(mismatches) + " mismatches"};
}

// 2
Verdict fabric_equivalence()
{
    int bodies = 0, mismatches = 0, stream_mismatches = 0;
    std::int64_t compared = 0;
    for (std::uint64_t g = 0; bodies < 120; ++g) {
        testgen::Rng rng(5000 + g);
        const Project p = typed(testgen::sctl_project(rng));
        const auto controls = testgen::random_controls(rng, p);
        const auto fill = std::uniform_int_distribution<int>(0, 1200)(rng);
        std::vector<Value> stream;
        for (int k = 0; k < fill; ++k)
            stream.push_back(testgen::random_value(rng, WireType::int32()));

        // Host semantics.
        std::vector<std::map<std::string, Value>> host;
        ExecConfig cfg;
        cfg.trace = false;
        cfg.sctl_iterations = 1000;
        cfg.on_iteration = [&](const std::string &, std::int64_t, const std::map<std::string, Value> &s) {
            host.push_back(s);
        };
        LocalIo io(&p);
        for (const auto &v : stream)
            io.channels().at("inq").try_write(v);
        run(p.vis.at(p.top).diagram, controls, cfg, &p, &io);
        std::vector<Value> host_out;
        while (auto v = io.channels().at("outq").try_read())
            host_out.push_back(*v);

        // Fabric netlist.
        const Node &s = top_node(p, "body");
        const Netlist n = compile_sctl(s, DepthTable::defaults(), &p, 40'000'000, false);
        const auto glue = eval_fabric_glue(partition(p).fabric, controls, {});
        std::map<std::string, Value> in;
        for (const auto &port : s.in_ports)
            if (auto it = glue.find("body." + port.name); it != glue.end())
                in[port.name] = it->second;
        NetlistState st(n, in, &p);
        DequePorts ports;
        ports.fifos["inq"].assign(stream.begin(), stream.end());
        std::vector<std::map<std::string, Value>> fabric;
        for (int t = 0; t < 1000 && !st.halted(); ++t) {
            st.tick(ports);
            if (st.iterations() > static_cast<std::int64_t>(fabric.size()))
                fabric.push_back(st.sinks());
        }
        const std::vector<Value> fabric_out(ports.fifos["outq"].begin(), ports.fifos["outq"].end());

        mismatches += host != fabric;
        stream_mismatches += host_out != fabric_out;
        compared += static_cast<std::int64_t>(fabric.size());
        ++bodies;
    }
    return {mismatches == 0 && stream_mismatches == 0,
            std::to_string(bodies) + " bodies, " + std::to_string(compared) + " iterations, " +
                std::to_string(mismatches) + " register mismatches, " + std::to_string(stream_mismatches) +
                " stream mismatches"};
}

// 3
Verdict timing_analysis()
{
    const DepthTable t = DepthTable::defaults();
    int bodies = 0, path_bad = 0, verdict_bad = 0, feasible = 0;
    for (std::uint64_t g = 0; g < 2000; ++g) {
        testgen::Rng rng(9000 + g);
        testgen::SctlOptions o;
        o.max_nodes = 8;
        o.mul_weight = 1.0 + static_cast<double>(g % 4);
        const Project p = typed(testgen::sctl_project(rng, o));
        const Node &s = top_node(p, "body");
        if (s.bodies.at(0).nodes.size() > 8)
            continue;
        const double brute = oracle::longest_path_brute(s.bodies[0], t);
        const TimingReport r = analyze_sctl(s, 40'000'000, t, &p);
        path_bad += r.path_ns != brute;
        verdict_bad += r.feasible != (brute <= 25.0);
        feasible += r.feasible;
        ++bodies;
    }
    return {path_bad == 0 && verdict_bad == 0 && feasible > 0 && feasible < bodies,
            std::to_string(bodies) + " bodies (" + std::to_string(feasible) + " feasible), " +
                std::to_string(path_bad) + " path mismatches, " + std::to_string(verdict_bad) + " verdict mismatches"};
}

// 4 and 5 share the 1 MHz run.
struct DemoRun {
    int code = -1;
    json summary;
    std::vector<std::int16_t> pcm;
};

DemoRun demo(std::int64_t samples, std::optional<std::int64_t> fclk)
{
    TempDir dir;
    cli::Options o;
    o.project = demo_path("wms.gtext");
    o.out = dir.str();
    o.samples = samples;
    if (fclk)
        o.clocks["fclk"] = *fclk;
    DemoRun r;
    r.code = run_demo(o);
    if (r.code == 0) {
        r.summary = json::parse(read_file(dir.file("demo.json")));
        r.pcm = read_pcm(dir.file("output.pcm"));
    }
    return r;
}

DemoRun slow_run;

Verdict pacing()
{
    slow_run = demo(10000, std::nullopt);
    const DemoRun fast = demo(1200, 40'000'000);
    if (slow_run.code != 0 || fast.code != 0)
        return {false, "demo exited " + std::to_string(slow_run.code) + "/" + std::to_string(fast.code)};
    const json &a = slow_run.summary, &b = fast.summary;
    const bool ok = a["output_samples"] == 10000 && a["min_delta"] == 23 && a["max_delta"] == 23 &&
                    a["underruns"] == 0 && b["output_samples"].get<std::int64_t>() >= 1000 &&
                    b["min_delta"] == 907 && b["max_delta"] == 907 && b["underruns"] == 0;
    std::ostringstream d;
    d << "1 MHz: " << a["output_samples"] << " samples, delta " << a["min_delta"] << ".." << a["max_delta"] << ", "
      << a["underruns"] << " underruns; 40 MHz: " << b["output_samples"] << " samples, delta " << b["min_delta"]
      << ".." << b["max_delta"] << ", " << b["underruns"] << " underruns";
    return {ok, d.str()};
}

Verdict equalizer()
{
    if (slow_run.code != 0)
        return {false, "no demo output"};
    const Project p = parse_file(demo_path("wms.gtext"));
    const Diagram &feed = p.vis.at("wms").diagram.find_node("feed")->bodies.at(0);
    std::vector<std::vector<double>> bands;
    for (const char *id : {"lp", "bp", "hp"})
        bands.push_back(feed.find_node(id)->args.coefficients);
    const auto want = oracle::equalizer(tone(1000.0, 0.5, 44100, 10000), bands, {1, 1, 1});
    if (want.size() != slow_run.pcm.size())
        return {false, "length " + std::to_string(slow_run.pcm.size()) + " vs " + std::to_string(want.size())};
    std::size_t close = 0;
    int worst = 0;
    for (std::size_t n = 0; n < want.size(); ++n) {
        const int diff = std::abs(slow_run.pcm[n] - want[n]);
        close += diff <= 1;
        worst = std::max(worst, diff);
    }
    const double frac = static_cast<double>(close) / static_cast<double>(want.size());
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu samples, %.4f%% within 1 LSB, worst %d LSB", want.size(), frac * 100.0,
                  worst);
    return {frac >= 0.999, buf};
}

// 6
Verdict dma_ordering()
{
    testgen::Rng rng(606);
    std::int64_t order_bad = 0, bound_bad = 0, accept_bad = 0, moved = 0;
    for (int trial = 0; trial < 100000; ++trial) {
        ChannelDecl d;
        d.name = "q";
        d.kind = ChannelKind::Fifo;
        d.element = WireType::int32();
        d.capacity = std::uniform_int_distribution<std::int64_t>(1, 8)(rng);
        const bool to_fabric = trial % 2 == 0;
        d.writer = to_fabric ? Target::Host : Target::Fabric;
        d.reader = to_fabric ? Target::Fabric : Target::Host;
        const DmaModel m{std::uniform_int_distribution<std::int64_t>(0, 8)(rng),
                         std::uniform_int_distribution<std::int64_t>(1, 3)(rng),
                         std::uniform_int_distribution<std::int64_t>(1, 4)(rng)};
        Channel c(d, m);
        std::deque<std::int32_t> model;
        std::int32_t next = 0;
        const int ticks = std::uniform_int_distribution<int>(5, 40)(rng);
        for (std::int64_t tick = 0; tick < ticks; ++tick) {
            c.advance(tick);
            for (int k = 0, ops = std::uniform_int_distribution<int>(0, 3)(rng); k < ops; ++k) {
                if (std::bernoulli_distribution(0.55)(rng)) {
                    const bool ok = to_fabric ? c.timed_write(Value::int32(next), tick)
                                              : c.fabric_write(Value::int32(next), tick);
                    accept_bad += ok != (static_cast<std::int64_t>(model.size()) < d.capacity);
                    if (ok)
                        model.push_back(next++);
                } else if (auto v = c.timed_read(tick)) {
                    if (model.empty() || v->as_i32() != model.front())
                        ++order_bad;
                    if (!model.empty())
                        model.pop_front();
                    ++moved;
                }
                bound_bad += c.occupancy() > d.capacity || c.occupancy() != static_cast<std::int64_t>(model.size());
            }
        }
        // Drain what is left; it must come out in order.
        for (std::int64_t tick = ticks; !model.empty() && tick < ticks + 200; ++tick) {
            c.advance(tick);
            while (auto v = c.timed_read(tick)) {
                order_bad += v->as_i32() != model.front();
                model.pop_front();
                ++moved;
            }
        }
        order_bad += !model.empty();
    }
    return {order_bad == 0 && bound_bad == 0 && accept_bad == 0,
            "100000 interleavings, " + std::to_string(moved) + " elements, " + std::to_string(order_bad) +
                " order violations, " + std::to_string(bound_bad) + " occupancy violations"};
}

// 7
Verdict scan_coherence()
{
    ScanDecl d;
    d.period_us = 100;
    for (int k = 0; k < 4; ++k) {
        ScanChannelDecl c;
        c.name = "ai" + std::to_string(k);
        c.type = WireType::int32();
        d.channels.push_back(c);
    }
    ScanEngine eng(d);
    Stimulus stim;
    for (int k = 0; k < 4; ++k)
        stim.ramp("ai" + std::to_string(k), 0, 1);
    auto mixed = [](const ScanSnapshot &s) {
        for (const auto &[name, v] : s.values)
            if (v.as_i32() != s.index)
                return true;
        return s.values.size() != 4;
    };

    std::atomic<bool> done{false};
    std::int64_t reader_mixed = 0, reader_back = 0, reader_seen = 0;
    std::thread reader([&] {
        std::int64_t last = -1;
        while (!done) {
            const auto s = eng.snapshot();
            if (s->index < 0)
                continue;
            reader_mixed += mixed(*s);
            reader_back += s->index < last;
            last = s->index;
            ++reader_seen;
        }
    });
    std::int64_t tick_mixed = 0, gaps = 0;
    for (std::int64_t k = 0; k < 10000; ++k) {
        const auto s = eng.tick(stim);
        tick_mixed += mixed(*s);
        gaps += s->index != k;
    }
    done = true;
    reader.join();
    return {tick_mixed + reader_mixed == 0 && gaps == 0 && reader_back == 0,
            "10000 scans, " + std::to_string(tick_mixed + reader_mixed) + " mixed snapshots (" +
                std::to_string(reader_seen) + " concurrent reads), " + std::to_string(gaps) + " index gaps"};
}

// 8
Verdict resources()
{
    const DepthTable t = DepthTable::defaults();
    int netlists = 0, bad = 0;
    for (std::uint64_t g = 0; g < 300; ++g) {
        testgen::Rng rng(7000 + g);
        const Project p = typed(testgen::sctl_project(rng));
        const Node &s = top_node(p, "body");
        bad += estimate(compile_sctl(s, t, &p, 40'000'000, false), t) != oracle::resources_from_table(s, p, t);
        ++netlists;
    }
    for (const auto &[file, ids] : std::vector<std::pair<std::string, std::vector<std::string>>>{
             {"wms.gtext", {"dacloop", "meter"}}, {"counter.gtext", {"tick"}}, {"stall.gtext", {"consumer"}}}) {
        const Project p = elaborate(parse_file(demo_path(file)));
        for (const auto &id : ids) {
            const Node &s = top_node(p, id);
            bad += estimate(compile_sctl(s, t, &p, clock_hz(p, s.clock), false), t) !=
                   oracle::resources_from_table(s, p, t);
            ++netlists;
        }
    }
    return {bad == 0, std::to_string(netlists) + " netlists, " + std::to_string(bad) + " mismatches"};
}

// 9
Verdict parser_robustness()
{
    int round_trips = 0, rt_bad = 0;
    std::vector<std::string> seeds;
    for (std::uint64_t g = 0; g < 1200; ++g) {
        testgen::Rng rng(g);
        const std::string text = g % 3 == 0   ? testgen::host_project(rng)
                                 : g % 3 == 1 ? testgen::sctl_project(rng)
                                              : testgen::rich_project(rng);
        ParseOptions o;
        const Project a = parse(text, o);
        const std::string canon = format(a);
        const Project b = parse(canon, o);
        rt_bad += !equivalent(a, b) || format(b) != canon;
        ++round_trips;
        if (g < 60)
            seeds.push_back(text);
    }
    seeds.push_back(read_file(demo_path("wms.gtext")));
    seeds.push_back(read_file(demo_path("counter.gtext")));

    testgen::Rng rng(4242);
    std::int64_t accepted = 0, unlocated = 0, other = 0;
    std::map<std::string, std::int64_t> codes;
    for (int k = 0; k < 100000; ++k) {
        const std::string text = testgen::mutate(rng, seeds[k % seeds.size()], 1 + k % 5);
        try {
            parse(text, ParseOptions{});
            ++accepted;
        } catch (const Error &e) {
            ++codes[e.code()];
            for (const auto &d : e.diagnostics())
                unlocated += d.span.line == 0;
        } catch (...) {
            ++other;
        }
    }
    std::int64_t syntax = codes.count("E_SYNTAX") ? codes["E_SYNTAX"] : 0;
    std::ostringstream d;
    d << round_trips << " round trips, " << rt_bad << " mismatches; 100000 mutants: " << accepted << " ok, " << syntax
      << " E_SYNTAX";
    for (const auto &[code, n] : codes)
        if (code != "E_SYNTAX")
            d << ", " << n << " " << code;
    d << ", " << unlocated << " unlocated, " << other << " other";
    return {rt_bad == 0 && round_trips >= 1000 && unlocated == 0 && other == 0, d.str()};
}

// 10
Verdict clip_independence()
{
    const Project p = elaborate(parse_file(demo_path("stall.gtext")));
    const Node &s = top_node(p, "consumer");
    const Netlist n = compile_sctl(s, DepthTable::defaults(), &p, clock_hz(p, s.clock));
    ChannelSet ch = ChannelSet::from_project(p);
    Simulator sim(ch);
    sim.add_netlist(n, {}, &p);
    const std::int64_t pin_hz = clock_hz(p, "pinclk");
    sim.add_clip("pins", *p.find_ip("tickcount"), pin_hz);
    const std::int64_t ticks = 40000;
    sim.run(ticks);
    const std::int64_t stride = sim.grid_hz() / pin_hz;
    const auto changes = sim.trace().change_ticks("pins.count");
    const auto series = sim.trace().series("pins.count");
    std::int64_t bad_steps = 0;
    for (std::size_t k = 0; k < series.size(); ++k) {
        const std::int64_t expect = (static_cast<std::int64_t>(k) + stride) / stride;
        bad_steps += series[k].as_i32() != expect;
    }
    const bool stalled = sim.netlist(0).reg("last") == Value::int32(0) && ch.at("req").stats().reads == 0;
    const std::int64_t pin_ticks = ticks / stride;
    return {bad_steps == 0 && stalled && static_cast<std::int64_t>(changes.size()) == pin_ticks &&
                sim.clip("pins").outputs().at(0) == Value::int32(static_cast<std::int32_t>(pin_ticks)),
            std::to_string(ticks) + " grid ticks, " + std::to_string(changes.size()) + " counter steps for " +
                std::to_string(pin_ticks) + " clip ticks, " + std::to_string(bad_steps) + " off-count ticks, sctl " +
                (stalled ? "stalled throughout" : "not stalled")};
}

} // namespace

int main()
{
    report(1, "host determinacy", 60, determinacy);
    report(2, "fabric matches host", 60, fabric_equivalence);
    report(3, "timing analysis", 0, timing_analysis);
    report(4, "DAC pacing", 120, pacing);
    report(5, "equalizer accuracy", 0, equalizer);
    report(6, "DMA fifo ordering", 0, dma_ordering);
    report(7, "scan coherence", 0, scan_coherence);
    report(8, "resource estimate", 0, resources);
    report(9, "parser robustness", 0, parser_robustness);
    report(10, "CLIP runs while SCTL stalls", 0, clip_independence);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
