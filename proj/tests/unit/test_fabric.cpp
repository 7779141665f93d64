#include <doctest.h>

#include <deque>

#include "oracles.hpp"
#include "random_programs.hpp"
#include "rioflow/elaborate.hpp"
#include "rioflow/ip.hpp"
#include "rioflow/netlist.hpp"
#include "rioflow/sim.hpp"
#include "rioflow/trace_io.hpp"
#include "test_util.hpp"

using namespace rioflow;

namespace {

Project typed(const std::string &text, ParseOptions o = {})
{
    o.file = "test.gtext";
    return elaborate(parse(text, o));
}

const Node &node_of(const Project &p, const std::string &id)
{
    const Node *n = p.vis.at(p.top).diagram.find_node(id);
    REQUIRE(n);
    return *n;
}

Netlist compile(const Project &p, const std::string &id, bool enforce = true)
{
    const Node &n = node_of(p, id);
    return compile_sctl(n, DepthTable::defaults(), &p, clock_hz(p, n.clock), enforce);
}

/// Fifos as plain deques with no capacity limit; writes land immediately.
struct DequePorts : FabricPorts {
    std::map<std::string, std::deque<Value>> fifos;
    std::map<std::string, Value> regs;
    std::map<std::string, std::vector<Value>> ao;

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
    void ao_write(const std::string &name, const Value &v) override { ao[name].push_back(v); }
};

std::string counter_sctl(const std::string &id, const std::string &clock)
{
    return "  sctl " + id + " clock " + clock +
           " {\n    shift n: i32\n    indicator count: i32\n    node one: Const(i32, 1)\n    node inc: Add\n"
           "    wire n -> inc.x, count\n    wire one.value -> inc.y\n    wire inc.sum -> n\n  }\n";
}

ParseOptions with_ip(const std::string &json)
{
    ParseOptions o;
    o.ip_resolver = [json](const IpDecl &, const Project &p) { return import_ip(json, &p); };
    return o;
}

const char *kDelay3 = R"({"name": "d3", "style": "IPIN", "latency": 3,
  "ports": [{"name": "u", "dir": "in", "type": "i32"}, {"name": "y", "dir": "out", "type": "i32"}],
  "behavior": {"kind": "linear", "A": [[0]], "B": [[1]]}, "resources": {"lut": 10, "ff": 96}})";

const char *kAdder = R"({"name": "add", "style": "IPIN", "latency": 0, "depth_ns": 5,
  "ports": [{"name": "a", "dir": "in", "type": "i32"}, {"name": "b", "dir": "in", "type": "i32"},
            {"name": "y", "dir": "out", "type": "i32"}],
  "behavior": {"kind": "linear", "A": [[0]], "B": [[1, 1]]}, "resources": {"lut": 32}})";

} // namespace

TEST_SUITE("fabric")
{
    TEST_CASE("counter netlist")
    {
        const Project p = parse_file(test::demo_path("counter.gtext"));
        const Project t = elaborate(p);
        const Netlist n = compile(t, "tick");
        CHECK(n.hz == 40'000'000);
        CHECK(n.count_ops("Add") == 1);
        CHECK(n.count_ops("Const") == 0); // folded into a constant signal
        REQUIRE(n.find_register("n"));
        CHECK(n.find_register("n")->kind == RegKind::Shift);
        CHECK(n.find_register("count")->kind == RegKind::Output);

        NetlistState st(n, {});
        DequePorts io;
        for (int k = 0; k < 5; ++k) {
            st.tick(io);
            CHECK(st.reg("count") == Value::int32(k));
            CHECK(st.reg("n") == Value::int32(k + 1));
        }
        CHECK(st.iterations() == 5);
    }

    TEST_CASE("empty SCTL")
    {
        const Project p = typed("top t\nvi t { sctl s clock f { } }\n");
        const Netlist n = compile(p, "s");
        CHECK(n.ops.empty());
        CHECK(n.registers.empty());
        CHECK(estimate(n, DepthTable::defaults()) == ResourceEstimate{});
    }

    TEST_CASE("stream scaler: two channel ports, one multiplier")
    {
        const Project p = typed("channel a fifo<i32, 16> host -> fabric\nchannel b fifo<i32, 16> fabric -> host\n"
                                "top t\nvi t { sctl s clock f { node rd: FifoRead(a) node k: Const(i32, 3) "
                                "node m: Mul node wr: FifoWrite(b) wire rd.value -> m.x wire k.value -> m.y "
                                "wire m.prod -> wr.value wire rd.ok -> wr.en } }\n");
        const Netlist n = compile(p, "s");
        CHECK(n.channel_ports.size() == 2);
        CHECK(n.count_ops("Mul") == 1);
        const ResourceEstimate r = estimate(n, DepthTable::defaults());
        CHECK(r.dsp == 1);
        CHECK(r == oracle::resources_from_table(node_of(p, "s"), p, DepthTable::defaults()));

        NetlistState st(n, {});
        DequePorts io;
        io.fifos["a"] = {Value::int32(2), Value::int32(-5)};
        for (int k = 0; k < 4; ++k)
            st.tick(io);
        CHECK(io.fifos["b"] == std::deque<Value>{Value::int32(6), Value::int32(-15)});
    }

    TEST_CASE("fifo storage is billed once, to the reading side")
    {
        const std::string decl = "channel a fifo<i32, 512> host -> fabric\n"; // 2 KiB
        const Project p = typed(decl + "top t\nvi t { sctl s clock f { node rd: FifoRead(a) } }\n");
        const Netlist n = compile(p, "s");
        CHECK(estimate(n, DepthTable::defaults()).bram == 2);
        const Project w = typed("channel a fifo<i32, 512> fabric -> host\n"
                                "top t\nvi t { sctl s clock f { node k: Const(i32, 1) node wr: FifoWrite(a) "
                                "wire k.value -> wr.value } }\n");
        CHECK(estimate(compile(w, "s"), DepthTable::defaults()).bram == 2);
    }

    TEST_CASE("i32 adder cost")
    {
        const Project p = typed("top t\nvi t { sctl s clock f { shift r: i32 node a: Add "
                                "wire r -> a.x, a.y wire a.sum -> r } }\n");
        const ResourceEstimate r = estimate(compile(p, "s"), DepthTable::defaults());
        CHECK(r.lut == 32);
        CHECK(r.ff == 32);
        CHECK(r.dsp == 0);
        CHECK(r.bram == 0);
    }

    TEST_CASE("estimate equals the per-row sum on generated bodies")
    {
        for (std::uint64_t g = 0; g < 200; ++g) {
            testgen::Rng rng(g);
            const Project p = typed(testgen::sctl_project(rng));
            const Node &s = node_of(p, "body");
            const Netlist n = compile_sctl(s, DepthTable::defaults(), &p, 40'000'000, false);
            CHECK(estimate(n, DepthTable::defaults()) == oracle::resources_from_table(s, p, DepthTable::defaults()));
        }
    }

    TEST_CASE("a CLIP counts while the SCTL next to it waits")
    {
        const Project p = elaborate(parse_file(test::demo_path("stall.gtext")));
        const Netlist n = compile(p, "consumer");
        ChannelSet ch = ChannelSet::from_project(p);
        Simulator sim(ch);
        sim.add_netlist(n, {}, &p);
        sim.add_clip("pins", *p.find_ip("tickcount"), clock_hz(p, "pinclk"));
        sim.run(400);
        CHECK(sim.grid_hz() == 40'000'000);
        CHECK(sim.clip("pins").outputs().at(0) == Value::int32(100));
        const auto ticks = sim.trace().change_ticks("pins.count");
        REQUIRE(ticks.size() == 100);
        for (std::size_t k = 1; k < ticks.size(); ++k)
            CHECK(ticks[k] - ticks[k - 1] == 4);
        CHECK(sim.netlist(0).reg("last") == Value::int32(0));
        CHECK(sim.netlist(0).iterations() == 400);
    }

    TEST_CASE("two clock domains on a common grid")
    {
        const Project p = typed("clock a 10 Hz\nclock b 15 Hz\ntop t\nvi t {\n" + counter_sctl("slow", "a") +
                                counter_sctl("fast", "b") + "}\n");
        const Netlist ns = compile(p, "slow"), nf = compile(p, "fast");
        ChannelSet ch;
        Simulator sim(ch);
        sim.add_netlist(ns);
        sim.add_netlist(nf);
        sim.run(30);
        CHECK(sim.grid_hz() == 30);
        CHECK(sim.find_netlist("slow")->iterations() == 10);
        CHECK(sim.find_netlist("fast")->iterations() == 15);
        const auto slow = sim.trace().change_ticks("slow.n");
        const auto fast = sim.trace().change_ticks("fast.n");
        for (std::size_t k = 1; k < slow.size(); ++k)
            CHECK(slow[k] % 3 == 0);
        for (std::size_t k = 1; k < fast.size(); ++k)
            CHECK(fast[k] % 2 == 0);
    }

    TEST_CASE("IPIN latency delays the output")
    {
        const IpDescriptor d = import_ip(kDelay3);
        IpInstance ip(d);
        for (int k = 0; k < 10; ++k) {
            const auto out = ip.step({Value::int32(100 + k)});
            CHECK(out.at(0) == Value::int32(k < 3 ? 0 : 100 + k - 3));
        }
    }

    TEST_CASE("CLIP counter reaches 10 after 10 steps")
    {
        IpInstance ip(load_ip_file(test::demo_path("clip_counter.json")));
        for (int k = 0; k < 10; ++k)
            ip.step({});
        CHECK(ip.outputs().at(0) == Value::int32(10));
        ip.reset();
        CHECK(ip.outputs().at(0) == Value::int32(0));
    }

    TEST_CASE("descriptor schema errors")
    {
        CHECK_THROWS_AS(import_ip("{}"), Error);
        CHECK_THROWS_AS(import_ip(R"({"name": "x", "style": "NOPE", "ports": [], "behavior": {"kind": "linear"}})"),
                        Error);
        try {
            import_ip("not json");
        } catch (const Error &e) {
            CHECK(e.code() == "E_IP_SCHEMA");
        }
        Project p;
        try {
            import_ip(R"({"name": "c", "style": "CLIP", "clock": "nope",
                        "ports": [{"name": "y", "dir": "out", "type": "i32"}], "behavior": {"kind": "linear"}})",
                      &p);
            FAIL("expected E_IP_CLOCK_UNDECLARED");
        } catch (const Error &e) {
            CHECK(e.code() == "E_IP_CLOCK_UNDECLARED");
        }
    }

    TEST_CASE("combinational IP behaves like Add")
    {
        const std::string body_ip = "ip add \"add.json\"\ntop t\nvi t { sctl s clock f { shift r: i32 "
                                    "node one: Const(i32, 3) node x: Ip(add) wire r -> x.a wire one.value -> x.b "
                                    "wire x.y -> r } }\n";
        const std::string body_add = "top t\nvi t { sctl s clock f { shift r: i32 "
                                     "node one: Const(i32, 3) node x: Add wire r -> x.x wire one.value -> x.y "
                                     "wire x.sum -> r } }\n";
        const Project pi = typed(body_ip, with_ip(kAdder));
        const Project pa = typed(body_add);
        const Netlist ni = compile(pi, "s"), na = compile(pa, "s");
        CHECK(ni.critical_path_ns == na.critical_path_ns);
        NetlistState si(ni, {{"r", Value::int32(-7)}}, &pi), sa(na, {{"r", Value::int32(-7)}}, &pa);
        DequePorts io;
        for (int k = 0; k < 50; ++k) {
            si.tick(io);
            sa.tick(io);
            REQUIRE(si.reg("r") == sa.reg("r"));
        }
        CHECK(si.reg("r") == Value::int32(-7 + 150));
    }

    TEST_CASE("pipelined IP restarts the timing path")
    {
        const Project p = typed("ip d3 \"d3.json\"\ntop t\nvi t { sctl s clock f { shift r: i32 node m1: Mul "
                                "node x: Ip(d3) node m2: Mul wire r -> m1.x, m1.y wire m1.prod -> x.u "
                                "wire x.y -> m2.x, m2.y wire m2.prod -> r } }\n",
                                with_ip(kDelay3));
        CHECK(starts_path(*node_of(p, "s").bodies[0].find_node("x"), &p));
        const TimingReport r = check_sctl(node_of(p, "s"), 40'000'000, DepthTable::defaults(), &p);
        CHECK(r.path_ns == 15.0);
    }

    TEST_CASE("HLS initiation interval")
    {
        const Project p = typed("top t\nvi t { control a: f64\n  for l { control x: f64 shift s: f64 "
                                "node m1: Mul node m2: Mul node m3: Mul node m4: Mul node ad: Add "
                                "wire x -> m1.x, m1.y, m2.x, m2.y, m3.x, m3.y, m4.x, m4.y "
                                "wire m1.prod -> ad.x wire m2.prod -> ad.y wire ad.sum -> s }\n"
                                "  node n: Const(i32, 8) wire n.value -> l.N wire a -> l.x }\n");
        const Diagram &body = node_of(p, "l").bodies[0];
        const DepthTable t = DepthTable::defaults();
        HlsEstimate e = hls_estimate(body, {1, std::nullopt}, t, &p);
        CHECK(e.multipliers == 4);
        CHECK(e.ii == 4);
        CHECK(e.resources.dsp == 1);
        e = hls_estimate(body, {4, 1}, t, &p);
        CHECK(e.ii == 1);
        CHECK(e.resources.dsp == 4);
        CHECK(e.met);
        e = hls_estimate(body, {2, 1}, t, &p);
        CHECK(e.ii == 2);
        CHECK_FALSE(e.met);
        CHECK_THROWS_WITH_AS(hls_estimate(body, {1, 0}, t, &p), doctest::Contains("below 1"), Error);

        const Project q = typed("top t\nvi t { for l { shift s: i32 node a: Add wire s -> a.x, a.y "
                                "wire a.sum -> s } node n: Const(i32, 8) wire n.value -> l.N }\n");
        CHECK(hls_estimate(node_of(q, "l").bodies[0], {}, t, &q).ii == 1);
    }

    TEST_CASE("fabric fifo writes are visible one tick later")
    {
        const std::string text = "channel link fifo<i32, 8> fabric -> fabric\ntop t\nvi t {\n"
                                 "  sctl prod clock f { node w: FifoWrite(link) wire i -> w.value }\n"
                                 "  sctl cons clock f { indicator got: i32 indicator ok: bool node r: FifoRead(link) "
                                 "wire r.value -> got wire r.ok -> ok }\n}\n";
        const Project p = typed(text);
        const Netlist np = compile(p, "prod"), nc = compile(p, "cons");
        for (bool consumer_first : {false, true}) {
            ChannelSet ch = ChannelSet::from_project(p);
            Simulator sim(ch);
            if (consumer_first)
                sim.add_netlist(nc, {}, &p);
            sim.add_netlist(np, {}, &p);
            if (!consumer_first)
                sim.add_netlist(nc, {}, &p);
            for (std::int64_t k = 0; k < 20; ++k) {
                sim.step();
                NetlistState *c = sim.find_netlist("cons");
                CHECK(c->reg("ok") == Value::boolean(k > 0));
                if (k > 0)
                    CHECK(c->reg("got") == Value::int32(static_cast<std::int32_t>(k - 1)));
            }
        }
    }

    TEST_CASE("simulation is deterministic")
    {
        const Project p = elaborate(parse_file(test::demo_path("stall.gtext")));
        const Netlist n = compile(p, "consumer");
        auto once = [&] {
            ChannelSet ch = ChannelSet::from_project(p);
            Simulator sim(ch);
            sim.add_netlist(n, {}, &p);
            sim.add_clip("pins", *p.find_ip("tickcount"), clock_hz(p, "pinclk"));
            sim.run(200);
            return to_vcd(sim.trace());
        };
        CHECK(once() == once());
    }

    TEST_CASE("VCD timescale")
    {
        CHECK(vcd_timescale(40'000'000).unit == "1ns");
        CHECK(vcd_timescale(40'000'000).period == 25);
        CHECK(vcd_timescale(1'000'000).unit == "1us");
        CHECK(vcd_timescale(1'000'000).period == 1);
        CHECK(vcd_timescale(30).period == 0);

        const Project p = elaborate(parse_file(test::demo_path("counter.gtext")));
        const Netlist n = compile(p, "tick");
        ChannelSet ch;
        Simulator sim(ch);
        sim.add_netlist(n);
        sim.run(3);
        const std::string vcd = to_vcd(sim.trace());
        CHECK(vcd.find("$timescale 1ns $end") != std::string::npos);
        CHECK(vcd.find("tick.count") != std::string::npos);
        CHECK(vcd.find("#50") != std::string::npos); // third tick at 2 * 25 ns
        CHECK(sim.trace().series("tick.count").size() == 3);
    }

    TEST_CASE("timing is enforced unless disabled")
    {
        const Project p = typed("top t\nvi t { sctl s clock f { shift r: i32 node a: Mul node b: Mul "
                                "wire r -> a.x, a.y wire a.prod -> b.x, b.y wire b.prod -> r } }\n");
        CHECK_THROWS_AS(compile(p, "s"), Error);
        CHECK(compile(p, "s", false).critical_path_ns == 30.0);
    }
}
