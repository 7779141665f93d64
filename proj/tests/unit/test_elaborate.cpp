#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "random_programs.hpp"
#include "rioflow/elaborate.hpp"
#include "rioflow/runtime.hpp"
#include "rioflow/validate.hpp"
#include "test_util.hpp"

using namespace rioflow;

namespace {

const char *kAdd2 = "vi Add2 { control a: f64  control b: f64  indicator s: f64  node n1: Add  "
                    "wire a -> n1.x  wire b -> n1.y  wire n1.sum -> s }\n";

Project typed(const std::string &text) { return elaborate(test::parse_text(text)); }

const Node &sctl_of(const Project &p, const std::string &id)
{
    const Node *n = p.vis.at(p.top).diagram.find_node(id);
    REQUIRE(n);
    return *n;
}

std::string sctl_chain(const std::string &op, int n, std::int64_t hz = 40'000'000)
{
    std::string s = "clock fclk " + std::to_string(hz) + " Hz\ntop t\nvi t {\n  sctl s clock fclk {\n    shift r: i32\n";
    for (int k = 0; k < n; ++k)
        s += "    node n" + std::to_string(k) + ": " + op + "\n";
    std::string prev = "r";
    for (int k = 0; k < n; ++k) {
        s += "    wire " + prev + " -> n" + std::to_string(k) + ".x, n" + std::to_string(k) + ".y\n";
        prev = "n" + std::to_string(k) + (op == "Mul" ? ".prod" : ".sum");
    }
    s += "    wire " + prev + " -> r\n  }\n}\n";
    return s;
}

std::size_t count_op(const Diagram &d, const std::string &op)
{
    std::size_t n = 0;
    for (const auto &node : d.nodes) {
        n += node.op == op && node.kind == NodeKind::Primitive;
        for (const auto &b : node.bodies)
            n += count_op(b, op);
    }
    return n;
}

} // namespace

TEST_SUITE("elaborator")
{
    TEST_CASE("expand: no sub-VIs leaves the project unchanged")
    {
        const Project p = test::parse_text(kAdd2);
        CHECK(equivalent(expand(p), p));
    }

    TEST_CASE("expand: Add2 used twice")
    {
        const std::string text = std::string(kAdd2) +
                                 "top Top\n"
                                 "vi Top {\n"
                                 "  control a: f64\n  control b: f64\n  indicator s: f64\n"
                                 "  node u1: sub Add2\n  node u2: sub Add2\n  node tot: Add\n"
                                 "  wire a -> u1.a, u1.b, u2.a\n  wire b -> u2.b\n"
                                 "  wire u1.s -> tot.x\n  wire u2.s -> tot.y\n  wire tot.sum -> s\n}\n";
        const Project p = test::parse_text(text);
        const Project flat = expand(p);
        const Diagram &d = flat.vis.at("Top").diagram;
        const std::size_t parent = 1; // tot
        const std::size_t child = p.vis.at("Add2").diagram.nodes.size();
        CHECK(d.nodes.size() == parent + 2 * child);
        CHECK(d.find_node("u1/n1"));
        CHECK(d.find_node("u2/n1"));
        CHECK(validate(d).empty());

        const Project t = elaborate(p);
        const auto out = run(t.vis.at("Top").diagram, {{"a", Value::float64(1.5)}, {"b", Value::float64(4.0)}}).outputs;
        CHECK(out.at("s") == Value::float64(1.5 + 1.5 + 1.5 + 4.0));
    }

    TEST_CASE("expand: mutual recursion")
    {
        const std::string text = "top A\n"
                                 "vi A { control x: i32 indicator y: i32 node b: sub B wire x -> b.x wire b.y -> y }\n"
                                 "vi B { control x: i32 indicator y: i32 node a: sub A wire x -> a.x wire a.y -> y }\n";
        CHECK_THROWS_WITH_AS(expand(test::parse_text(text, false)), doctest::Contains("recursive"), Error);
        try {
            expand(test::parse_text(text, false));
        } catch (const Error &e) {
            CHECK(e.code() == "E_RECURSION");
        }
    }

    TEST_CASE("expand: unresolved sub-VI")
    {
        const std::string text = "vi A { node b: sub Nope }\n";
        try {
            expand(test::parse_text(text, false));
            FAIL("expected E_UNRESOLVED_SUBVI");
        } catch (const Error &e) {
            CHECK(e.code() == "E_UNRESOLVED_SUBVI");
        }
    }

    TEST_CASE("expand preserves host-run results")
    {
        for (std::uint64_t seed = 0; seed < 60; ++seed) {
            testgen::Rng rng(seed);
            testgen::HostOptions o;
            o.max_nodes = 8;
            o.fifo_pair = false; // both instances would share the channel
            std::string inner = testgen::host_project(rng, o);
            const Project alone = elaborate(test::parse_text(inner));
            const Diagram &d = alone.vis.at("top").diagram;

            // Wrap the generated VI twice inside a caller.
            std::string text = inner;
            text.replace(text.find("vi top {"), 8, "vi inner {");
            text.replace(text.find("top top"), 7, "top outer");
            text += "vi outer {\n";
            for (const auto &c : d.controls)
                text += "  control " + c.name + ": " + c.type.to_string() + "\n  control " + c.name +
                        "b: " + c.type.to_string() + "\n";
            for (const auto &i : d.indicators)
                text += "  indicator " + i.name + ": " + i.type.to_string() + "\n  indicator " + i.name +
                        "b: " + i.type.to_string() + "\n";
            text += "  node u1: sub inner\n  node u2: sub inner\n";
            for (const auto &c : d.controls)
                text += "  wire " + c.name + " -> u1." + c.name + "\n  wire " + c.name + "b -> u2." + c.name + "\n";
            for (const auto &i : d.indicators)
                text += "  wire u1." + i.name + " -> " + i.name + "\n  wire u2." + i.name + " -> " + i.name + "b\n";
            text += "}\n";
            const Project outer = elaborate(test::parse_text(text));

            const auto in1 = testgen::random_controls(rng, alone);
            const auto in2 = testgen::random_controls(rng, alone);
            std::map<std::string, Value> both;
            for (const auto &[k, v] : in1)
                both[k] = v;
            for (const auto &[k, v] : in2)
                both[k + "b"] = v;
            ExecConfig cfg;
            cfg.trace = false;
            const auto r1 = run(d, in1, cfg, &alone).outputs;
            const auto r2 = run(d, in2, cfg, &alone).outputs;
            const auto rb = run(outer.vis.at("outer").diagram, both, cfg, &outer).outputs;
            for (const auto &[k, v] : r1) {
                CHECK(rb.at(k) == v);
                CHECK(rb.at(k + "b") == r2.at(k));
            }
        }
    }

    TEST_CASE("infer_types: i32 with i32 stays i32")
    {
        const Project p = typed("vi a { control x: i32 control y: i32 indicator s: i32 node n: Add "
                                "wire x -> n.x wire y -> n.y wire n.sum -> s }");
        const Diagram &d = p.vis.at("a").diagram;
        CHECK(d.nodes.size() == 1);
        CHECK(d.find_node("n")->out_port("sum")->type == WireType::int32());
    }

    TEST_CASE("infer_types: i32 next to f64 gets a Convert")
    {
        const Project p = typed("vi a { control y: f64 indicator s: f64 node k: Const(i32, 2) node n: Add "
                                "wire k.value -> n.x wire y -> n.y wire n.sum -> s }");
        const Diagram &d = p.vis.at("a").diagram;
        CHECK(count_op(d, "Convert") == 1);
        CHECK(d.find_node("n")->out_port("sum")->type == WireType::float64());
        const auto out = run(d, {{"y", Value::float64(0.5)}}).outputs;
        CHECK(out.at("s") == Value::float64(2.5));
    }

    TEST_CASE("infer_types: bool with f64 is rejected")
    {
        try {
            typed("vi a { control b: bool control y: f64 indicator s: f64 node n: Add "
                  "wire b -> n.x wire y -> n.y wire n.sum -> s }");
            FAIL("expected E_TYPE_MISMATCH");
        } catch (const Error &e) {
            CHECK(e.code() == "E_TYPE_MISMATCH");
            CHECK(e.diagnostic().subject.find("n.") != std::string::npos);
        }
    }

    TEST_CASE("infer_types inserts one Convert per promoted source and type")
    {
        // Three consumers of one i32 source need f64: one Convert suffices.
        const Project p = typed("vi a { control i: i32 control f: f64 indicator o1: f64 indicator o2: f64 "
                                "indicator o3: bool node a1: Add node a2: Mul node c: Gt "
                                "wire i -> a1.x, a2.x, c.x wire f -> a1.y, a2.y, c.y "
                                "wire a1.sum -> o1 wire a2.prod -> o2 wire c.result -> o3 }");
        CHECK(count_op(p.vis.at("a").diagram, "Convert") == 1);

        // Brute-force view on small random diagrams: inserted Converts are
        // distinct per (source, target type) and each widens an i32.
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            testgen::Rng rng(seed);
            testgen::HostOptions o;
            o.max_nodes = 5;
            o.loops = o.case_node = o.fifo_pair = false;
            const Project raw = test::parse_text(testgen::host_project(rng, o));
            const Project t = elaborate(raw);
            const Diagram &before = raw.vis.at("top").diagram;
            const Diagram &after = t.vis.at("top").diagram;
            std::set<std::pair<std::string, std::string>> seen;
            for (const auto &n : after.nodes) {
                if (before.find_node(n.id))
                    continue;
                REQUIRE(n.op == "Convert");
                const Wire *in = nullptr;
                for (const auto &w : after.wires)
                    for (const auto &dst : w.dsts)
                        if (dst.node == n.id)
                            in = &w;
                REQUIRE(in);
                auto src_type = in->src.node.empty() ? after.source_type(in->src.port)
                                                     : after.find_node(in->src.node)->out_port(in->src.port)->type;
                CHECK(src_type == WireType::int32());
                CHECK(n.args.type != WireType::int32());
                CHECK(seen.insert({in->src.to_string(), n.args.type->to_string()}).second);
            }
        }
    }

    TEST_CASE("partition: all-host project")
    {
        const DeploymentPlan plan = partition(typed(kAdd2));
        CHECK(plan.fabric_loops.empty());
        CHECK(plan.fabric.nodes.empty());
        CHECK(plan.host.nodes.size() == 1);
    }

    TEST_CASE("partition: host node wired into an SCTL")
    {
        const std::string text = "top t\nvi t {\n  control a: i32\n  node n: Not target host\n"
                                 "  sctl s clock f {\n    control x: i32\n    indicator y: i32\n    wire x -> y\n  }\n"
                                 "  wire a -> n.x\n  wire n.result -> s.x\n}\n";
        try {
            partition(typed(text));
            FAIL("expected E_BOUNDARY_WIRE");
        } catch (const Error &e) {
            CHECK(e.code() == "E_BOUNDARY_WIRE");
        }
    }

    TEST_CASE("partition: host -> fifo -> SCTL -> fifo -> host")
    {
        const std::string text = "channel up fifo<i32, 8> host -> fabric\n"
                                 "channel down fifo<i32, 8> fabric -> host\n"
                                 "top t\nvi t {\n"
                                 "  indicator got: i32\n"
                                 "  node k: Const(i32, 5)\n  node w: FifoWrite(up)\n  node r: FifoRead(down)\n"
                                 "  sctl s clock f {\n    node rd: FifoRead(up)\n    node wr: FifoWrite(down)\n"
                                 "    wire rd.value -> wr.value\n    wire rd.ok -> wr.en\n  }\n"
                                 "  wire k.value -> w.value\n  wire r.value -> got\n}\n";
        const DeploymentPlan plan = partition(typed(text));
        CHECK(plan.fabric_loops.size() == 1);
        CHECK(plan.channels.size() == 2);
        for (const auto &b : plan.channels)
            CHECK(b.dma);
        std::set<std::string> host_ids;
        for (const auto &n : plan.host.nodes)
            host_ids.insert(n.id);
        CHECK(host_ids == std::set<std::string>{"k", "r", "w"});
    }

    TEST_CASE("partition: host-only primitive inside an SCTL")
    {
        const std::string text = "top t\nvi t {\n  sctl s clock f {\n    node r: FileReadPCM(in, 4)\n  }\n}\n";
        bool threw = false;
        try {
            partition(typed(text));
        } catch (const Error &e) {
            threw = true;
            CHECK((e.code() == "E_HOST_PRIM_IN_FABRIC" || e.code() == "E_SCTL_ILLEGAL_NODE"));
        }
        CHECK(threw);
    }

    TEST_CASE("check_sctl: empty body at 40 MHz")
    {
        const Project p = typed("top t\nvi t { sctl s clock f { } }\n");
        const TimingReport r = check_sctl(sctl_of(p, "s"), 40'000'000, DepthTable::defaults(), &p);
        CHECK(r.feasible);
        CHECK(r.path_ns == 0.0);
        CHECK(r.period_ns == 25.0);
    }

    TEST_CASE("check_sctl: three adders")
    {
        const Project p = typed(sctl_chain("Add", 3));
        const TimingReport r = check_sctl(sctl_of(p, "s"), 40'000'000, DepthTable::defaults(), &p);
        CHECK(r.feasible);
        CHECK(r.path_ns == 15.0);
        CHECK(r.slack_ns == 10.0);
        CHECK(r.critical_path == std::vector<std::string>{"n0", "n1", "n2"});
    }

    TEST_CASE("check_sctl: two multipliers miss 25 ns")
    {
        const Project p = typed(sctl_chain("Mul", 2));
        try {
            check_sctl(sctl_of(p, "s"), 40'000'000, DepthTable::defaults(), &p);
            FAIL("expected E_SCTL_TIMING");
        } catch (const Error &e) {
            CHECK(e.code() == "E_SCTL_TIMING");
            CHECK(e.diagnostic().message.find("30") != std::string::npos);
            CHECK(e.diagnostic().message.find("25") != std::string::npos);
            CHECK(e.diagnostic().message.find("n0") != std::string::npos);
        }
        const TimingReport r = analyze_sctl(sctl_of(p, "s"), 40'000'000, DepthTable::defaults(), &p);
        CHECK_FALSE(r.feasible);
        CHECK(r.path_ns == 30.0);
    }

    TEST_CASE("check_sctl: Div is illegal in an SCTL")
    {
        try {
            typed("top t\nvi t { sctl s clock f { shift r: f64 node d: Div "
                  "wire r -> d.x, d.y wire d.quot -> r } }\n");
            FAIL("expected E_SCTL_ILLEGAL_NODE");
        } catch (const Error &e) {
            CHECK(e.code() == "E_SCTL_ILLEGAL_NODE");
        }
    }

    TEST_CASE("depth table overrides")
    {
        const DepthTable t = DepthTable::from_json(R"({"Mul": {"depth_ns": 10}, "Frob": {"lut": 3}})");
        const Project p = typed(sctl_chain("Mul", 2));
        CHECK(check_sctl(sctl_of(p, "s"), 40'000'000, t, &p).path_ns == 20.0);
        CHECK(t.find("Mul")->dsp == 1);
        CHECK(t.find("Frob")->lut == 3);
        CHECK_THROWS_AS(DepthTable::from_json("[1]"), Error);
        CHECK_THROWS_AS(DepthTable::from_json(R"({"Add": {"depth_ns": -1}})"), Error);
    }

    TEST_CASE("undeclared clocks default to 40 MHz")
    {
        const Project p = typed("top t\nvi t { sctl s clock nowhere { } }\n");
        CHECK(clock_hz(p, "nowhere") == 40'000'000);
    }

    TEST_CASE("check_sctl equals path enumeration on small random bodies")
    {
        const DepthTable t = DepthTable::defaults();
        int feasible = 0, infeasible = 0;
        for (std::uint64_t seed = 0; seed < 150; ++seed) {
            testgen::Rng rng(seed);
            testgen::SctlOptions o;
            o.max_nodes = 8;
            o.mul_weight = 3.0;
            const Project p = typed(testgen::sctl_project(rng, o));
            const Node &s = sctl_of(p, "body");
            const double brute = oracle::longest_path_brute(s.bodies[0], t);
            const TimingReport r = analyze_sctl(s, 40'000'000, t, &p);
            CHECK(r.path_ns == brute);
            CHECK(r.feasible == (brute <= 25.0));
            (r.feasible ? feasible : infeasible)++;
        }
        CHECK(feasible > 10);
        CHECK(infeasible > 10);
    }
}
