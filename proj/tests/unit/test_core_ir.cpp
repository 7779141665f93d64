#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "rioflow/primitives.hpp"
#include "rioflow/validate.hpp"
#include "test_util.hpp"

using namespace rioflow;
using test::wire;

namespace {

Diagram with_control(const std::string &name = "a")
{
    Diagram d;
    d.controls.push_back({name, WireType::int32(), {}});
    return d;
}

/// Adjacency from wires, boundary terminals excluded.
std::map<std::string, std::set<std::string>> edges_of(const Diagram &d)
{
    std::map<std::string, std::set<std::string>> g;
    for (const auto &n : d.nodes)
        g[n.id];
    for (const auto &w : d.wires)
        for (const auto &dst : w.dsts)
            if (!w.src.node.empty() && !dst.node.empty())
                g[w.src.node].insert(dst.node);
    return g;
}

bool has_cycle_dfs(const std::map<std::string, std::set<std::string>> &g)
{
    std::map<std::string, int> color; // 0 white, 1 grey, 2 black
    std::function<bool(const std::string &)> visit = [&](const std::string &u) {
        color[u] = 1;
        for (const auto &v : g.at(u)) {
            if (color[v] == 1)
                return true;
            if (color[v] == 0 && visit(v))
                return true;
        }
        color[u] = 2;
        return false;
    };
    for (const auto &[u, _] : g)
        if (color[u] == 0 && visit(u))
            return true;
    return false;
}

/// Smallest topological order by exhaustive enumeration of permutations.
std::vector<std::string> smallest_topo_brute(const Diagram &d)
{
    auto g = edges_of(d);
    std::vector<std::string> ids;
    for (const auto &n : d.nodes)
        ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    do {
        std::map<std::string, std::size_t> pos;
        for (std::size_t k = 0; k < ids.size(); ++k)
            pos[ids[k]] = k;
        bool ok = true;
        for (const auto &[u, vs] : g)
            for (const auto &v : vs)
                ok = ok && pos[u] < pos[v];
        if (ok)
            return ids;
    } while (std::next_permutation(ids.begin(), ids.end()));
    return {};
}

/// Random DAG of Add nodes; inputs come from the control or earlier nodes.
Diagram random_dag(std::mt19937_64 &rng, int n)
{
    static const std::vector<std::string> names = {"a", "b", "c", "d", "e", "f", "g", "h",
                                                   "n1", "n10", "n2", "Z", "_x", "m/1", "m/0", "q"};
    std::vector<std::string> pool = names;
    std::shuffle(pool.begin(), pool.end(), rng);
    Diagram d = with_control("in");
    for (int k = 0; k < n; ++k) {
        d.nodes.push_back(make_primitive(pool[k], "Add"));
        for (const char *port : {"x", "y"}) {
            const int src = std::uniform_int_distribution<int>(-1, k - 1)(rng);
            const std::string from = src < 0 ? "in" : pool[src] + ".sum";
            d.wires.push_back(wire(from, {pool[k] + "." + port}));
        }
    }
    return d;
}

} // namespace

TEST_SUITE("core-ir")
{
    TEST_CASE("fixed-point type invariants")
    {
        CHECK_THROWS(WireType::fixed(0, 0));
        CHECK_THROWS(WireType::fixed(65, 1));
        CHECK_THROWS(WireType::fixed(16, 17));
        CHECK_NOTHROW(WireType::fixed(16, 16));
        CHECK_NOTHROW(WireType::fixed(8, -4));
        CHECK_NOTHROW(WireType::fixed(64, 64));
        CHECK(WireType::fixed(16, 1).fraction_bits() == 15);
        CHECK(WireType::array(WireType::int32(), 0).bit_width() == 0);
        CHECK(WireType::array(WireType::fixed(12, 4), 3).bit_width() == 36);
        CHECK(WireType::cluster({WireType::boolean(), WireType::int32()}).bit_width() == 33);
    }

    TEST_CASE("fixed-point payload is scaled by 2^(I-W)")
    {
        const WireType t = WireType::fixed(8, 4);
        CHECK(Value::fixed_raw(t, 16).to_double() == 1.0);
        CHECK(Value::fixed_raw(t, -128).to_double() == -8.0);
        CHECK(Value::fixed_raw(t, 127).to_double() == 7.9375);
        CHECK(Value::fixed_raw(WireType::fixed(8, -4), 1).to_double() == std::ldexp(1.0, -12));
    }

    TEST_CASE("values compare bitwise")
    {
        CHECK(Value::float64(0.0) != Value::float64(-0.0));
        CHECK(Value::float64(std::nan("")) == Value::float64(std::nan("")));
        CHECK(Value::int32(3) != Value::fixed_raw(WireType::fixed(32, 32), 3));
    }

    TEST_CASE("validate: empty diagram has no diagnostics")
    {
        CHECK(validate(Diagram{}).empty());
    }

    TEST_CASE("validate: two drivers on one sink")
    {
        Diagram d = with_control();
        d.indicators.push_back({"s", WireType::int32(), {}});
        d.nodes.push_back(make_primitive("n1", "Not"));
        d.wires.push_back(wire("a", {"n1.x"}));
        d.wires.push_back(wire("n1.result", {"s"}));
        d.wires.push_back(wire("a", {"s"}));
        const Diagnostics ds = validate(d);
        REQUIRE(ds.size() == 1);
        CHECK(ds[0].code == "E_MULTI_DRIVER");
    }

    TEST_CASE("validate: two-node cycle")
    {
        Diagram d;
        d.nodes.push_back(make_primitive("a", "Not"));
        d.nodes.push_back(make_primitive("b", "Not"));
        d.wires.push_back(wire("a.result", {"b.x"}));
        d.wires.push_back(wire("b.result", {"a.x"}));
        REQUIRE(has_cycle_dfs(edges_of(d)));
        CHECK(has_code(validate(d), "E_CYCLE"));
        CHECK_THROWS_WITH_AS(topo_order(d), doctest::Contains("cycle"), Error);
    }

    TEST_CASE("validate: E_CYCLE agrees with a DFS oracle on random graphs")
    {
        std::mt19937_64 rng(7);
        int cyclic = 0;
        for (int trial = 0; trial < 400; ++trial) {
            const int n = std::uniform_int_distribution<int>(1, 7)(rng);
            Diagram d = with_control();
            for (int k = 0; k < n; ++k)
                d.nodes.push_back(make_primitive("n" + std::to_string(k), "Add"));
            for (int k = 0; k < n; ++k)
                for (const char *port : {"x", "y"}) {
                    const int src = std::uniform_int_distribution<int>(-n, n - 1)(rng);
                    d.wires.push_back(wire(src < 0 ? "a" : "n" + std::to_string(src) + ".sum",
                                           {"n" + std::to_string(k) + "." + port}));
                }
            const bool oracle = has_cycle_dfs(edges_of(d));
            cyclic += oracle;
            CHECK(has_code(validate(d), "E_CYCLE") == oracle);
        }
        CHECK(cyclic > 50);
        CHECK(cyclic < 350);
    }

    TEST_CASE("validate is pure and idempotent")
    {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            Diagram d = random_dag(rng, 6);
            d.wires.push_back(wire("in", {d.nodes.front().id + ".x"})); // duplicate driver
            const Diagnostics first = validate(d);
            CHECK(first == validate(d));
            CHECK(has_code(first, "E_MULTI_DRIVER"));
        }
    }

    TEST_CASE("topo_order: chain")
    {
        Diagram d = with_control();
        for (const char *id : {"c", "b", "a"})
            d.nodes.push_back(make_primitive(id, "Not"));
        d.wires.push_back(wire("a", {"a.x"})); // control a feeds node a
        d.wires.push_back(wire("a.result", {"b.x"}));
        d.wires.push_back(wire("b.result", {"c.x"}));
        CHECK(topo_order(d) == std::vector<std::string>{"a", "b", "c"});
    }

    TEST_CASE("topo_order: diamond picks the smallest order")
    {
        Diagram d = with_control("in");
        for (const char *id : {"d", "c", "b", "a"})
            d.nodes.push_back(make_primitive(id, "Add"));
        d.wires.push_back(wire("in", {"a.x", "a.y"}));
        d.wires.push_back(wire("a.sum", {"b.x", "b.y", "c.x", "c.y"}));
        d.wires.push_back(wire("b.sum", {"d.x"}));
        d.wires.push_back(wire("c.sum", {"d.y"}));
        const auto brute = smallest_topo_brute(d);
        CHECK(brute == std::vector<std::string>{"a", "b", "c", "d"});
        CHECK(topo_order(d) == brute);
    }

    TEST_CASE("topo_order: empty diagram")
    {
        CHECK(topo_order(Diagram{}).empty());
    }

    TEST_CASE("topo_order equals the brute-force smallest order on random DAGs")
    {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 120; ++trial) {
            const Diagram d = random_dag(rng, std::uniform_int_distribution<int>(0, 8)(rng));
            const auto order = topo_order(d);
            CHECK(order == smallest_topo_brute(d));
            std::set<std::string> ids;
            for (const auto &n : d.nodes)
                ids.insert(n.id);
            CHECK(std::set<std::string>(order.begin(), order.end()) == ids);
            CHECK(order.size() == ids.size());
        }
    }

    TEST_CASE("node ids order bytewise")
    {
        Diagram d;
        for (const char *id : {"b", "a10", "a2", "B"})
            d.nodes.push_back(make_primitive(id, "Const", PrimArgs{WireType::int32(), Value::int32(0)}));
        CHECK(topo_order(d) == std::vector<std::string>{"B", "a10", "a2", "b"});
    }
}
