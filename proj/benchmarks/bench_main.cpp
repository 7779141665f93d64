#include <benchmark/benchmark.h>

#include <deque>

#include "rioflow/comm.hpp"
#include "rioflow/elaborate.hpp"
#include "rioflow/files.hpp"
#include "rioflow/gtext.hpp"
#include "rioflow/netlist.hpp"
#include "rioflow/runtime.hpp"
#include "rioflow/sim.hpp"

using namespace rioflow;

namespace {

std::string demo(const std::string &name) { return std::string(RIOFLOW_DEMO_DIR) + "/" + name; }

void BM_ParseDemo(benchmark::State &state)
{
    const std::string text = read_file(demo("wms.gtext"));
    for (auto _ : state)
        benchmark::DoNotOptimize(parse(text));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseDemo);

void BM_FormatDemo(benchmark::State &state)
{
    const Project p = parse_file(demo("wms.gtext"));
    for (auto _ : state)
        benchmark::DoNotOptimize(format(p));
}
BENCHMARK(BM_FormatDemo);

void BM_Elaborate(benchmark::State &state)
{
    const Project p = parse_file(demo("wms.gtext"));
    for (auto _ : state)
        benchmark::DoNotOptimize(elaborate(p));
}
BENCHMARK(BM_Elaborate);

void BM_HostForLoop(benchmark::State &state)
{
    const std::string text = "top t\nvi t {\n  indicator o: i32\n  for l {\n    shift s: i32\n    node one: Const(i32, 1)\n"
                             "    node inc: Add\n    wire s -> inc.x\n    wire one.value -> inc.y\n    wire inc.sum -> s\n"
                             "  }\n  node n: Const(i32, " +
                             std::to_string(state.range(0)) + ")\n  wire n.value -> l.N\n  wire l.s -> o\n}\n";
    const Project p = elaborate(parse(text));
    ExecConfig cfg;
    cfg.trace = false;
    for (auto _ : state)
        benchmark::DoNotOptimize(run(p.vis.at("t").diagram, {}, cfg, &p));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HostForLoop)->Arg(100)->Arg(10000);

void BM_CounterSim(benchmark::State &state)
{
    const Project p = elaborate(parse_file(demo("counter.gtext")));
    const Node &n = *p.vis.at(p.top).diagram.find_node("tick");
    const Netlist net = compile_sctl(n, DepthTable::defaults(), &p, clock_hz(p, n.clock));
    for (auto _ : state) {
        ChannelSet ch;
        Simulator sim(ch);
        sim.set_record(false);
        sim.add_netlist(net, {}, &p);
        sim.run(state.range(0));
        benchmark::DoNotOptimize(sim.netlist(0).reg("count"));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CounterSim)->Arg(10000);

void BM_DmaFifo(benchmark::State &state)
{
    ChannelDecl d;
    d.name = "q";
    d.kind = ChannelKind::Fifo;
    d.element = WireType::int32();
    d.capacity = 64;
    d.writer = Target::Host;
    d.reader = Target::Fabric;
    for (auto _ : state) {
        Channel c(d, DmaModel{});
        std::int64_t got = 0;
        for (std::int64_t tick = 0; tick < 1000; ++tick) {
            c.advance(tick);
            c.timed_write(Value::int32(static_cast<std::int32_t>(tick)), tick);
            got += c.timed_read(tick).has_value();
        }
        benchmark::DoNotOptimize(got);
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_DmaFifo);

} // namespace

BENCHMARK_MAIN();
