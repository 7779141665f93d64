#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "rioflow/scan.hpp"

using namespace rioflow;

namespace {

ScanDecl ramp_config(int channels, std::int64_t period_us = 100)
{
    ScanDecl d;
    d.period_us = period_us;
    for (int k = 0; k < channels; ++k) {
        ScanChannelDecl c;
        c.name = "ai" + std::to_string(k);
        c.type = WireType::int32();
        d.channels.push_back(c);
    }
    return d;
}

bool coherent(const ScanSnapshot &s)
{
    for (const auto &[name, v] : s.values)
        if (v.as_i32() != s.index * 3 + 10)
            return false;
    return true;
}

} // namespace

TEST_SUITE("scan-io")
{
    TEST_CASE("ramp on four channels: every snapshot is one scan")
    {
        ScanEngine eng(ramp_config(4));
        Stimulus stim;
        for (int k = 0; k < 4; ++k)
            stim.ramp("ai" + std::to_string(k), 10, 3);
        CHECK(eng.snapshot()->index == -1);
        for (std::int64_t k = 0; k < 10000; ++k) {
            const auto s = eng.tick(stim);
            REQUIRE(s->index == k);
            REQUIRE(s->values.size() == 4);
            REQUIRE(coherent(*s));
            CHECK(s->timestamp_us == k * 100);
        }
        CHECK(eng.scans() == 10000);
        CHECK(eng.read("ai2") == Value::int32(9999 * 3 + 10));
    }

    TEST_CASE("a concurrent reader never sees a mixed snapshot")
    {
        ScanEngine eng(ramp_config(4));
        Stimulus stim;
        for (int k = 0; k < 4; ++k)
            stim.ramp("ai" + std::to_string(k), 10, 3);
        std::atomic<bool> done{false};
        std::int64_t torn = 0, backwards = 0, seen = 0;
        std::thread reader([&] {
            std::int64_t last = -1;
            while (!done) {
                const auto s = eng.snapshot();
                if (s->index < 0)
                    continue;
                torn += !coherent(*s);
                backwards += s->index < last;
                last = s->index;
                ++seen;
            }
        });
        for (int k = 0; k < 10000; ++k)
            eng.tick(stim);
        done = true;
        reader.join();
        CHECK(torn == 0);
        CHECK(backwards == 0);
        CHECK(seen > 0);
    }

    TEST_CASE("no channels")
    {
        ScanEngine eng(ramp_config(0));
        Stimulus stim;
        for (int k = 0; k < 3; ++k)
            CHECK(eng.tick(stim)->values.empty());
        CHECK(eng.snapshot()->index == 2);
    }

    TEST_CASE("engineering units")
    {
        CHECK(eng_convert(32767, 10.0 / 32768, 0.0) == doctest::Approx(9.99969).epsilon(1e-6));
        CHECK(eng_convert(-32768, 10.0 / 32768, 0.0) == -10.0);
        CHECK(eng_convert(100, 0.5, 1.0) == 51.0);
    }

    TEST_CASE("inverse conversion round-trips every 16-bit code")
    {
        for (const auto &[gain, offset] : std::vector<std::pair<double, double>>{{10.0 / 32768, 0.0}, {0.001, -2.5},
                                                                                 {1.0, 0.0}, {3.0e-5, 7.0}}) {
            for (std::int64_t raw = -32768; raw <= 32767; ++raw)
                REQUIRE(eng_inverse(eng_convert(raw, gain, offset), gain, offset) == raw);
            CHECK(eng_inverse(1e9, gain, offset) == 32767);
            CHECK(eng_inverse(-1e9, gain, offset) == -32768);
        }
        CHECK(eng_inverse(1000.0, 1.0, 0.0, 8) == 127);
        CHECK(eng_inverse(2.5, 1.0, 0.0) == 2); // ties to even
        CHECK(eng_inverse(3.5, 1.0, 0.0) == 4);
    }

    TEST_CASE("outputs are driven from the output map")
    {
        ScanDecl d;
        d.period_us = 50;
        ScanChannelDecl ao;
        ao.name = "ao0";
        ao.output = true;
        ao.gain = 0.01;
        d.channels.push_back(ao);
        ScanEngine eng(d);
        Stimulus stim;
        eng.tick(stim);
        eng.write("ao0", Value::float64(1.5));
        eng.tick(stim);
        REQUIRE(stim.outputs().size() == 2);
        CHECK(stim.outputs()[0].raw == 0);
        CHECK(stim.outputs()[1].raw == 150);
        CHECK(stim.outputs()[1].tick == 1);
        CHECK(stim.output_csv() == "tick,channel,value\n0,ao0,0\n1,ao0,150\n");
    }

    TEST_CASE("csv stimulus holds each value until the next row")
    {
        Stimulus s;
        s.load_csv("tick,channel,value\n0,a,5\n3,a,-2\n");
        CHECK(s.sample("a", 0) == 5);
        CHECK(s.sample("a", 2) == 5);
        CHECK(s.sample("a", 3) == -2);
        CHECK(s.sample("a", 100) == -2);
        CHECK(s.sample("b", 1) == 0);
        CHECK_THROWS_AS(s.load_csv("tick,channel,value\nx,a,1\n"), Error);
    }

    TEST_CASE("sine stimulus")
    {
        Stimulus s;
        s.sine("a", 1000.0, 0.25);
        CHECK(s.sample("a", 0) == 0);
        CHECK(s.sample("a", 1) == 1000);
        CHECK(s.sample("a", 3) == -1000);
    }

    TEST_CASE("scan overrun is recorded")
    {
        ScanEngine eng(ramp_config(1));
        Stimulus stim;
        eng.tick(stim, 40.0);
        eng.tick(stim, 150.0);
        eng.tick(stim, 100.0);
        const auto ev = eng.events();
        REQUIRE(ev.size() == 1);
        CHECK(ev[0].code == "E_SCAN_OVERRUN");
        CHECK(ev[0].index == 1);
        CHECK(eng.scans() == 3);
    }

    TEST_CASE("DAC ticks per sample")
    {
        CHECK(VirtualAO::ticks_per_sample(40'000'000, 44'100) == 907);
        CHECK(VirtualAO::ticks_per_sample(1'000'000, 44'100) == 23);
        CHECK(VirtualAO::ticks_per_sample(44'100, 44'100) == 1);
        CHECK_THROWS_AS(VirtualAO::ticks_per_sample(1'000, 44'100), Error);
        CHECK_THROWS_AS(VirtualAO::ticks_per_sample(0, 1), Error);
    }

    TEST_CASE("emission has no jitter")
    {
        VirtualAO ao("dac", 1'000'000, 44'100, 1.0 / 32768.0, 4096);
        for (int k = 0; k < 1000; ++k)
            REQUIRE(ao.push_code(k));
        for (std::int64_t t = 0; t < 1000 * 23; ++t)
            ao.emit(t);
        const auto &log = ao.log();
        REQUIRE(log.size() == 1000);
        for (std::size_t k = 1; k < log.size(); ++k) {
            CHECK(log[k].tick - log[k - 1].tick == 23);
            CHECK(log[k].code == static_cast<std::int64_t>(k));
        }
        CHECK(ao.underruns() == 0);
    }

    TEST_CASE("underrun holds the previous sample")
    {
        VirtualAO ao("dac", 10, 10);
        CHECK_FALSE(ao.emit(0)); // not armed yet
        CHECK(ao.underruns() == 0);
        ao.push_code(5);
        ao.push_code(-9);
        for (std::int64_t t = 1; t <= 4; ++t)
            ao.emit(t);
        const auto &log = ao.log();
        REQUIRE(log.size() == 4);
        CHECK(log[0].code == 5);
        CHECK(log[1].code == -9);
        CHECK(log[2].code == -9);
        CHECK(log[2].underrun);
        CHECK(log[3].code == -9);
        CHECK(ao.underruns() == 2);
        CHECK(ao.samples() == std::vector<std::int16_t>{5, -9});
    }

    TEST_CASE("a full buffer refuses samples")
    {
        VirtualAO ao("dac", 10, 10, 1.0 / 32768.0, 2);
        CHECK(ao.push(0.5));
        CHECK(ao.push(-0.5));
        CHECK_FALSE(ao.push(0.25));
        CHECK(ao.overflows() == 1);
        CHECK(ao.code_for(0.5) == 16384);
        CHECK(ao.code_for(2.0) == 32767);
    }
}
