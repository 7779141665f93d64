#include "rioflow/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace rioflow {

VcdTimescale vcd_timescale(std::int64_t grid_hz)
{
    static const char *names[] = {"s", "ms", "us", "ns", "ps", "fs"};
    constexpr std::int64_t kFs = 1'000'000'000'000'000;
    if (grid_hz <= 0 || kFs % grid_hz != 0)
        return {"1ps", 0};
    const std::int64_t period_fs = kFs / grid_hz;
    // Walk units from 100 s down to 1 fs and keep the first that divides.
    std::int64_t scale = kFs * 100;
    for (int k = 0; k < 6; ++k) {
        for (std::int64_t m : {100, 10, 1}) {
            const std::int64_t u = scale / 100 * m;
            if (u > 0 && period_fs % u == 0)
                return {std::to_string(m) + names[k], period_fs / u};
        }
        scale /= 1000;
    }
    return {"1fs", period_fs};
}

namespace {

struct Leaf {
    std::string name;
    WireType type;
    int signal;
    int element; // -1 for scalars
};

std::vector<Leaf> leaves(const TickTrace &t)
{
    std::vector<Leaf> out;
    for (std::size_t k = 0; k < t.signals.size(); ++k) {
        const auto &s = t.signals[k];
        if (s.type.is(TypeKind::Array)) {
            for (std::size_t e = 0; e < s.type.length(); ++e)
                out.push_back({s.name + "[" + std::to_string(e) + "]", s.type.element(), static_cast<int>(k),
                               static_cast<int>(e)});
        } else {
            out.push_back({s.name, s.type, static_cast<int>(k), -1});
        }
    }
    return out;
}

const Value &pick(const Value &v, int element)
{
    return element < 0 ? v : v.elements()[static_cast<std::size_t>(element)];
}

std::string vcd_id(std::size_t n)
{
    std::string id;
    do {
        id += static_cast<char>(33 + n % 94);
        n /= 94;
    } while (n > 0);
    return id;
}

int vcd_width(const WireType &t)
{
    switch (t.kind()) {
    case TypeKind::Boolean:
        return 1;
    case TypeKind::FixedPoint:
        return t.word_bits();
    default:
        return 32;
    }
}

std::string vcd_value(const Value &v, const std::string &id)
{
    switch (v.type().kind()) {
    case TypeKind::Boolean:
        return std::string(v.as_bool() ? "1" : "0") + id;
    case TypeKind::Float64: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "r%.17g ", v.as_f64());
        return buf + id;
    }
    default: {
        const int w = vcd_width(v.type());
        const auto raw = static_cast<std::uint64_t>(v.raw());
        std::string bits = "b";
        for (int b = w - 1; b >= 0; --b)
            bits += ((raw >> b) & 1u) ? '1' : '0';
        return bits + " " + id;
    }
    }
}

} // namespace

std::string to_vcd(const TickTrace &t)
{
    const VcdTimescale ts = vcd_timescale(t.grid_hz);
    const auto ls = leaves(t);
    std::ostringstream out;
    out << "$version rioflow $end\n";
    out << "$timescale " << ts.unit << " $end\n";
    out << "$scope module top $end\n";
    std::vector<std::vector<std::size_t>> by_signal(t.signals.size());
    for (std::size_t k = 0; k < ls.size(); ++k) {
        const Leaf &l = ls[k];
        by_signal[static_cast<std::size_t>(l.signal)].push_back(k);
        if (l.type.is(TypeKind::Float64))
            out << "$var real 64 " << vcd_id(k) << " " << l.name << " $end\n";
        else
            out << "$var wire " << vcd_width(l.type) << " " << vcd_id(k) << " " << l.name << " $end\n";
    }
    out << "$upscope $end\n$enddefinitions $end\n";

    auto time_of = [&](std::int64_t tick) -> std::int64_t {
        if (ts.period > 0)
            return tick * ts.period;
        return static_cast<std::int64_t>(std::llround(static_cast<double>(tick) * 1e12 / static_cast<double>(t.grid_hz)));
    };
    std::vector<std::string> last(ls.size());
    std::int64_t cur = -1;
    for (const auto &c : t.changes) {
        std::string lines;
        for (std::size_t k : by_signal[static_cast<std::size_t>(c.signal)]) {
            std::string v = vcd_value(pick(c.value, ls[k].element), vcd_id(k));
            if (v == last[k])
                continue;
            last[k] = v;
            lines += v + "\n";
        }
        if (lines.empty())
            continue;
        if (c.tick != cur) {
            cur = c.tick;
            out << "#" << time_of(cur) << "\n";
        }
        out << lines;
    }
    if (t.ticks > 0)
        out << "#" << time_of(t.ticks) << "\n";
    return out.str();
}

std::string to_csv(const TickTrace &t)
{
    const auto ls = leaves(t);
    std::vector<std::vector<std::size_t>> by_signal(t.signals.size());
    for (std::size_t k = 0; k < ls.size(); ++k)
        by_signal[static_cast<std::size_t>(ls[k].signal)].push_back(k);
    std::ostringstream out;
    out << "tick,signal,value\n";
    std::vector<std::string> last(ls.size());
    std::vector<bool> seen(ls.size(), false);
    for (const auto &c : t.changes) {
        for (std::size_t k : by_signal[static_cast<std::size_t>(c.signal)]) {
            std::string v = pick(c.value, ls[k].element).to_string();
            if (seen[k] && v == last[k])
                continue;
            seen[k] = true;
            last[k] = v;
            out << c.tick << "," << ls[k].name << "," << v << "\n";
        }
    }
    return out.str();
}

} // namespace rioflow
