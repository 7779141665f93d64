#pragma once

// Reference computations written independently of the library code they
// check. They only share the declared data (types, the depth table).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rioflow/elaborate.hpp"
#include "rioflow/ir.hpp"

namespace rioflow::oracle {

/// Longest path by enumerating every path of the body's node graph. A path
/// ends on entering a FifoRead/RegRead (its output is a register) and may
/// start anywhere.
inline double longest_path_brute(const Diagram &body, const DepthTable &t, std::vector<std::string> *best = nullptr)
{
    std::map<std::string, std::set<std::string>> succ;
    std::map<std::string, double> depth;
    std::set<std::string> restart;
    for (const auto &n : body.nodes) {
        succ[n.id];
        const DepthEntry *e = t.find(n.op);
        depth[n.id] = e ? e->depth_ns : 0.0;
        if (n.op == "FifoRead" || n.op == "RegRead")
            restart.insert(n.id);
    }
    for (const auto &w : body.wires)
        for (const auto &d : w.dsts)
            if (!w.src.node.empty() && !d.node.empty())
                succ[w.src.node].insert(d.node);

    double longest = 0.0;
    std::vector<std::string> path;
    std::function<void(const std::string &, double)> walk = [&](const std::string &u, double sum) {
        path.push_back(u);
        if (sum > longest) {
            longest = sum;
            if (best)
                *best = path;
        }
        for (const auto &v : succ[u]) {
            if (restart.count(v)) {
                const double s = sum + depth[v];
                if (s > longest) {
                    longest = s;
                    if (best) {
                        *best = path;
                        best->push_back(v);
                    }
                }
                continue;
            }
            walk(v, sum + depth[v]);
        }
        path.pop_back();
    };
    for (const auto &n : body.nodes)
        walk(n.id, depth[n.id]);
    return longest;
}

/// Direct-form-I biquad: y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2].
inline std::vector<double> biquad_df1(const std::vector<double> &x, double b0, double b1, double b2, double a1,
                                      double a2)
{
    std::vector<double> y(x.size());
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        y[n] = b0 * x[n] + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = x[n];
        y2 = y1;
        y1 = y[n];
    }
    return y;
}

/// Sum over a typed SCTL body of the declared table rows: one row per
/// primitive (per-bit costs at its widest port), one register row per
/// boundary register bit, one fifo row per KiB of buffer the body owns.
inline ResourceEstimate resources_from_table(const Node &sctl, const Project &p, const DepthTable &t)
{
    ResourceEstimate r;
    const Diagram &body = sctl.bodies.at(0);
    auto row = [&](const std::string &name, std::int64_t bits) {
        const DepthEntry *e = t.find(name);
        if (!e)
            return;
        r.lut += e->lut + e->lut_per_bit * bits;
        r.ff += e->ff + e->ff_per_bit * bits;
        r.dsp += e->dsp;
        r.bram += e->bram;
    };
    bool index_used = false;
    std::set<std::string> billed;
    for (const auto &w : body.wires)
        if (w.src.node.empty() && w.src.port == "i")
            index_used = true;
    for (const auto &n : body.nodes) {
        if (n.op == "Ip") {
            const IpDescriptor *ip = p.find_ip(n.args.ref);
            if (ip)
                r += ip->resources;
            continue;
        }
        std::int64_t bits = 0;
        for (const auto *ports : {&n.in_ports, &n.out_ports})
            for (const auto &port : *ports)
                if (port.type)
                    bits = std::max<std::int64_t>(bits, port.type->bit_width());
        row(n.op, bits);
        if (n.op == "FifoRead" || n.op == "FifoWrite") {
            const ChannelDecl *c = p.find_channel(n.args.ref);
            const bool reader_here = c->reader == Target::Fabric;
            const bool owns = n.op == "FifoRead" || !reader_here;
            if (owns && billed.insert(c->name).second) {
                const std::int64_t bytes = std::int64_t((c->element.bit_width() + 7) / 8) * c->capacity;
                const DepthEntry *e = t.find("fifo");
                if (e)
                    r.bram += e->bram * ((bytes + 1023) / 1024);
            }
        }
    }
    auto reg = [&](const WireType &type) { row("register", std::int64_t(type.bit_width())); };
    for (const auto &c : body.controls)
        reg(c.type);
    for (const auto &s : body.shifts)
        reg(s.type);
    for (const auto &s : body.params)
        reg(s.type);
    for (const auto &s : body.indicators)
        reg(s.type);
    if (index_used)
        reg(WireType::int32());
    return r;
}

/// Round half to even of x * 32768, clamped to 16 bits.
inline std::int16_t q15(double x)
{
    double v = std::nearbyint(x * 32768.0); // default rounding mode: ties to even
    v = std::clamp(v, -32768.0, 32767.0);
    return static_cast<std::int16_t>(v);
}

/// Three-band equalizer in doubles: each band a DF-I section over x/32768,
/// weighted sum, then quantized to a 16-bit code with q15.
inline std::vector<std::int16_t> equalizer(const std::vector<std::int16_t> &pcm,
                                           const std::vector<std::vector<double>> &bands,
                                           const std::vector<double> &gains)
{
    std::vector<double> x(pcm.size());
    for (std::size_t n = 0; n < pcm.size(); ++n)
        x[n] = pcm[n] / 32768.0;
    std::vector<double> mix(x.size(), 0.0);
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const auto &c = bands[b];
        const auto y = biquad_df1(x, c[0], c[1], c[2], c[3], c[4]);
        for (std::size_t n = 0; n < y.size(); ++n)
            mix[n] += gains[b] * y[n];
    }
    std::vector<std::int16_t> out;
    for (double v : mix)
        out.push_back(q15(v));
    return out;
}

} // namespace rioflow::oracle
