#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "rioflow/ir.hpp"

// Random gtext programs for property tests. Generators emit source text; the
// tests parse and elaborate it like any user project.

namespace rioflow::testgen {

using Rng = std::mt19937_64;

struct HostOptions {
    int max_nodes = 12;     // primitive nodes at the top level
    bool loops = true;      // may add a For loop with a shift register
    bool fifo_pair = true;  // may add a producer/consumer pair over a host fifo
    bool case_node = true;  // may add a Case structure
};

/// Host-only project with top VI `top`. Controls are named c0, c1, ...
std::string host_project(Rng &rng, const HostOptions &o = {});

struct SctlOptions {
    int max_nodes = 12; // primitive nodes inside the SCTL body (fifo ports included)
    bool fifo_in = true;
    bool fifo_out = true;
    bool tunnels = true;
    bool stop = true;
    double mul_weight = 1.0;
};

/// Project with one SCTL `body` at 40 MHz inside top VI `top`. Input stream
/// channel `inq` (i32, host -> fabric), output stream `outq` (i32, fabric -> host).
std::string sctl_project(Rng &rng, const SctlOptions &o = {});

/// Project mixing every construct the grammar has: clocks, channels,
/// registers, scan, ao, several VIs with sub-VI calls, loops, case, sctl.
std::string rich_project(Rng &rng);

/// A value of the given type drawn for a control.
Value random_value(Rng &rng, const WireType &t);

/// Values for every control of the top VI.
std::map<std::string, Value> random_controls(Rng &rng, const Project &p);

/// Applies `n` random token-level edits (delete, duplicate, swap, replace
/// with a grammar token or junk) to gtext source.
std::string mutate(Rng &rng, const std::string &text, int n);

} // namespace rioflow::testgen
