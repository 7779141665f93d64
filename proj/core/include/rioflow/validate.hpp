#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rioflow/ir.hpp"

namespace rioflow {

/// Structural checks of one VI. Returns an empty list iff every invariant
/// holds. With `project` given, sub-VI references are resolved as well.
Diagnostics validate(const VIGraph &vi, const Project *project = nullptr);
/// Top-level diagram without an enclosing VI.
Diagnostics validate(const Diagram &d);
/// All VIs plus project-level declarations (top VI, unique channel names, ...).
Diagnostics validate(const Project &p);

/// Node ids in dependency order; ties go to the smallest id. Throws E_CYCLE.
std::vector<std::string> topo_order(const Diagram &d);

/// Distinct node-to-node dependency edges of one diagram level.
std::vector<std::pair<std::string, std::string>> node_edges(const Diagram &d);

/// Recomputes a structure node's outer ports from its bodies:
///  - loops and SCTL: [N] + tunnels in + shift inits / tunnels out + shift finals
///  - case: sel + tunnels in / tunnels out (taken from the first frame)
void sync_structure_ports(Node &n);

/// Ports of a sub-VI node derived from the referenced VI.
void sync_subvi_ports(Node &n, const VIGraph &vi);

} // namespace rioflow
