#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "rioflow/ir.hpp"

namespace rioflow {

struct ParseOptions {
    std::string file;     // recorded in spans
    std::string base_dir; // `ip` paths are relative to this
    /// Loads the descriptor behind an `ip NAME "path"` declaration. The default
    /// reads the JSON file at base_dir/path.
    std::function<IpDescriptor(const IpDecl &, const Project &)> ip_resolver;
    bool validate = true;
};

/// Parses a gtext project. Throws Error carrying E_SYNTAX, E_UNKNOWN_PRIMITIVE,
/// E_DUP_NAME or any validation diagnostic, always with a source span.
Project parse(std::string_view text, const ParseOptions &opts = {});
/// Reads and parses a file; base_dir defaults to the file's directory.
Project parse_file(const std::string &path);

/// Canonical text: VIs sorted by name, nodes in topological order, wires by
/// source, one declaration per line.
std::string format(const Project &p);

/// Parses a type spelling such as `fxp<16,1>` or `[f64; 4]`.
WireType parse_type_text(std::string_view text);
/// Parses a literal of the given type, e.g. `1.5`, `raw(-3)`, `[1, 2]`.
Value parse_literal_text(std::string_view text, const WireType &type);

} // namespace rioflow
