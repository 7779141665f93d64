#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rioflow {

struct SourceSpan {
    std::string file;
    std::size_t line = 0; // 1-based; 0 means "no location"
    std::size_t column = 0;
    std::size_t length = 0;

    bool known() const { return line >= 1 && column >= 1; }
    friend bool operator==(const SourceSpan &, const SourceSpan &) = default;
};

/// One finding. `code` is stable (E_CYCLE, E_SYNTAX, ...); `subject` names the
/// node or wire it concerns.
struct Diagnostic {
    std::string code;
    std::string message;
    std::string subject;
    SourceSpan span;

    /// `file:line:col: error E_CODE: message` (location omitted when unknown).
    std::string to_string() const;
    friend bool operator==(const Diagnostic &, const Diagnostic &) = default;
};

using Diagnostics = std::vector<Diagnostic>;

/// Exception carrying one or more diagnostics. Used for every operation error.
class Error : public std::runtime_error {
public:
    explicit Error(Diagnostic d);
    explicit Error(Diagnostics ds);
    Error(std::string code, std::string message, std::string subject = {}, SourceSpan span = {});

    const std::string &code() const { return diagnostics_.front().code; }
    const Diagnostic &diagnostic() const { return diagnostics_.front(); }
    const Diagnostics &diagnostics() const { return diagnostics_; }

private:
    Diagnostics diagnostics_;
};

bool has_code(const Diagnostics &ds, const std::string &code);

} // namespace rioflow
