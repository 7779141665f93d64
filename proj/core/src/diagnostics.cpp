#include "rioflow/diagnostics.hpp"

#include <algorithm>

namespace rioflow {

std::string Diagnostic::to_string() const
{
    std::string s;
    if (span.known()) {
        s += span.file.empty() ? "<input>" : span.file;
        s += ":" + std::to_string(span.line) + ":" + std::to_string(span.column) + ": ";
    }
    s += "error " + code + ": " + message;
    if (!subject.empty())
        s += " [" + subject + "]";
    return s;
}

static std::string join(const Diagnostics &ds)
{
    std::string s;
    for (const auto &d : ds) {
        if (!s.empty())
            s += "\n";
        s += d.to_string();
    }
    return s;
}

Error::Error(Diagnostic d) : Error(Diagnostics{std::move(d)}) {}

Error::Error(Diagnostics ds) : std::runtime_error(join(ds)), diagnostics_(std::move(ds))
{
    if (diagnostics_.empty())
        diagnostics_.push_back({"E_INTERNAL", "error without diagnostics", {}, {}});
}

Error::Error(std::string code, std::string message, std::string subject, SourceSpan span)
    : Error(Diagnostic{std::move(code), std::move(message), std::move(subject), std::move(span)})
{
}

bool has_code(const Diagnostics &ds, const std::string &code)
{
    return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic &d) { return d.code == code; });
}

} // namespace rioflow
