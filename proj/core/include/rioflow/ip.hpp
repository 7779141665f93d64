#pragma once

#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "rioflow/ir.hpp"

namespace rioflow {

/// Validates an IP descriptor given as JSON text. Throws E_IP_SCHEMA for a
/// malformed descriptor and E_IP_CLOCK_UNDECLARED when a CLIP names a clock
/// the project does not declare (checked only when `project` is given).
IpDescriptor import_ip(std::string_view json_text, const Project *project = nullptr);
IpDescriptor load_ip_file(const std::string &path, const Project *project = nullptr);

/// Behavior model of one IP instance. Port values are handled as raw
/// integers (bool 0/1, i32, fixed-point raw words) and wrapped to the port
/// width on output.
class IpInstance {
public:
    explicit IpInstance(const IpDescriptor &desc);

    /// One tick: consumes `inputs` (in descriptor input order) and returns the
    /// outputs visible in this tick. With latency L > 0 the result computed
    /// from tick k's inputs appears at tick k + L; earlier ticks read zero.
    std::vector<Value> step(const std::vector<Value> &inputs);
    /// Outputs produced by the most recent step (zero before the first).
    const std::vector<Value> &outputs() const { return current_; }
    const std::vector<std::int64_t> &state() const { return state_; }
    void reset();

    const IpDescriptor &descriptor() const { return desc_; }

private:
    std::vector<Value> compute(const std::vector<Value> &inputs);

    IpDescriptor desc_;
    std::vector<IpPort> ins_, outs_;
    std::vector<std::int64_t> state_;
    std::deque<std::vector<Value>> pipeline_;
    std::vector<Value> current_;
};

} // namespace rioflow
