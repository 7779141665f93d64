#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rioflow/comm.hpp"
#include "rioflow/ir.hpp"

namespace rioflow {

class ScanEngine;
class VirtualAO;

struct PcmFrame {
    std::vector<double> samples; // padded with zeros to the frame length
    std::int32_t count = 0;
    bool eof = false;
};

/// Everything a diagram touches outside itself. Channel operations return
/// nullopt / false when they cannot complete now; the executor decides
/// whether to wait or time out.
class IoEnv {
public:
    virtual ~IoEnv() = default;
    /// Clock used for channel timeouts (firings in standalone runs, ticks in
    /// co-simulation).
    virtual std::int64_t now() const = 0;
    virtual bool fifo_write(const std::string &ch, const Value &v) = 0;
    virtual std::optional<Value> fifo_read(const std::string &ch) = 0;
    virtual void reg_write(const std::string &ch, const Value &v) = 0;
    virtual Value reg_read(const std::string &ch) = 0;
    virtual Value scan_read(const std::string &ch) = 0;
    virtual void scan_write(const std::string &ch, const Value &v) = 0;
    virtual PcmFrame pcm_read(const std::string &name, std::int64_t frame) = 0;
    virtual void ao_write(const std::string &name, const Value &v) = 0;
};

/// IoEnv over an untimed ChannelSet, in-memory PCM inputs, an optional scan
/// engine and in-memory AO logs.
class LocalIo : public IoEnv {
public:
    explicit LocalIo(const Project *p = nullptr);

    ChannelSet &channels() { return channels_; }
    void set_pcm(const std::string &name, std::vector<std::int16_t> samples);
    void attach_scan(ScanEngine *scan) { scan_ = scan; }
    void set_clock(const std::int64_t *clock) { clock_ = clock; }
    const std::map<std::string, std::vector<Value>> &ao_log() const { return ao_; }

    std::int64_t now() const override;
    bool fifo_write(const std::string &ch, const Value &v) override;
    std::optional<Value> fifo_read(const std::string &ch) override;
    void reg_write(const std::string &ch, const Value &v) override;
    Value reg_read(const std::string &ch) override;
    Value scan_read(const std::string &ch) override;
    void scan_write(const std::string &ch, const Value &v) override;
    PcmFrame pcm_read(const std::string &name, std::int64_t frame) override;
    void ao_write(const std::string &name, const Value &v) override;

private:
    const Project *project_;
    ChannelSet channels_;
    ScanEngine *scan_ = nullptr;
    const std::int64_t *clock_ = nullptr;
    std::map<std::string, Value> scan_values_;
    struct Pcm {
        std::vector<std::int16_t> samples;
        std::size_t pos = 0;
    };
    std::map<std::string, Pcm> pcm_;
    std::map<std::string, std::vector<Value>> ao_;
};

struct ExecConfig {
    std::uint64_t seed = 1;
    std::int64_t max_firings = 10'000'000;
    bool trace = true;
    /// Iterations an SCTL runs for when executed under host semantics
    /// (unless its stop terminal fires first).
    std::int64_t sctl_iterations = 1000;
    /// Called after every host-mode SCTL iteration with the values that
    /// reached the body's sinks (indicators, shift registers, stop).
    std::function<void(const std::string &sctl, std::int64_t iteration, const std::map<std::string, Value> &sinks)>
        on_iteration;
};

struct FiringRecord {
    std::int64_t index;
    std::string node; // path id, e.g. "loop/n1"
    std::vector<Value> consumed;
    std::vector<Value> produced;
};

struct FiringTrace {
    std::vector<FiringRecord> records;
};

enum class StepStatus { Fired, Blocked, Done };

/// Resumable execution of one diagram activation under the dataflow firing
/// rule. Each step fires one ready primitive chosen pseudo-randomly among all
/// ready primitives of all active (nested) diagrams.
class Executor {
public:
    Executor(Diagram d, std::map<std::string, Value> inputs, ExecConfig cfg, const Project *p, IoEnv &io);
    ~Executor();
    Executor(const Executor &) = delete;
    Executor &operator=(const Executor &) = delete;

    StepStatus step();
    /// Steps until blocked, done, or `budget` firings.
    StepStatus run_for(std::int64_t budget);
    /// Times out the waiting channel operation with the earliest deadline.
    /// Returns false when every waiting operation waits forever.
    bool expire_one_wait();

    bool done() const;
    std::map<std::string, Value> outputs() const;
    const FiringTrace &trace() const { return trace_; }
    std::int64_t firings() const { return firings_; }
    /// Path ids of the channel operations currently waiting.
    std::vector<std::string> waiting() const;
    /// Earliest clock value at which a waiting operation times out; nullopt
    /// when nothing waits or every wait is unbounded.
    std::optional<std::int64_t> next_deadline() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    FiringTrace trace_;
    std::int64_t firings_ = 0;
};

struct RunResult {
    std::map<std::string, Value> outputs;
    FiringTrace trace;
    std::int64_t firings = 0;
};

/// Runs a typed diagram to completion. Throws E_DEADLOCK when only waiting
/// channel operations remain and none can time out, E_LIMIT past
/// cfg.max_firings, E_RUNTIME on primitive faults.
RunResult run(const Diagram &d, const std::map<std::string, Value> &inputs, const ExecConfig &cfg = {},
              const Project *p = nullptr, IoEnv *io = nullptr);

} // namespace rioflow
