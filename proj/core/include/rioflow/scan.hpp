#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rioflow/ir.hpp"

namespace rioflow {

/// eng = raw * gain + offset.
double eng_convert(std::int64_t raw, double gain, double offset);
/// Inverse of eng_convert: rounds to nearest and saturates to a signed
/// `bits`-wide code.
std::int64_t eng_inverse(double eng, double gain, double offset, int bits = 16);

struct ScanSnapshot {
    std::int64_t index = 0;
    std::int64_t timestamp_us = 0; // index * period
    std::map<std::string, Value> values;
};

struct ScanEvent {
    std::int64_t index;
    std::string code; // E_SCAN_OVERRUN
    std::string message;
};

/// Source of raw converter codes for input channels and sink for the codes
/// driven onto output channels.
class ScanIo {
public:
    virtual ~ScanIo() = default;
    virtual std::int64_t sample(const std::string &channel, std::int64_t scan_index) = 0;
    virtual void drive(const std::string &channel, std::int64_t raw, std::int64_t scan_index)
    {
        (void)channel;
        (void)raw;
        (void)scan_index;
    }
};

/// Stimulus: per-channel generators plus CSV rows `tick,channel,raw_value`
/// (a CSV value holds until the channel's next row). Output codes are logged.
class Stimulus : public ScanIo {
public:
    struct OutputRow {
        std::int64_t tick;
        std::string channel;
        std::int64_t raw;
    };

    void ramp(const std::string &channel, std::int64_t start, std::int64_t step);
    /// amplitude in codes, frequency in cycles per scan.
    void sine(const std::string &channel, double amplitude_codes, double cycles_per_scan, double phase = 0.0);
    /// Throws E_IO / E_CONFIG on malformed rows.
    void load_csv(const std::string &text);
    void load_csv_file(const std::string &path);

    std::int64_t sample(const std::string &channel, std::int64_t scan_index) override;
    void drive(const std::string &channel, std::int64_t raw, std::int64_t scan_index) override;

    const std::vector<OutputRow> &outputs() const { return outputs_; }
    /// `tick,channel,value` lines of the output log.
    std::string output_csv() const;

private:
    struct Gen {
        enum class Kind { Ramp, Sine } kind;
        double a, b, c;
    };
    std::map<std::string, Gen> gens_;
    std::map<std::string, std::map<std::int64_t, std::int64_t>> rows_;
    std::vector<OutputRow> outputs_;
};

/// Periodic I/O service. Each tick samples every input channel, converts it to
/// engineering units, publishes one snapshot atomically, then drives every
/// output channel from the output map.
class ScanEngine {
public:
    explicit ScanEngine(ScanDecl cfg);

    const ScanDecl &config() const { return cfg_; }

    /// One scan cycle. `processing_us` is the time the cycle took; exceeding
    /// the period records E_SCAN_OVERRUN (the cycle still completes).
    std::shared_ptr<const ScanSnapshot> tick(ScanIo &io, double processing_us = 0.0);

    /// Latest published snapshot (index -1 before the first tick).
    std::shared_ptr<const ScanSnapshot> snapshot() const;
    /// Value of one input channel in the latest snapshot.
    Value read(const std::string &channel) const;
    /// Sets the value driven onto an output channel at the next tick.
    void write(const std::string &channel, const Value &v);

    std::int64_t scans() const;
    std::vector<ScanEvent> events() const;

private:
    ScanDecl cfg_;
    mutable std::mutex mu_;
    std::shared_ptr<const ScanSnapshot> current_;
    std::map<std::string, Value> out_map_;
    std::int64_t next_index_ = 0;
    std::vector<ScanEvent> events_;
};

struct AoEvent {
    std::int64_t tick;
    std::int64_t code;
    bool underrun = false;
};

/// Simulated DAC bound to a fabric clock. One sample leaves the buffer every
/// ticks_per_sample ticks, at ticks that are multiples of it. An empty buffer
/// at an emission tick holds the previous code and counts an underrun once the
/// output is armed by its first sample.
class VirtualAO {
public:
    VirtualAO(std::string name, std::int64_t clock_hz, std::int64_t rate_hz, double gain = 1.0 / 32768.0,
              std::size_t buffer_capacity = 64);

    static std::int64_t ticks_per_sample(std::int64_t clock_hz, std::int64_t rate_hz);

    const std::string &name() const { return name_; }
    std::int64_t ticks_per_sample() const { return tps_; }
    double gain() const { return gain_; }

    /// Queues a value in engineering units. Returns false (and counts an
    /// overflow) when the buffer is full.
    bool push(double value);
    bool push_code(std::int64_t code);
    std::int64_t code_for(double value) const;

    /// Emission at `tick` if it is an emission tick.
    std::optional<AoEvent> emit(std::int64_t tick);

    bool armed() const { return armed_; }
    std::size_t buffered() const { return buffer_.size(); }
    std::int64_t underruns() const { return underruns_; }
    std::int64_t overflows() const { return overflows_; }
    /// Emitted events (underruns included).
    const std::vector<AoEvent> &log() const { return log_; }
    /// Codes of the samples actually taken from the buffer.
    std::vector<std::int16_t> samples() const;

private:
    std::string name_;
    std::int64_t tps_;
    double gain_;
    std::size_t capacity_;
    std::deque<std::int64_t> buffer_;
    bool armed_ = false;
    std::int64_t last_ = 0;
    std::int64_t underruns_ = 0;
    std::int64_t overflows_ = 0;
    std::vector<AoEvent> log_;
};

} // namespace rioflow
