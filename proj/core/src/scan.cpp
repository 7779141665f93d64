#include "rioflow/scan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace rioflow {

double eng_convert(std::int64_t raw, double gain, double offset)
{
    return static_cast<double>(raw) * gain + offset;
}

std::int64_t eng_inverse(double eng, double gain, double offset, int bits)
{
    bits = std::clamp(bits, 2, 63);
    const double hi = std::ldexp(1.0, bits - 1) - 1.0;
    const double lo = -std::ldexp(1.0, bits - 1);
    if (gain == 0.0 || std::isnan(eng))
        return 0;
    const double code = std::nearbyint((eng - offset) / gain);
    return static_cast<std::int64_t>(std::clamp(code, lo, hi));
}

// ---------------------------------------------------------------------------
// Stimulus

void Stimulus::ramp(const std::string &channel, std::int64_t start, std::int64_t step)
{
    gens_[channel] = Gen{Gen::Kind::Ramp, static_cast<double>(start), static_cast<double>(step), 0.0};
}

void Stimulus::sine(const std::string &channel, double amplitude_codes, double cycles_per_scan, double phase)
{
    gens_[channel] = Gen{Gen::Kind::Sine, amplitude_codes, cycles_per_scan, phase};
}

void Stimulus::load_csv(const std::string &text)
{
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            f.push_back(cell);
        if (f.size() != 3)
            throw Error("E_CONFIG", "stimulus line " + std::to_string(lineno) + ": expected tick,channel,raw_value");
        if (lineno == 1 && f[0] == "tick")
            continue;
        try {
            std::size_t pos = 0;
            const std::int64_t tick = std::stoll(f[0], &pos);
            if (pos != f[0].size())
                throw std::invalid_argument("tick");
            const std::int64_t raw = std::stoll(f[2], &pos);
            if (pos != f[2].size())
                throw std::invalid_argument("raw");
            rows_[f[1]][tick] = raw;
        } catch (const std::logic_error &) {
            throw Error("E_CONFIG", "stimulus line " + std::to_string(lineno) + ": bad number");
        }
    }
}

void Stimulus::load_csv_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("E_IO", "cannot read stimulus file '" + path + "'", path);
    std::stringstream ss;
    ss << in.rdbuf();
    load_csv(ss.str());
}

std::int64_t Stimulus::sample(const std::string &channel, std::int64_t scan_index)
{
    if (auto it = rows_.find(channel); it != rows_.end()) {
        auto row = it->second.upper_bound(scan_index);
        if (row != it->second.begin())
            return std::prev(row)->second;
    }
    if (auto it = gens_.find(channel); it != gens_.end()) {
        const Gen &g = it->second;
        if (g.kind == Gen::Kind::Ramp)
            return static_cast<std::int64_t>(g.a + g.b * static_cast<double>(scan_index));
        return static_cast<std::int64_t>(
            std::nearbyint(g.a * std::sin(2.0 * std::numbers::pi * g.b * static_cast<double>(scan_index) + g.c)));
    }
    return 0;
}

void Stimulus::drive(const std::string &channel, std::int64_t raw, std::int64_t scan_index)
{
    outputs_.push_back({scan_index, channel, raw});
}

std::string Stimulus::output_csv() const
{
    std::string out = "tick,channel,value\n";
    for (const auto &r : outputs_)
        out += std::to_string(r.tick) + "," + r.channel + "," + std::to_string(r.raw) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// ScanEngine

namespace {

Value eng_value(const WireType &t, double eng)
{
    switch (t.kind()) {
    case TypeKind::Float64:
        return Value::float64(eng);
    case TypeKind::Int32:
        return Value::int32(static_cast<std::int32_t>(std::clamp(std::nearbyint(eng), -2147483648.0, 2147483647.0)));
    case TypeKind::Boolean:
        return Value::boolean(eng != 0.0);
    case TypeKind::FixedPoint:
        return Value::fixed_raw(t, fxp::from_double(eng, t, fxp::Overflow::Saturate));
    default:
        return Value::zero(t);
    }
}

} // namespace

ScanEngine::ScanEngine(ScanDecl cfg) : cfg_(std::move(cfg))
{
    if (cfg_.period_us <= 0)
        throw Error("E_BAD_SCAN", "scan period must be positive", "scan", cfg_.span);
    auto first = std::make_shared<ScanSnapshot>();
    first->index = -1;
    for (const auto &c : cfg_.channels)
        if (!c.output)
            first->values[c.name] = Value::zero(c.type);
    current_ = std::move(first);
}

std::shared_ptr<const ScanSnapshot> ScanEngine::tick(ScanIo &io, double processing_us)
{
    std::int64_t index;
    {
        std::lock_guard lk(mu_);
        index = next_index_;
    }
    // Sample every input into a private snapshot, then publish it in one step.
    auto snap = std::make_shared<ScanSnapshot>();
    snap->index = index;
    snap->timestamp_us = index * cfg_.period_us;
    for (const auto &c : cfg_.channels) {
        if (c.output)
            continue;
        const std::int64_t raw = io.sample(c.name, index);
        snap->values[c.name] = eng_value(c.type, eng_convert(raw, c.gain, c.offset));
    }
    std::map<std::string, Value> outs;
    {
        std::lock_guard lk(mu_);
        current_ = snap;
        next_index_ = index + 1;
        outs = out_map_;
        if (processing_us > static_cast<double>(cfg_.period_us)) {
            std::ostringstream msg;
            msg << "scan " << index << " took " << processing_us << " us > period " << cfg_.period_us << " us";
            events_.push_back({index, "E_SCAN_OVERRUN", msg.str()});
        }
    }
    for (const auto &c : cfg_.channels) {
        if (!c.output)
            continue;
        auto it = outs.find(c.name);
        const double eng = it == outs.end() ? 0.0 : it->second.to_double();
        io.drive(c.name, eng_inverse(eng, c.gain, c.offset, c.bits), index);
    }
    return snap;
}

std::shared_ptr<const ScanSnapshot> ScanEngine::snapshot() const
{
    std::lock_guard lk(mu_);
    return current_;
}

Value ScanEngine::read(const std::string &channel) const
{
    auto snap = snapshot();
    auto it = snap->values.find(channel);
    if (it == snap->values.end())
        throw Error("E_UNKNOWN_CHANNEL", "scan input '" + channel + "' is not declared", channel);
    return it->second;
}

void ScanEngine::write(const std::string &channel, const Value &v)
{
    const ScanChannelDecl *decl = nullptr;
    for (const auto &c : cfg_.channels)
        if (c.name == channel)
            decl = &c;
    if (!decl || !decl->output)
        throw Error("E_UNKNOWN_CHANNEL", "scan output '" + channel + "' is not declared", channel);
    if (v.type() != decl->type)
        throw Error("E_TYPE", "scan output '" + channel + "' carries " + decl->type.to_string(), channel);
    std::lock_guard lk(mu_);
    out_map_[channel] = v;
}

std::int64_t ScanEngine::scans() const
{
    std::lock_guard lk(mu_);
    return next_index_;
}

std::vector<ScanEvent> ScanEngine::events() const
{
    std::lock_guard lk(mu_);
    return events_;
}

// ---------------------------------------------------------------------------
// VirtualAO

std::int64_t VirtualAO::ticks_per_sample(std::int64_t clock_hz, std::int64_t rate_hz)
{
    if (clock_hz <= 0 || rate_hz <= 0)
        throw Error("E_BAD_AO", "clock and sample rate must be positive");
    const auto tps = static_cast<std::int64_t>(
        std::llround(static_cast<double>(clock_hz) / static_cast<double>(rate_hz)));
    if (tps < 1)
        throw Error("E_BAD_AO", "sample rate exceeds the bound clock");
    return tps;
}

VirtualAO::VirtualAO(std::string name, std::int64_t clock_hz, std::int64_t rate_hz, double gain,
                     std::size_t buffer_capacity)
    : name_(std::move(name)), tps_(ticks_per_sample(clock_hz, rate_hz)), gain_(gain),
      capacity_(std::max<std::size_t>(1, buffer_capacity))
{
    if (gain_ <= 0.0)
        throw Error("E_BAD_AO", "analog output gain must be positive", name_);
}

std::int64_t VirtualAO::code_for(double value) const
{
    return eng_inverse(value, gain_, 0.0, 16);
}

bool VirtualAO::push(double value)
{
    return push_code(code_for(value));
}

bool VirtualAO::push_code(std::int64_t code)
{
    if (buffer_.size() >= capacity_) {
        ++overflows_;
        return false;
    }
    buffer_.push_back(std::clamp<std::int64_t>(code, -32768, 32767));
    armed_ = true;
    return true;
}

std::optional<AoEvent> VirtualAO::emit(std::int64_t tick)
{
    if (tick % tps_ != 0 || !armed_)
        return std::nullopt;
    AoEvent e{tick, last_, false};
    if (buffer_.empty()) {
        e.underrun = true;
        ++underruns_;
    } else {
        e.code = last_ = buffer_.front();
        buffer_.pop_front();
    }
    log_.push_back(e);
    return e;
}

std::vector<std::int16_t> VirtualAO::samples() const
{
    std::vector<std::int16_t> out;
    for (const auto &e : log_)
        if (!e.underrun)
            out.push_back(static_cast<std::int16_t>(e.code));
    return out;
}

} // namespace rioflow
