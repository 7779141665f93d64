#include "rioflow/comm.hpp"

#include <algorithm>

namespace rioflow {

std::vector<std::int64_t> dma_transfer_schedule(std::int64_t n, const DmaModel &m)
{
    std::vector<std::int64_t> out;
    const std::int64_t burst = std::max<std::int64_t>(1, m.burst);
    for (std::int64_t i = 0; i < n; ++i)
        out.push_back(m.base_latency + (i + burst) / burst * burst * m.per_element);
    return out;
}

Channel::Channel(ChannelDecl decl, const DmaModel &default_dma) : decl_(std::move(decl))
{
    if (decl_.kind == ChannelKind::Fifo && decl_.writer != decl_.reader)
        dma_ = decl_.dma.value_or(default_dma);
    if (decl_.kind == ChannelKind::Register)
        reg_ = decl_.initial.value_or(Value::zero(decl_.element));
}

void Channel::check_type(const Value &v) const
{
    if (v.type() != decl_.element)
        throw Error("E_TYPE",
                    "channel '" + decl_.name + "' carries " + decl_.element.to_string() + ", got " +
                        v.type().to_string(),
                    decl_.name);
}

std::int64_t Channel::occupancy_locked() const
{
    return static_cast<std::int64_t>(queue_.size() + pending_.size() + flight_.size());
}

void Channel::note_occupancy()
{
    stats_.max_occupancy = std::max(stats_.max_occupancy, occupancy_locked());
}

bool Channel::try_write(const Value &v)
{
    check_type(v);
    {
        std::lock_guard lk(mu_);
        if (occupancy_locked() >= decl_.capacity) {
            ++stats_.timeouts;
            return false;
        }
        queue_.push_back(v);
        ++stats_.writes;
        note_occupancy();
    }
    cv_.notify_all();
    return true;
}

std::optional<Value> Channel::try_read()
{
    std::optional<Value> out;
    {
        std::lock_guard lk(mu_);
        if (queue_.empty()) {
            ++stats_.timeouts;
            return std::nullopt;
        }
        out = std::move(queue_.front());
        queue_.pop_front();
        ++stats_.reads;
    }
    cv_.notify_all();
    return out;
}

bool Channel::write(const Value &v, std::chrono::milliseconds timeout)
{
    check_type(v);
    {
        std::unique_lock lk(mu_);
        auto room = [&] { return occupancy_locked() < decl_.capacity; };
        if (timeout.count() < 0)
            cv_.wait(lk, room);
        else if (!cv_.wait_for(lk, timeout, room)) {
            ++stats_.timeouts;
            return false;
        }
        queue_.push_back(v);
        ++stats_.writes;
        note_occupancy();
    }
    cv_.notify_all();
    return true;
}

std::optional<Value> Channel::read(std::chrono::milliseconds timeout)
{
    std::optional<Value> out;
    {
        std::unique_lock lk(mu_);
        auto ready = [&] { return !queue_.empty(); };
        if (timeout.count() < 0)
            cv_.wait(lk, ready);
        else if (!cv_.wait_for(lk, timeout, ready)) {
            ++stats_.timeouts;
            return std::nullopt;
        }
        out = std::move(queue_.front());
        queue_.pop_front();
        ++stats_.reads;
    }
    cv_.notify_all();
    return out;
}

bool Channel::timed_write(const Value &v, std::int64_t tick)
{
    (void)tick;
    check_type(v);
    std::lock_guard lk(mu_);
    if (occupancy_locked() >= decl_.capacity) {
        ++stats_.timeouts;
        return false;
    }
    if (dma_)
        pending_.push_back(v);
    else
        queue_.push_back(v);
    ++stats_.writes;
    note_occupancy();
    return true;
}

bool Channel::fabric_write(const Value &v, std::int64_t tick)
{
    check_type(v);
    {
        std::lock_guard lk(mu_);
        if (occupancy_locked() >= decl_.capacity) {
            ++stats_.drops;
            return false;
        }
    }
    return timed_write(v, tick);
}

void Channel::note_drop()
{
    std::lock_guard lk(mu_);
    ++stats_.drops;
}

void Channel::advance(std::int64_t tick)
{
    std::lock_guard lk(mu_);
    if (!dma_)
        return;
    const std::int64_t burst = std::max<std::int64_t>(1, dma_->burst);
    if (!pending_.empty() && link_free_ <= tick) {
        const std::int64_t start = tick;
        const std::int64_t arrival = start + burst * dma_->per_element + dma_->base_latency;
        for (std::int64_t k = 0; k < burst && !pending_.empty(); ++k) {
            flight_.push_back({std::move(pending_.front()), arrival});
            pending_.pop_front();
        }
        link_free_ = start + burst * dma_->per_element;
    }
    while (!flight_.empty() && flight_.front().arrival <= tick) {
        queue_.push_back(std::move(flight_.front().v));
        flight_.pop_front();
    }
}

std::optional<Value> Channel::timed_read(std::int64_t tick)
{
    (void)tick;
    std::lock_guard lk(mu_);
    if (queue_.empty()) {
        ++stats_.timeouts;
        return std::nullopt;
    }
    Value v = std::move(queue_.front());
    queue_.pop_front();
    ++stats_.reads;
    return v;
}

void Channel::reg_write(const Value &v)
{
    check_type(v);
    std::lock_guard lk(mu_);
    reg_ = v;
    ++version_;
    ++stats_.writes;
}

Value Channel::reg_read() const
{
    std::lock_guard lk(mu_);
    return reg_;
}

std::uint64_t Channel::version() const
{
    std::lock_guard lk(mu_);
    return version_;
}

std::int64_t Channel::occupancy() const
{
    std::lock_guard lk(mu_);
    return occupancy_locked();
}

std::int64_t Channel::in_flight() const
{
    std::lock_guard lk(mu_);
    return static_cast<std::int64_t>(pending_.size() + flight_.size());
}

std::int64_t Channel::readable() const
{
    std::lock_guard lk(mu_);
    return static_cast<std::int64_t>(queue_.size());
}

ChannelStats Channel::stats() const
{
    std::lock_guard lk(mu_);
    return stats_;
}

Channel &ChannelSet::create(const ChannelDecl &decl)
{
    if (channels_.count(decl.name))
        throw Error("E_DUP_CHANNEL", "channel '" + decl.name + "' already exists", decl.name, decl.span);
    if (decl.kind == ChannelKind::Fifo && decl.capacity < 1)
        throw Error("E_BAD_CHANNEL", "fifo capacity must be at least 1", decl.name, decl.span);
    auto ch = std::make_unique<Channel>(decl, default_dma_);
    return *channels_.emplace(decl.name, std::move(ch)).first->second;
}

Channel *ChannelSet::find(const std::string &name)
{
    auto it = channels_.find(name);
    return it == channels_.end() ? nullptr : it->second.get();
}

const Channel *ChannelSet::find(const std::string &name) const
{
    auto it = channels_.find(name);
    return it == channels_.end() ? nullptr : it->second.get();
}

Channel &ChannelSet::at(const std::string &name)
{
    Channel *c = find(name);
    if (!c)
        throw Error("E_UNKNOWN_CHANNEL", "channel '" + name + "' is not declared", name);
    return *c;
}

std::vector<std::string> ChannelSet::names() const
{
    std::vector<std::string> out;
    for (const auto &[name, c] : channels_)
        out.push_back(name);
    return out;
}

void ChannelSet::advance(std::int64_t tick)
{
    for (auto &[name, c] : channels_)
        if (c->kind() == ChannelKind::Fifo)
            c->advance(tick);
}

ChannelSet ChannelSet::from_project(const Project &p, DmaModel default_dma)
{
    ChannelSet set(default_dma);
    for (const auto &c : p.channels)
        set.create(c);
    return set;
}

} // namespace rioflow
