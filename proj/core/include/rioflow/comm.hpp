#pragma once

#include <chrono>
#include <condition_variable>
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

/// Arrival tick offsets of n elements handed to a DMA engine back to back:
/// element i arrives at B + ceil((i+1)/burst)*burst*P.
std::vector<std::int64_t> dma_transfer_schedule(std::int64_t n, const DmaModel &m);

struct ChannelStats {
    std::int64_t writes = 0;
    std::int64_t reads = 0;
    std::int64_t timeouts = 0;
    std::int64_t drops = 0; // fabric writes into a full fifo
    std::int64_t max_occupancy = 0;
};

/// A fifo or register channel. All operations lock an internal mutex, so one
/// producer and one consumer (fifo) or any number of threads (register) may
/// use it concurrently.
///
/// Fifos have two interfaces. The untimed one (try_write/try_read and the
/// blocking write/read) moves elements with zero latency. The timed one
/// (timed_write/advance/timed_read) is driven by a tick counter and models
/// the DMA engine of boundary-crossing fifos.
class Channel {
public:
    Channel(ChannelDecl decl, const DmaModel &default_dma);

    const std::string &name() const { return decl_.name; }
    const ChannelDecl &decl() const { return decl_; }
    ChannelKind kind() const { return decl_.kind; }
    const WireType &element() const { return decl_.element; }
    std::int64_t capacity() const { return decl_.capacity; }
    /// Present iff the endpoints differ (and the channel is a fifo).
    const std::optional<DmaModel> &dma() const { return dma_; }

    bool try_write(const Value &v);
    std::optional<Value> try_read();
    /// Blocks until space (or an element) is available or the timeout passes.
    /// A negative timeout waits forever.
    bool write(const Value &v, std::chrono::milliseconds timeout);
    std::optional<Value> read(std::chrono::milliseconds timeout);

    /// Timed fifo write at `tick`. Fails (without side effects) when pending,
    /// in-flight and readable elements already fill the capacity.
    bool timed_write(const Value &v, std::int64_t tick);
    /// Fabric-side write: a full fifo drops the element and counts it.
    bool fabric_write(const Value &v, std::int64_t tick);
    /// Counts a fabric write that was dropped before reaching the channel.
    void note_drop();
    /// Starts transfers whose link is free and lands the ones that arrived.
    /// Call once per tick before readers run.
    void advance(std::int64_t tick);
    std::optional<Value> timed_read(std::int64_t tick);

    void reg_write(const Value &v);
    Value reg_read() const;
    /// Number of completed register writes.
    std::uint64_t version() const;

    std::int64_t occupancy() const;
    std::int64_t in_flight() const;
    std::int64_t readable() const;
    ChannelStats stats() const;

private:
    void check_type(const Value &v) const;
    std::int64_t occupancy_locked() const;
    void note_occupancy();

    ChannelDecl decl_;
    std::optional<DmaModel> dma_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Value> queue_; // readable elements
    struct Flight {
        Value v;
        std::int64_t arrival;
    };
    std::deque<Value> pending_;  // written, waiting for the DMA link
    std::deque<Flight> flight_;  // on the link
    std::int64_t link_free_ = 0; // tick at which the link can start the next burst
    Value reg_;
    std::uint64_t version_ = 0;
    ChannelStats stats_;
};

class ChannelSet {
public:
    explicit ChannelSet(DmaModel default_dma = {}) : default_dma_(default_dma) {}

    /// Throws E_DUP_CHANNEL when the name is taken.
    Channel &create(const ChannelDecl &decl);
    Channel *find(const std::string &name);
    const Channel *find(const std::string &name) const;
    /// Throws E_UNKNOWN_CHANNEL.
    Channel &at(const std::string &name);
    std::vector<std::string> names() const;
    /// Calls advance(tick) on every fifo.
    void advance(std::int64_t tick);

    static ChannelSet from_project(const Project &p, DmaModel default_dma = {});

private:
    DmaModel default_dma_;
    std::map<std::string, std::unique_ptr<Channel>> channels_;
};

} // namespace rioflow
