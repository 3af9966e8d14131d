#pragma once

#include "cookiescan/types.hpp"

#include <cstdint>
#include <vector>

namespace cookiescan {

/// Phase a dedup entry belongs to; one target can hold one entry per class.
enum class DedupClass : std::uint8_t { SynAck = 1, Banner = 2, Closed = 3 };

struct DedupKey {
    Ipv4 target_ip;
    std::uint16_t target_port = 0;
    DedupClass cls = DedupClass::SynAck;
    std::uint8_t probe_type = 0;

    std::uint64_t packed() const {
        return (std::uint64_t{target_ip.value} << 32) | (std::uint64_t{target_port} << 16) |
               (std::uint64_t{static_cast<std::uint8_t>(cls)} << 8) | probe_type;
    }
};

/// Sliding-window duplicate filter with a hard entry cap.
///
/// Storage is allocated once at construction: a ring of (key, inserted_at)
/// in insertion order plus an open-addressing index into the ring. Entries
/// leave oldest-first, either by aging past the horizon or by eviction when
/// the ring is full.
class DedupWindow {
public:
    static constexpr std::size_t kDefaultCapacity = std::size_t{1} << 20;
    static constexpr double kDefaultHorizon = 10.0;

    explicit DedupWindow(std::size_t capacity = kDefaultCapacity, double horizon_s = kDefaultHorizon);

    enum class Result { Fresh, Duplicate };

    /// Atomic test-and-insert. A key present and younger than the horizon is
    /// a duplicate and keeps its original timestamp.
    Result check_insert(const DedupKey& key, Timestamp now);

    bool contains(const DedupKey& key, Timestamp now) const;

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return ring_.size(); }
    double horizon() const { return horizon_; }
    std::uint64_t evictions() const { return evictions_; }

    /// Bytes held by the ring and index.
    std::size_t memory_bytes() const;

private:
    struct Slot {
        std::uint64_t key = 0;
        Timestamp inserted = 0.0;
    };
    static constexpr std::uint32_t kEmpty = 0xFFFFFFFFu;

    std::size_t bucket_of(std::uint64_t key) const;
    std::uint32_t find(std::uint64_t key) const; // ring slot or kEmpty
    void index_insert(std::uint64_t key, std::uint32_t slot);
    void index_erase(std::uint64_t key);
    void pop_oldest();
    void expire(Timestamp now);

    std::vector<Slot> ring_;
    std::vector<std::uint32_t> index_; // ring slot per bucket, kEmpty if free
    std::size_t mask_ = 0;
    std::size_t head_ = 0; // oldest
    std::size_t size_ = 0;
    double horizon_;
    std::uint64_t evictions_ = 0;
};

} // namespace cookiescan
