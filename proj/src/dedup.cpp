#include "cookiescan/dedup.hpp"

#include <bit>
#include <stdexcept>

namespace cookiescan {

DedupWindow::DedupWindow(std::size_t capacity, double horizon_s) : horizon_(horizon_s) {
    if (capacity == 0 || capacity >= kEmpty) throw std::invalid_argument("dedup capacity out of range");
    if (!(horizon_s > 0.0)) throw std::invalid_argument("dedup horizon must be positive");
    ring_.resize(capacity);
    // Load factor <= 1/2 keeps linear-probe chains short.
    index_.assign(std::bit_ceil(capacity * 2), kEmpty);
    mask_ = index_.size() - 1;
}

std::size_t DedupWindow::bucket_of(std::uint64_t key) const {
    key ^= key >> 33;
    key *= 0xFF51AFD7ED558CCDULL;
    key ^= key >> 33;
    key *= 0xC4CEB9FE1A85EC53ULL;
    key ^= key >> 33;
    return static_cast<std::size_t>(key) & mask_;
}

std::uint32_t DedupWindow::find(std::uint64_t key) const {
    for (std::size_t b = bucket_of(key);; b = (b + 1) & mask_) {
        const std::uint32_t slot = index_[b];
        if (slot == kEmpty) return kEmpty;
        if (ring_[slot].key == key) return slot;
    }
}

void DedupWindow::index_insert(std::uint64_t key, std::uint32_t slot) {
    std::size_t b = bucket_of(key);
    while (index_[b] != kEmpty) b = (b + 1) & mask_;
    index_[b] = slot;
}

void DedupWindow::index_erase(std::uint64_t key) {
    std::size_t b = bucket_of(key);
    while (ring_[index_[b]].key != key) b = (b + 1) & mask_;
    // Backward-shift deletion keeps probe chains intact without tombstones.
    std::size_t hole = b;
    for (std::size_t j = (hole + 1) & mask_; index_[j] != kEmpty; j = (j + 1) & mask_) {
        const std::size_t home = bucket_of(ring_[index_[j]].key);
        const bool movable = (hole <= j) ? (home <= hole || home > j) : (home <= hole && home > j);
        if (movable) {
            index_[hole] = index_[j];
            hole = j;
        }
    }
    index_[hole] = kEmpty;
}

void DedupWindow::pop_oldest() {
    index_erase(ring_[head_].key);
    head_ = (head_ + 1) % ring_.size();
    --size_;
}

void DedupWindow::expire(Timestamp now) {
    while (size_ > 0 && now - ring_[head_].inserted >= horizon_) pop_oldest();
}

DedupWindow::Result DedupWindow::check_insert(const DedupKey& key, Timestamp now) {
    expire(now);
    const std::uint64_t k = key.packed();
    if (find(k) != kEmpty) return Result::Duplicate;
    if (size_ == ring_.size()) {
        pop_oldest();
        ++evictions_;
    }
    const std::size_t slot = (head_ + size_) % ring_.size();
    ring_[slot] = {k, now};
    index_insert(k, static_cast<std::uint32_t>(slot));
    ++size_;
    return Result::Fresh;
}

bool DedupWindow::contains(const DedupKey& key, Timestamp now) const {
    const std::uint32_t slot = find(key.packed());
    return slot != kEmpty && now - ring_[slot].inserted < horizon_;
}

std::size_t DedupWindow::memory_bytes() const {
    return sizeof(*this) + ring_.capacity() * sizeof(Slot) + index_.capacity() * sizeof(std::uint32_t);
}

} // namespace cookiescan
