#pragma once

// Fully associative software TLB with strict LRU replacement. Recency stamps
// come from a private monotonic counter, so victim selection is deterministic
// (stamps are unique) and independent of the cost clock.

#include "addressing.hpp"

#include <algorithm>
#include <optional>
#include <unordered_map>

namespace ptguard {

class tlb {
public:
    struct entry_view {
        std::uint64_t vpn;
        std::uint64_t frame;
        std::uint64_t lru_stamp;
    };

    explicit tlb(std::size_t capacity = 64) : capacity_(capacity) {
        if (capacity_ == 0) throw sim_error("tlb: capacity must be at least 1");
    }

    /// Hit refreshes recency; miss has no effect.
    std::optional<std::uint64_t> lookup(std::uint64_t vpn) {
        auto it = map_.find(vpn);
        if (it == map_.end()) return std::nullopt;
        it->second.stamp = ++clock_;
        return it->second.frame;
    }

    /// Inserts (or refreshes) vpn→frame; at capacity the least recently used
    /// entry is evicted first. Returns the evicted vpn, if any.
    std::optional<std::uint64_t> insert(std::uint64_t vpn, std::uint64_t frame) {
        auto it = map_.find(vpn);
        if (it != map_.end()) {
            it->second = {frame, ++clock_};
            return std::nullopt;
        }
        std::optional<std::uint64_t> evicted;
        if (map_.size() == capacity_) {
            auto lru = std::min_element(map_.begin(), map_.end(),
                                        [](const auto &a, const auto &b) {
                                            return a.second.stamp < b.second.stamp;
                                        });
            evicted = lru->first;
            map_.erase(lru);
        }
        map_.emplace(vpn, slot{frame, ++clock_});
        return evicted;
    }

    /// Returns how many entries were dropped (0 or 1).
    std::size_t invalidate(std::uint64_t vpn) { return map_.erase(vpn); }

    std::size_t invalidate_all() {
        std::size_t n = map_.size();
        map_.clear();
        return n;
    }

    [[nodiscard]] bool contains(std::uint64_t vpn) const { return map_.count(vpn) != 0; }
    [[nodiscard]] std::size_t size() const { return map_.size(); }
    [[nodiscard]] std::size_t capacity() const { return capacity_; }

    /// Snapshot sorted by vpn, for inspection in tests.
    [[nodiscard]] std::vector<entry_view> entries() const {
        std::vector<entry_view> out;
        out.reserve(map_.size());
        for (const auto &[vpn, s] : map_) out.push_back({vpn, s.frame, s.stamp});
        std::sort(out.begin(), out.end(),
                  [](const entry_view &a, const entry_view &b) { return a.vpn < b.vpn; });
        return out;
    }

private:
    struct slot {
        std::uint64_t frame;
        std::uint64_t stamp;
    };

    std::size_t capacity_;
    std::uint64_t clock_ = 0;
    std::unordered_map<std::uint64_t, slot> map_;
};

} // namespace ptguard
