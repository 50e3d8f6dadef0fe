#pragma once

// Tick-based cost accounting. Every modeled hardware/OS action charges a
// fixed price from the cost model; the clock sums charges into a global tick
// counter plus per-category buckets so reports can split time between plain
// translation, fault service, defense work, and swap I/O.
//
// Metering is gated: warm-up traffic runs with the meter off so reported
// ticks cover only the measurement phase. Charges while the meter is off are
// discarded entirely (the clock does not advance).

#include "addressing.hpp"

#include <array>

namespace ptguard {

struct cost_model {
    std::uint64_t tlb_hit = 1;
    std::uint64_t pt_level_access = 20;   // one table read during a walk
    std::uint64_t mem_access = 10;        // the data access itself
    std::uint64_t hash_node = 30;         // one tree-node recombination
    std::uint64_t os_fault = 1000;        // trap + fault service, whoever handles it
    std::uint64_t swap_io = 100000;       // one page of backing-store traffic
};

enum class cost_bucket { translation = 0, fault = 1, defense = 2, swap = 3 };
inline constexpr std::size_t cost_bucket_count = 4;

class sim_clock {
public:
    explicit sim_clock(cost_model m = {}) : costs(m) {}

    cost_model costs;

    [[nodiscard]] std::uint64_t now() const { return ticks_; }
    [[nodiscard]] bool metering() const { return metering_; }
    void set_metering(bool on) { metering_ = on; }

    void charge(std::uint64_t amount, cost_bucket bucket) {
        if (!metering_) return;
        ticks_ += amount;
        buckets_[static_cast<std::size_t>(bucket)] += amount;
    }

    [[nodiscard]] std::uint64_t bucket_total(cost_bucket b) const {
        return buckets_[static_cast<std::size_t>(b)];
    }

private:
    std::uint64_t ticks_ = 0;
    bool metering_ = true;
    std::array<std::uint64_t, cost_bucket_count> buckets_{};
};

} // namespace ptguard
