#pragma once

// The operating-system model: physical frame pool, demand paging from a
// backing store, LRU eviction, and the attacker's two levers — replacing the
// fault handler and clearing present bits.
//
// The attacker model is an honest-but-curious-turned-malicious kernel: it
// may rewrite PTEs, observe every fault address, and serve pages normally,
// but it cannot write the secure root store and it does not corrupt page
// contents (doing so would crash the victim rather than leak from it).

#include "addressing.hpp"
#include "cost_model.hpp"
#include "defense_forest.hpp"
#include "mmu.hpp"
#include "page_table.hpp"
#include "tlb.hpp"

#include <array>
#include <cstring>
#include <list>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>
#include <vector>

namespace ptguard {

enum class fault_resolution {
    loaded_new,       // first touch: fresh frame filled from backing store
    swapped_in,       // page had been evicted; brought back from backing store
    attack_restored,  // attacker handler flipped the present bit back on
    segfault,         // address outside any known region
};

inline const char *fault_resolution_name(fault_resolution r) {
    switch (r) {
    case fault_resolution::loaded_new: return "LoadedNew";
    case fault_resolution::swapped_in: return "SwappedIn";
    case fault_resolution::attack_restored: return "AttackRestored";
    case fault_resolution::segfault: return "Segfault";
    }
    throw sim_error("fault_resolution_name: unknown value");
}

struct fault_record {
    std::uint64_t tick = 0;
    std::uint64_t vpn = 0;
    fault_resolution resolution = fault_resolution::loaded_new;
};

/// Disk-side page images, keyed by vpn. Pages spring into existence with
/// deterministic content derived from their vpn.
class backing_store {
public:
    using page_image = std::array<std::uint8_t, page_size>;

    void ensure(std::uint64_t vpn) {
        auto it = pages_.find(vpn);
        if (it != pages_.end()) return;
        page_image &img = pages_[vpn];
        // cheap deterministic fill: splitmix64 stream seeded by the vpn
        std::uint64_t x = vpn * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull;
        for (std::size_t i = 0; i < page_size; i += 8) {
            x += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            z ^= z >> 31;
            std::memcpy(img.data() + i, &z, 8);
        }
    }

    [[nodiscard]] bool contains(std::uint64_t vpn) const { return pages_.count(vpn) != 0; }

    page_image &page(std::uint64_t vpn) {
        auto it = pages_.find(vpn);
        if (it == pages_.end())
            throw sim_error("backing_store: no page image for vpn " + std::to_string(vpn));
        return it->second;
    }
    [[nodiscard]] const page_image &page(std::uint64_t vpn) const {
        return const_cast<backing_store *>(this)->page(vpn);
    }

    [[nodiscard]] std::uint64_t reads() const { return reads_; }
    [[nodiscard]] std::uint64_t writes() const { return writes_; }
    void count_read() { ++reads_; }
    void count_write() { ++writes_; }

    [[nodiscard]] std::size_t page_count() const { return pages_.size(); }

private:
    std::unordered_map<std::uint64_t, page_image> pages_;
    std::uint64_t reads_ = 0;
    std::uint64_t writes_ = 0;
};

/// The attacker's notebook: target set, harvested fault addresses.
class attack_controller {
public:
    std::set<std::uint64_t> targets;   // vpns under observation
    bool swap_mode = false;            // arm/rearm move page contents to disk

    void record_leak(std::uint64_t tick, std::uint64_t vpn) {
        trace_.emplace_back(tick, vpn);
        leaked_.insert(vpn);
    }

    [[nodiscard]] const std::vector<std::pair<std::uint64_t, std::uint64_t>> &trace() const {
        return trace_;
    }
    [[nodiscard]] std::size_t distinct_leaked() const { return leaked_.size(); }
    [[nodiscard]] const std::set<std::uint64_t> &leaked_vpns() const { return leaked_; }

    /// CSV, one row per harvested fault: tick,vpn_hex
    void write_leakage_csv(std::ostream &os) const {
        os << "tick,vpn_hex\n";
        for (const auto &[tick, vpn] : trace_)
            os << tick << ",0x" << virt_addr::to_hex(vpn) << "\n";
    }

private:
    std::vector<std::pair<std::uint64_t, std::uint64_t>> trace_;
    std::set<std::uint64_t> leaked_;
};

class os_kernel : public os_fault_sink {
public:
    enum class handler_mode { benign, attacker_installed };

    os_kernel(page_table &pt, std::uint64_t cr3, tlb &t, defense_forest *forest,
              sim_clock &clock, std::size_t frame_capacity)
        : pt_(pt), cr3_(cr3), tlb_(t), forest_(forest), clock_(clock) {
        if (frame_capacity == 0)
            throw config_error("os_kernel: frame capacity must be at least 1");
        phys_.resize(frame_capacity);
        for (std::size_t f = 0; f < frame_capacity; ++f) free_frames_.insert(f);
    }

    [[nodiscard]] backing_store &backing() { return backing_; }
    [[nodiscard]] const backing_store &backing() const { return backing_; }

    // ---- fault handling ----

    void handle_page_fault(virt_addr va) override {
        ++faults_;
        const std::uint64_t vpn = va.vpn();

        if (mode_ == handler_mode::attacker_installed && attacker_ &&
            attacker_->targets.count(vpn)) {
            // The malicious handler: harvest the address, make the page look
            // untouched again, and return. In swap mode the content really
            // is on disk and must come back first.
            attacker_->record_leak(clock_.now(), vpn);
            if (auto pte = pt_.leaf_entry_of(cr3_, va)) {
                if (attacker_->swap_mode && !pte->present) {
                    backing_.count_read();
                    clock_.charge(clock_.costs.swap_io, cost_bucket::swap);
                    std::memcpy(phys_.at(pte->frame).data(), backing_.page(vpn).data(),
                                page_size);
                }
                if (!pte->present) pt_.set_present_bit(cr3_, va, true);
                log_.push_back({clock_.now(), vpn, fault_resolution::attack_restored});
                return;
            }
            // The target was evicted after arming. The fault was observed all
            // the same; serving it falls through to ordinary demand paging.
        }

        // Benign handling from here on.
        if (auto pte = pt_.leaf_entry_of(cr3_, va)) {
            if (pte->present) {
                // Spurious: the translation works. Nothing to do.
                log_.push_back({clock_.now(), vpn, fault_resolution::loaded_new});
                return;
            }
            // Mapped but marked not-present. No benign flow leaves a page in
            // this state, but a robust kernel restores it anyway — and pushes
            // the translation into the TLB so the retry cannot re-fault.
            pt_.set_present_bit(cr3_, va, true);
            tlb_.insert(vpn, pte->frame);
            log_.push_back({clock_.now(), vpn, fault_resolution::loaded_new});
            return;
        }

        if (!region_check(vpn)) {
            log_.push_back({clock_.now(), vpn, fault_resolution::segfault});
            return;   // the retry will fail and halt the simulation
        }

        const std::uint64_t frame = allocate_frame();
        backing_.ensure(vpn);
        const bool swapped_in = swapped_out_.erase(vpn) != 0;
        if (swapped_in) {
            backing_.count_read();
            clock_.charge(clock_.costs.swap_io, cost_bucket::swap);
        }
        std::memcpy(phys_.at(frame).data(), backing_.page(vpn).data(), page_size);
        pt_.map_page(cr3_, page_base(vpn), frame, /*is_user=*/true);
        tlb_.insert(vpn, frame);
        frame_of_[vpn] = frame;
        lru_.push_front(vpn);
        lru_pos_[vpn] = lru_.begin();
        log_.push_back({clock_.now(), vpn,
                        swapped_in ? fault_resolution::swapped_in
                                   : fault_resolution::loaded_new});
    }

    /// Recency feed from the access loop; stands in for accessed-bit scans.
    void touch(std::uint64_t vpn) {
        auto it = lru_pos_.find(vpn);
        if (it != lru_pos_.end()) lru_.splice(lru_.begin(), lru_, it->second);
    }

    /// Evicts the least recently used resident page: content to disk, PTE
    /// zeroed, TLB entry dropped, defense record removed, frame freed.
    /// Returns the evicted vpn.
    std::uint64_t swap_out_victim() {
        if (lru_.empty())
            throw sim_error("os_kernel: swap_out_victim with nothing resident");
        const std::uint64_t vpn = lru_.back();
        const virt_addr va = page_base(vpn);
        const std::uint64_t frame = frame_of_.at(vpn);

        backing_.ensure(vpn);
        std::memcpy(backing_.page(vpn).data(), phys_.at(frame).data(), page_size);
        backing_.count_write();
        clock_.charge(clock_.costs.swap_io, cost_bucket::swap);

        pt_.unmap_page(cr3_, va);
        tlb_.invalidate(vpn);
        if (forest_) {
            if (auto pud = pt_.pud_addr_of(cr3_, va)) {
                const std::uint32_t leaf = defense_forest::leaf_index_of(split_vaddr(va));
                forest_->cancel_pending(*pud, leaf);
                if (forest_->leaf_occupied(*pud, leaf)) {
                    unsigned ops = forest_->update_or_remove_leaf(*pud, leaf, std::nullopt);
                    clock_.charge(clock_.costs.hash_node * ops, cost_bucket::defense);
                }
            }
        }

        lru_pos_.erase(vpn);
        lru_.pop_back();
        frame_of_.erase(vpn);
        free_frames_.insert(frame);
        swapped_out_.insert(vpn);
        return vpn;
    }

    // ---- attacker controls ----

    /// Installs the malicious handler and arms the targets: each target's
    /// present bit is cleared (its frame stays untouched in the PTE) and its
    /// TLB entry flushed, so the very next access must fault. In swap mode
    /// the page content is additionally written out to the backing store.
    void attack_arm(attack_controller &atk, const std::vector<std::uint64_t> &targets,
                    bool swap_mode) {
        atk.targets.clear();
        atk.swap_mode = swap_mode;
        attacker_ = &atk;
        mode_ = handler_mode::attacker_installed;
        for (std::uint64_t vpn : targets) {
            arm_one(vpn);
            atk.targets.insert(vpn);
        }
    }

    /// Re-clears one target after its access completed (repeat-observation
    /// mode). No effect if the page is not currently resident-and-present.
    void rearm_target(std::uint64_t vpn) {
        if (mode_ != handler_mode::attacker_installed || !attacker_) return;
        if (!attacker_->targets.count(vpn)) return;
        auto pte = pt_.leaf_entry_of(cr3_, page_base(vpn));
        if (!pte || !pte->present) return;
        arm_one(vpn);
    }

    /// Restores the benign handler; leakage stops immediately.
    void disarm() {
        mode_ = handler_mode::benign;
        attacker_ = nullptr;
    }

    [[nodiscard]] handler_mode mode() const { return mode_; }

    // ---- introspection ----

    [[nodiscard]] const std::vector<fault_record> &fault_log() const { return log_; }
    [[nodiscard]] std::uint64_t fault_count() const { return faults_; }
    [[nodiscard]] std::size_t resident_count() const { return frame_of_.size(); }
    [[nodiscard]] std::size_t free_frame_count() const { return free_frames_.size(); }
    [[nodiscard]] std::size_t frame_capacity() const { return phys_.size(); }
    [[nodiscard]] bool is_resident(std::uint64_t vpn) const { return frame_of_.count(vpn) != 0; }
    [[nodiscard]] bool was_swapped_out(std::uint64_t vpn) const {
        return swapped_out_.count(vpn) != 0;
    }
    [[nodiscard]] const std::array<std::uint8_t, page_size> &frame_bytes(std::uint64_t frame) const {
        return phys_.at(frame);
    }
    std::array<std::uint8_t, page_size> &frame_bytes(std::uint64_t frame) {
        return phys_.at(frame);
    }

    /// Restricts demand paging to vpns accepted by the given set; everything
    /// else segfaults. Empty set (default) accepts all.
    void set_valid_vpns(std::set<std::uint64_t> vpns) { valid_vpns_ = std::move(vpns); }

private:
    void arm_one(std::uint64_t vpn) {
        const virt_addr va = page_base(vpn);
        auto pte = pt_.leaf_entry_of(cr3_, va);
        if (!pte || !pte->present)
            throw sim_error("os_kernel: arming non-resident target " + va.hex());
        if (attacker_ && attacker_->swap_mode) {
            backing_.ensure(vpn);
            std::memcpy(backing_.page(vpn).data(), phys_.at(pte->frame).data(), page_size);
            backing_.count_write();
            clock_.charge(clock_.costs.swap_io, cost_bucket::swap);
        }
        pt_.set_present_bit(cr3_, va, false);
        tlb_.invalidate(vpn);
    }

    [[nodiscard]] bool region_check(std::uint64_t vpn) const {
        return valid_vpns_.empty() || valid_vpns_.count(vpn) != 0;
    }

    static virt_addr page_base(std::uint64_t vpn) { return virt_addr(vpn << page_shift); }

    std::uint64_t allocate_frame() {
        if (free_frames_.empty()) swap_out_victim();
        const std::uint64_t frame = *free_frames_.begin();
        free_frames_.erase(free_frames_.begin());
        return frame;
    }

    page_table &pt_;
    std::uint64_t cr3_;
    tlb &tlb_;
    defense_forest *forest_;
    sim_clock &clock_;

    std::vector<std::array<std::uint8_t, page_size>> phys_;
    std::set<std::uint64_t> free_frames_;             // ordered: lowest frame first
    std::list<std::uint64_t> lru_;                    // front = most recently used
    std::unordered_map<std::uint64_t, std::list<std::uint64_t>::iterator> lru_pos_;
    std::unordered_map<std::uint64_t, std::uint64_t> frame_of_;   // resident vpn -> frame
    std::set<std::uint64_t> swapped_out_;             // evicted, content on disk
    std::set<std::uint64_t> valid_vpns_;
    backing_store backing_;

    handler_mode mode_ = handler_mode::benign;
    attack_controller *attacker_ = nullptr;
    std::vector<fault_record> log_;
    std::uint64_t faults_ = 0;
};

} // namespace ptguard
