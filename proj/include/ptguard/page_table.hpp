#pragma once

// Four-level page table over simulated physical memory. Table addresses are
// allocation-order integers starting at 1 (0 is never a valid table address),
// which keeps every PUD table's address stable for its lifetime — the defense
// forest uses that address as a tree id.
//
// Levels are numbered as in hardware manuals: 4 = PGD, 3 = PUD, 2 = PMD,
// 1 = PT (leaf PTEs).

#include "addressing.hpp"

#include <array>
#include <optional>
#include <vector>

namespace ptguard {

struct page_table_entry {
    bool present = false;
    std::uint64_t frame = 0;
    bool is_user = false;   // application vs. system mapping

    friend bool operator==(const page_table_entry &, const page_table_entry &) = default;
};

enum class walk_status {
    translated,    // reached a present leaf PTE
    not_present,   // an entry exists but its present bit is clear
    not_mapped,    // no entry was ever created at the deciding slot
};

// The not_present/not_mapped distinction is load-bearing: an attacker clears
// present bits but leaves the entry resident, while a genuine first touch or
// completed swap-out leaves no entry at all. Conflating the two would make
// the suspicious-fault trigger meaningless.
struct walk_outcome {
    walk_status status = walk_status::not_mapped;
    phys_addr pa{};              // valid when translated
    page_table_entry pte{};      // leaf PTE copy (translated, or not_present at level 1)
    int level = 0;               // table level where the walk ended (4..1)
    std::uint64_t table_addr = 0;  // not_present: table holding the refusing entry
    unsigned slot = 0;             // not_present: index within that table
    int tables_touched = 0;      // table reads performed; drives walk cost accounting
};

class page_table {
public:
    // Raw view of one table slot, for test oracles that inspect entries via
    // the (table_addr, slot) locations reported by walk().
    struct raw_entry {
        bool exists = false;
        bool present = false;
        std::uint64_t value = 0;   // child table address (levels 4..2) or frame (level 1)
        bool is_user = false;
    };

    /// Allocates a fresh PGD and returns its address (the cr3 value).
    std::uint64_t create_address_space() { return alloc_table(4); }

    /// Read-only traversal; never allocates or mutates.
    [[nodiscard]] walk_outcome walk(std::uint64_t cr3, virt_addr va) const {
        const page_indices ix = split_vaddr(va);
        const unsigned idx[4] = {ix.pgd, ix.pud, ix.pmd, ix.pt};
        std::uint64_t addr = cr3;
        walk_outcome out{};
        for (int step = 0; step < 4; ++step) {
            const int level = 4 - step;
            const table &t = tab(addr, level);
            ++out.tables_touched;
            const slot &s = t.slots[idx[step]];
            out.level = level;
            if (!s.exists) {
                out.status = walk_status::not_mapped;
                return out;
            }
            if (level == 1) {
                out.pte = {s.present, s.value, s.is_user};
                out.table_addr = addr;
                out.slot = idx[step];
                if (!s.present) {
                    out.status = walk_status::not_present;
                    return out;
                }
                out.status = walk_status::translated;
                out.pa = {s.value, ix.offset};
                return out;
            }
            if (!s.present) {
                out.status = walk_status::not_present;
                out.table_addr = addr;
                out.slot = idx[step];
                return out;
            }
            addr = s.value;
        }
        throw sim_error("page_table::walk: fell off the level loop");  // unreachable
    }

    /// Installs a leaf PTE, creating intermediate tables as needed (their
    /// entries are marked present). Mapping an already-mapped va is a caller
    /// bug: the OS must unmap first.
    void map_page(std::uint64_t cr3, virt_addr va, std::uint64_t frame, bool is_user) {
        const page_indices ix = split_vaddr(va);
        const unsigned idx[4] = {ix.pgd, ix.pud, ix.pmd, ix.pt};
        std::uint64_t addr = cr3;
        for (int step = 0; step < 3; ++step) {
            // alloc_table may reallocate the arena, so never hold a slot
            // reference across it — re-resolve the slot after allocating.
            if (!tab(addr, 4 - step).slots[idx[step]].exists) {
                const std::uint64_t child = alloc_table(3 - step);
                tab(addr, 4 - step).slots[idx[step]] = {true, true, child, false};
            }
            addr = tab(addr, 4 - step).slots[idx[step]].value;
        }
        slot &leaf = tab(addr, 1).slots[ix.pt];
        if (leaf.exists)
            throw sim_error("page_table::map_page: double map of " + va.hex());
        leaf = {true, true, frame, is_user};
    }

    /// Flips only the present bit of an existing leaf PTE; returns the
    /// previous value. The frame field is deliberately untouched — that is
    /// what makes a cleared entry distinguishable from an unmapped one.
    bool set_present_bit(std::uint64_t cr3, virt_addr va, bool value) {
        slot &leaf = leaf_slot(cr3, va, "set_present_bit");
        bool prev = leaf.present;
        leaf.present = value;
        return prev;
    }

    /// Zeroes the whole leaf PTE so subsequent walks report not_mapped.
    /// Unmapping an unmapped va is an error.
    void unmap_page(std::uint64_t cr3, virt_addr va) {
        slot &leaf = leaf_slot(cr3, va, "unmap_page");
        leaf = slot{};
    }

    /// Materializes the directory chain down to (and including) the PUD table
    /// for va, without touching PMD/PT levels. Returns the PUD address. Used
    /// by the translate fault path, which needs the tree id before the OS has
    /// mapped anything; allocation order matches what map_page would produce.
    std::uint64_t ensure_pud(std::uint64_t cr3, virt_addr va) {
        const page_indices ix = split_vaddr(va);
        if (!tab(cr3, 4).slots[ix.pgd].exists) {
            // re-resolve after alloc_table: it may reallocate the arena
            const std::uint64_t pud = alloc_table(3);
            tab(cr3, 4).slots[ix.pgd] = {true, true, pud, false};
        }
        return tab(cr3, 4).slots[ix.pgd].value;
    }

    [[nodiscard]] std::optional<std::uint64_t> pud_addr_of(std::uint64_t cr3, virt_addr va) const {
        const page_indices ix = split_vaddr(va);
        const slot &s = tab(cr3, 4).slots[ix.pgd];
        if (!s.exists) return std::nullopt;
        return s.value;
    }

    /// Leaf PTE copy if the slot was ever created, regardless of present bit.
    [[nodiscard]] std::optional<page_table_entry> leaf_entry_of(std::uint64_t cr3, virt_addr va) const {
        const page_indices ix = split_vaddr(va);
        const unsigned idx[4] = {ix.pgd, ix.pud, ix.pmd, ix.pt};
        std::uint64_t addr = cr3;
        for (int step = 0; step < 3; ++step) {
            const slot &s = tab(addr, 4 - step).slots[idx[step]];
            if (!s.exists) return std::nullopt;
            addr = s.value;
        }
        const slot &leaf = tab(addr, 1).slots[ix.pt];
        if (!leaf.exists) return std::nullopt;
        return page_table_entry{leaf.present, leaf.value, leaf.is_user};
    }

    [[nodiscard]] raw_entry peek(std::uint64_t table_addr, unsigned slot_idx) const {
        if (slot_idx >= table_entries)
            throw sim_error("page_table::peek: slot index out of range");
        const table &t = tab_any(table_addr);
        const slot &s = t.slots[slot_idx];
        return {s.exists, s.present, s.value, s.is_user};
    }

    [[nodiscard]] std::size_t table_count() const { return tables_.size(); }

    // Fault injection for tests: clear/set the present bit of the entry at an
    // intermediate level (4..2) on va's path. Nothing in the modeled system
    // does this; it exists to exercise walk's intermediate not_present path.
    void debug_set_level_present(std::uint64_t cr3, virt_addr va, int level, bool value) {
        if (level < 2 || level > 4)
            throw sim_error("debug_set_level_present: level must be 2..4");
        const page_indices ix = split_vaddr(va);
        const unsigned idx[4] = {ix.pgd, ix.pud, ix.pmd, ix.pt};
        std::uint64_t addr = cr3;
        for (int step = 0; step < 4 - level; ++step) {
            const slot &s = tab(addr, 4 - step).slots[idx[step]];
            if (!s.exists)
                throw sim_error("debug_set_level_present: path not materialized");
            addr = s.value;
        }
        slot &s = tab(addr, level).slots[idx[4 - level]];
        if (!s.exists)
            throw sim_error("debug_set_level_present: entry not materialized");
        s.present = value;
    }

private:
    struct slot {
        bool exists = false;
        bool present = false;
        std::uint64_t value = 0;
        bool is_user = false;
    };
    struct table {
        int level = 0;
        std::array<slot, table_entries> slots{};
    };

    std::uint64_t alloc_table(int level) {
        tables_.push_back(table{level, {}});
        return tables_.size();   // addresses start at 1
    }

    const table &tab_any(std::uint64_t addr) const {
        if (addr == 0 || addr > tables_.size())
            throw sim_error("page_table: malformed table reference " + std::to_string(addr));
        return tables_[addr - 1];
    }

    const table &tab(std::uint64_t addr, int level) const {
        const table &t = tab_any(addr);
        if (t.level != level)
            throw sim_error("page_table: table " + std::to_string(addr) +
                            " is level " + std::to_string(t.level) +
                            ", expected " + std::to_string(level));
        return t;
    }
    table &tab(std::uint64_t addr, int level) {
        return const_cast<table &>(static_cast<const page_table *>(this)->tab(addr, level));
    }

    slot &leaf_slot(std::uint64_t cr3, virt_addr va, const char *op) {
        const page_indices ix = split_vaddr(va);
        const unsigned idx[4] = {ix.pgd, ix.pud, ix.pmd, ix.pt};
        std::uint64_t addr = cr3;
        for (int step = 0; step < 3; ++step) {
            slot &s = tab(addr, 4 - step).slots[idx[step]];
            if (!s.exists)
                throw sim_error(std::string("page_table::") + op + ": " + va.hex() + " not mapped");
            addr = s.value;
        }
        slot &leaf = tab(addr, 1).slots[ix.pt];
        if (!leaf.exists)
            throw sim_error(std::string("page_table::") + op + ": " + va.hex() + " not mapped");
        return leaf;
    }

    std::vector<table> tables_;
};

} // namespace ptguard
