#pragma once

// Forest of defense trees, one per PUD table, keyed by the PUD's physical
// address. A leaf position inside a tree is (pmd_index << 9) | pt_index,
// covering every PTE slot the PUD can reach.
//
// Additions are two-phase. pre_add() runs when a fault first reveals an
// address: it pins down which tree and leaf will be used (creating the tree
// and its secure-store root entry if this is the first sighting of that PUD)
// but does not mutate any leaf or hash. formal_add() runs once the hardware
// has observed the installed translation; it consumes the matching pending
// marker and performs the authenticated write. A formal_add without its
// pre_add is a protocol violation, and a pending marker is consumed at most
// once — together these keep attacker-induced faults from ever registering
// a mapping the hardware did not see.
//
// The secure root store models TEE-resident memory: the only object the
// attacker cannot write. Everything else (nodes, leaf records) lives in
// ordinary memory, which is why verification recomputes rather than trusts.

#include "addressing.hpp"
#include "defense_tree.hpp"

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace ptguard {

class defense_forest;

class secure_root_store {
public:
    [[nodiscard]] std::optional<node_digest> root_of(std::uint64_t tree_id) const {
        auto it = roots_.find(tree_id);
        if (it == roots_.end()) return std::nullopt;
        return it->second;
    }

    [[nodiscard]] std::size_t size() const { return roots_.size(); }

    [[nodiscard]] std::vector<std::pair<std::uint64_t, node_digest>> snapshot() const {
        return {roots_.begin(), roots_.end()};
    }

private:
    friend class defense_forest;
    std::map<std::uint64_t, node_digest> roots_;
};

class defense_forest {
public:
    struct leaf_patch {
        bool present;
        std::uint64_t frame;
    };

    explicit defense_forest(unsigned arity,
                            std::uint32_t leaf_slots = defense_tree::default_leaf_slots)
        : arity_(arity), slots_(leaf_slots) {
        if (arity != 2 && arity != 4 && arity != 6 && arity != 8)
            throw sim_error("defense_forest: arity must be one of 2,4,6,8");
    }

    static std::uint32_t leaf_index_of(const page_indices &ix) {
        return (static_cast<std::uint32_t>(ix.pmd) << index_bits) | ix.pt;
    }

    /// Phase one. Creates the tree (and its root-store entry) on first
    /// sighting of the PUD; records the pending marker. Idempotent while the
    /// marker is outstanding.
    void pre_add(std::uint64_t pud, std::uint32_t leaf) {
        check_leaf(leaf);
        auto it = trees_.find(pud);
        if (it == trees_.end()) {
            it = trees_.emplace(pud, defense_tree(pud, arity_, slots_)).first;
            roots_.roots_[pud] = it->second.current_root();
        }
        pending_.insert({pud, leaf});
    }

    /// Phase two. Consumes the pending marker and performs the authenticated
    /// leaf write; throws protocol_error if no marker is outstanding.
    /// Returns the number of hash recombinations spent (the tree height).
    unsigned formal_add(std::uint64_t pud, std::uint32_t leaf, bool present, std::uint64_t frame) {
        check_leaf(leaf);
        if (pending_.erase({pud, leaf}) == 0)
            throw protocol_error("defense_forest: formal_add without pending pre_add (pud " +
                                 std::to_string(pud) + ", leaf " + std::to_string(leaf) + ")");
        return apply_write(pud, leaf, leaf_patch{present, frame});
    }

    /// Trusted maintenance path (MMU-driven): patch or remove an occupied
    /// leaf. nullopt removes. Unlike formal_add this needs no pending marker,
    /// but it refuses to touch a leaf that holds no record.
    unsigned update_or_remove_leaf(std::uint64_t pud, std::uint32_t leaf,
                                   std::optional<leaf_patch> patch) {
        check_leaf(leaf);
        auto it = trees_.find(pud);
        if (it == trees_.end())
            throw sim_error("defense_forest: no tree for pud " + std::to_string(pud));
        if (!it->second.leaf(leaf).occupied)
            throw sim_error("defense_forest: update/remove of unoccupied leaf " +
                            std::to_string(leaf));
        if (patch) return apply_write(pud, leaf, *patch);
        auto res = it->second.remove_leaf(leaf);
        roots_.roots_[pud] = res.root;
        hash_ops_ += res.hash_ops;
        return res.hash_ops;
    }

    /// Drops an outstanding pending marker (page unmapped before the
    /// translation was ever observed). Returns whether one existed.
    bool cancel_pending(std::uint64_t pud, std::uint32_t leaf) {
        return pending_.erase({pud, leaf}) != 0;
    }

    /// Authenticates a leaf against the secure store. An unknown PUD yields
    /// no_record without any hash work — there is nothing to authenticate.
    [[nodiscard]] defense_tree::verify_result verify_leaf(std::uint64_t pud,
                                                          std::uint32_t leaf) const {
        check_leaf(leaf);
        auto it = trees_.find(pud);
        if (it == trees_.end()) return {};
        auto res = it->second.verify_leaf(leaf, roots_.roots_.at(pud));
        hash_ops_ += res.hash_ops;
        return res;
    }

    [[nodiscard]] bool is_pending(std::uint64_t pud, std::uint32_t leaf) const {
        return pending_.count({pud, leaf}) != 0;
    }
    [[nodiscard]] std::size_t pending_count() const { return pending_.size(); }

    [[nodiscard]] bool leaf_occupied(std::uint64_t pud, std::uint32_t leaf) const {
        auto it = trees_.find(pud);
        return it != trees_.end() && it->second.leaf(leaf).occupied;
    }

    [[nodiscard]] leaf_record leaf_of(std::uint64_t pud, std::uint32_t leaf) const {
        auto it = trees_.find(pud);
        return it == trees_.end() ? leaf_record{} : it->second.leaf(leaf);
    }

    [[nodiscard]] std::size_t tree_count() const { return trees_.size(); }

    [[nodiscard]] const defense_tree *tree(std::uint64_t pud) const {
        auto it = trees_.find(pud);
        return it == trees_.end() ? nullptr : &it->second;
    }

    /// Mutable tree access for tamper experiments in tests.
    [[nodiscard]] defense_tree *unsafe_tree(std::uint64_t pud) {
        auto it = trees_.find(pud);
        return it == trees_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] const secure_root_store &roots() const { return roots_; }

    [[nodiscard]] std::vector<std::uint64_t> tree_ids() const {
        std::vector<std::uint64_t> out;
        out.reserve(trees_.size());
        for (const auto &[id, t] : trees_) out.push_back(id);
        return out;
    }

    /// Modeled forest footprint (node storage + leaf records, all trees).
    /// The secure root store is TEE memory and deliberately not counted.
    [[nodiscard]] std::uint64_t memory_bytes() const {
        std::uint64_t total = 0;
        for (const auto &[id, t] : trees_) total += t.memory_bytes();
        return total;
    }

    /// Aggregate node-storage-to-protected-data ratio across the forest;
    /// 0 when nothing is protected yet.
    [[nodiscard]] double overhead_ratio() const {
        std::uint64_t node_bytes = 0, protected_bytes = 0;
        for (const auto &[id, t] : trees_) {
            auto s = t.storage_overhead();
            node_bytes += s.index_bytes + s.hash_bytes;
            protected_bytes += s.protected_bytes;
        }
        return protected_bytes == 0
                   ? 0.0
                   : static_cast<double>(node_bytes) / static_cast<double>(protected_bytes);
    }

    /// Cumulative hash recombinations across all verify/update operations.
    [[nodiscard]] std::uint64_t hash_ops_total() const { return hash_ops_; }

    [[nodiscard]] unsigned arity() const { return arity_; }
    [[nodiscard]] std::uint32_t leaf_slots() const { return slots_; }

private:
    void check_leaf(std::uint32_t leaf) const {
        if (leaf >= slots_)
            throw sim_error("defense_forest: leaf index out of range");
    }

    unsigned apply_write(std::uint64_t pud, std::uint32_t leaf, leaf_patch p) {
        auto &t = trees_.at(pud);
        auto res = t.write_leaf(leaf, p.present, p.frame);
        roots_.roots_[pud] = res.root;
        hash_ops_ += res.hash_ops;
        return res.hash_ops;
    }

    unsigned arity_;
    std::uint32_t slots_;
    std::map<std::uint64_t, defense_tree> trees_;   // ordered: deterministic iteration
    secure_root_store roots_;
    std::set<std::pair<std::uint64_t, std::uint32_t>> pending_;
    mutable std::uint64_t hash_ops_ = 0;
};

} // namespace ptguard
