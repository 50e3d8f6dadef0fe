#pragma once

// Balanced m-ary Merkle tree authenticating the leaf PTE population of one
// PUD subtree (512 PMD slots x 512 PT slots = 262,144 fixed leaf positions).
//
// The tree is shaped as a complete m-ary tree over the smallest power of m
// that covers the leaf span; positions past the span simply stay empty.
// Nodes are materialized lazily: an absent node's digest is the canonical
// all-empty digest for its level, so an empty tree occupies no node storage
// yet still has a well-defined root. Every mutation recomputes the digests
// on the leaf-to-root path eagerly — there is no deferred or batched mode,
// which keeps "root matches content" an invariant rather than a convergence
// property.
//
// Digest layout: SHA-256 truncated to the first 8 bytes, stored per node
// alongside an 8-byte position word (level, index). Truncation halves node
// storage relative to full digests and is what makes the m=8 full-tree
// overhead land near 2/(m-1) of the protected data; collision resistance at
// 64 bits is ample for a simulator whose adversary is scripted, not
// computational. Domain separation: leaf preimages start with 0x00, internal
// preimages with 0x01, so a leaf encoding can never collide with an internal
// encoding.

#include "addressing.hpp"
#include "sha256.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <unordered_map>
#include <vector>

namespace ptguard {

using node_digest = std::uint64_t;

struct leaf_record {
    bool occupied = false;   // slot holds an authenticated PTE record
    bool present = false;    // mirrored PTE present bit
    std::uint64_t frame = 0; // mirrored PTE frame

    friend bool operator==(const leaf_record &, const leaf_record &) = default;
};

namespace detail {

inline void put_u64(std::uint8_t *p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline node_digest truncate_digest(const sha256::digest &d) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | d[static_cast<std::size_t>(i)];
    return v;
}

// Leaf preimage: 0x00 | index:u64 | occupied:u8 | present:u8 | frame:u64.
// Unoccupied slots encode as all-zero fields regardless of index, so every
// empty leaf shares one canonical digest — the anchor of lazy materialization.
inline node_digest leaf_digest(std::uint32_t index, const leaf_record &rec) {
    std::uint8_t buf[19];
    buf[0] = 0x00;
    if (rec.occupied) {
        put_u64(buf + 1, index);
        buf[9] = 1;
        buf[10] = rec.present ? 1 : 0;
        put_u64(buf + 11, rec.frame);
    } else {
        std::memset(buf + 1, 0, sizeof buf - 1);
    }
    return truncate_digest(sha256::hash(buf, sizeof buf));
}

// Internal preimage: 0x01 | level:u8 | m child digests (little-endian u64s).
inline node_digest internal_digest(unsigned level, const node_digest *children, unsigned arity) {
    std::uint8_t buf[2 + 8 * 8];
    buf[0] = 0x01;
    buf[1] = static_cast<std::uint8_t>(level);
    for (unsigned c = 0; c < arity; ++c) put_u64(buf + 2 + 8 * c, children[c]);
    return truncate_digest(sha256::hash(buf, 2 + 8 * arity));
}

} // namespace detail

class defense_tree {
public:
    static constexpr std::uint32_t default_leaf_slots = table_entries * table_entries;

    enum class verify_status { authentic, no_record, tamper };

    struct verify_result {
        verify_status status = verify_status::no_record;
        leaf_record record{};    // populated only when authentic
        unsigned hash_ops = 0;   // internal-node recombinations performed
    };

    struct update_result {
        node_digest root = 0;
        unsigned hash_ops = 0;   // internal-node digests recomputed (== height)
    };

    struct storage_report {
        std::uint64_t index_bytes = 0;       // node position words
        std::uint64_t hash_bytes = 0;        // node digests
        std::uint64_t protected_bytes = 0;   // occupied leaves x PTE size (8)
        double index_ratio = 0.0;
        double hash_ratio = 0.0;
        double total_ratio = 0.0;
    };

    defense_tree(std::uint64_t id, unsigned arity,
                 std::uint32_t leaf_slots = default_leaf_slots)
        : id_(id), arity_(arity), slots_(leaf_slots) {
        if (arity_ != 2 && arity_ != 4 && arity_ != 6 && arity_ != 8)
            throw sim_error("defense_tree: arity must be one of 2,4,6,8");
        if (slots_ < 2)
            throw sim_error("defense_tree: need at least 2 leaf slots");
        std::uint64_t span = 1;
        height_ = 0;
        while (span < slots_) {
            span *= arity_;
            ++height_;
        }
        empty_.resize(height_ + 1);
        empty_[0] = detail::leaf_digest(0, leaf_record{});
        std::array<node_digest, 8> kids{};
        for (unsigned level = 1; level <= height_; ++level) {
            kids.fill(empty_[level - 1]);
            empty_[level] = detail::internal_digest(level, kids.data(), arity_);
        }
    }

    [[nodiscard]] std::uint64_t id() const { return id_; }
    [[nodiscard]] unsigned arity() const { return arity_; }
    [[nodiscard]] unsigned height() const { return height_; }
    [[nodiscard]] std::uint32_t leaf_slots() const { return slots_; }
    [[nodiscard]] std::size_t occupied_count() const { return leaves_.size(); }
    [[nodiscard]] std::size_t allocated_nodes() const { return nodes_.size(); }

    [[nodiscard]] leaf_record leaf(std::uint32_t index) const {
        check_index(index);
        auto it = leaves_.find(index);
        return it == leaves_.end() ? leaf_record{} : it->second;
    }

    /// Current root: the stored root node if any mutation happened, otherwise
    /// the canonical empty-tree digest.
    [[nodiscard]] node_digest current_root() const { return node_or_empty(height_, 0); }

    /// Writes (creates or overwrites) the record at index and refreshes the
    /// path to the root. Exactly height() internal digests change hands.
    update_result write_leaf(std::uint32_t index, bool present, std::uint64_t frame) {
        check_index(index);
        leaves_[index] = {true, present, frame};
        return refresh_path(index);
    }

    /// Clears the record at index (it must be occupied) and refreshes the path.
    update_result remove_leaf(std::uint32_t index) {
        check_index(index);
        if (leaves_.erase(index) == 0)
            throw sim_error("defense_tree: remove of unoccupied leaf " + std::to_string(index));
        return refresh_path(index);
    }

    /// Authenticates the record at index against trusted_root. Each level's
    /// recombined digest is compared with the stored copy (so on-path node
    /// tampering is caught at the level it occurs), and the final digest is
    /// compared with trusted_root. Leaf digests are always recomputed from
    /// the records — never read from a cache — so record tampering cannot
    /// slip through. Performs exactly height() hash recombinations unless a
    /// mismatch aborts the climb early.
    [[nodiscard]] verify_result verify_leaf(std::uint32_t index, node_digest trusted_root) const {
        check_index(index);
        const leaf_record rec = leaf(index);
        node_digest running = detail::leaf_digest(index, rec);
        std::uint64_t child = index;
        verify_result out;
        std::array<node_digest, 8> kids{};
        for (unsigned level = 1; level <= height_; ++level) {
            const std::uint64_t parent = child / arity_;
            const std::uint64_t base = parent * arity_;
            for (unsigned c = 0; c < arity_; ++c) {
                const std::uint64_t pos = base + c;
                kids[c] = (pos == child) ? running : sibling_digest(level - 1, pos);
            }
            running = detail::internal_digest(level, kids.data(), arity_);
            ++out.hash_ops;
            if (running != node_or_empty(level, parent)) {
                out.status = verify_status::tamper;
                return out;
            }
            child = parent;
        }
        if (running != trusted_root) {
            out.status = verify_status::tamper;
            return out;
        }
        out.status = rec.occupied ? verify_status::authentic : verify_status::no_record;
        if (rec.occupied) out.record = rec;
        return out;
    }

    [[nodiscard]] storage_report storage_overhead() const {
        storage_report r;
        r.index_bytes = nodes_.size() * 8u;
        r.hash_bytes = nodes_.size() * 8u;
        r.protected_bytes = leaves_.size() * 8u;
        if (r.protected_bytes != 0) {
            const double p = static_cast<double>(r.protected_bytes);
            r.index_ratio = static_cast<double>(r.index_bytes) / p;
            r.hash_ratio = static_cast<double>(r.hash_bytes) / p;
            r.total_ratio = r.index_ratio + r.hash_ratio;
        }
        return r;
    }

    /// Modeled bytes this tree occupies: 16 per materialized internal node
    /// (digest + position word) plus 8 per occupied leaf record.
    [[nodiscard]] std::uint64_t memory_bytes() const {
        return nodes_.size() * 16u + leaves_.size() * 8u;
    }

    [[nodiscard]] std::vector<std::uint32_t> occupied_leaf_indices() const {
        std::vector<std::uint32_t> out;
        out.reserve(leaves_.size());
        for (const auto &[idx, rec] : leaves_) out.push_back(idx);
        std::sort(out.begin(), out.end());
        return out;
    }

    // --- tamper surface (tests model the malicious-OS hypothesis that node
    // storage sits in attacker-writable memory) ---

    /// Direct mutable access to a stored node digest; materializes the node
    /// with its current honest value first if needed.
    node_digest &unsafe_node_digest(unsigned level, std::uint64_t index) {
        if (level < 1 || level > height_)
            throw sim_error("unsafe_node_digest: level out of range");
        auto [it, inserted] = nodes_.try_emplace(node_key(level, index), 0);
        if (inserted) {
            // honest value for a node that was never materialized
            it->second = level == height_ && index == 0 ? empty_[height_]
                                                        : recompute_node(level, index);
        }
        return it->second;
    }

    /// Direct mutable access to a leaf record (must be occupied).
    leaf_record &unsafe_leaf_record(std::uint32_t index) {
        auto it = leaves_.find(index);
        if (it == leaves_.end())
            throw sim_error("unsafe_leaf_record: leaf not occupied");
        return it->second;
    }

    // Encoding primitives are shared with test oracles via detail::; the
    // traversal an oracle performs stays independent of this class.

private:
    static std::uint64_t node_key(unsigned level, std::uint64_t index) {
        return (static_cast<std::uint64_t>(level) << 40) | index;
    }

    void check_index(std::uint32_t index) const {
        if (index >= slots_)
            throw sim_error("defense_tree: leaf index " + std::to_string(index) +
                            " out of range (slots=" + std::to_string(slots_) + ")");
    }

    [[nodiscard]] node_digest node_or_empty(unsigned level, std::uint64_t index) const {
        auto it = nodes_.find(node_key(level, index));
        return it == nodes_.end() ? empty_[level] : it->second;
    }

    // Digest of a node's child at (child_level, pos), where child_level 0
    // means a leaf. Leaf digests are recomputed, internal ones read from
    // storage (or the canonical empty value).
    [[nodiscard]] node_digest sibling_digest(unsigned child_level, std::uint64_t pos) const {
        if (child_level == 0) {
            if (pos >= slots_) return empty_[0];
            auto it = leaves_.find(static_cast<std::uint32_t>(pos));
            return it == leaves_.end() ? empty_[0]
                                       : detail::leaf_digest(static_cast<std::uint32_t>(pos), it->second);
        }
        return node_or_empty(child_level, pos);
    }

    [[nodiscard]] node_digest recompute_node(unsigned level, std::uint64_t index) const {
        std::array<node_digest, 8> kids{};
        const std::uint64_t base = index * arity_;
        for (unsigned c = 0; c < arity_; ++c) kids[c] = sibling_digest(level - 1, base + c);
        return detail::internal_digest(level, kids.data(), arity_);
    }

    update_result refresh_path(std::uint32_t index) {
        update_result out;
        node_digest running = sibling_digest(0, index);
        std::uint64_t child = index;
        std::array<node_digest, 8> kids{};
        for (unsigned level = 1; level <= height_; ++level) {
            const std::uint64_t parent = child / arity_;
            const std::uint64_t base = parent * arity_;
            for (unsigned c = 0; c < arity_; ++c) {
                const std::uint64_t pos = base + c;
                kids[c] = (pos == child) ? running : sibling_digest(level - 1, pos);
            }
            running = detail::internal_digest(level, kids.data(), arity_);
            ++out.hash_ops;
            nodes_[node_key(level, parent)] = running;
            child = parent;
        }
        out.root = running;
        return out;
    }

    std::uint64_t id_;
    unsigned arity_;
    std::uint32_t slots_;
    unsigned height_ = 0;
    std::vector<node_digest> empty_;                        // per-level all-empty digests
    std::unordered_map<std::uint32_t, leaf_record> leaves_;
    std::unordered_map<std::uint64_t, node_digest> nodes_;  // key = level<<40 | index
};

} // namespace ptguard
