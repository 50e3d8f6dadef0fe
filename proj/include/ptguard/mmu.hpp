#pragma once

// The MMU front end: TLB lookup, table walk, and — when a defense forest is
// attached — the checkpoint that decides whether a not-present fault is
// genuine or manufactured.
//
// Decision rule on a not-present leaf PTE for a user page: authenticate the
// leaf against the secure root. Evidence of an attack is either tampered
// hash state, or an authentic record saying the page is present while the
// PTE claims otherwise (only the OS clears present bits, and no honest flow
// does so for a resident page). On attack evidence the MMU restores the
// present bit from its own record, refills the TLB, and completes the access
// without ever invoking the OS — the fault channel yields nothing. Anything
// else is forwarded to the OS as usual.
//
// Formal Addition piggybacks on the first successful translation after a
// Pre-Addition: that is the moment the hardware has proof the OS actually
// installed the mapping it claimed to.

#include "addressing.hpp"
#include "cost_model.hpp"
#include "defense_forest.hpp"
#include "page_table.hpp"
#include "tlb.hpp"

#include <ostream>
#include <vector>

namespace ptguard {

enum class event_kind {
    tlb_hit = 0,
    tlb_miss,
    walk_translated,
    suspicious_not_present,
    verify_pass,
    verify_no_record,
    attack_detected,
    restored_bypass_os,
    fault_forwarded_to_os,
    formal_added,
    pre_added,
};
inline constexpr std::size_t event_kind_count = 11;

inline const char *event_kind_name(event_kind k) {
    switch (k) {
    case event_kind::tlb_hit: return "TlbHit";
    case event_kind::tlb_miss: return "TlbMiss";
    case event_kind::walk_translated: return "WalkTranslated";
    case event_kind::suspicious_not_present: return "SuspiciousNotPresent";
    case event_kind::verify_pass: return "VerifyPass";
    case event_kind::verify_no_record: return "VerifyNoRecord";
    case event_kind::attack_detected: return "AttackDetected";
    case event_kind::restored_bypass_os: return "RestoredBypassOs";
    case event_kind::fault_forwarded_to_os: return "FaultForwardedToOs";
    case event_kind::formal_added: return "FormalAdded";
    case event_kind::pre_added: return "PreAdded";
    }
    throw sim_error("event_kind_name: unknown kind");
}

struct translation_event {
    std::uint64_t tick = 0;
    event_kind kind = event_kind::tlb_hit;
    std::uint64_t va = 0;
    int level = 0;   // table level the event refers to; 0 when not applicable
};

/// One line per event: {"tick":N,"kind":"...","va_hex":"0x...","level":L}
inline void write_events_jsonl(std::ostream &os, const std::vector<translation_event> &events) {
    for (const auto &e : events) {
        os << "{\"tick\":" << e.tick << ",\"kind\":\"" << event_kind_name(e.kind)
           << "\",\"va_hex\":\"0x" << virt_addr::to_hex(e.va) << "\",\"level\":" << e.level
           << "}\n";
    }
}

struct access_outcome {
    bool ok = false;     // false: deliver a page fault to the OS and retry
    phys_addr pa{};
};

/// How the MMU reaches the OS when it decides a fault is legitimate.
struct os_fault_sink {
    virtual ~os_fault_sink() = default;
    virtual void handle_page_fault(virt_addr va) = 0;
};

class mmu_context {
public:
    mmu_context(page_table &pt, std::uint64_t cr3, tlb &t, defense_forest *forest,
                sim_clock &clock)
        : pt_(pt), cr3_(cr3), tlb_(t), forest_(forest), clock_(clock) {}

    [[nodiscard]] std::uint64_t cr3() const { return cr3_; }
    [[nodiscard]] bool defense_enabled() const { return forest_ != nullptr; }
    [[nodiscard]] defense_forest *forest() { return forest_; }

    /// One memory access. Returns ok=false when the OS must service a fault
    /// (the caller then goes through resolve_and_retry).
    access_outcome translate(virt_addr va) {
        const cost_model &cm = clock_.costs;
        const std::uint64_t vpn = va.vpn();

        if (auto frame = tlb_.lookup(vpn)) {
            clock_.charge(cm.tlb_hit, cost_bucket::translation);
            emit(event_kind::tlb_hit, va, 0);
            settle_pending(va);
            clock_.charge(cm.mem_access, cost_bucket::translation);
            return {true, {*frame, static_cast<unsigned>(va.offset())}};
        }
        emit(event_kind::tlb_miss, va, 0);

        walk_outcome w = pt_.walk(cr3_, va);
        clock_.charge(cm.pt_level_access * static_cast<std::uint64_t>(w.tables_touched),
                      cost_bucket::translation);

        switch (w.status) {
        case walk_status::translated: {
            tlb_.insert(vpn, w.pa.frame);
            emit(event_kind::walk_translated, va, 1);
            settle_pending(va);
            clock_.charge(cm.mem_access, cost_bucket::translation);
            return {true, w.pa};
        }

        case walk_status::not_mapped: {
            if (forest_) {
                // First sighting of this address: pin tree and leaf now, so
                // the eventual mapping can only be registered here.
                std::uint64_t pud = pt_.ensure_pud(cr3_, va);
                forest_->pre_add(pud, defense_forest::leaf_index_of(split_vaddr(va)));
                emit(event_kind::pre_added, va, w.level);
            }
            return {false, {}};
        }

        case walk_status::not_present: {
            if (w.level != 1 || !w.pte.is_user || !forest_)
                return {false, {}};   // nothing to authenticate; let the OS decide

            emit(event_kind::suspicious_not_present, va, 1);
            // Diverting into the in-MMU handler is a fault service like any
            // other (trap cost), plus one directory read to locate the tree.
            clock_.charge(cm.os_fault + cm.pt_level_access, cost_bucket::defense);

            const std::uint64_t pud = *pt_.pud_addr_of(cr3_, va);
            const std::uint32_t leaf = defense_forest::leaf_index_of(split_vaddr(va));
            const auto v = forest_->verify_leaf(pud, leaf);
            clock_.charge(cm.hash_node * v.hash_ops, cost_bucket::defense);

            const bool attack_evidence =
                v.status == defense_tree::verify_status::tamper ||
                (v.status == defense_tree::verify_status::authentic && v.record.present);
            if (attack_evidence) {
                emit(event_kind::attack_detected, va, 1);
                // Restore from the authenticated record when we have one;
                // under hash tampering fall back to the raw leaf record,
                // which is still the best reconstruction available.
                const std::uint64_t frame =
                    v.status == defense_tree::verify_status::authentic
                        ? v.record.frame
                        : forest_->leaf_of(pud, leaf).frame;
                pt_.set_present_bit(cr3_, va, true);
                clock_.charge(cm.pt_level_access, cost_bucket::defense);
                tlb_.insert(vpn, frame);
                emit(event_kind::restored_bypass_os, va, 1);
                clock_.charge(cm.mem_access, cost_bucket::translation);
                return {true, {frame, static_cast<unsigned>(va.offset())}};
            }

            emit(v.status == defense_tree::verify_status::no_record
                     ? event_kind::verify_no_record
                     : event_kind::verify_pass,
                 va, 1);
            return {false, {}};
        }
        }
        throw sim_error("mmu_context::translate: unhandled walk status");
    }

    /// Forwards the fault to the OS and retries the access; the retry must
    /// succeed or the simulation halts with a diagnostic.
    phys_addr resolve_and_retry(virt_addr va, os_fault_sink &os) {
        clock_.charge(clock_.costs.os_fault, cost_bucket::fault);
        emit(event_kind::fault_forwarded_to_os, va, 0);
        os.handle_page_fault(va);
        access_outcome out = translate(va);
        if (!out.ok)
            throw sim_error("resolve_and_retry: OS did not resolve fault on " + va.hex());
        return out.pa;
    }

    [[nodiscard]] const std::vector<translation_event> &events() const { return events_; }
    void clear_events() { events_.clear(); }

private:
    void emit(event_kind k, virt_addr va, int level) {
        events_.push_back({clock_.now(), k, va.raw(), level});
    }

    // Completes a pending Pre-Addition once a translation for the page has
    // actually been observed. Non-user mappings are outside the protection
    // domain; their pending markers are dropped instead.
    void settle_pending(virt_addr va) {
        if (!forest_) return;
        auto pud = pt_.pud_addr_of(cr3_, va);
        if (!pud) return;
        const std::uint32_t leaf = defense_forest::leaf_index_of(split_vaddr(va));
        if (!forest_->is_pending(*pud, leaf)) return;
        auto pte = pt_.leaf_entry_of(cr3_, va);
        if (!pte || !pte->present) return;   // translation not actually observable yet
        if (!pte->is_user) {
            forest_->cancel_pending(*pud, leaf);
            return;
        }
        unsigned ops = forest_->formal_add(*pud, leaf, true, pte->frame);
        clock_.charge(clock_.costs.hash_node * ops, cost_bucket::defense);
        emit(event_kind::formal_added, va, 1);
    }

    page_table &pt_;
    std::uint64_t cr3_;
    tlb &tlb_;
    defense_forest *forest_;
    sim_clock &clock_;
    std::vector<translation_event> events_;
};

} // namespace ptguard
