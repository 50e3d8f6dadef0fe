#include <ptguard/os.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

using namespace ptguard;

namespace {

struct sim_rig {
    page_table pt;
    std::uint64_t cr3;
    tlb cache{16};
    sim_clock clock;
    defense_forest *forest = nullptr;
    mmu_context mmu;
    os_kernel os;

    explicit sim_rig(std::size_t frames, defense_forest *f = nullptr)
        : cr3(pt.create_address_space()), forest(f),
          mmu(pt, cr3, cache, f, clock), os(pt, cr3, cache, f, clock, frames) {}

    // One access as the scenario loop would do it: translate, let the OS
    // resolve a fault, then feed recency.
    phys_addr access(std::uint64_t va_raw) {
        const virt_addr va(va_raw);
        auto out = mmu.translate(va);
        phys_addr pa = out.ok ? out.pa : mmu.resolve_and_retry(va, os);
        os.touch(va.vpn());
        return pa;
    }
};

constexpr std::uint64_t page_a = 0x10'0000'0000ull;
constexpr std::uint64_t page_b = 0x10'0000'1000ull;
constexpr std::uint64_t page_c = 0x10'0000'2000ull;
constexpr std::uint64_t page_d = 0x10'0000'3000ull;

} // namespace

TEST_CASE("backing store content is a pure function of the vpn") {
    backing_store s1, s2;
    s1.ensure(42);
    s2.ensure(42);
    s2.ensure(43);
    CHECK(s1.page(42) == s2.page(42));
    CHECK(s2.page(42) != s2.page(43));
    CHECK_THROWS_AS(s1.page(7), sim_error);
}

TEST_CASE("demand paging fills frames from the backing store, lowest frame first") {
    sim_rig r(4);
    auto pa = r.access(page_a + 0x123);
    CHECK(pa.frame == 0);
    CHECK(pa.offset == 0x123);
    CHECK(r.access(page_b).frame == 1);

    CHECK(r.os.resident_count() == 2);
    CHECK(r.os.free_frame_count() == 2);
    CHECK(r.os.frame_bytes(0) == r.os.backing().page(page_a >> page_shift));

    auto pte = r.pt.leaf_entry_of(r.cr3, virt_addr(page_a));
    REQUIRE(pte);
    CHECK(pte->present);
    CHECK(pte->is_user);

    REQUIRE(r.os.fault_log().size() == 2);
    CHECK(r.os.fault_log()[0].resolution == fault_resolution::loaded_new);
    // The OS primed the TLB, so the retry hit it and the next access is cheap.
    CHECK(r.cache.contains(page_a >> page_shift));
}

TEST_CASE("the least recently used page is evicted and survives the disk round trip") {
    sim_rig r(2);
    r.access(page_a);
    r.access(page_b);
    r.access(page_a);   // recency: A most recent, B the victim

    // Scribble into B's frame so we can recognize its content later.
    const std::uint64_t frame_b = 1;
    r.os.frame_bytes(frame_b)[7] = 0xEE;

    r.access(page_c);   // full pool: evicts B
    CHECK_FALSE(r.os.is_resident(page_b >> page_shift));
    CHECK(r.os.was_swapped_out(page_b >> page_shift));
    CHECK(r.os.is_resident(page_a >> page_shift));
    CHECK(r.os.backing().writes() == 1);
    CHECK(r.clock.bucket_total(cost_bucket::swap) == 100000);
    // B's PTE is gone entirely — eviction is an unmap, not a bit flip.
    CHECK_FALSE(r.pt.leaf_entry_of(r.cr3, virt_addr(page_b)).has_value());
    CHECK_FALSE(r.cache.contains(page_b >> page_shift));

    r.access(page_b);   // evicts A, brings B back
    REQUIRE(r.os.fault_log().back().resolution == fault_resolution::swapped_in);
    CHECK(r.os.backing().reads() == 1);
    CHECK(r.clock.bucket_total(cost_bucket::swap) == 300000);   // A out, B in
    const std::uint64_t frame_now = r.pt.leaf_entry_of(r.cr3, virt_addr(page_b))->frame;
    CHECK(r.os.frame_bytes(frame_now)[7] == 0xEE);
}

TEST_CASE("swapping a page out retracts its defense record") {
    defense_forest forest(8);
    sim_rig r(2, &forest);
    r.access(page_a);
    r.access(page_b);

    const std::uint64_t pud = *r.pt.pud_addr_of(r.cr3, virt_addr(page_a));
    const std::uint32_t leaf_a = defense_forest::leaf_index_of(split_vaddr(virt_addr(page_a)));
    REQUIRE(forest.leaf_occupied(pud, leaf_a));
    const std::uint64_t hashes_before = forest.hash_ops_total();

    r.access(page_c);   // evicts A (least recent)
    CHECK_FALSE(forest.leaf_occupied(pud, leaf_a));
    CHECK(forest.pending_count() == 0);
    // the removal itself plus C's formal addition, 6 recombinations each
    CHECK(forest.hash_ops_total() == hashes_before + 12);
    CHECK(forest.verify_leaf(pud, leaf_a).status == defense_tree::verify_status::no_record);

    // Re-faulting A re-runs the full two-phase addition.
    r.access(page_a);
    CHECK(forest.leaf_occupied(pud, leaf_a));
    CHECK(r.os.fault_log().back().resolution == fault_resolution::swapped_in);
}

TEST_CASE("addresses outside the declared region segfault and halt the retry") {
    sim_rig r(4);
    r.os.set_valid_vpns({page_a >> page_shift});
    r.access(page_a);
    const virt_addr bad(page_d);
    REQUIRE_FALSE(r.mmu.translate(bad).ok);
    CHECK_THROWS_AS(r.mmu.resolve_and_retry(bad, r.os), sim_error);
    CHECK(r.os.fault_log().back().resolution == fault_resolution::segfault);
    CHECK(r.os.resident_count() == 1);
}

TEST_CASE("a spurious fault on a healthy page changes nothing") {
    sim_rig r(4);
    r.access(page_a);
    const auto residents = r.os.resident_count();
    r.os.handle_page_fault(virt_addr(page_a));
    CHECK(r.os.resident_count() == residents);
    CHECK(r.os.fault_count() == 2);
    CHECK(r.os.fault_log().back().resolution == fault_resolution::loaded_new);
}

TEST_CASE("arming clears present bits but keeps frames; non-resident targets are a bug") {
    sim_rig r(4);
    r.access(page_a);
    const std::uint64_t frame = r.pt.leaf_entry_of(r.cr3, virt_addr(page_a))->frame;

    attack_controller atk;
    r.os.attack_arm(atk, {page_a >> page_shift}, /*swap_mode=*/false);
    auto pte = r.pt.leaf_entry_of(r.cr3, virt_addr(page_a));
    REQUIRE(pte);
    CHECK_FALSE(pte->present);
    CHECK(pte->frame == frame);                      // the channel's tell-tale
    CHECK_FALSE(r.cache.contains(page_a >> page_shift));
    CHECK(atk.distinct_leaked() == 0);               // arming alone leaks nothing

    attack_controller atk2;
    CHECK_THROWS_AS(r.os.attack_arm(atk2, {page_d >> page_shift}, false), sim_error);
}

TEST_CASE("the malicious handler harvests fault addresses invisibly") {
    sim_rig r(4);
    r.access(page_a);
    r.access(page_b);
    attack_controller atk;
    r.os.attack_arm(atk, {page_a >> page_shift}, false);

    auto pa = r.access(page_a);                      // faults into the attacker
    CHECK(pa.frame == 0);                            // access still succeeds
    CHECK(atk.distinct_leaked() == 1);
    REQUIRE(atk.trace().size() == 1);
    CHECK(atk.trace()[0].second == page_a >> page_shift);
    CHECK(r.os.fault_log().back().resolution == fault_resolution::attack_restored);

    // Repeat observation: rearm, fault again.
    r.os.rearm_target(page_a >> page_shift);
    r.access(page_a);
    CHECK(atk.trace().size() == 2);

    // Untargeted faults are served benignly while armed.
    r.access(page_c);
    CHECK(atk.trace().size() == 2);
    CHECK(r.os.fault_log().back().resolution == fault_resolution::loaded_new);

    // Disarm mid-armed-state: the pending cleared bit resolves benignly.
    r.os.rearm_target(page_a >> page_shift);
    r.os.disarm();
    r.access(page_a);
    CHECK(atk.trace().size() == 2);
    CHECK(r.os.fault_log().back().resolution == fault_resolution::loaded_new);

    // rearm after disarm is a no-op
    r.os.rearm_target(page_a >> page_shift);
    CHECK(r.pt.leaf_entry_of(r.cr3, virt_addr(page_a))->present);
}

TEST_CASE("swap-mode arming pushes content to disk and the fault pulls it back") {
    sim_rig r(4);
    r.access(page_a);
    const std::uint64_t frame = r.pt.leaf_entry_of(r.cr3, virt_addr(page_a))->frame;
    r.os.frame_bytes(frame)[100] = 0x5A;

    attack_controller atk;
    r.os.attack_arm(atk, {page_a >> page_shift}, /*swap_mode=*/true);
    CHECK(r.os.backing().writes() == 1);
    CHECK(r.clock.bucket_total(cost_bucket::swap) == 100000);

    // Model the content being gone from memory while it sits on disk.
    r.os.frame_bytes(frame).fill(0);

    r.access(page_a);
    CHECK(atk.distinct_leaked() == 1);
    CHECK(r.os.backing().reads() == 1);
    CHECK(r.clock.bucket_total(cost_bucket::swap) == 200000);
    CHECK(r.os.frame_bytes(frame)[100] == 0x5A);     // restored from disk
}

TEST_CASE("leakage serializes as a csv trace") {
    attack_controller atk;
    atk.record_leak(1234, 0x55880);
    atk.record_leak(5678, 0x55881);
    std::ostringstream os;
    atk.write_leakage_csv(os);
    CHECK(os.str() == "tick,vpn_hex\n1234,0x55880\n5678,0x55881\n");
}

TEST_CASE("a frame pool must exist") {
    page_table pt;
    const std::uint64_t cr3 = pt.create_address_space();
    tlb cache(4);
    sim_clock clock;
    CHECK_THROWS_AS(os_kernel(pt, cr3, cache, nullptr, clock, 0), config_error);
}
