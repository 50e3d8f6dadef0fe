#include <ptguard/addressing.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace ptguard;

TEST_CASE("split_vaddr: fixed examples") {
    // A zero address lands in slot 0 at every level.
    CHECK(split_vaddr(virt_addr(0)) == page_indices{0, 0, 0, 0, 0});

    // One distinct index per level plus an offset.
    const std::uint64_t va = (1ull << 39) | (2ull << 30) | (3ull << 21) | (4ull << 12) | 5ull;
    CHECK(split_vaddr(virt_addr(va)) == page_indices{1, 2, 3, 4, 5});

    // Top of the 48-bit space: every index saturates at 511.
    CHECK(split_vaddr(virt_addr(0xFFFF'FFFF'F000ull)) == page_indices{511, 511, 511, 511, 0});
}

TEST_CASE("compose_vaddr inverts split_vaddr on the fixed examples") {
    for (std::uint64_t raw : {0ull,
                              (1ull << 39) | (2ull << 30) | (3ull << 21) | (4ull << 12) | 5ull,
                              0xFFFF'FFFF'F000ull}) {
        CHECK(compose_vaddr(split_vaddr(virt_addr(raw))).raw() == raw);
    }
}

TEST_CASE("split/compose round-trip against an independent oracle") {
    std::mt19937_64 rng(20260823);
    for (int i = 0; i < 10000; ++i) {
        const std::uint64_t raw = rng() & ((1ull << 48) - 1);
        const virt_addr va(raw);
        const page_indices ix = split_vaddr(va);

        // Oracle: plain div/mod arithmetic, no shifting shared with the
        // implementation.
        const std::uint64_t page = raw / 4096;
        CHECK(ix.offset == raw % 4096);
        CHECK(ix.pt == page % 512);
        CHECK(ix.pmd == (page / 512) % 512);
        CHECK(ix.pud == (page / (512 * 512)) % 512);
        CHECK(ix.pgd == (page / (512ull * 512 * 512)) % 512);

        CHECK(compose_vaddr(ix) == va);
        CHECK(va.vpn() == page);
        CHECK(va.offset() == raw % 4096);
    }
}

TEST_CASE("virt_addr rejects addresses above 48 bits") {
    CHECK_THROWS_AS(virt_addr(1ull << 48), sim_error);
    CHECK_THROWS_AS(virt_addr(0xFFFF'0000'0000'0000ull), sim_error);
    CHECK_NOTHROW(virt_addr((1ull << 48) - 1));
}

TEST_CASE("compose_vaddr validates field ranges") {
    CHECK_THROWS_AS(compose_vaddr({512, 0, 0, 0, 0}), sim_error);
    CHECK_THROWS_AS(compose_vaddr({0, 512, 0, 0, 0}), sim_error);
    CHECK_THROWS_AS(compose_vaddr({0, 0, 512, 0, 0}), sim_error);
    CHECK_THROWS_AS(compose_vaddr({0, 0, 0, 512, 0}), sim_error);
    CHECK_THROWS_AS(compose_vaddr({0, 0, 0, 0, 4096}), sim_error);
    CHECK_NOTHROW(compose_vaddr({511, 511, 511, 511, 4095}));
}

TEST_CASE("hex rendering") {
    CHECK(virt_addr(0).hex() == "0x0");
    CHECK(virt_addr(0xabc).hex() == "0xabc");
    CHECK(virt_addr(0x5588'0000'0000ull).hex() == "0x558800000000");
}
