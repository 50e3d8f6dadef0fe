#pragma once

// Address arithmetic for a 4-level x86-64-style paging layout:
// 48-bit virtual addresses, 4 KiB pages, 512-entry tables, four 9-bit
// index fields (pgd/pud/pmd/pt) plus a 12-bit page offset.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ptguard {

inline constexpr unsigned page_shift = 12;
inline constexpr std::uint64_t page_size = 1ull << page_shift;   // 4096
inline constexpr unsigned index_bits = 9;
inline constexpr unsigned table_entries = 1u << index_bits;      // 512
inline constexpr unsigned va_bits = 48;
inline constexpr unsigned paging_levels = 4;

// Simulator-integrity error: a caller broke a contract (bad address bits,
// double map, malformed table reference, ...). These are bugs in the driving
// code, not legitimate runtime conditions, hence logic_error.
struct sim_error : std::logic_error {
    using std::logic_error::logic_error;
};

// Defense-protocol misuse (e.g. Formal Addition without a pending
// Pre-Addition). Separate type so tests can tell it apart from plain
// simulator bugs.
struct protocol_error : sim_error {
    using sim_error::sim_error;
};

// Invalid run configuration (zero frames, malformed workload string, ...).
// Runtime rather than logic: it reflects bad input, not a code bug, and the
// CLI maps it to a distinct exit code.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 48-bit canonical virtual address. Constructing one with any bit >= 48 set
/// is a caller error.
class virt_addr {
public:
    virt_addr() = default;
    explicit virt_addr(std::uint64_t raw) : raw_(raw) {
        if (raw >> va_bits)
            throw sim_error("virt_addr: bits above " + std::to_string(va_bits) +
                            " set in 0x" + to_hex(raw));
    }

    [[nodiscard]] std::uint64_t raw() const { return raw_; }
    [[nodiscard]] std::uint64_t vpn() const { return raw_ >> page_shift; }
    [[nodiscard]] std::uint64_t offset() const { return raw_ & (page_size - 1); }

    friend bool operator==(virt_addr a, virt_addr b) { return a.raw_ == b.raw_; }
    friend bool operator!=(virt_addr a, virt_addr b) { return a.raw_ != b.raw_; }
    friend bool operator<(virt_addr a, virt_addr b) { return a.raw_ < b.raw_; }

    static std::string to_hex(std::uint64_t v) {
        static const char *digits = "0123456789abcdef";
        if (v == 0) return "0";
        std::string s;
        while (v) { s.insert(s.begin(), digits[v & 0xf]); v >>= 4; }
        return s;
    }
    [[nodiscard]] std::string hex() const { return "0x" + to_hex(raw_); }

private:
    std::uint64_t raw_ = 0;
};

/// The four table indices plus page offset that a virtual address splits into.
struct page_indices {
    unsigned pgd = 0;   // level-4 table index, [0, 512)
    unsigned pud = 0;   // level-3
    unsigned pmd = 0;   // level-2
    unsigned pt = 0;    // level-1 (leaf PTE index)
    unsigned offset = 0;  // [0, 4096)

    friend bool operator==(const page_indices &, const page_indices &) = default;
};

/// Physical address as (frame number, page offset).
struct phys_addr {
    std::uint64_t frame = 0;
    unsigned offset = 0;

    friend bool operator==(const phys_addr &, const phys_addr &) = default;
};

[[nodiscard]] inline page_indices split_vaddr(virt_addr va) {
    const std::uint64_t r = va.raw();
    return page_indices{
        static_cast<unsigned>((r >> (page_shift + 3 * index_bits)) & (table_entries - 1)),
        static_cast<unsigned>((r >> (page_shift + 2 * index_bits)) & (table_entries - 1)),
        static_cast<unsigned>((r >> (page_shift + 1 * index_bits)) & (table_entries - 1)),
        static_cast<unsigned>((r >> page_shift) & (table_entries - 1)),
        static_cast<unsigned>(r & (page_size - 1)),
    };
}

[[nodiscard]] inline virt_addr compose_vaddr(const page_indices &ix) {
    if (ix.pgd >= table_entries || ix.pud >= table_entries ||
        ix.pmd >= table_entries || ix.pt >= table_entries)
        throw sim_error("compose_vaddr: table index out of range");
    if (ix.offset >= page_size)
        throw sim_error("compose_vaddr: page offset out of range");
    std::uint64_t r = 0;
    r |= static_cast<std::uint64_t>(ix.pgd) << (page_shift + 3 * index_bits);
    r |= static_cast<std::uint64_t>(ix.pud) << (page_shift + 2 * index_bits);
    r |= static_cast<std::uint64_t>(ix.pmd) << (page_shift + 1 * index_bits);
    r |= static_cast<std::uint64_t>(ix.pt) << page_shift;
    r |= ix.offset;
    return virt_addr(r);
}

} // namespace ptguard
