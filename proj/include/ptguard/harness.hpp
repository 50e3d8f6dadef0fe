#pragma once

// Scenario runner: wires workload, MMU, OS, attacker and (optionally) the
// defense forest together, and produces a metrics report.
//
// Every run has two phases over the same access trace:
//   warm    — populate mappings and defense state, cost meter off;
//   measure — the observed phase, cost meter on. Attack modes arm the
//             targets between the phases.
// A defended run re-executes its exact configuration without the defense to
// obtain the leakage baseline that success_rate is computed against.

#include "addressing.hpp"
#include "cost_model.hpp"
#include "defense_forest.hpp"
#include "mmu.hpp"
#include "os.hpp"
#include "page_table.hpp"
#include "tlb.hpp"
#include "workloads.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace ptguard {

enum class scenario_mode {
    baseline,             // no attacker, no defense
    attack_no_defense,    // malicious handler harvesting fault addresses
    attack_with_defense,  // same attacker, forest guarding the PTEs
    attack_with_swap,     // undefended attacker that really swaps targets out
};

inline const char *mode_cli_name(scenario_mode m) {
    switch (m) {
    case scenario_mode::baseline: return "baseline";
    case scenario_mode::attack_no_defense: return "attack";
    case scenario_mode::attack_with_defense: return "defend";
    case scenario_mode::attack_with_swap: return "attack-swap";
    }
    throw sim_error("mode_cli_name: unknown mode");
}

inline std::optional<scenario_mode> parse_mode(const std::string &s) {
    if (s == "baseline") return scenario_mode::baseline;
    if (s == "attack") return scenario_mode::attack_no_defense;
    if (s == "defend") return scenario_mode::attack_with_defense;
    if (s == "attack-swap") return scenario_mode::attack_with_swap;
    return std::nullopt;
}

struct scenario_config {
    scenario_mode mode = scenario_mode::baseline;
    workload_spec workload{};
    std::optional<access_trace> trace;   // replay: use this instead of generating
    unsigned arity = 8;
    std::size_t tlb_capacity = 64;
    std::size_t frame_capacity = 4096;
    double target_fraction = 1.0;   // share of resident pages the attacker watches
    double warm_fraction = 1.0;     // share of pages warmed through the MMU path
    bool rearm = true;              // re-clear a target after each observed access
    cost_model costs{};
};

struct metrics_report {
    std::string mode;
    std::string workload;
    std::uint64_t seed = 0;
    unsigned arity = 0;
    std::uint64_t tlb_capacity = 0;
    std::uint64_t frame_capacity = 0;
    double target_fraction = 1.0;
    double warm_fraction = 1.0;
    bool rearm = true;

    std::uint64_t accesses = 0;
    std::uint64_t footprint_pages = 0;
    std::uint64_t sim_ticks = 0;
    std::uint64_t translation_ticks = 0;
    std::uint64_t fault_ticks = 0;
    std::uint64_t defense_ticks = 0;
    std::uint64_t swap_ticks = 0;
    std::uint64_t os_faults = 0;
    std::uint64_t leakage = 0;              // distinct target pages the attacker saw
    std::uint64_t undefended_leakage = 0;   // same attack without the defense
    std::uint64_t defended_failures = 0;    // leaks despite the defense
    std::optional<double> success_rate;     // defended mode only
    std::uint64_t hash_ops = 0;             // tree recombinations, whole run
    std::uint64_t forest_memory_bytes = 0;
    double overhead_ratio = 0.0;
    std::array<std::uint64_t, event_kind_count> event_counts{};

    [[nodiscard]] nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["schema_version"] = 1;
        j["mode"] = mode;
        j["workload"] = workload;
        j["seed"] = seed;
        j["arity"] = arity;
        j["tlb_capacity"] = tlb_capacity;
        j["frame_capacity"] = frame_capacity;
        j["target_fraction"] = target_fraction;
        j["warm_fraction"] = warm_fraction;
        j["rearm"] = rearm;
        j["accesses"] = accesses;
        j["footprint_pages"] = footprint_pages;
        j["sim_ticks"] = sim_ticks;
        j["translation_ticks"] = translation_ticks;
        j["fault_ticks"] = fault_ticks;
        j["defense_ticks"] = defense_ticks;
        j["swap_ticks"] = swap_ticks;
        j["os_faults"] = os_faults;
        j["leakage"] = leakage;
        j["undefended_leakage"] = undefended_leakage;
        j["defended_failures"] = defended_failures;
        if (success_rate) j["success_rate"] = *success_rate;
        else j["success_rate"] = nullptr;
        j["hash_ops"] = hash_ops;
        j["forest_memory_bytes"] = forest_memory_bytes;
        j["overhead_ratio"] = overhead_ratio;
        nlohmann::ordered_json ev;
        for (std::size_t k = 0; k < event_kind_count; ++k)
            ev[event_kind_name(static_cast<event_kind>(k))] = event_counts[k];
        j["events"] = ev;
        return j;
    }

    static std::string csv_header() {
        return "schema_version,mode,workload,seed,arity,tlb_capacity,frame_capacity,"
               "target_fraction,warm_fraction,rearm,accesses,footprint_pages,sim_ticks,"
               "translation_ticks,fault_ticks,defense_ticks,swap_ticks,os_faults,leakage,"
               "undefended_leakage,defended_failures,success_rate,hash_ops,"
               "forest_memory_bytes,overhead_ratio";
    }

    [[nodiscard]] std::string csv_row() const {
        auto fixed6 = [](double v) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f", v);
            return std::string(buf);
        };
        std::string row = "1," + mode + "," + workload + "," + std::to_string(seed) + "," +
                          std::to_string(arity) + "," + std::to_string(tlb_capacity) + "," +
                          std::to_string(frame_capacity) + "," + fixed6(target_fraction) + "," +
                          fixed6(warm_fraction) + "," + (rearm ? "true" : "false") + "," +
                          std::to_string(accesses) + "," + std::to_string(footprint_pages) + "," +
                          std::to_string(sim_ticks) + "," + std::to_string(translation_ticks) +
                          "," + std::to_string(fault_ticks) + "," + std::to_string(defense_ticks) +
                          "," + std::to_string(swap_ticks) + "," + std::to_string(os_faults) +
                          "," + std::to_string(leakage) + "," + std::to_string(undefended_leakage) +
                          "," + std::to_string(defended_failures) + "," +
                          (success_rate ? fixed6(*success_rate) : std::string()) + "," +
                          std::to_string(hash_ops) + "," + std::to_string(forest_memory_bytes) +
                          "," + fixed6(overhead_ratio);
        return row;
    }
};

struct scenario_result {
    metrics_report report;
    std::vector<std::uint64_t> targets;                                // sorted vpns
    std::vector<std::pair<std::uint64_t, std::uint64_t>> frame_trace;  // (va, frame) per measured access
    std::vector<translation_event> events;                             // measure phase
    std::vector<std::pair<std::uint64_t, std::uint64_t>> leakage_trace;  // (tick, vpn)
    std::vector<fault_record> fault_log;                               // whole run
};

namespace detail {

/// Deterministic sample of k items (partial Fisher-Yates over a copy,
/// mt19937_64-driven). Result is sorted.
inline std::vector<std::uint64_t> sample_vpns(std::vector<std::uint64_t> items, std::size_t k,
                                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    if (k > items.size()) k = items.size();
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (items.size() - i));
        std::swap(items[i], items[j]);
    }
    items.resize(k);
    std::sort(items.begin(), items.end());
    return items;
}

// floor(n * fraction) with the fraction quantized to millionths, so common
// decimal fractions act exactly instead of through their nearest double
// (floor(0.1 * 49) would see 4.9000000000000004 and ideas like "10% of the
// pages" would quietly drift by one).
inline std::size_t fraction_count(std::size_t n, double fraction) {
    const auto micro = static_cast<std::uint64_t>(std::llround(fraction * 1e6));
    return static_cast<std::size_t>(static_cast<std::uint64_t>(n) * micro / 1000000);
}

// floor(n * (1 - fraction)) under the same quantization. Used for the
// excluded-from-warm-up count: flooring the complement (rather than taking
// n minus a floored fraction_count) keeps the warmed share at or above the
// requested fraction — at n=49, fraction=0.9 this skips 4 pages, not 5.
inline std::size_t fraction_complement_count(std::size_t n, double fraction) {
    const auto micro = static_cast<std::uint64_t>(std::llround(fraction * 1e6));
    return static_cast<std::size_t>(static_cast<std::uint64_t>(n) * (1000000 - micro) / 1000000);
}

} // namespace detail

inline scenario_result run_scenario_full(const scenario_config &config);

/// Convenience wrapper when only the report matters.
inline metrics_report run_scenario(const scenario_config &config) {
    return run_scenario_full(config).report;
}

inline scenario_result run_scenario_full(const scenario_config &config) {
    if (config.arity != 2 && config.arity != 4 && config.arity != 6 && config.arity != 8)
        throw config_error("arity must be one of 2,4,6,8");
    if (config.tlb_capacity == 0) throw config_error("tlb capacity must be at least 1");
    if (config.frame_capacity == 0) throw config_error("frame capacity must be at least 1");
    if (config.target_fraction < 0.0 || config.target_fraction > 1.0)
        throw config_error("target fraction must be within [0,1]");
    if (config.warm_fraction < 0.0 || config.warm_fraction > 1.0)
        throw config_error("warm fraction must be within [0,1]");

    const access_trace trace = config.trace ? *config.trace : generate_trace(config.workload);

    // Footprint in first-touch order; doubles as the demand-paging whitelist.
    std::vector<std::uint64_t> footprint_order;
    std::set<std::uint64_t> footprint;
    for (const auto &a : trace.accesses)
        if (footprint.insert(a.va.vpn()).second) footprint_order.push_back(a.va.vpn());

    const bool defended = config.mode == scenario_mode::attack_with_defense;
    const bool attacking = config.mode != scenario_mode::baseline;
    const bool swap_mode = config.mode == scenario_mode::attack_with_swap;

    page_table pt;
    const std::uint64_t cr3 = pt.create_address_space();
    tlb t(config.tlb_capacity);
    std::unique_ptr<defense_forest> forest;
    if (defended) forest = std::make_unique<defense_forest>(config.arity);
    sim_clock clock(config.costs);
    os_kernel os(pt, cr3, t, forest.get(), clock, config.frame_capacity);
    os.set_valid_vpns(footprint);
    mmu_context mmu(pt, cr3, t, forest.get(), clock);
    attack_controller atk;

    scenario_result result;
    bool armed = false;

    auto play = [&](bool capture) {
        for (const auto &a : trace.accesses) {
            access_outcome out = mmu.translate(a.va);
            phys_addr pa = out.ok ? out.pa : mmu.resolve_and_retry(a.va, os);
            os.touch(a.va.vpn());
            if (capture) result.frame_trace.emplace_back(a.va.raw(), pa.frame);
            if (armed && config.rearm) os.rearm_target(a.va.vpn());
        }
    };

    // --- warm phase (unmetered) ---
    clock.set_metering(false);
    if (defended && config.warm_fraction < 1.0) {
        // Pages excluded from warm-up get mapped behind the MMU's back, so
        // they are resident but never pass through the addition protocol.
        const std::size_t skip =
            detail::fraction_complement_count(footprint_order.size(), config.warm_fraction);
        auto skipped = detail::sample_vpns(footprint_order, skip,
                                           trace.seed ^ 0x5ca1ab1e5eedull);
        for (std::uint64_t vpn : skipped) os.handle_page_fault(virt_addr(vpn << page_shift));
    }
    play(/*capture=*/false);

    // --- arm ---
    if (attacking) {
        std::vector<std::uint64_t> candidates;
        for (std::uint64_t vpn : footprint_order)
            if (os.is_resident(vpn)) candidates.push_back(vpn);
        std::vector<std::uint64_t> targets;
        if (config.target_fraction >= 1.0) {
            targets = candidates;
            std::sort(targets.begin(), targets.end());
        } else {
            const std::size_t k =
                detail::fraction_count(candidates.size(), config.target_fraction);
            targets = detail::sample_vpns(std::move(candidates), k,
                                          trace.seed ^ 0x7a46e75eedull);
        }
        os.attack_arm(atk, targets, swap_mode);
        result.targets = targets;
        armed = true;
    }

    // --- measure phase (metered) ---
    mmu.clear_events();
    clock.set_metering(true);
    play(/*capture=*/true);

    result.events = mmu.events();
    result.leakage_trace = atk.trace();
    result.fault_log = os.fault_log();

    metrics_report &r = result.report;
    r.mode = mode_cli_name(config.mode);
    r.workload = trace.label;
    r.seed = trace.seed;
    r.arity = config.arity;
    r.tlb_capacity = config.tlb_capacity;
    r.frame_capacity = config.frame_capacity;
    r.target_fraction = config.target_fraction;
    r.warm_fraction = config.warm_fraction;
    r.rearm = config.rearm;
    r.accesses = trace.accesses.size();
    r.footprint_pages = footprint.size();
    r.sim_ticks = clock.now();
    r.translation_ticks = clock.bucket_total(cost_bucket::translation);
    r.fault_ticks = clock.bucket_total(cost_bucket::fault);
    r.defense_ticks = clock.bucket_total(cost_bucket::defense);
    r.swap_ticks = clock.bucket_total(cost_bucket::swap);
    r.os_faults = os.fault_count();
    r.leakage = atk.distinct_leaked();
    for (const auto &e : result.events)
        ++r.event_counts[static_cast<std::size_t>(e.kind)];
    if (forest) {
        r.hash_ops = forest->hash_ops_total();
        r.forest_memory_bytes = forest->memory_bytes();
        r.overhead_ratio = forest->overhead_ratio();
    }

    if (defended) {
        // Leakage baseline: the identical attack without the forest.
        scenario_config undefended = config;
        undefended.mode = scenario_mode::attack_no_defense;
        const metrics_report u = run_scenario(undefended);
        r.undefended_leakage = u.leakage;
        r.defended_failures = r.leakage;
        r.success_rate = u.leakage == 0
                             ? 1.0
                             : 1.0 - static_cast<double>(r.leakage) /
                                         static_cast<double>(u.leakage);
    } else if (attacking) {
        r.undefended_leakage = r.leakage;
    }

    return result;
}

/// Runs the configuration once per tree arity in {2,4,6,8}.
inline std::vector<metrics_report> arity_sweep(scenario_config config) {
    std::vector<metrics_report> out;
    for (unsigned m : {2u, 4u, 6u, 8u}) {
        config.arity = m;
        out.push_back(run_scenario(config));
    }
    return out;
}

/// Cost model from JSON: {"tlb_hit":1,...}. Unknown keys are rejected so a
/// typo cannot silently fall back to a default price.
inline cost_model load_cost_model(std::istream &is) {
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception &e) {
        throw config_error(std::string("cost model: ") + e.what());
    }
    if (!j.is_object()) throw config_error("cost model: expected a JSON object");
    cost_model m;
    for (const auto &[key, value] : j.items()) {
        if (!value.is_number_unsigned())
            throw config_error("cost model: '" + key + "' must be a non-negative integer");
        const std::uint64_t v = value.get<std::uint64_t>();
        if (key == "tlb_hit") m.tlb_hit = v;
        else if (key == "pt_level_access") m.pt_level_access = v;
        else if (key == "mem_access") m.mem_access = v;
        else if (key == "hash_node") m.hash_node = v;
        else if (key == "os_fault") m.os_fault = v;
        else if (key == "swap_io") m.swap_io = v;
        else throw config_error("cost model: unknown key '" + key + "'");
    }
    return m;
}

inline void write_reports_csv(std::ostream &os, const std::vector<metrics_report> &reports) {
    os << metrics_report::csv_header() << "\n";
    for (const auto &r : reports) os << r.csv_row() << "\n";
}

} // namespace ptguard
