// ptguard — deterministic paged-memory simulator with page-fault-channel
// attack scenarios and a hash-tree defense.
//
//   ptguard simulate    run one scenario, emit a metrics report
//   ptguard sweep-arity run the scenario at every tree arity (2,4,6,8)
//   ptguard replay      drive a scenario from a recorded access trace
//
// Exit codes: 0 success, 2 bad configuration/usage, 1 runtime failure.

#include <CLI11.hpp>

#include <ptguard/ptguard.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

struct cli_options {
    std::string mode = "baseline";
    std::string workload = "ntimes:100";
    int arity = 8;
    std::uint64_t seed = 1;
    std::size_t tlb = 64;
    std::size_t frames = 4096;
    double target_frac = 1.0;
    double warm_frac = 1.0;
    bool rearm = true;
    std::string cost_model_file;
    std::string out_file;   // empty = stdout
    std::string format = "json";
    std::string events_out;
    std::string leakage_out;
    std::string trace_out;
    std::string trace_file;   // replay input
};

void add_common_options(CLI::App *cmd, cli_options &o, bool with_arity, bool with_workload) {
    cmd->add_option("--mode", o.mode, "Scenario: baseline, attack, defend, attack-swap")
        ->check(CLI::IsMember({"baseline", "attack", "defend", "attack-swap"}));
    if (with_workload)
        cmd->add_option("--workload", o.workload,
                        "Workload <kind>:<param>; kinds: ntimes, btree, hash, rbtree, sdg, "
                        "sps, ssca2")
            ->capture_default_str();
    if (with_arity)
        cmd->add_option("--arity", o.arity, "Defense tree fan-out")
            ->check(CLI::IsMember({2, 4, 6, 8}))
            ->capture_default_str();
    cmd->add_option("--seed", o.seed, "Deterministic seed")->capture_default_str();
    cmd->add_option("--tlb", o.tlb, "TLB entry count")->capture_default_str();
    cmd->add_option("--frames", o.frames, "Physical frame count")->capture_default_str();
    cmd->add_option("--target-frac", o.target_frac,
                    "Fraction of resident pages the attacker watches")
        ->capture_default_str();
    cmd->add_option("--warm-frac", o.warm_frac,
                    "Fraction of pages warmed through the MMU (defend mode)")
        ->capture_default_str();
    cmd->add_flag("--rearm,!--no-rearm", o.rearm,
                  "Re-clear targets after each observed access");
    cmd->add_option("--cost-model", o.cost_model_file, "JSON file overriding tick costs");
    cmd->add_option("--out", o.out_file, "Report file (default: stdout)");
    cmd->add_option("--format", o.format, "Report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
}

void add_artifact_options(CLI::App *cmd, cli_options &o) {
    cmd->add_option("--events-out", o.events_out, "Write translation events as JSONL");
    cmd->add_option("--leakage-out", o.leakage_out, "Write the attacker's harvest as CSV");
}

ptguard::scenario_config build_config(const cli_options &o) {
    ptguard::scenario_config cfg;
    auto mode = ptguard::parse_mode(o.mode);
    if (!mode) throw ptguard::config_error("unknown mode '" + o.mode + "'");
    cfg.mode = *mode;
    cfg.workload = ptguard::parse_workload(o.workload);
    cfg.workload.seed = o.seed;
    cfg.arity = static_cast<unsigned>(o.arity);
    cfg.tlb_capacity = o.tlb;
    cfg.frame_capacity = o.frames;
    cfg.target_fraction = o.target_frac;
    cfg.warm_fraction = o.warm_frac;
    cfg.rearm = o.rearm;
    if (!o.cost_model_file.empty()) {
        std::ifstream in(o.cost_model_file);
        if (!in) throw ptguard::config_error("cannot open cost model file: " + o.cost_model_file);
        cfg.costs = ptguard::load_cost_model(in);
    }
    return cfg;
}

// Writes to the file, or stdout when the path is empty.
void write_text(const std::string &path, const std::string &content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ptguard::config_error("cannot open output file: " + path);
    out << content;
}

std::string render_reports(const std::vector<ptguard::metrics_report> &reports,
                           const std::string &format, bool single) {
    if (format == "csv") {
        std::ostringstream ss;
        ptguard::write_reports_csv(ss, reports);
        return ss.str();
    }
    if (single) return reports.front().to_json().dump(2) + "\n";
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto &r : reports) arr.push_back(r.to_json());
    return arr.dump(2) + "\n";
}

void write_artifacts(const cli_options &o, const ptguard::scenario_result &result) {
    if (!o.events_out.empty()) {
        std::ostringstream ss;
        ptguard::write_events_jsonl(ss, result.events);
        write_text(o.events_out, ss.str());
    }
    if (!o.leakage_out.empty()) {
        std::ostringstream ss;
        ss << "tick,vpn_hex\n";
        for (const auto &[tick, vpn] : result.leakage_trace)
            ss << tick << ",0x" << ptguard::virt_addr::to_hex(vpn) << "\n";
        write_text(o.leakage_out, ss.str());
    }
}

int run_simulate(const cli_options &o) {
    ptguard::scenario_config cfg = build_config(o);
    if (!o.trace_out.empty()) {
        std::ostringstream ss;
        ptguard::write_trace_file(ss, ptguard::generate_trace(cfg.workload));
        write_text(o.trace_out, ss.str());
    }
    ptguard::scenario_result result = ptguard::run_scenario_full(cfg);
    write_text(o.out_file, render_reports({result.report}, o.format, /*single=*/true));
    write_artifacts(o, result);
    return 0;
}

int run_sweep(const cli_options &o) {
    ptguard::scenario_config cfg = build_config(o);
    auto reports = ptguard::arity_sweep(cfg);
    write_text(o.out_file, render_reports(reports, o.format, /*single=*/false));
    return 0;
}

int run_replay(const cli_options &o) {
    ptguard::scenario_config cfg = build_config(o);
    std::ifstream in(o.trace_file);
    if (!in) throw ptguard::config_error("cannot open trace file: " + o.trace_file);
    ptguard::access_trace trace = ptguard::read_trace_file(in);
    trace.seed = o.seed;
    cfg.trace = std::move(trace);
    ptguard::scenario_result result = ptguard::run_scenario_full(cfg);
    write_text(o.out_file, render_reports({result.report}, o.format, /*single=*/true));
    write_artifacts(o, result);
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"deterministic paged-memory simulator: fault-channel attacks vs. a "
                 "hash-tree PTE defense"};
    app.require_subcommand(1);

    cli_options opt;

    CLI::App *simulate = app.add_subcommand("simulate", "Run one scenario");
    add_common_options(simulate, opt, /*with_arity=*/true, /*with_workload=*/true);
    add_artifact_options(simulate, opt);
    simulate->add_option("--trace-out", opt.trace_out,
                         "Also record the generated access trace to this file");

    CLI::App *sweep = app.add_subcommand("sweep-arity",
                                         "Run the scenario at arity 2, 4, 6 and 8");
    add_common_options(sweep, opt, /*with_arity=*/false, /*with_workload=*/true);

    CLI::App *replay = app.add_subcommand("replay", "Drive a scenario from a trace file");
    add_common_options(replay, opt, /*with_arity=*/true, /*with_workload=*/false);
    add_artifact_options(replay, opt);
    replay->add_option("--trace-file", opt.trace_file, "Access trace to replay")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;   // help exits cleanly; usage errors are config errors
    }

    try {
        if (app.got_subcommand(simulate)) return run_simulate(opt);
        if (app.got_subcommand(sweep)) return run_sweep(opt);
        if (app.got_subcommand(replay)) return run_replay(opt);
        return 2;
    } catch (const ptguard::config_error &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
