// psolab command line: barging outcomes, content recommendation runs and
// causal-graph reports. A --preset sets seeds and steps unless they are
// given as flags.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "psolab/psolab.hpp"

using namespace psolab;
using namespace psolab::harness;

namespace {

void print_barging(const std::vector<BargingReport>& reps)
{
    for (const auto& rep : reps) {
        std::printf("scheme %s (epsilon convention: %s)\n", rep.scheme.c_str(),
                    std::string(agents::convention_name(rep.convention.convention)).c_str());
        std::printf("  %-16s %-10s %10s %10s %10s\n", "agent", "policy", "E[U]", "E[U_pso]", "E[U_oracle]");
        for (const auto& r : rep.rows)
            std::printf("  %-16s %-10s %10.4f %10s %10.4f\n", r.agent.c_str(), r.policy_description.c_str(), r.e_u,
                        r.e_u_pso ? format_number(*r.e_u_pso).substr(0, 10).c_str() : "", r.e_u_oracle);
    }
}

void print_contentrec(const std::vector<SchemeResult>& results)
{
    std::printf("%-14s %12s %12s %12s %10s\n", "scheme", "final drift", "final KL", "accuracy", "seconds");
    for (const auto& res : results) {
        double drift = 0.0, kl = 0.0, acc = 0.0;
        for (const auto& s : res.seeds) {
            drift += s.steps.back().drift;
            kl += s.steps.back().kl;
            acc += s.mean_accuracy();
        }
        const double n = static_cast<double>(res.seeds.size());
        std::printf("%-14s %12.6f %12.6f %12.4f %10.2f\n", res.scheme.c_str(), drift / n, kl / n, acc / n,
                    res.seconds);
    }
}

std::string find_config_path(int argc, char** argv)
{
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return argv[i + 1];
        if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    return {};
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv)
{
    // The config file seeds every field; flags given on the command line
    // then override it.
    ExperimentConfig cfg;
    std::string config_path = find_config_path(argc, argv);
    if (!config_path.empty()) {
        try {
            cfg = from_config_text(read_text(config_path));
        } catch (const std::exception& e) {
            std::fprintf(stderr, "psolab: %s: %s\n", config_path.c_str(), e.what());
            return 2;
        }
    }

    CLI::App app{"Path-specific objectives for delicate-state MDPs"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", config_path, "TOML-style config file (key = value per line)");

    auto* barging = app.add_subcommand("barging", "exact outcomes table for the Barging environment");
    bind_options(*barging, cfg, {FieldGroup::common, FieldGroup::barging});

    auto* contentrec = app.add_subcommand("contentrec", "content recommendation population experiment");
    bind_options(*contentrec, cfg, {FieldGroup::common, FieldGroup::contentrec});
    std::string preset_name;
    contentrec->add_option("--preset", preset_name, "desk (20 seeds x 500 steps) or paper (100 x 2000)")
        ->check(CLI::IsMember({"desk", "paper"}));

    auto* cid = app.add_subcommand("cid", "incentive and identifiability report for a causal graph");
    std::string graph_path, decision;
    bool surgery = false;
    cid->add_option("--graph", graph_path, "graph JSON file")->required();
    cid->add_option("--decision", decision, "decision node label (default: all decisions)");
    cid->add_flag("--surgery", surgery, "cut delicate-state paths and report identifiability");
    std::string cid_out;
    cid->add_option("--out", cid_out, "also write the report to this file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*barging) {
            cfg.experiment = "barging";
            print_barging(run_barging(cfg));
            std::printf("wrote %s\n", cfg.out.c_str());
        } else if (*contentrec) {
            cfg.experiment = "contentrec";
            if (!preset_name.empty()) {
                const auto p = preset(preset_name);
                if (contentrec->get_option("--seeds")->count() == 0) cfg.seeds = p.seeds;
                if (contentrec->get_option("--steps")->count() == 0) cfg.steps = p.steps;
            }
            print_contentrec(run_contentrec(cfg));
            std::printf("wrote %s\n", cfg.out.c_str());
        } else if (*cid) {
            const auto g = load_cid(graph_path);
            const auto report =
                cid_report(g, decision.empty() ? std::nullopt : std::optional<std::string>(decision), surgery);
            std::cout << report;
            if (!cid_out.empty()) write_file(cid_out, report);
        }
    } catch (const GraphParseError& e) {
        std::fprintf(stderr, "psolab: %s: %s\n", graph_path.c_str(), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "psolab: %s\n", e.what());
        return 1;
    }
    return 0;
}
