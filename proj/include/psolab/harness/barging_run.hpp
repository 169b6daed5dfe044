#pragma once

// Barging outcomes table: standard agent, deterministic path-specific agent
// and its epsilon-greedy version, all evaluated exactly.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "psolab/agents/planner.hpp"
#include "psolab/envs/barging.hpp"
#include "psolab/harness/config.hpp"
#include "psolab/harness/csv.hpp"
#include "psolab/pso.hpp"

namespace psolab::harness {

struct BargingRow {
    std::string agent;
    std::string policy_description;
    double e_u = 0.0;
    std::optional<double> e_u_pso;
    double e_u_oracle = 0.0;
};

struct BargingReport {
    std::string scheme;
    std::vector<BargingRow> rows;
    agents::ConventionChoice convention;
    std::string convention_source;  // "selected" or "configured"
};

inline const std::vector<std::string>& barging_scheme_names()
{
    static const std::vector<std::string> names{"fixed", "policy", "state", "ordinary"};
    return names;
}

/// fixed: do(Z = path); policy: the always-L baseline; state: Z keeps its
/// value; ordinary: the actual Z.
[[nodiscard]] inline BaselineScheme barging_scheme(const std::string& name)
{
    if (name == "fixed") return FixedState{};
    if (name == "policy") return PolicyBaseline{constant_policy(barging::L, 3)};
    if (name == "state") return StateBaseline{[](int z, int) { return z; }};
    if (name == "ordinary") return Ordinary{};
    throw std::invalid_argument("unknown barging scheme '" + name + "'");
}

/// Moves a deterministic policy makes from (start, path), e.g. "B,S".
[[nodiscard]] inline std::string describe_trajectory(const agents::TabularPolicy& policy, int horizon)
{
    const auto r = rollout(barging::Env{}, policy.with_epsilon(0.0, policy.convention).as_finite(), horizon,
                           NoiseStream{});
    std::string out;
    for (const auto& st : r.steps) {
        if (!out.empty()) out += ',';
        out += barging::move_name(st.a);
    }
    return out;
}

[[nodiscard]] inline BargingReport run_barging_scheme(const ExperimentConfig& cfg, const std::string& scheme_name)
{
    using namespace agents;
    const barging::Env env;
    const BaselineScheme scheme = barging_scheme(scheme_name);
    const int cap = cfg.horizon_cap;
    BargingReport rep;
    rep.scheme = scheme_name;

    const auto standard = solve(env, std::nullopt, cap).policy;
    const auto ev_std = evaluate_policy_exact(env, standard, std::nullopt, cap);
    rep.rows.push_back({"standard", describe_trajectory(standard, cap), ev_std.expected_return, std::nullopt,
                        ev_std.expected_oracle});

    const auto pso = solve(env, scheme, cap).policy;
    const auto ev_det = evaluate_policy_exact(env, pso, scheme, cap);
    const std::string det_desc = describe_trajectory(pso, cap);
    rep.rows.push_back({"pso-det", det_desc, ev_det.expected_return, ev_det.expected_pso, ev_det.expected_oracle});

    rep.convention = select_epsilon_convention(env, pso, cfg.epsilon, scheme, cfg.reference_return, cap);
    rep.convention_source = "selected";
    if (cfg.epsilon_convention == "non-greedy" || cfg.epsilon_convention == "uniform") {
        rep.convention.convention = cfg.epsilon_convention == "uniform" ? EpsilonConvention::uniform
                                                                         : EpsilonConvention::non_greedy;
        rep.convention_source = "configured";
    } else if (cfg.epsilon_convention != "auto") {
        throw std::invalid_argument("unknown epsilon convention '" + cfg.epsilon_convention + "'");
    }
    const auto& ev_eps = rep.convention.convention == EpsilonConvention::uniform ? rep.convention.uniform
                                                                                 : rep.convention.non_greedy;
    rep.rows.push_back({"pso-eps-greedy", cfg.epsilon == 0.0 ? det_desc : "adaptive", ev_eps.expected_return,
                        ev_eps.expected_pso, ev_eps.expected_oracle});
    return rep;
}

[[nodiscard]] inline std::string barging_csv(const BargingReport& rep)
{
    std::string out = schema_line() + "agent,policy_description,E_U,E_U_pso,E_U_oracle\n";
    for (const auto& r : rep.rows) {
        out += csv_field(r.agent) + ',' + csv_field(r.policy_description) + ',' + format_number(r.e_u) + ',' +
               (r.e_u_pso ? format_number(*r.e_u_pso) : std::string()) + ',' + format_number(r.e_u_oracle) + '\n';
    }
    return out;
}

/// Adopted convention and the exact values of both conventions.
[[nodiscard]] inline std::string barging_log(const ExperimentConfig& cfg, const BargingReport& rep)
{
    auto line = [](const char* name, const agents::Evaluation& ev) {
        return std::string(name) + ": E_U=" + format_number(ev.expected_return) +
               " E_U_pso=" + (ev.expected_pso ? format_number(*ev.expected_pso) : std::string("n/a")) +
               " E_U_oracle=" + format_number(ev.expected_oracle) + "\n";
    };
    std::string out = "scheme=" + rep.scheme + "\n";
    out += "epsilon=" + format_number(cfg.epsilon) + "\n";
    out += "horizon_cap=" + std::to_string(cfg.horizon_cap) + "\n";
    out += "epsilon_convention=" + std::string(agents::convention_name(rep.convention.convention)) + " (" +
           rep.convention_source + ", reference_return=" + format_number(cfg.reference_return) + ")\n";
    out += line("non-greedy", rep.convention.non_greedy);
    out += line("uniform", rep.convention.uniform);
    return out;
}

/// Writes barging_<scheme>.csv and barging_<scheme>.log under cfg.out.
inline std::vector<BargingReport> run_barging(const ExperimentConfig& cfg)
{
    std::vector<std::string> defaults{"fixed", "policy", "state"};
    const auto names = cfg.scheme == "all" ? defaults : expand_schemes(cfg.scheme, barging_scheme_names());
    std::vector<BargingReport> out;
    for (const auto& name : names) {
        auto rep = run_barging_scheme(cfg, name);
        const std::filesystem::path dir(cfg.out);
        write_file(dir / ("barging_" + name + ".csv"), barging_csv(rep));
        write_file(dir / ("barging_" + name + ".log"), barging_log(cfg, rep));
        out.push_back(std::move(rep));
    }
    return out;
}

}  // namespace psolab::harness
