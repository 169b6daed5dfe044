#pragma once

// Experiment configuration. Every field is described once in for_each_field,
// which drives the command-line flags, the TOML-style config file reader
// (CLI11) and the writer below.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "psolab/agents/mlp.hpp"
#include "psolab/agents/pbt.hpp"
#include "psolab/envs/contentrec.hpp"

namespace psolab::harness {

struct ExperimentConfig {
    std::string experiment = "barging";
    std::string scheme = "all";
    std::uint64_t base_seed = 0;
    std::string out = "out";
    int threads = 0;  // 0: one per hardware thread

    // barging
    double epsilon = 0.1;
    std::string epsilon_convention = "auto";  // auto | non-greedy | uniform
    double reference_return = 1.43;           // target for convention selection
    int horizon_cap = 20;

    // content recommendation
    int seeds = 100;
    int steps = 2000;
    int users = 10;
    int articles = 10;
    int batch = 10;
    double init_scale = 0.03;
    double loyalty_rate = 0.03;
    double preference_rate = 0.003;
    int hidden = 100;
    double lr = 0.01;
    double rho = 0.1;
    int population = 20;
    int pbt_interval = 10;
    double pbt_fraction = 0.2;

    [[nodiscard]] contentrec::Config env_config() const
    {
        return {users, articles, batch, loyalty_rate, preference_rate, init_scale};
    }
    [[nodiscard]] agents::MlpConfig mlp_config() const { return {users, hidden, articles, lr, rho}; }
    [[nodiscard]] agents::PbtConfig pbt_config() const { return {pbt_interval, pbt_fraction}; }

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

enum class FieldGroup { common, barging, contentrec };

template <class C, class F>
void for_each_field(C& c, F&& f)
{
    using G = FieldGroup;
    f("experiment", c.experiment, G::common, "barging | contentrec | cid");
    f("scheme", c.scheme, G::common, "baseline scheme, or all");
    f("base-seed", c.base_seed, G::common, "base seed (env PSOLAB_SEED)");
    f("out", c.out, G::common, "output directory");
    f("threads", c.threads, G::common, "worker threads, 0 for all cores");
    f("epsilon", c.epsilon, G::barging, "exploration rate of the epsilon-greedy agent");
    f("epsilon-convention", c.epsilon_convention, G::barging, "auto | non-greedy | uniform");
    f("reference-return", c.reference_return, G::barging, "return that auto convention selection aims for");
    f("horizon-cap", c.horizon_cap, G::barging, "episode step cap");
    f("seeds", c.seeds, G::contentrec, "number of seeds");
    f("steps", c.steps, G::contentrec, "environment steps per seed");
    f("users", c.users, G::contentrec, "user types K");
    f("articles", c.articles, G::contentrec, "article types M");
    f("batch", c.batch, G::contentrec, "users per step");
    f("init-scale", c.init_scale, G::contentrec, "std of initial preference logits");
    f("loyalty-rate", c.loyalty_rate, G::contentrec, "loyalty increment per click");
    f("preference-rate", c.preference_rate, G::contentrec, "preference increment per shown article");
    f("hidden", c.hidden, G::contentrec, "hidden units");
    f("lr", c.lr, G::contentrec, "learning rate");
    f("rho", c.rho, G::contentrec, "momentum coefficient");
    f("population", c.population, G::contentrec, "population size");
    f("pbt-interval", c.pbt_interval, G::contentrec, "steps between exploit steps");
    f("pbt-fraction", c.pbt_fraction, G::contentrec, "fraction replaced per exploit step");
}

struct Preset {
    int seeds;
    int steps;
};

[[nodiscard]] inline Preset preset(std::string_view name)
{
    if (name == "desk") return {20, 500};
    if (name == "paper") return {100, 2000};
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (expected desk or paper)");
}

/// "all" or one name from `all`.
[[nodiscard]] inline std::vector<std::string> expand_schemes(const std::string& scheme,
                                                             const std::vector<std::string>& all)
{
    if (scheme == "all") return all;
    if (std::find(all.begin(), all.end(), scheme) == all.end())
        throw std::invalid_argument("unknown scheme '" + scheme + "'");
    return {scheme};
}

/// Adds one flag per field in `groups` to `app`.
inline void bind_options(CLI::App& app, ExperimentConfig& cfg, std::initializer_list<FieldGroup> groups)
{
    for_each_field(cfg, [&](const char* name, auto& ref, FieldGroup g, const char* help) {
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) return;
        auto* opt = app.add_option(std::string("--") + name, ref, help)->capture_default_str();
        if (std::string_view(name) == "base-seed") opt->envname("PSOLAB_SEED");
    });
}

namespace detail {

inline std::string format_value(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

template <class T>
std::string format_value(const T& v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace detail

/// key = value lines, one per field, in field order. Doubles are written
/// in shortest round-trip form.
[[nodiscard]] inline std::string to_config_text(const ExperimentConfig& cfg)
{
    std::string out;
    for_each_field(cfg, [&](const char* name, const auto& ref, FieldGroup, const char*) {
        out += name;
        out += " = ";
        out += detail::format_value(ref);
        out += '\n';
    });
    return out;
}

[[nodiscard]] inline ExperimentConfig from_config_text(const std::string& text)
{
    ExperimentConfig cfg;
    CLI::App app;
    bind_options(app, cfg, {FieldGroup::common, FieldGroup::barging, FieldGroup::contentrec});
    std::istringstream in(text);
    try {
        app.parse_from_stream(in);
    } catch (const CLI::ParseError& e) {
        throw std::invalid_argument(std::string("bad config: ") + e.what());
    }
    return cfg;
}

}  // namespace psolab::harness
