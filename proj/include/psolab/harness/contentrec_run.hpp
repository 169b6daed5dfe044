#pragma once

// Content recommendation experiment: per seed, a population of MLP
// recommenders, each with its own environment, trained by SGD on actual
// clicks and selected by PBT on path-specific clicks.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "psolab/agents/mlp.hpp"
#include "psolab/agents/pbt.hpp"
#include "psolab/envs/contentrec.hpp"
#include "psolab/harness/config.hpp"
#include "psolab/harness/csv.hpp"
#include "psolab/pso.hpp"

namespace psolab::harness {

inline const std::vector<std::string>& contentrec_scheme_names()
{
    static const std::vector<std::string> names{"ordinary", "fixed", "policy", "state", "random-policy"};
    return names;
}

/// Scheme that drives W-bar. random-policy has no PSO component.
[[nodiscard]] inline BaselineScheme contentrec_scheme(const std::string& name)
{
    if (name == "fixed") return FixedState{};
    if (name == "policy") return PolicyBaseline{};
    if (name == "state") return StateBaseline{};
    if (name == "ordinary" || name == "random-policy") return Ordinary{};
    throw std::invalid_argument("unknown content recommendation scheme '" + name + "'");
}

struct StepMetrics {
    double drift = 0.0;
    double kl = 0.0;
    double accuracy = 0.0;  // unset at step 0
};

/// Population means per step, index 0 being the initial state.
struct SeedTrace {
    std::vector<StepMetrics> steps;

    [[nodiscard]] double mean_accuracy() const
    {
        if (steps.size() < 2) return 0.0;
        double s = 0.0;
        for (std::size_t t = 1; t < steps.size(); ++t) s += steps[t].accuracy;
        return s / static_cast<double>(steps.size() - 1);
    }
};

/// Noise for seed `seed`: independent of the scheme, so schemes are paired.
[[nodiscard]] inline NoiseStream seed_noise(const ExperimentConfig& cfg, int seed)
{
    return NoiseStream(cfg.base_seed).fork(static_cast<std::uint64_t>(seed));
}

[[nodiscard]] inline SeedTrace run_contentrec_seed(const ExperimentConfig& cfg, const std::string& scheme_name,
                                                   int seed)
{
    const contentrec::Env env(cfg.env_config());
    const BaselineScheme scheme = contentrec_scheme(scheme_name);
    const bool learning = scheme_name != "random-policy";
    const NoiseStream root = seed_noise(cfg, seed);
    const auto n = static_cast<std::size_t>(cfg.population);
    if (learning && n < 5) throw std::invalid_argument("population must have at least 5 members");

    std::vector<contentrec::TwinEnv> envs;
    std::vector<agents::Mlp> nets;
    std::vector<NoiseStream> member_noise;
    for (std::size_t m = 0; m < n; ++m) {
        member_noise.push_back(root.fork(m));
        envs.emplace_back(env, scheme, member_noise.back());
        nets.push_back(agents::Mlp::random(cfg.mlp_config(), root.fork(1000 + m)));
    }
    std::vector<double> fitness(n, 0.0);
    const NoiseStream pbt_noise = root.fork(5000);

    SeedTrace trace;
    trace.steps.reserve(static_cast<std::size_t>(cfg.steps) + 1);
    auto record = [&](double accuracy) {
        StepMetrics sm{0.0, 0.0, accuracy};
        for (const auto& e : envs) {
            const auto m = contentrec::metrics(e.initial(), e.state());
            sm.drift += m.cosine_drift;
            sm.kl += m.kl_loyalty;
        }
        sm.drift /= static_cast<double>(n);
        sm.kl /= static_cast<double>(n);
        trace.steps.push_back(sm);
    };
    record(0.0);

    std::vector<int> actions(static_cast<std::size_t>(cfg.batch));
    for (int t = 0; t < cfg.steps; ++t) {
        const auto tt = static_cast<std::uint64_t>(t);
        long clicks = 0;
        for (std::size_t m = 0; m < n; ++m) {
            auto& twin = envs[m];
            const auto& X = twin.state().X;
            for (std::size_t i = 0; i < actions.size(); ++i)
                actions[i] = learning ? nets[m].act(X[i], member_noise[m], tt, i)
                                      : static_cast<int>(member_noise[m].uniform("random-action", tt, i) * cfg.articles);
            const std::vector<int> users = X;
            const auto out = twin.step(actions);
            for (std::size_t i = 0; i < actions.size(); ++i) {
                clicks += out.clicks[i];
                fitness[m] += out.pso_clicks[i];
            }
            if (learning) nets[m].update_batch(users, actions, out.clicks);
        }
        if (learning && (t + 1) % cfg.pbt_interval == 0) (void)agents::pbt_step(nets, fitness, cfg.pbt_config(), pbt_noise, tt);
        record(static_cast<double>(clicks) / static_cast<double>(n * actions.size()));
    }
    return trace;
}

/// Runs `count` independent jobs on up to `threads` workers.
template <class F>
void parallel_for(int count, int threads, F&& job)
{
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, count);
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                job(i);
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
}

struct SchemeResult {
    std::string scheme;
    std::vector<SeedTrace> seeds;  // in seed order
    double seconds = 0.0;
};

[[nodiscard]] inline SchemeResult run_contentrec_scheme(const ExperimentConfig& cfg, const std::string& scheme)
{
    if (cfg.seeds < 1 || cfg.steps < 0) throw std::invalid_argument("need at least one seed and non-negative steps");
    SchemeResult res{scheme, std::vector<SeedTrace>(static_cast<std::size_t>(cfg.seeds)), 0.0};
    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(cfg.seeds, cfg.threads,
                 [&](int s) { res.seeds[static_cast<std::size_t>(s)] = run_contentrec_seed(cfg, scheme, s); });
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

/// Long format: seed, step, scheme, metric, value. Step 0 has no accuracy.
[[nodiscard]] inline std::string contentrec_csv(const SchemeResult& res)
{
    std::string out = schema_line() + "seed,step,scheme,metric,value\n";
    for (std::size_t s = 0; s < res.seeds.size(); ++s) {
        const auto& steps = res.seeds[s].steps;
        for (std::size_t t = 0; t < steps.size(); ++t) {
            const std::string prefix = std::to_string(s) + ',' + std::to_string(t) + ',' + res.scheme + ',';
            out += prefix + "cosine_drift," + format_number(steps[t].drift) + '\n';
            if (t > 0) out += prefix + "accuracy," + format_number(steps[t].accuracy) + '\n';
            out += prefix + "kl_loyalty," + format_number(steps[t].kl) + '\n';
        }
    }
    return out;
}

/// Writes contentrec_<scheme>.csv per scheme and contentrec.log with timings.
inline std::vector<SchemeResult> run_contentrec(const ExperimentConfig& cfg)
{
    std::vector<SchemeResult> out;
    std::string log = to_config_text(cfg);
    const std::filesystem::path dir(cfg.out);
    for (const auto& name : expand_schemes(cfg.scheme, contentrec_scheme_names())) {
        auto res = run_contentrec_scheme(cfg, name);
        write_file(dir / ("contentrec_" + name + ".csv"), contentrec_csv(res));
        log += "# " + name + " seconds=" + format_number(res.seconds) + "\n";
        out.push_back(std::move(res));
    }
    write_file(dir / "contentrec.log", log);
    return out;
}

}  // namespace psolab::harness
