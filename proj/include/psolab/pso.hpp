#pragma once

// Path-specific objectives for finite delicate MDPs.
//
// A twin rollout plays the agent's actions in the real environment and, on
// the same exogenous noise, re-derives the robust state and rewards in a
// world where the delicate state follows a baseline trajectory z-bar that
// no action of the agent can influence. The return of that second world is
// the path-specific objective.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "psolab/envs/finite.hpp"
#include "psolab/noise.hpp"

namespace psolab {

class UnsupportedScheme : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// z-bar follows the environment under a fixed, trusted policy.
struct PolicyBaseline {
    FinitePolicy policy;
    std::string name = "policy";
};

/// z-bar iterates a hand-written rule (z, s_anchor) -> z'.
struct StateBaseline {
    std::function<int(int, int)> rule;
    std::string name = "state";
};

/// z-bar stays at its value at the decision.
struct FixedState {};

/// z-bar is the actual delicate state: the ordinary objective.
struct Ordinary {};

using BaselineScheme = std::variant<PolicyBaseline, StateBaseline, FixedState, Ordinary>;

[[nodiscard]] inline std::string scheme_name(const BaselineScheme& scheme)
{
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PolicyBaseline>) return "policy";
            else if constexpr (std::is_same_v<T, StateBaseline>) return "state";
            else if constexpr (std::is_same_v<T, FixedState>) return "fixed";
            else return "ordinary";
        },
        scheme);
}

/// Always returns the same action.
[[nodiscard]] inline FinitePolicy constant_policy(int action, int n_actions)
{
    return [action, n_actions](int, int) {
        std::vector<double> d(static_cast<std::size_t>(n_actions), 0.0);
        d.at(static_cast<std::size_t>(action)) = 1.0;
        return d;
    };
}

struct RolloutStep {
    int s = 0;
    int z = 0;
    int a = 0;
    double r = 0.0;
};

struct Rollout {
    std::vector<RolloutStep> steps;
    int final_s = 0;
    int final_z = 0;
    bool done = false;

    [[nodiscard]] std::vector<int> actions() const
    {
        std::vector<int> out;
        for (const auto& st : steps) out.push_back(st.a);
        return out;
    }

    /// z_0 .. z_n for a rollout of n steps.
    [[nodiscard]] std::vector<int> delicate_trajectory() const
    {
        std::vector<int> out;
        for (const auto& st : steps) out.push_back(st.z);
        out.push_back(final_z);
        return out;
    }

    [[nodiscard]] double total_reward() const
    {
        double total = 0.0;
        for (const auto& st : steps) total += st.r;
        return total;
    }
};

struct TwinRollout {
    Rollout actual;
    std::vector<int> counterfactual_z;
    std::vector<double> pso_rewards;
    std::uint64_t shared_noise_id = 0;

    [[nodiscard]] double pso_total() const
    {
        double total = 0.0;
        for (double r : pso_rewards) total += r;
        return total;
    }
};

/// Baseline delicate trajectory z-bar_0 .. z-bar_horizon anchored at
/// (s0, z0) at time t0. Returns nullopt for Ordinary, meaning "use the
/// actual delicate state". Nothing here reads the agent's actions.
template <FiniteEnv E, FiniteNoiseSource N>
[[nodiscard]] std::optional<std::vector<int>> counterfactual_z_trajectory(const E& env, const BaselineScheme& scheme,
                                                                         int s0, int z0, int horizon,
                                                                         const N& noise, std::uint64_t t0 = 0)
{
    if (horizon < 1) throw std::invalid_argument("counterfactual horizon must be >= 1");
    if (std::holds_alternative<Ordinary>(scheme)) return std::nullopt;

    std::vector<int> zbar{z0};
    zbar.reserve(static_cast<std::size_t>(horizon) + 1);
    if (const auto* pb = std::get_if<PolicyBaseline>(&scheme)) {
        if (!pb->policy) throw UnsupportedScheme("policy baseline without a policy");
        int s = s0, z = z0;
        for (int k = 0; k < horizon; ++k) {
            const std::uint64_t t = t0 + static_cast<std::uint64_t>(k);
            if (!env.is_terminal(s)) {
                const int a = noise.categorical(mechanism::baseline_policy, t, 0, pb->policy(s, z));
                const int z2 = env.delicate_step(z, s, a, noise, t);
                s = env.robust_step(s, z, a, noise, t);
                z = z2;
            }
            zbar.push_back(z);
        }
    } else if (const auto* sb = std::get_if<StateBaseline>(&scheme)) {
        if (!sb->rule) throw UnsupportedScheme("state baseline without a rule");
        int z = z0;
        for (int k = 0; k < horizon; ++k) zbar.push_back(z = sb->rule(z, s0));
    } else {
        zbar.assign(static_cast<std::size_t>(horizon) + 1, z0);
    }
    return zbar;
}

/// Return of `actions` played from robust state s0 while the delicate state
/// is pinned to `zbar`. The robust state, rewards and termination are
/// re-derived on the pinned trajectory with the shared noise; the sum stops
/// when that world terminates or the actions run out.
template <FiniteEnv E, FiniteNoiseSource N>
[[nodiscard]] double pso_return(const E& env, int s0, std::span<const int> actions, std::span<const int> zbar,
                                const N& noise, std::uint64_t t0 = 0, std::vector<double>* per_step = nullptr)
{
    if (actions.empty()) return 0.0;
    if (zbar.size() < actions.size() + 1)
        throw std::invalid_argument("counterfactual trajectory shorter than the rollout");
    double total = 0.0;
    int s = s0;
    for (std::size_t k = 0; k < actions.size(); ++k) {
        if (env.is_terminal(s)) break;
        const std::uint64_t t = t0 + k;
        const int s2 = env.robust_step(s, zbar[k], actions[k], noise, t);
        const double r = env.reward(s, s2, zbar[k], zbar[k + 1], actions[k]);
        if (per_step) per_step->push_back(r);
        total += r;
        s = s2;
    }
    return total;
}

template <FiniteEnv E, FiniteNoiseSource N>
[[nodiscard]] double pso_return(const E& env, const Rollout& actual, std::span<const int> zbar, const N& noise,
                                std::vector<double>* per_step = nullptr)
{
    if (actual.steps.empty()) return 0.0;
    const auto acts = actual.actions();
    return pso_return(env, actual.steps.front().s, std::span<const int>(acts), zbar, noise, 0, per_step);
}

/// Plays `policy` from the environment's reset state for at most `horizon`
/// steps.
template <FiniteEnv E, FiniteNoiseSource N>
[[nodiscard]] Rollout rollout(const E& env, const FinitePolicy& policy, int horizon, const N& noise)
{
    auto [s, z] = env.reset(noise);
    Rollout out;
    for (int t = 0; t < horizon && !env.is_terminal(s); ++t) {
        const int a = noise.categorical(mechanism::policy, static_cast<std::uint64_t>(t), 0, policy(s, z));
        const auto tr = env.step(s, z, a, noise, static_cast<std::uint64_t>(t));
        out.steps.push_back({s, z, a, tr.r});
        s = tr.s;
        z = tr.z;
    }
    out.final_s = s;
    out.final_z = z;
    out.done = env.is_terminal(s);
    return out;
}

/// Actual rollout plus its path-specific counterpart on shared noise. The
/// two worlds run to their own ends: while the actual episode lasts the
/// path-specific world replays its actions, and if it outlives the actual
/// episode the policy keeps acting on the path-specific state.
template <FiniteEnv E>
[[nodiscard]] TwinRollout twin_rollout(const E& env, const FinitePolicy& policy, const BaselineScheme& scheme,
                                       int horizon, const NoiseStream& noise)
{
    TwinRollout twin;
    twin.shared_noise_id = noise.seed();
    twin.actual = rollout(env, policy, horizon, noise);
    const auto [s0, z0] = env.reset(noise);
    auto zbar = counterfactual_z_trajectory(env, scheme, s0, z0, horizon, noise);
    twin.counterfactual_z = zbar ? *zbar : twin.actual.delicate_trajectory();

    auto acts = twin.actual.actions();
    if (zbar) {
        int sp = s0;
        for (std::size_t k = 0; k < acts.size() && !env.is_terminal(sp); ++k)
            sp = env.robust_step(sp, twin.counterfactual_z[k], acts[k], noise, k);
        for (std::size_t k = acts.size(); k < static_cast<std::size_t>(horizon) && !env.is_terminal(sp); ++k) {
            const int zk = twin.counterfactual_z[k];
            const int a = noise.categorical(mechanism::policy, k, 0, policy(sp, zk));
            acts.push_back(a);
            sp = env.robust_step(sp, zk, a, noise, k);
        }
    }
    (void)pso_return(env, s0, std::span<const int>(acts), twin.counterfactual_z, noise, 0, &twin.pso_rewards);
    return twin;
}

// ---------------------------------------------------------------------------
// Exact evaluation. The actual world, the baseline world and the pinned
// world evolve jointly on shared noise; their joint state space is finite,
// so expected returns solve a linear system.

/// Joint state of the three worlds. `sb`/`zb` hold the baseline world (or
/// the anchor for state and fixed baselines); `sp` is the pinned world's
/// robust state.
struct TwinState {
    int s = 0, z = 0, sb = 0, zb = 0, sp = 0;
    friend auto operator<=>(const TwinState&, const TwinState&) = default;
};

struct TwinTransition {
    std::size_t from = 0;
    std::optional<std::size_t> to;  // nullopt once both worlds have ended
    double prob = 0.0;
    int s = 0, z = 0, a = 0;
    double reward = 0.0;
    double pso_reward = 0.0;
};

struct TwinChain {
    std::vector<TwinState> states;
    std::vector<TwinTransition> transitions;
    std::vector<std::pair<std::size_t, double>> initial;  // (state, probability)
};

namespace detail {

[[nodiscard]] inline std::vector<std::pair<int, double>> nonzero(const std::vector<double>& probs)
{
    std::vector<std::pair<int, double>> out;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (probs[i] > 0.0) out.emplace_back(static_cast<int>(i), probs[i]);
    return out;
}

}  // namespace detail

/// Builds the joint chain reachable from the environment's initial
/// distribution when the agent follows `policy`.
template <FiniteEnv E>
[[nodiscard]] TwinChain build_twin_chain(const E& env, const FinitePolicy& policy, const BaselineScheme& scheme)
{
    TwinChain chain;
    std::map<TwinState, std::size_t> index;
    std::vector<std::size_t> frontier;
    auto intern = [&](const TwinState& x) {
        auto [it, inserted] = index.try_emplace(x, chain.states.size());
        if (inserted) {
            chain.states.push_back(x);
            frontier.push_back(it->second);
        }
        return it->second;
    };

    const bool ordinary = std::holds_alternative<Ordinary>(scheme);
    const auto* pb = std::get_if<PolicyBaseline>(&scheme);
    const auto* sbase = std::get_if<StateBaseline>(&scheme);
    if (pb && !pb->policy) throw UnsupportedScheme("policy baseline without a policy");
    if (sbase && !sbase->rule) throw UnsupportedScheme("state baseline without a rule");

    const auto rn = detail::nonzero(env.robust_noise());
    const auto dn = detail::nonzero(env.delicate_noise());

    for (auto [s0, ps] : detail::nonzero(env.initial_robust()))
        for (auto [z0, pz] : detail::nonzero(env.initial_delicate()))
            if (!env.is_terminal(s0)) chain.initial.emplace_back(intern(TwinState{s0, z0, s0, z0, s0}), ps * pz);

    while (!frontier.empty()) {
        const std::size_t from = frontier.back();
        frontier.pop_back();
        const TwinState x = chain.states[from];
        // Once the actual episode is over the policy acts on the
        // path-specific world alone.
        const bool actual_over = env.is_terminal(x.s);
        const auto pa = actual_over ? policy(x.sp, x.zb) : policy(x.s, x.z);
        std::vector<std::pair<int, double>> baseline_actions{{0, 1.0}};
        if (pb && !env.is_terminal(x.sb)) baseline_actions = detail::nonzero(pb->policy(x.sb, x.zb));

        for (std::size_t a = 0; a < pa.size(); ++a) {
            if (pa[a] <= 0.0) continue;
            const int ai = static_cast<int>(a);
            for (auto [ab, pab] : baseline_actions)
                for (auto [es, pes] : rn)
                    for (auto [ez, pez] : dn) {
                        TwinTransition tr;
                        tr.from = from;
                        tr.prob = pa[a] * pab * pes * pez;
                        tr.s = x.s;
                        tr.z = x.z;
                        tr.a = ai;
                        const int s2 = env.robust_next(x.s, x.z, ai, es);
                        const int z2 = env.delicate_next(x.z, x.s, ai, ez);
                        tr.reward = env.reward(x.s, s2, x.z, z2, ai);

                        TwinState y{s2, z2, x.sb, x.zb, x.sp};
                        if (ordinary) {
                            y.sb = s2;
                            y.zb = z2;
                            y.sp = s2;
                            tr.pso_reward = tr.reward;
                        } else {
                            if (pb) {
                                y.zb = env.delicate_next(x.zb, x.sb, ab, ez);
                                y.sb = env.robust_next(x.sb, x.zb, ab, es);
                            } else if (sbase) {
                                y.zb = sbase->rule(x.zb, x.sb);
                            }
                            y.sp = env.robust_next(x.sp, x.zb, ai, es);
                            tr.pso_reward = env.reward(x.sp, y.sp, x.zb, y.zb, ai);
                        }
                        if (!env.is_terminal(s2) || !env.is_terminal(y.sp)) tr.to = intern(y);
                        chain.transitions.push_back(tr);
                    }
        }
    }
    return chain;
}

/// Expected sum of per-transition rewards over at most `horizon` steps.
/// Unknowns are the k-steps-to-go values of every joint state, so the
/// system is block triangular and never singular.
[[nodiscard]] inline double expected_chain_return(const TwinChain& chain, int horizon,
                                                  const std::function<double(const TwinTransition&)>& reward)
{
    if (horizon < 1) return 0.0;
    const auto n = static_cast<Eigen::Index>(chain.states.size());
    if (n == 0) return 0.0;
    const Eigen::Index dim = n * horizon;
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index i = 0; i < dim; ++i) trips.emplace_back(i, i, 1.0);
    for (int k = 1; k <= horizon; ++k) {
        const Eigen::Index row0 = (k - 1) * n;
        for (const auto& tr : chain.transitions) {
            const Eigen::Index row = row0 + static_cast<Eigen::Index>(tr.from);
            rhs[row] += tr.prob * reward(tr);
            if (tr.to && k > 1) trips.emplace_back(row, (k - 2) * n + static_cast<Eigen::Index>(*tr.to), -tr.prob);
        }
    }
    Eigen::SparseMatrix<double> a(dim, dim);
    a.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw std::runtime_error("expected-return system is singular");
    const Eigen::VectorXd v = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw std::runtime_error("expected-return solve failed");
    double total = 0.0;
    for (auto [i, p] : chain.initial) total += p * v[(horizon - 1) * n + static_cast<Eigen::Index>(i)];
    return total;
}

struct PolicyValue {
    double standard = 0.0;
    double pso = 0.0;
};

/// Monte Carlo estimate regardless of enumerability.
template <FiniteEnv E>
[[nodiscard]] PolicyValue pso_policy_value_sampled(const E& env, const FinitePolicy& policy,
                                                   const BaselineScheme& scheme, int horizon, int n_samples,
                                                   std::uint64_t seed)
{
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    PolicyValue v;
    const NoiseStream root(seed);
    for (int i = 0; i < n_samples; ++i) {
        const auto twin = twin_rollout(env, policy, scheme, horizon, root.fork(static_cast<std::uint64_t>(i)));
        v.standard += twin.actual.total_reward();
        v.pso += twin.pso_total();
    }
    v.standard /= n_samples;
    v.pso /= n_samples;
    return v;
}


/// Mean standard and path-specific returns of `policy`. Finite enumerable
/// environments are evaluated exactly; otherwise `n_samples` twin rollouts
/// are averaged.
template <FiniteEnv E>
[[nodiscard]] PolicyValue pso_policy_value(const E& env, const FinitePolicy& policy, const BaselineScheme& scheme,
                                           int horizon, int n_samples, std::uint64_t seed)
{
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    if constexpr (E::enumerable) {
        const auto chain = build_twin_chain(env, policy, scheme);
        return {expected_chain_return(chain, horizon, [](const TwinTransition& t) { return t.reward; }),
                expected_chain_return(chain, horizon, [](const TwinTransition& t) { return t.pso_reward; })};
    } else {
        return pso_policy_value_sampled(env, policy, scheme, horizon, n_samples, seed);
    }
}

}  // namespace psolab
