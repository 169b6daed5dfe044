#pragma once

// Exact planning and evaluation for finite delicate MDPs.
//
// Under a path-specific objective the agent at (s, z) scores an action by
// the return it earns in the world where the delicate state follows the
// baseline from (s, z) onwards and its own future actions respond to that
// world. Planning therefore runs on the product of the path-specific robust
// state and the baseline's state, and the policy is read off at the anchor
// of each actual state.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "psolab/envs/barging.hpp"
#include "psolab/envs/finite.hpp"
#include "psolab/pso.hpp"

namespace psolab::agents {

enum class EpsilonConvention {
    non_greedy,  // epsilon spread evenly over the other actions
    uniform,     // epsilon spread evenly over all actions, greedy included
};

[[nodiscard]] inline std::string_view convention_name(EpsilonConvention c)
{
    return c == EpsilonConvention::non_greedy ? "non-greedy" : "uniform";
}

/// Greedy action per (robust, delicate) state with optional epsilon noise.
struct TabularPolicy {
    int n_robust = 0;
    int n_delicate = 0;
    int n_actions = 0;
    std::vector<int> greedy;  // indexed s * n_delicate + z
    double epsilon = 0.0;
    EpsilonConvention convention = EpsilonConvention::non_greedy;

    [[nodiscard]] int action(int s, int z) const { return greedy.at(static_cast<std::size_t>(s * n_delicate + z)); }

    [[nodiscard]] std::vector<double> distribution(int s, int z) const
    {
        if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon must lie in [0, 1]");
        std::vector<double> d(static_cast<std::size_t>(n_actions), 0.0);
        const auto g = static_cast<std::size_t>(action(s, z));
        if (n_actions == 1) {
            d[0] = 1.0;
            return d;
        }
        if (convention == EpsilonConvention::non_greedy) {
            std::fill(d.begin(), d.end(), epsilon / (n_actions - 1));
            d[g] = 1.0 - epsilon;
        } else {
            std::fill(d.begin(), d.end(), epsilon / n_actions);
            d[g] += 1.0 - epsilon;
        }
        return d;
    }

    [[nodiscard]] TabularPolicy with_epsilon(double eps, EpsilonConvention c) const
    {
        TabularPolicy out = *this;
        out.epsilon = eps;
        out.convention = c;
        return out;
    }

    [[nodiscard]] FinitePolicy as_finite() const
    {
        return [p = *this](int s, int z) { return p.distribution(s, z); };
    }
};

/// nullopt: the standard objective.
using Objective = std::optional<BaselineScheme>;

struct PlanResult {
    TabularPolicy policy;
    double value = 0.0;             // expected objective from the initial distribution
    double bellman_residual = 0.0;  // max |V_cap - V_(cap-1)|
};

namespace detail {

// Robust state of the path-specific world plus the baseline's state.
struct ProductState {
    int sp, sb, zb;
};

template <FiniteEnv E>
struct ProductModel {
    const E& env;
    const BaselineScheme& scheme;
    int ns, nz, na;

    [[nodiscard]] std::size_t index(const ProductState& x) const
    {
        return static_cast<std::size_t>((x.sp * ns + x.sb) * nz + x.zb);
    }
    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(ns * ns * nz); }

    // Q(x, a) against a value table for one fewer step to go.
    [[nodiscard]] double q(const ProductState& x, int a, const std::vector<double>& next) const
    {
        if (env.is_terminal(x.sp)) return 0.0;
        const auto rn = psolab::detail::nonzero(env.robust_noise());
        const auto dn = psolab::detail::nonzero(env.delicate_noise());
        std::vector<std::pair<int, double>> base_actions{{0, 1.0}};
        const auto* pb = std::get_if<PolicyBaseline>(&scheme);
        const auto* sbase = std::get_if<StateBaseline>(&scheme);
        if (pb && !env.is_terminal(x.sb)) base_actions = psolab::detail::nonzero(pb->policy(x.sb, x.zb));
        double total = 0.0;
        for (auto [ab, pab] : base_actions)
            for (auto [es, pes] : rn)
                for (auto [ez, pez] : dn) {
                    ProductState y = x;
                    if (pb) {
                        y.zb = env.delicate_next(x.zb, x.sb, ab, ez);
                        y.sb = env.robust_next(x.sb, x.zb, ab, es);
                    } else if (sbase) {
                        y.zb = sbase->rule(x.zb, x.sb);
                    }
                    y.sp = env.robust_next(x.sp, x.zb, a, es);
                    const double r = env.reward(x.sp, y.sp, x.zb, y.zb, a);
                    total += pab * pes * pez * (r + next[index(y)]);
                }
        return total;
    }
};

// Index of the best entry; ties go to the lowest index.
[[nodiscard]] inline int argmax_low(const std::vector<double>& q)
{
    int best = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] > q[static_cast<std::size_t>(best)] + 1e-12) best = static_cast<int>(a);
    return best;
}

// Greedy action for a cap-step horizon. Ties at the cap are broken by the
// Q-values of shorter horizons, shortest first, so an action that secures
// its value sooner beats one that only postpones it; remaining ties go to
// the lowest index. q_at(k, a) is Q with k steps to go.
template <class QAt>
[[nodiscard]] int greedy_action(int n_actions, int cap, QAt&& q_at)
{
    std::vector<int> cand;
    std::vector<double> q(static_cast<std::size_t>(n_actions));
    for (int a = 0; a < n_actions; ++a) q[static_cast<std::size_t>(a)] = q_at(cap, a);
    const double top = q[static_cast<std::size_t>(argmax_low(q))];
    for (int a = 0; a < n_actions; ++a)
        if (q[static_cast<std::size_t>(a)] >= top - 1e-12) cand.push_back(a);
    for (int k = 1; k < cap && cand.size() > 1; ++k) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a : cand) best = std::max(best, q_at(k, a));
        std::erase_if(cand, [&](int a) { return q_at(k, a) < best - 1e-12; });
    }
    return cand.front();
}

}  // namespace detail

/// Finite-horizon value iteration up to `horizon_cap` steps. Ordinary and
/// standard objectives plan on the environment itself; baseline schemes
/// plan on the path-specific product model.
template <FiniteEnv E>
[[nodiscard]] PlanResult solve(const E& env, const Objective& objective, int horizon_cap)
{
    if (horizon_cap < 1) throw std::invalid_argument("horizon cap must be >= 1");
    const int ns = env.robust_count(), nz = env.delicate_count(), na = env.action_count();
    const BaselineScheme scheme = objective.value_or(BaselineScheme{Ordinary{}});
    const bool ordinary = std::holds_alternative<Ordinary>(scheme);

    // Standard planning on (s, z).
    auto standard_q = [&](int s, int z, int a, const std::vector<double>& next) {
        if (env.is_terminal(s)) return 0.0;
        double total = 0.0;
        for (auto [es, pes] : psolab::detail::nonzero(env.robust_noise()))
            for (auto [ez, pez] : psolab::detail::nonzero(env.delicate_noise())) {
                const int s2 = env.robust_next(s, z, a, es);
                const int z2 = env.delicate_next(z, s, a, ez);
                total += pes * pez * (env.reward(s, s2, z, z2, a) + next[static_cast<std::size_t>(s2 * nz + z2)]);
            }
        return total;
    };
    const detail::ProductModel<E> model{env, scheme, ns, nz, na};

    // Planning state of the actual state (s, z) and the table size.
    auto anchor = [&](int s, int z) {
        return ordinary ? static_cast<std::size_t>(s * nz + z) : model.index({s, s, z});
    };
    auto q = [&](std::size_t i, int a, const std::vector<double>& next) {
        if (ordinary) return standard_q(static_cast<int>(i) / nz, static_cast<int>(i) % nz, a, next);
        const int zb = static_cast<int>(i % static_cast<std::size_t>(nz));
        const int rest = static_cast<int>(i / static_cast<std::size_t>(nz));
        return model.q({rest / ns, rest % ns, zb}, a, next);
    };
    const std::size_t size = ordinary ? static_cast<std::size_t>(ns * nz) : model.size();

    // values[k]: optimal value with k steps to go.
    std::vector<std::vector<double>> values{std::vector<double>(size, 0.0)};
    std::vector<double> qa(static_cast<std::size_t>(na));
    for (int k = 1; k <= horizon_cap; ++k) {
        std::vector<double> cur(size);
        for (std::size_t i = 0; i < size; ++i) {
            for (int a = 0; a < na; ++a) qa[static_cast<std::size_t>(a)] = q(i, a, values.back());
            cur[i] = qa[static_cast<std::size_t>(detail::argmax_low(qa))];
        }
        values.push_back(std::move(cur));
    }

    PlanResult out;
    out.policy.n_robust = ns;
    out.policy.n_delicate = nz;
    out.policy.n_actions = na;
    out.policy.greedy.assign(static_cast<std::size_t>(ns * nz), 0);
    const auto& last = values[static_cast<std::size_t>(horizon_cap)];
    const auto& prev = values[static_cast<std::size_t>(horizon_cap - 1)];
    for (std::size_t i = 0; i < size; ++i) out.bellman_residual = std::max(out.bellman_residual, std::abs(last[i] - prev[i]));
    for (int s = 0; s < ns; ++s)
        for (int z = 0; z < nz; ++z) {
            const std::size_t i = anchor(s, z);
            out.policy.greedy[static_cast<std::size_t>(s * nz + z)] = detail::greedy_action(
                na, horizon_cap, [&](int k, int a) { return q(i, a, values[static_cast<std::size_t>(k - 1)]); });
        }
    for (auto [s, ps] : psolab::detail::nonzero(env.initial_robust()))
        for (auto [z, pz] : psolab::detail::nonzero(env.initial_delicate())) out.value += ps * pz * last[anchor(s, z)];
    return out;
}

struct Evaluation {
    double expected_return = 0.0;
    std::optional<double> expected_pso;  // absent for the standard objective
    double expected_oracle = 0.0;
};

/// Exact expected standard, path-specific and oracle returns of a Barging
/// policy over `horizon` steps, by solving the joint Markov chain.
[[nodiscard]] inline Evaluation evaluate_policy_exact(const barging::Env& env, const TabularPolicy& policy,
                                                      const Objective& objective,
                                                      int horizon = barging::default_horizon_cap)
{
    const BaselineScheme scheme = objective.value_or(BaselineScheme{Ordinary{}});
    const auto chain = build_twin_chain(env, policy.as_finite(), scheme);
    Evaluation ev;
    ev.expected_return = expected_chain_return(chain, horizon, [](const TwinTransition& t) { return t.reward; });
    if (objective)
        ev.expected_pso = expected_chain_return(chain, horizon, [](const TwinTransition& t) { return t.pso_reward; });
    ev.expected_oracle = expected_chain_return(
        chain, horizon, [](const TwinTransition& t) { return barging::oracle_reward(t.s, t.z, t.a, t.reward); });
    return ev;
}

struct ConventionChoice {
    EpsilonConvention convention;
    Evaluation non_greedy;
    Evaluation uniform;
};

/// Evaluates both epsilon conventions exactly and keeps the one whose
/// expected return lies closest to `reference_return`.
[[nodiscard]] inline ConventionChoice select_epsilon_convention(const barging::Env& env, const TabularPolicy& greedy,
                                                                double epsilon, const Objective& objective,
                                                                double reference_return,
                                                                int horizon = barging::default_horizon_cap)
{
    ConventionChoice c{EpsilonConvention::non_greedy, {}, {}};
    c.non_greedy = evaluate_policy_exact(env, greedy.with_epsilon(epsilon, EpsilonConvention::non_greedy), objective,
                                         horizon);
    c.uniform =
        evaluate_policy_exact(env, greedy.with_epsilon(epsilon, EpsilonConvention::uniform), objective, horizon);
    if (std::abs(c.uniform.expected_return - reference_return) <
        std::abs(c.non_greedy.expected_return - reference_return))
        c.convention = EpsilonConvention::uniform;
    return c;
}

/// Exact planner specialised to Barging with its default horizon cap.
[[nodiscard]] inline PlanResult solve_barging(const Objective& objective,
                                              int horizon_cap = barging::default_horizon_cap)
{
    return solve(barging::Env{}, objective, horizon_cap);
}

}  // namespace psolab::agents
