#pragma once

// Finite delicate MDPs: robust state, delicate state and action are small
// integers, and each transition factor draws from its own finite exogenous
// distribution. Terminal robust states are absorbing: nothing moves and no
// reward is paid once one is reached.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "psolab/noise.hpp"

namespace psolab {

class InvalidState : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Distribution over actions given (robust, delicate) state.
using FinitePolicy = std::function<std::vector<double>(int, int)>;

template <class Robust, class Delicate>
struct Step {
    Robust s;
    Delicate z;
    double r = 0.0;
    bool done = false;
};

/// Names of the exogenous draws a finite environment consumes at step t.
namespace mechanism {
inline constexpr std::string_view reset_robust = "reset-robust";
inline constexpr std::string_view reset_delicate = "reset-delicate";
inline constexpr std::string_view robust = "robust";
inline constexpr std::string_view delicate = "delicate";
inline constexpr std::string_view policy = "policy";
inline constexpr std::string_view baseline_policy = "baseline-policy";
}  // namespace mechanism

/// CRTP base. Derived supplies the raw tables:
///   robust_count(), delicate_count(), action_count()
///   initial_robust(), initial_delicate()          probability vectors
///   robust_noise(), delicate_noise()              probability vectors
///   terminal(s)
///   next_robust(s, z, a, e), next_delicate(z, s, a, e), raw_reward(s, s2, z, z2, a)
/// and gets absorbing-terminal semantics plus noise-stream stepping.
template <class Derived>
class FiniteDelicateMdp {
public:
    using Robust = int;
    using Delicate = int;
    using Action = int;
    using Transition = Step<int, int>;
    static constexpr bool enumerable = true;

    [[nodiscard]] bool is_terminal(int s) const { return self().terminal(s); }

    [[nodiscard]] int robust_next(int s, int z, int a, int e) const
    {
        return is_terminal(s) ? s : self().next_robust(s, z, a, e);
    }

    [[nodiscard]] int delicate_next(int z, int s, int a, int e) const
    {
        return is_terminal(s) ? z : self().next_delicate(z, s, a, e);
    }

    [[nodiscard]] double reward(int s, int s2, int z, int z2, int a) const
    {
        return is_terminal(s) ? 0.0 : self().raw_reward(s, s2, z, z2, a);
    }

    template <FiniteNoiseSource N>
    [[nodiscard]] std::pair<int, int> reset(const N& noise) const
    {
        const auto ps = self().initial_robust();
        const auto pz = self().initial_delicate();
        return {noise.categorical(mechanism::reset_robust, 0, 0, ps),
                noise.categorical(mechanism::reset_delicate, 0, 0, pz)};
    }

    template <FiniteNoiseSource N>
    [[nodiscard]] int robust_step(int s, int z, int a, const N& noise, std::uint64_t t) const
    {
        const auto p = self().robust_noise();
        return robust_next(s, z, a, noise.categorical(mechanism::robust, t, 0, p));
    }

    template <FiniteNoiseSource N>
    [[nodiscard]] int delicate_step(int z, int s, int a, const N& noise, std::uint64_t t) const
    {
        const auto p = self().delicate_noise();
        return delicate_next(z, s, a, noise.categorical(mechanism::delicate, t, 0, p));
    }

    /// One environment step. Stepping a terminal state is an error.
    template <FiniteNoiseSource N>
    [[nodiscard]] Transition step(int s, int z, int a, const N& noise, std::uint64_t t) const
    {
        check(s, z, a);
        if (is_terminal(s)) throw InvalidState("step called on a terminal state");
        const int s2 = robust_step(s, z, a, noise, t);
        const int z2 = delicate_step(z, s, a, noise, t);
        return {s2, z2, reward(s, s2, z, z2, a), is_terminal(s2)};
    }

    void check(int s, int z, int a) const
    {
        if (s < 0 || s >= self().robust_count() || z < 0 || z >= self().delicate_count() || a < 0 ||
            a >= self().action_count())
            throw std::invalid_argument("state or action out of range");
    }

private:
    [[nodiscard]] const Derived& self() const { return static_cast<const Derived&>(*this); }
};

template <class E>
concept FiniteEnv = requires(const E& e, int i) {
    { e.robust_count() } -> std::convertible_to<int>;
    { e.delicate_count() } -> std::convertible_to<int>;
    { e.action_count() } -> std::convertible_to<int>;
    { e.initial_robust() } -> std::convertible_to<std::vector<double>>;
    { e.initial_delicate() } -> std::convertible_to<std::vector<double>>;
    { e.robust_noise() } -> std::convertible_to<std::vector<double>>;
    { e.delicate_noise() } -> std::convertible_to<std::vector<double>>;
    { e.robust_next(i, i, i, i) } -> std::same_as<int>;
    { e.delicate_next(i, i, i, i) } -> std::same_as<int>;
    { e.reward(i, i, i, i, i) } -> std::same_as<double>;
    { e.is_terminal(i) } -> std::same_as<bool>;
};

/// Fully tabular delicate MDP, mostly used to generate random instances
/// for cross-checking against structural models.
class TabularDelicateMdp : public FiniteDelicateMdp<TabularDelicateMdp> {
public:
    int n_robust = 2;
    int n_delicate = 2;
    int n_actions = 2;
    std::vector<double> init_robust{1.0, 0.0};
    std::vector<double> init_delicate{1.0, 0.0};
    std::vector<double> robust_probs{1.0};
    std::vector<double> delicate_probs{1.0};
    std::vector<int> robust_table;    // [s][z][a][e]
    std::vector<int> delicate_table;  // [z][s][a][e]
    std::vector<double> reward_table; // [s][s2][z][z2][a]
    std::vector<bool> terminal_flags;

    [[nodiscard]] int robust_count() const { return n_robust; }
    [[nodiscard]] int delicate_count() const { return n_delicate; }
    [[nodiscard]] int action_count() const { return n_actions; }
    [[nodiscard]] std::vector<double> initial_robust() const { return init_robust; }
    [[nodiscard]] std::vector<double> initial_delicate() const { return init_delicate; }
    [[nodiscard]] std::vector<double> robust_noise() const { return robust_probs; }
    [[nodiscard]] std::vector<double> delicate_noise() const { return delicate_probs; }
    [[nodiscard]] bool terminal(int s) const { return terminal_flags.at(static_cast<std::size_t>(s)); }

    [[nodiscard]] int next_robust(int s, int z, int a, int e) const
    {
        const int ne = static_cast<int>(robust_probs.size());
        return robust_table.at(static_cast<std::size_t>(((s * n_delicate + z) * n_actions + a) * ne + e));
    }

    [[nodiscard]] int next_delicate(int z, int s, int a, int e) const
    {
        const int ne = static_cast<int>(delicate_probs.size());
        return delicate_table.at(static_cast<std::size_t>(((z * n_robust + s) * n_actions + a) * ne + e));
    }

    [[nodiscard]] double raw_reward(int s, int s2, int z, int z2, int a) const
    {
        const std::size_t i = static_cast<std::size_t>(
            (((s * n_robust + s2) * n_delicate + z) * n_delicate + z2) * n_actions + a);
        return reward_table.at(i);
    }

    /// Random instance with binary factors and actions. Rewards are small
    /// integers so sums are exact in floating point.
    [[nodiscard]] static TabularDelicateMdp random(const NoiseStream& rng, bool with_terminal = true)
    {
        TabularDelicateMdp m;
        std::uint64_t k = 0;
        auto coin = [&](double p) { return rng.uniform("tabular", k++) < p; };
        auto prob = [&] { return 0.125 * (1 + static_cast<int>(rng.uniform("tabular", k++) * 7)); };
        const double p0 = prob();
        m.init_robust = {1.0, 0.0};
        m.init_delicate = {p0, 1.0 - p0};
        const double pr = prob();
        const double pd = prob();
        m.robust_probs = {pr, 1.0 - pr};
        m.delicate_probs = {pd, 1.0 - pd};
        m.terminal_flags = {false, with_terminal && coin(0.5)};
        m.robust_table.resize(2 * 2 * 2 * 2);
        m.delicate_table.resize(2 * 2 * 2 * 2);
        for (auto& v : m.robust_table) v = coin(0.5) ? 1 : 0;
        for (auto& v : m.delicate_table) v = coin(0.5) ? 1 : 0;
        m.reward_table.resize(2 * 2 * 2 * 2 * 2);
        for (auto& v : m.reward_table) v = static_cast<double>(static_cast<int>(rng.uniform("tabular", k++) * 7) - 3);
        return m;
    }
};

}  // namespace psolab
