#pragma once

// Population-based training, exploit only: every interval the bottom
// fraction of members is overwritten by clones of randomly chosen members
// from the top fraction. No hyperparameters are perturbed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "psolab/agents/mlp.hpp"
#include "psolab/noise.hpp"

namespace psolab::agents {

struct PbtConfig {
    int interval = 10;
    double fraction = 0.2;
};

struct Replacement {
    int target;  // overwritten member
    int source;  // member it was cloned from
};

/// Members whose fitness sits in the top and bottom `fraction`, ordered by
/// fitness (ties broken by index so the order is deterministic).
[[nodiscard]] inline std::vector<int> ranked(std::span<const double> fitness)
{
    std::vector<int> order(fitness.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return fitness[static_cast<std::size_t>(a)] > fitness[static_cast<std::size_t>(b)];
    });
    return order;
}

/// Plans one exploit step. A bottom member is replaced only if it is
/// strictly worse than every top member, so a fully tied population is left
/// alone. Sources are drawn uniformly from the top quantile.
[[nodiscard]] inline std::vector<Replacement> plan_exploit(std::span<const double> fitness, const PbtConfig& cfg,
                                                           const NoiseStream& noise, std::uint64_t t)
{
    const auto n = static_cast<int>(fitness.size());
    if (n < 5) throw std::invalid_argument("population-based training needs at least 5 members");
    for (double f : fitness)
        if (!std::isfinite(f)) throw std::invalid_argument("fitness must be finite");
    const int q = std::max(1, static_cast<int>(std::floor(cfg.fraction * n)));
    const auto order = ranked(fitness);
    const std::vector<int> top(order.begin(), order.begin() + q);
    const double top_floor = fitness[static_cast<std::size_t>(top.back())];

    std::vector<Replacement> out;
    for (int k = 0; k < q; ++k) {
        const int target = order[static_cast<std::size_t>(n - 1 - k)];
        if (!(fitness[static_cast<std::size_t>(target)] < top_floor)) continue;
        const double u = noise.uniform("pbt-source", t, static_cast<std::uint64_t>(k));
        const int source = top[static_cast<std::size_t>(std::min(q - 1, static_cast<int>(u * q)))];
        out.push_back({target, source});
    }
    return out;
}

/// Applies one exploit step to `members` and zeroes `fitness`.
inline std::vector<Replacement> pbt_step(std::vector<Mlp>& members, std::vector<double>& fitness,
                                         const PbtConfig& cfg, const NoiseStream& noise, std::uint64_t t)
{
    if (members.size() != fitness.size()) throw std::invalid_argument("one fitness per member");
    const auto plan = plan_exploit(fitness, cfg, noise, t);
    // Sources are top members and targets bottom ones, so copying in any
    // order reads unmodified weights.
    for (const auto& r : plan)
        members[static_cast<std::size_t>(r.target)].clone_from(members[static_cast<std::size_t>(r.source)]);
    std::fill(fitness.begin(), fitness.end(), 0.0);
    return plan;
}

}  // namespace psolab::agents
