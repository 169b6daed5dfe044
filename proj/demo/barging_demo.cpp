// Barging, side by side: the standard planner barges the person off the
// path, the path-specific planner (fixed-state baseline) walks around.
// Prints each plan, one sampled twin rollout, and the exact returns.

#include <cstdio>
#include <cstdlib>

#include "psolab/psolab.hpp"

using namespace psolab;

namespace {

void show(const char* title, const agents::PlanResult& plan, const agents::Objective& objective, std::uint64_t seed)
{
    const barging::Env env;
    const auto twin = twin_rollout(env, plan.policy.as_finite(), objective.value_or(BaselineScheme{Ordinary{}}),
                                   barging::default_horizon_cap, NoiseStream(seed));
    std::printf("%s (planned value %.4f)\n", title, plan.value);
    std::printf("  actual   :");
    for (const auto& st : twin.actual.steps)
        std::printf(" %s", std::string(barging::move_name(st.a)).c_str());
    std::printf("   return %g\n", twin.actual.total_reward());
    std::printf("  z-bar    :");
    for (std::size_t k = 0; k < twin.actual.steps.size(); ++k)
        std::printf(" %s", std::string(barging::position_name(twin.counterfactual_z[k])).c_str());
    std::printf("   path-specific return %g\n", twin.pso_total());

    const auto ev = agents::evaluate_policy_exact(env, plan.policy, objective);
    std::printf("  exact    : E[U] %.4f, E[U_oracle] %.4f\n\n", ev.expected_return, ev.expected_oracle);
}

}  // namespace

int main(int argc, char** argv)
{
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 0;
    show("standard objective", agents::solve_barging(std::nullopt), std::nullopt, seed);
    const agents::Objective fixed = BaselineScheme{FixedState{}};
    show("path-specific objective, fixed-state baseline", agents::solve_barging(fixed), fixed, seed);
}
