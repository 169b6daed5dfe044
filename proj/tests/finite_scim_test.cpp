#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "psolab/envs/barging.hpp"
#include "psolab/envs/finite_scim.hpp"
#include "psolab/pso.hpp"

using namespace psolab;

namespace {

// Every action sequence of length h over n actions.
std::vector<std::vector<int>> sequences(int n, int h)
{
    std::vector<std::vector<int>> out{{}};
    for (int k = 0; k < h; ++k) {
        std::vector<std::vector<int>> next;
        for (const auto& p : out)
            for (int a = 0; a < n; ++a) {
                auto q = p;
                q.push_back(a);
                next.push_back(q);
            }
        out = next;
    }
    return out;
}

FinitePolicy random_baseline(std::mt19937_64& rng, int n_cells, int n_actions)
{
    // Quarter-multiples so four uniform levels resolve them exactly.
    std::vector<std::vector<double>> table;
    for (int i = 0; i < n_cells; ++i) {
        std::vector<int> q(static_cast<std::size_t>(n_actions), 0);
        for (int k = 0; k < 4; ++k) ++q[std::uniform_int_distribution<int>(0, n_actions - 1)(rng)];
        std::vector<double> d;
        for (int c : q) d.push_back(c / 4.0);
        table.push_back(d);
    }
    const int nz = 2;
    return [table, nz](int s, int z) { return table.at(static_cast<std::size_t>(s * nz + z)); };
}

template <class E>
void expect_equivalent(const E& env, int horizon, const FinitePolicy& baseline)
{
    const auto enc = encode_scim(env, horizon);
    enc.scim().validate();
    const auto scm = enc.impute(baseline, 4);
    const auto& g = scm.graph();
    const auto sub = cut_delicate_paths(g, 0);
    for (const auto& acts : sequences(env.action_count(), horizon)) {
        InterventionSet doing;
        for (int t = 0; t < horizon; ++t) doing[enc.node(Family::A, t)] = acts[static_cast<std::size_t>(t)];
        for_each_noise(scm, [&](const NoiseAssignment& eps, double) {
            const AssignmentNoise noise(enc, scm, eps);
            const auto [s0, z0] = env.reset(noise);
            const auto zbar =
                counterfactual_z_trajectory(env, PolicyBaseline{baseline}, s0, z0, horizon, noise);
            const double pso = pso_return(env, s0, acts, *zbar, noise);
            const double structural = scm.utility(path_specific_assignment(scm, sub, doing, {}, eps));
            ASSERT_EQ(pso, structural);
        });
    }
}

}  // namespace

TEST(EncodedMdp, ObservationalRolloutsAgree)
{
    // With nothing intervened, the structural model and a plain rollout of
    // the same policy see identical draws and earn identical returns.
    for (std::uint64_t k = 0; k < 20; ++k) {
        const auto env = TabularDelicateMdp::random(NoiseStream(k));
        const auto pi = [](int s, int z) { return std::vector<double>{0.25 + 0.5 * (s ^ z), 0.75 - 0.5 * (s ^ z)}; };
        const auto enc = encode_scim(env, 2);
        const auto scm = enc.impute(pi, 4);
        for_each_noise(scm, [&](const NoiseAssignment& eps, double) {
            const AssignmentNoise noise(enc, scm, eps);
            const auto r = rollout(env, pi, 2, noise);
            ASSERT_EQ(r.total_reward(), scm.utility(evaluate(scm, eps)));
        });
    }
}

TEST(EncodedMdp, PsoReturnMatchesSurgeredModelOnRandomMdps)
{
    std::mt19937_64 rng(5);
    for (std::uint64_t k = 0; k < 120; ++k) {
        const auto env = TabularDelicateMdp::random(NoiseStream(1000 + k), k % 3 != 0);
        expect_equivalent(env, 1 + static_cast<int>(k % 2), random_baseline(rng, 4, 2));
    }
}

TEST(EncodedMdp, PsoReturnMatchesSurgeredModelOnBarging)
{
    std::mt19937_64 rng(6);
    const barging::Env env;
    expect_equivalent(env, 3, constant_policy(barging::L, 3));
    for (int k = 0; k < 10; ++k) expect_equivalent(env, 3, random_baseline(rng, 4, 3));
}

TEST(EncodedMdp, SingleDecisionUsesPathSpecificUtility)
{
    for (std::uint64_t k = 0; k < 50; ++k) {
        const auto env = TabularDelicateMdp::random(NoiseStream(2000 + k));
        const auto enc = encode_scim(env, 1);
        const NodeIndex a0 = enc.node(Family::A, 0);
        const auto sub = cut_delicate_paths(enc.scim().graph(), 0);
        for (int a_bar = 0; a_bar < 2; ++a_bar) {
            const auto scm = enc.impute(constant_policy(a_bar, 2));
            for (int a = 0; a < 2; ++a)
                for_each_noise(scm, [&](const NoiseAssignment& eps, double) {
                    const AssignmentNoise noise(enc, scm, eps);
                    const auto [s0, z0] = env.reset(noise);
                    const auto zbar = counterfactual_z_trajectory(env, PolicyBaseline{constant_policy(a_bar, 2)}, s0,
                                                                  z0, 1, noise);
                    const std::vector<int> acts{a};
                    ASSERT_EQ(pso_return(env, s0, acts, *zbar, noise),
                              path_specific_utility(scm, sub, a0, a, a_bar, eps));
                });
        }
    }
}

TEST(EncodedMdp, FixedStateIsTheAlwaysLeftBaselineInBarging)
{
    const barging::Env env;
    for (const auto& acts : sequences(3, 4)) {
        const NoiseStream noise(0);
        const auto fixed = counterfactual_z_trajectory(env, FixedState{}, barging::start, barging::path, 4, noise);
        const auto left = counterfactual_z_trajectory(env, PolicyBaseline{constant_policy(barging::L, 3)},
                                                      barging::start, barging::path, 4, noise);
        EXPECT_EQ(pso_return(env, barging::start, acts, *fixed, noise),
                  pso_return(env, barging::start, acts, *left, noise));
    }
}
