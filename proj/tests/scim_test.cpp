#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "psolab/scim.hpp"

using namespace psolab;

namespace {

// Fig. 1a style one-step model: S = A xor e, Z = A and e, R = S + 2 Z.
Scim figure_one()
{
    Cid g;
    g.add_node("A", NodeKind::Decision);
    g.add_node("S", NodeKind::Chance);
    g.add_node("Z", NodeKind::Chance);
    g.add_node("R", NodeKind::Utility);
    g.add_edge("A", "S");
    g.add_edge("A", "Z");
    g.add_edge("S", "R");
    g.add_edge("Z", "R");
    Scim m(g);
    m.set_node("A", 2, {1.0});
    m.set_node("S", 2, {0.5, 0.5}, [](std::span<const int> p, int e) { return p[0] ^ e; });
    m.set_node("Z", 2, {0.5, 0.5}, [](std::span<const int> p, int e) { return p[0] & e; });
    m.set_node("R", 4, {1.0}, [](std::span<const int> p, int) { return p[0] + 2 * p[1]; });
    return m;
}

Policy constant(const Scim& m, int a)
{
    Policy pi;
    pi.set_deterministic(m.graph().at("A"), 2, [a](std::span<const int>) { return a; });
    return pi;
}

// X1 = e1, X2 = X1 xor e2, X3 = X2 and e3, X4 = X3 or e4.
Scm chain()
{
    Cid g;
    for (const char* l : {"X1", "X2", "X3", "X4"}) g.add_node(l, NodeKind::Chance);
    g.add_edge("X1", "X2");
    g.add_edge("X2", "X3");
    g.add_edge("X3", "X4");
    Scim m(g);
    m.set_node("X1", 2, {0.5, 0.5}, [](std::span<const int>, int e) { return e; });
    m.set_node("X2", 2, {0.5, 0.5}, [](std::span<const int> p, int e) { return p[0] ^ e; });
    m.set_node("X3", 2, {0.5, 0.5}, [](std::span<const int> p, int e) { return p[0] & e; });
    m.set_node("X4", 2, {0.5, 0.5}, [](std::span<const int> p, int e) { return p[0] | e; });
    return Scm(m);
}

}  // namespace

TEST(Scim, ValidatesNodes)
{
    auto m = figure_one();
    EXPECT_NO_THROW(m.validate());
    EXPECT_THROW(m.set_node("S", 2, {0.5, 0.4}, [](std::span<const int>, int) { return 0; }), std::invalid_argument);
    EXPECT_THROW(m.set_node("S", 2, {1.0}), std::invalid_argument);
    EXPECT_THROW(m.set_node("A", 2, {1.0}, [](std::span<const int>, int) { return 0; }), std::invalid_argument);
    m.set_node("S", 2, {1.0}, [](std::span<const int>, int) { return 2; });
    EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(Scim, ImputationRequiresCoverage)
{
    EXPECT_THROW((void)impute_policy(figure_one(), Policy{}), std::invalid_argument);
}

TEST(Scim, ImputationKeepsNodesAndIsDeterministic)
{
    const auto m = figure_one();
    const auto scm = impute_policy(m, constant(m, 1));
    EXPECT_EQ(scm.node_count(), m.graph().node_count());
    const NoiseAssignment eps{0, 1, 1, 0};
    EXPECT_EQ(evaluate(scm, eps), evaluate(scm, eps));
    EXPECT_EQ(evaluate(scm, eps), (Assignment{1, 0, 1, 2}));
}

TEST(Scim, UniformPolicyMarginal)
{
    const auto m = figure_one();
    Policy pi;
    pi.set(m.graph().at("A"), [](std::span<const int>) { return std::vector<double>{0.5, 0.5}; }, 64);
    const auto scm = impute_policy(m, pi);
    const NoiseStream noise(5);
    const int n = 10000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += evaluate(scm, sample_noise(scm, noise, static_cast<std::uint64_t>(i)))[0];
    const double sigma = std::sqrt(0.25 / n);
    EXPECT_NEAR(static_cast<double>(ones) / n, 0.5, 3 * sigma);
}

TEST(Scim, ChainTruthTable)
{
    const auto m = chain();
    for (int bits = 0; bits < 16; ++bits) {
        const NoiseAssignment e{bits & 1, (bits >> 1) & 1, (bits >> 2) & 1, (bits >> 3) & 1};
        const int x1 = e[0], x2 = x1 ^ e[1], x3 = x2 & e[2], x4 = x3 | e[3];
        EXPECT_EQ(evaluate(m, e), (Assignment{x1, x2, x3, x4}));
        // do(X2 = 1): X3 = e3, X4 = e3 | e4.
        EXPECT_EQ(evaluate(m, e, {{1, 1}}), (Assignment{x1, 1, e[2], e[2] | e[3]}));
        // do(X3 = 0): X4 = e4.
        EXPECT_EQ(evaluate(m, e, {{2, 0}}), (Assignment{x1, x2, 0, e[3]}));
    }
}

TEST(Scim, EvaluateRejectsBadInputs)
{
    const auto m = chain();
    EXPECT_THROW((void)evaluate(m, {0, 0, 0}), std::invalid_argument);
    EXPECT_THROW((void)evaluate(m, {0, 0, 0, 2}), std::invalid_argument);
    EXPECT_THROW((void)evaluate(m, {0, 0, 0, 0}, {{1, 3}}), std::invalid_argument);
}

TEST(Scim, ConsistencyAndEffectiveness)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 60; ++trial) {
        const auto r = oracle::random_binary_scm(rng, 3 + trial % 4);
        for_each_noise(r.scm, [&](const NoiseAssignment& eps, double) {
            const auto obs = evaluate(r.scm, eps);
            EXPECT_EQ(obs, oracle::sweep_evaluate(r.scm, eps, {}));
            for (NodeIndex x = 0; x < r.scm.node_count(); ++x) {
                EXPECT_EQ(evaluate(r.scm, eps, {{x, obs[x]}}), obs);
                for (int v = 0; v < 2; ++v) EXPECT_EQ(evaluate(r.scm, eps, {{x, v}})[x], v);
            }
        });
    }
}

TEST(Scim, NoiseProbabilitiesSumToOne)
{
    std::mt19937_64 rng(4);
    const auto r = oracle::random_binary_scm(rng, 5);
    double total = 0.0;
    for_each_noise(r.scm, [&](const NoiseAssignment&, double p) { total += p; });
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(PathSpecific, SandwichCases)
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 60; ++trial) {
        const auto r = oracle::random_binary_scm(rng, 3 + trial % 4);
        const auto& g = r.scm.graph();
        std::set<Edge> removed;
        for (const auto& e : g.edges())
            if (!g.is_info_link(e.first, e.second) && std::bernoulli_distribution(0.4)(rng)) removed.insert(e);
        const EdgeSubgraph sub(g, removed);
        const EdgeSubgraph none(g);
        for_each_noise(r.scm, [&](const NoiseAssignment& eps, double) {
            for (int a = 0; a < 2; ++a) {
                const double same = path_specific_utility(r.scm, sub, r.decision, a, a, eps);
                EXPECT_EQ(same, r.scm.utility(evaluate(r.scm, eps, {{r.decision, a}})));
                const double total = path_specific_utility(r.scm, none, r.decision, a, 1 - a, eps);
                EXPECT_EQ(total, r.scm.utility(evaluate(r.scm, eps, {{r.decision, a}})));
            }
        });
    }
}

TEST(PathSpecific, MatchesNestedCounterfactual)
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 250; ++trial) {
        const auto r = oracle::random_binary_scm(rng, 3 + trial % 4);
        const auto& g = r.scm.graph();
        std::set<NodeIndex> zset;
        for (NodeIndex i = 0; i < g.node_count(); ++i)
            if (i != r.decision && g.kind(i) == NodeKind::Chance && std::bernoulli_distribution(0.5)(rng))
                zset.insert(i);
        std::set<Edge> removed;
        for (NodeIndex z : zset)
            for (NodeIndex p : g.parents(z))
                if (!zset.contains(p)) removed.insert({p, z});
        const EdgeSubgraph sub(g, removed);
        for_each_noise(r.scm, [&](const NoiseAssignment& eps, double) {
            for (int a = 0; a < 2; ++a)
                for (int ab = 0; ab < 2; ++ab)
                    ASSERT_EQ(path_specific_utility(r.scm, sub, r.decision, a, ab, eps),
                              oracle::nested_counterfactual_utility(r.scm, r.decision, zset, a, ab, eps))
                        << "trial " << trial;
        });
    }
}

TEST(PathSpecific, RejectsForeignSubgraph)
{
    const auto m = figure_one();
    const auto scm = impute_policy(m, constant(m, 0));
    const auto other = build_delicate_mdp_cid(1);
    EXPECT_THROW((void)path_specific_utility(scm, EdgeSubgraph(other), 0, 1, 0, {0, 0, 0, 0}),
                 std::invalid_argument);
    EXPECT_THROW((void)path_specific_utility(scm, EdgeSubgraph(scm.graph()), 1, 1, 0, {0, 0, 0, 0}),
                 std::invalid_argument);
}
