#pragma once

// Test-side oracles. These deliberately avoid the library's own graph and
// structural-model algorithms: they enumerate paths one at a time and
// evaluate models by brute force.

#include <cstddef>
#include <functional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psolab/cid.hpp"
#include "psolab/scim.hpp"

namespace oracle {

using psolab::Cid;
using psolab::NodeIndex;
using psolab::NodeKind;

/// Adjacency over causal edges only, optionally minus a removed set.
inline std::vector<std::vector<NodeIndex>> causal_adjacency(const Cid& g, const std::set<psolab::Edge>& removed = {})
{
    std::vector<std::vector<NodeIndex>> adj(g.node_count());
    for (const auto& [u, v] : g.edges())
        if (!g.is_info_link(u, v) && !removed.contains({u, v})) adj[u].push_back(v);
    return adj;
}

/// Every simple directed path from `from` to `to` (the empty path when from == to).
inline std::vector<std::vector<NodeIndex>> all_paths(const std::vector<std::vector<NodeIndex>>& adj, NodeIndex from,
                                                     NodeIndex to)
{
    std::vector<std::vector<NodeIndex>> out;
    std::vector<NodeIndex> path{from};
    std::function<void(NodeIndex)> dfs = [&](NodeIndex u) {
        if (u == to) {
            out.push_back(path);
            return;
        }
        for (NodeIndex c : adj[u]) {
            path.push_back(c);
            dfs(c);
            path.pop_back();
        }
    };
    dfs(from);
    return out;
}

/// ICI by definition: some path decision -> ... -> utility visits x.
inline bool ici_by_enumeration(const Cid& g, NodeIndex decision, NodeIndex x,
                               const std::set<psolab::Edge>& removed = {})
{
    const auto adj = causal_adjacency(g, removed);
    for (NodeIndex u : g.nodes_of_kind(NodeKind::Utility))
        for (const auto& p : all_paths(adj, decision, u))
            for (NodeIndex v : p)
                if (v == x) return true;
    return false;
}

/// Random DAG on n nodes (edges only from lower to higher index) with one
/// decision and at least one utility node.
inline Cid random_dag(std::mt19937_64& rng, std::size_t n, double edge_prob)
{
    Cid g;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t decision = pick(rng);
    std::size_t utility = pick(rng);
    if (utility == decision) utility = (decision + 1) % n;
    for (std::size_t i = 0; i < n; ++i) {
        NodeKind k = NodeKind::Chance;
        if (i == decision) k = NodeKind::Decision;
        else if (i == utility) k = NodeKind::Utility;
        else if (std::bernoulli_distribution(0.2)(rng)) k = NodeKind::Utility;
        g.add_node("N" + std::to_string(i), k);
    }
    std::bernoulli_distribution coin(edge_prob);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (coin(rng)) {
                if (g.kind(v) == NodeKind::Decision && std::bernoulli_distribution(0.5)(rng))
                    g.add_info_link(u, v);
                else
                    g.add_edge(u, v);
            }
    return g;
}

/// Topological evaluation by repeated sweeps: keep assigning any node whose
/// parents are all assigned. Slow and obviously correct.
inline psolab::Assignment sweep_evaluate(const psolab::Scm& m, const psolab::NoiseAssignment& eps,
                                         const psolab::InterventionSet& doing,
                                         const std::function<int(NodeIndex, NodeIndex, int)>& parent_value = {})
{
    const std::size_t n = m.node_count();
    psolab::Assignment v(n, -1);
    std::size_t done = 0;
    while (done < n) {
        for (NodeIndex i = 0; i < n; ++i) {
            if (v[i] >= 0) continue;
            if (auto it = doing.find(i); it != doing.end()) {
                v[i] = it->second;
                ++done;
                continue;
            }
            bool ready = true;
            for (NodeIndex p : m.graph().parents(i)) ready = ready && v[p] >= 0;
            if (!ready) continue;
            std::vector<int> pv;
            for (NodeIndex p : m.graph().parents(i)) pv.push_back(parent_value ? parent_value(p, i, v[p]) : v[p]);
            v[i] = m.node(i).mechanism(pv, eps[i]);
            ++done;
        }
    }
    return v;
}

struct RandomScm {
    psolab::Scm scm;
    NodeIndex decision;
};

/// Random binary structural model on n nodes in index order: one decision
/// with a random (possibly stochastic) rule, random tabular mechanisms,
/// binary noise with dyadic probabilities and small integer utilities.
inline RandomScm random_binary_scm(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_int_distribution<std::size_t> pick(0, n - 2);
    std::bernoulli_distribution coin(0.5);
    const std::size_t decision = pick(rng);
    Cid g;
    for (std::size_t i = 0; i < n; ++i) {
        NodeKind k = NodeKind::Chance;
        if (i == decision) k = NodeKind::Decision;
        else if (i == n - 1 || (i > decision && std::bernoulli_distribution(0.3)(rng))) k = NodeKind::Utility;
        g.add_node("V" + std::to_string(i), k);
    }
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (std::bernoulli_distribution(0.5)(rng)) {
                if (v == decision) g.add_info_link(u, v);
                else g.add_edge(u, v);
            }
    if (!g.has_edge(decision, n - 1)) g.add_edge(decision, n - 1);

    psolab::Scim m(g);
    const double probs[] = {0.25, 0.5, 0.75};
    for (NodeIndex i = 0; i < n; ++i) {
        const std::size_t k = g.parents(i).size();
        if (i == decision) {
            m.set_node(i, 2, {1.0});
            continue;
        }
        const double p = probs[std::uniform_int_distribution<int>(0, 2)(rng)];
        std::vector<int> table(std::size_t{2} << k);
        for (auto& x : table) x = coin(rng) ? 1 : 0;
        std::vector<double> values{0.0, 1.0};
        if (g.kind(i) == NodeKind::Utility)
            values = {static_cast<double>(std::uniform_int_distribution<int>(-3, 3)(rng)),
                      static_cast<double>(std::uniform_int_distribution<int>(-3, 3)(rng))};
        m.set_node(
            i, 2, {p, 1.0 - p},
            [table](std::span<const int> pv, int e) {
                std::size_t idx = 0;
                for (int b : pv) idx = idx * 2 + static_cast<std::size_t>(b);
                return table[idx * 2 + static_cast<std::size_t>(e)];
            },
            values);
    }
    const std::size_t k = g.parents(decision).size();
    std::vector<double> p_one(std::size_t{1} << k);
    for (auto& x : p_one) x = 0.25 * std::uniform_int_distribution<int>(0, 4)(rng);
    psolab::Policy pi;
    pi.set(
        decision,
        [p_one](std::span<const int> obs) {
            std::size_t idx = 0;
            for (int b : obs) idx = idx * 2 + static_cast<std::size_t>(b);
            return std::vector<double>{1.0 - p_one[idx], p_one[idx]};
        },
        4);
    return {psolab::impute_policy(m, pi), decision};
}

/// Utility of do(A = a) with every node of `zset` held at the value it takes
/// under do(A = a_bar): the nested counterfactual U_{a, Z_{a_bar}}.
inline double nested_counterfactual_utility(const psolab::Scm& m, NodeIndex decision, const std::set<NodeIndex>& zset,
                                            int a, int a_bar, const psolab::NoiseAssignment& eps)
{
    const auto ref = sweep_evaluate(m, eps, {{decision, a_bar}});
    psolab::InterventionSet doing{{decision, a}};
    for (NodeIndex z : zset) doing[z] = ref[z];
    const auto v = sweep_evaluate(m, eps, doing);
    double u = 0.0;
    for (NodeIndex i : m.graph().nodes_of_kind(NodeKind::Utility))
        u += m.node(i).values[static_cast<std::size_t>(v[i])];
    return u;
}

}  // namespace oracle
