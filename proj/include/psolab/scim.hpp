#pragma once

// Finite-domain structural causal influence models. Values are domain
// indices; each node also carries the real number an index stands for, which
// is what utility nodes contribute to the objective.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "psolab/cid.hpp"
#include "psolab/noise.hpp"

namespace psolab {

/// Structural function: (parent values in parent-index order, noise) -> value.
using Mechanism = std::function<int(std::span<const int>, int)>;

/// Decision rule: observed parent values -> distribution over the domain.
using DecisionRule = std::function<std::vector<double>(std::span<const int>)>;

using Assignment = std::vector<int>;
using NoiseAssignment = std::vector<int>;
using InterventionSet = std::map<NodeIndex, int>;

class Scim;
class Scm;
class Policy;
Scm impute_policy(const Scim& m, const Policy& pi);

struct NodeModel {
    int domain_size = 2;
    std::vector<double> values;       // numeric value of each domain index
    std::vector<double> noise_probs{1.0};
    Mechanism mechanism;              // empty on decision nodes of a Scim
};

class Scim {
public:
    explicit Scim(Cid graph) : graph_(std::move(graph)), nodes_(graph_.node_count()), order_(evaluation_order(graph_))
    {
        for (auto& n : nodes_) n.values = identity_values(n.domain_size);
    }

    [[nodiscard]] const Cid& graph() const noexcept { return graph_; }
    [[nodiscard]] const NodeModel& node(NodeIndex i) const { return nodes_.at(i); }
    [[nodiscard]] const std::vector<NodeIndex>& order() const noexcept { return order_; }

    /// Declares a node's domain and exogenous distribution. Decision nodes
    /// get no mechanism here; policies supply one.
    Scim& set_node(NodeIndex i, int domain_size, std::vector<double> noise_probs, Mechanism f = {},
                   std::vector<double> values = {})
    {
        graph_.check_index(i);
        if (domain_size < 1) throw std::invalid_argument("domain must be non-empty");
        if (noise_probs.empty()) throw std::invalid_argument("exogenous domain must be non-empty");
        const double total = std::accumulate(noise_probs.begin(), noise_probs.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("noise distribution must sum to 1");
        const bool decision = graph_.kind(i) == NodeKind::Decision;
        if (decision && f) throw std::invalid_argument("decision node '" + graph_.label(i) + "' takes no mechanism");
        if (!decision && !f) throw std::invalid_argument("node '" + graph_.label(i) + "' needs a mechanism");
        if (values.empty()) values = identity_values(domain_size);
        if (static_cast<int>(values.size()) != domain_size)
            throw std::invalid_argument("value table size differs from domain size");
        nodes_[i] = NodeModel{domain_size, std::move(values), std::move(noise_probs), std::move(f)};
        return *this;
    }

    Scim& set_node(std::string_view label, int domain_size, std::vector<double> noise_probs, Mechanism f = {},
                   std::vector<double> values = {})
    {
        return set_node(graph_.at(label), domain_size, std::move(noise_probs), std::move(f), std::move(values));
    }

    /// Every non-decision node has a mechanism, decisions have none, and
    /// every mechanism stays inside its node's domain on every input.
    void validate() const
    {
        for (NodeIndex i = 0; i < nodes_.size(); ++i) {
            const bool decision = graph_.kind(i) == NodeKind::Decision;
            if (decision == static_cast<bool>(nodes_[i].mechanism))
                throw std::invalid_argument("node '" + graph_.label(i) + "' has a mechanism mismatch");
            if (!decision) check_mechanism_range(i);
        }
    }

    void check_mechanism_range(NodeIndex i) const
    {
        const auto& ps = graph_.parents(i);
        std::vector<int> vals(ps.size(), 0);
        const auto& n = nodes_[i];
        for (;;) {
            for (int e = 0; e < static_cast<int>(n.noise_probs.size()); ++e) {
                const int out = n.mechanism(vals, e);
                if (out < 0 || out >= n.domain_size)
                    throw std::invalid_argument("mechanism of '" + graph_.label(i) + "' leaves its domain");
            }
            std::size_t k = 0;
            while (k < ps.size() && ++vals[k] == nodes_[ps[k]].domain_size) vals[k++] = 0;
            if (k == ps.size()) break;
        }
    }

private:
    friend class Scm;
    friend Scm impute_policy(const Scim& m, const Policy& pi);

    static std::vector<double> identity_values(int n)
    {
        std::vector<double> v(static_cast<std::size_t>(n));
        std::iota(v.begin(), v.end(), 0.0);
        return v;
    }

    Cid graph_;
    std::vector<NodeModel> nodes_;
    std::vector<NodeIndex> order_;
};

/// Per-decision rules. A rule's randomness is resolved by its own uniform
/// exogenous variable with `noise_levels` equally likely values; level e
/// picks the action at quantile (e + 0.5) / noise_levels. One level is exact
/// for deterministic rules, and any dyadic distribution is exact at a
/// matching power of two.
class Policy {
public:
    struct Entry {
        DecisionRule rule;
        int noise_levels = 1;
    };

    Policy& set(NodeIndex decision, DecisionRule rule, int noise_levels = 1)
    {
        if (noise_levels < 1) throw std::invalid_argument("noise_levels must be >= 1");
        rules_[decision] = Entry{std::move(rule), noise_levels};
        return *this;
    }

    /// Deterministic rule given as observed values -> action.
    Policy& set_deterministic(NodeIndex decision, int domain_size, std::function<int(std::span<const int>)> choose)
    {
        return set(decision, [domain_size, choose = std::move(choose)](std::span<const int> obs) {
            std::vector<double> d(static_cast<std::size_t>(domain_size), 0.0);
            d.at(static_cast<std::size_t>(choose(obs))) = 1.0;
            return d;
        });
    }

    [[nodiscard]] const Entry* find(NodeIndex decision) const
    {
        auto it = rules_.find(decision);
        return it == rules_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] static double quantile(int level, int levels) { return (level + 0.5) / levels; }

private:
    std::map<NodeIndex, Entry> rules_;
};

/// A Scim whose every node, decisions included, has a structural function.
class Scm {
public:
    explicit Scm(Scim model) : m_(std::move(model))
    {
        for (NodeIndex i = 0; i < m_.nodes_.size(); ++i)
            if (!m_.nodes_[i].mechanism)
                throw std::invalid_argument("node '" + m_.graph_.label(i) + "' has no structural function");
    }

    [[nodiscard]] const Cid& graph() const noexcept { return m_.graph(); }
    [[nodiscard]] const NodeModel& node(NodeIndex i) const { return m_.node(i); }
    [[nodiscard]] std::size_t node_count() const noexcept { return m_.graph().node_count(); }
    [[nodiscard]] const std::vector<NodeIndex>& order() const noexcept { return m_.order(); }

    /// Sum of the numeric values of utility nodes.
    [[nodiscard]] double utility(const Assignment& values) const
    {
        double u = 0.0;
        for (NodeIndex i : graph().nodes_of_kind(NodeKind::Utility))
            u += m_.nodes_[i].values.at(static_cast<std::size_t>(values.at(i)));
        return u;
    }

    [[nodiscard]] int apply(NodeIndex i, std::span<const int> parent_values, int noise) const
    {
        const auto& n = m_.nodes_[i];
        const int out = n.mechanism(parent_values, noise);
        if (out < 0 || out >= n.domain_size)
            throw std::logic_error("mechanism of '" + graph().label(i) + "' left its domain");
        return out;
    }

private:
    Scim m_;
};

/// Turns decisions into structural nodes. Each decision's exogenous
/// variable becomes the uniform selector of its rule; the node set is
/// unchanged.
[[nodiscard]] inline Scm impute_policy(const Scim& m, const Policy& pi)
{
    Scim out = m;
    for (NodeIndex i : m.graph().nodes_of_kind(NodeKind::Decision)) {
        const auto* entry = pi.find(i);
        if (!entry) throw std::invalid_argument("policy does not cover decision '" + m.graph().label(i) + "'");
        const int domain = m.node(i).domain_size;
        const int levels = entry->noise_levels;
        const std::string label = m.graph().label(i);
        auto rule = entry->rule;
        out.nodes_[i].noise_probs.assign(static_cast<std::size_t>(levels), 1.0 / levels);
        out.nodes_[i].mechanism = [rule, domain, levels, label](std::span<const int> obs, int e) {
            const auto dist = rule(obs);
            if (static_cast<int>(dist.size()) != domain)
                throw std::invalid_argument("rule for '" + label + "' returned a wrong-sized distribution");
            const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
            if (std::abs(total - 1.0) > 1e-9)
                throw std::invalid_argument("rule for '" + label + "' does not sum to 1");
            return NoiseStream::sample_index(dist, Policy::quantile(e, levels));
        };
    }
    return Scm(std::move(out));
}

namespace detail {

inline void check_noise(const Scm& m, const NoiseAssignment& eps)
{
    if (eps.size() != m.node_count()) throw std::invalid_argument("noise assignment does not cover every node");
    for (NodeIndex i = 0; i < eps.size(); ++i)
        if (eps[i] < 0 || eps[i] >= static_cast<int>(m.node(i).noise_probs.size()))
            throw std::invalid_argument("noise value out of range at '" + m.graph().label(i) + "'");
}

inline void check_interventions(const Scm& m, const InterventionSet& doing)
{
    for (const auto& [i, v] : doing) {
        m.graph().check_index(i);
        if (v < 0 || v >= m.node(i).domain_size)
            throw std::invalid_argument("forced value outside the domain of '" + m.graph().label(i) + "'");
    }
}

}  // namespace detail

/// Values of all nodes in topological order. Intervened nodes take their
/// forced value and ignore parents and noise.
[[nodiscard]] inline Assignment evaluate(const Scm& m, const NoiseAssignment& eps, const InterventionSet& doing = {})
{
    detail::check_noise(m, eps);
    detail::check_interventions(m, doing);
    Assignment v(m.node_count(), 0);
    std::vector<int> pv;
    for (NodeIndex i : m.order()) {
        if (auto it = doing.find(i); it != doing.end()) {
            v[i] = it->second;
            continue;
        }
        pv.clear();
        for (NodeIndex p : m.graph().parents(i)) pv.push_back(v[p]);
        v[i] = m.apply(i, pv, eps[i]);
    }
    return v;
}

/// The modified-model evaluation behind path-specific effects. A reference
/// pass runs under `reference`; the second pass runs under `actual`, except
/// that along every edge removed in `sub` a node reads its parent's
/// reference value. Both passes consume the same `eps`.
[[nodiscard]] inline Assignment path_specific_assignment(const Scm& m, const EdgeSubgraph& sub,
                                                         const InterventionSet& actual,
                                                         const InterventionSet& reference,
                                                         const NoiseAssignment& eps)
{
    if (!(sub.base() == m.graph())) throw std::invalid_argument("edge-subgraph belongs to a different graph");
    const Assignment ref = evaluate(m, eps, reference);
    detail::check_interventions(m, actual);
    Assignment v(m.node_count(), 0);
    std::vector<int> pv;
    for (NodeIndex i : m.order()) {
        if (auto it = actual.find(i); it != actual.end()) {
            v[i] = it->second;
            continue;
        }
        pv.clear();
        for (NodeIndex p : m.graph().parents(i)) pv.push_back(sub.is_removed(p, i) ? ref[p] : v[p]);
        v[i] = m.apply(i, pv, eps[i]);
    }
    return v;
}

/// Utility of `decision = a` when the change from `a_bar` propagates only
/// along the edges kept in `sub`.
[[nodiscard]] inline double path_specific_utility(const Scm& m, const EdgeSubgraph& sub, NodeIndex decision, int a,
                                                  int a_bar, const NoiseAssignment& eps)
{
    if (m.graph().kind(decision) != NodeKind::Decision)
        throw std::invalid_argument("path_specific_utility: not a decision node");
    return m.utility(path_specific_assignment(m, sub, {{decision, a}}, {{decision, a_bar}}, eps));
}

/// Calls fn(eps, probability) for every exogenous assignment.
template <class Fn>
void for_each_noise(const Scm& m, Fn&& fn)
{
    const std::size_t n = m.node_count();
    NoiseAssignment eps(n, 0);
    for (;;) {
        double p = 1.0;
        for (NodeIndex i = 0; i < n; ++i) p *= m.node(i).noise_probs[static_cast<std::size_t>(eps[i])];
        fn(std::as_const(eps), p);
        std::size_t k = 0;
        while (k < n && ++eps[k] == static_cast<int>(m.node(k).noise_probs.size())) eps[k++] = 0;
        if (k == n) return;
    }
}

/// One exogenous draw per node from a noise stream.
[[nodiscard]] inline NoiseAssignment sample_noise(const Scm& m, const NoiseStream& noise, std::uint64_t draw)
{
    NoiseAssignment eps(m.node_count());
    for (NodeIndex i = 0; i < eps.size(); ++i)
        eps[i] = noise.categorical("scm-exogenous", draw, i, m.node(i).noise_probs);
    return eps;
}

}  // namespace psolab
