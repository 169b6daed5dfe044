#pragma once

// Causal influence diagrams: storage, the delicate-MDP graph family and the
// graphical queries used to reason about control incentives.

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace psolab {

enum class NodeKind { Decision, Utility, Chance };

/// Role of a node in a factored delicate MDP: robust state, delicate state,
/// action, reward.
enum class Family { S, Z, A, R };

struct NodeTag {
    Family family;
    int t;
    friend bool operator==(const NodeTag&, const NodeTag&) = default;
};

using NodeIndex = std::size_t;
using Edge = std::pair<NodeIndex, NodeIndex>;

struct Node {
    std::string label;
    NodeKind kind = NodeKind::Chance;
    std::optional<NodeTag> tag;
    friend bool operator==(const Node&, const Node&) = default;
};

[[nodiscard]] inline std::string_view to_string(NodeKind k)
{
    switch (k) {
    case NodeKind::Decision: return "decision";
    case NodeKind::Utility: return "utility";
    case NodeKind::Chance: return "chance";
    }
    return "chance";
}

[[nodiscard]] inline std::string_view to_string(Family f)
{
    switch (f) {
    case Family::S: return "S";
    case Family::Z: return "Z";
    case Family::A: return "A";
    case Family::R: return "R";
    }
    return "S";
}

/// A causal influence diagram. Information links are stored as edges (they
/// take part in the acyclicity check and define a decision's observed
/// parents) but are skipped by every directed-path query: they are not
/// causal paths out of a decision.
class Cid {
public:
    NodeIndex add_node(std::string label, NodeKind kind, std::optional<NodeTag> tag = std::nullopt)
    {
        if (label.empty()) throw std::invalid_argument("node label must be non-empty");
        if (find(label)) throw std::invalid_argument("duplicate node label '" + label + "'");
        nodes_.push_back(Node{std::move(label), kind, tag});
        children_.emplace_back();
        parents_.emplace_back();
        return nodes_.size() - 1;
    }

    void add_edge(NodeIndex from, NodeIndex to) { insert_edge(from, to, false); }

    void add_edge(std::string_view from, std::string_view to) { add_edge(at(from), at(to)); }

    /// Edge into a decision node carrying what the decision observes.
    void add_info_link(NodeIndex from, NodeIndex to) { insert_edge(from, to, true); }

    void add_info_link(std::string_view from, std::string_view to) { add_info_link(at(from), at(to)); }

    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const Node& node(NodeIndex i) const { return nodes_.at(i); }
    [[nodiscard]] NodeKind kind(NodeIndex i) const { return nodes_.at(i).kind; }
    [[nodiscard]] const std::string& label(NodeIndex i) const { return nodes_.at(i).label; }

    [[nodiscard]] std::optional<NodeIndex> find(std::string_view label) const
    {
        for (NodeIndex i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].label == label) return i;
        return std::nullopt;
    }

    [[nodiscard]] NodeIndex at(std::string_view label) const
    {
        if (auto i = find(label)) return *i;
        throw std::invalid_argument("unknown node '" + std::string(label) + "'");
    }

    [[nodiscard]] std::optional<NodeIndex> find(Family f, int t) const
    {
        for (NodeIndex i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].tag && *nodes_[i].tag == NodeTag{f, t}) return i;
        return std::nullopt;
    }

    /// All edges, information links included.
    [[nodiscard]] const std::set<Edge>& edges() const noexcept { return edges_; }
    [[nodiscard]] const std::set<Edge>& info_links() const noexcept { return info_links_; }

    [[nodiscard]] bool has_edge(NodeIndex u, NodeIndex v) const { return edges_.contains({u, v}); }
    [[nodiscard]] bool is_info_link(NodeIndex u, NodeIndex v) const { return info_links_.contains({u, v}); }

    [[nodiscard]] const std::vector<NodeIndex>& causal_children(NodeIndex i) const { return children_.at(i); }

    /// Every parent, observed parents of decisions included, in index order.
    [[nodiscard]] const std::vector<NodeIndex>& parents(NodeIndex i) const { return parents_.at(i); }

    [[nodiscard]] std::vector<NodeIndex> nodes_of_kind(NodeKind k) const
    {
        std::vector<NodeIndex> out;
        for (NodeIndex i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].kind == k) out.push_back(i);
        return out;
    }

    void check_index(NodeIndex i) const
    {
        if (i >= nodes_.size()) throw std::invalid_argument("node index out of range");
    }

    friend bool operator==(const Cid& a, const Cid& b)
    {
        return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.info_links_ == b.info_links_;
    }

private:
    void insert_edge(NodeIndex from, NodeIndex to, bool info)
    {
        check_index(from);
        check_index(to);
        if (from == to) throw std::invalid_argument("self-loop on '" + nodes_[from].label + "'");
        if (info && nodes_[to].kind != NodeKind::Decision)
            throw std::invalid_argument("information link into non-decision '" + nodes_[to].label + "'");
        if (edges_.contains({from, to})) {
            if (info) promote_to_info(from, to);
            return;
        }
        if (reaches_any_edge(to, from))
            throw std::invalid_argument("edge " + nodes_[from].label + "->" + nodes_[to].label +
                                        " would create a cycle");
        edges_.insert({from, to});
        if (info) {
            info_links_.insert({from, to});
        } else {
            children_[from].push_back(to);
            std::sort(children_[from].begin(), children_[from].end());
        }
        parents_[to].push_back(from);
        std::sort(parents_[to].begin(), parents_[to].end());
    }

    void promote_to_info(NodeIndex from, NodeIndex to)
    {
        if (info_links_.insert({from, to}).second) std::erase(children_[from], to);
    }

    // Reachability over all edges, used only for the cycle check.
    [[nodiscard]] bool reaches_any_edge(NodeIndex src, NodeIndex dst) const
    {
        std::vector<bool> seen(nodes_.size(), false);
        std::vector<NodeIndex> stack{src};
        while (!stack.empty()) {
            NodeIndex u = stack.back();
            stack.pop_back();
            if (u == dst) return true;
            if (seen[u]) continue;
            seen[u] = true;
            for (const auto& [a, b] : edges_)
                if (a == u && !seen[b]) stack.push_back(b);
        }
        return false;
    }

    std::vector<Node> nodes_;
    std::set<Edge> edges_;
    std::set<Edge> info_links_;
    std::vector<std::vector<NodeIndex>> children_;
    std::vector<std::vector<NodeIndex>> parents_;
};

/// A Cid with some causal edges deleted. Node set is that of the base.
class EdgeSubgraph {
public:
    explicit EdgeSubgraph(Cid base, std::set<Edge> removed = {}) : base_(std::move(base)), removed_(std::move(removed))
    {
        for (const auto& e : removed_) {
            if (!base_.has_edge(e.first, e.second) || base_.is_info_link(e.first, e.second))
                throw std::invalid_argument("removed edge is not a causal edge of the base graph");
        }
        children_.resize(base_.node_count());
        for (NodeIndex i = 0; i < base_.node_count(); ++i)
            for (NodeIndex c : base_.causal_children(i))
                if (!removed_.contains({i, c})) children_[i].push_back(c);
    }

    [[nodiscard]] const Cid& base() const noexcept { return base_; }
    [[nodiscard]] const std::set<Edge>& removed_edges() const noexcept { return removed_; }
    [[nodiscard]] bool is_removed(NodeIndex u, NodeIndex v) const { return removed_.contains({u, v}); }

    [[nodiscard]] std::size_t node_count() const noexcept { return base_.node_count(); }
    [[nodiscard]] NodeKind kind(NodeIndex i) const { return base_.kind(i); }
    [[nodiscard]] const std::string& label(NodeIndex i) const { return base_.label(i); }
    [[nodiscard]] const std::vector<NodeIndex>& causal_children(NodeIndex i) const { return children_.at(i); }
    [[nodiscard]] std::vector<NodeIndex> nodes_of_kind(NodeKind k) const { return base_.nodes_of_kind(k); }
    void check_index(NodeIndex i) const { base_.check_index(i); }

    /// The surviving graph as a standalone Cid (info links kept).
    [[nodiscard]] Cid to_cid() const
    {
        Cid out;
        for (const auto& n : base_.nodes()) out.add_node(n.label, n.kind, n.tag);
        for (const auto& [u, v] : base_.edges()) {
            if (base_.is_info_link(u, v))
                out.add_info_link(u, v);
            else if (!removed_.contains({u, v}))
                out.add_edge(u, v);
        }
        return out;
    }

private:
    Cid base_;
    std::set<Edge> removed_;
    std::vector<std::vector<NodeIndex>> children_;
};

/// Read-only view the path queries run on: a Cid or an EdgeSubgraph.
template <class G>
concept CausalGraph = requires(const G& g, NodeIndex i) {
    { g.node_count() } -> std::convertible_to<std::size_t>;
    { g.kind(i) } -> std::same_as<NodeKind>;
    { g.causal_children(i) } -> std::convertible_to<const std::vector<NodeIndex>&>;
    g.check_index(i);
};

static_assert(CausalGraph<Cid>);
static_assert(CausalGraph<EdgeSubgraph>);

/// Nodes reachable from `from` along causal edges, `from` included.
template <CausalGraph G>
[[nodiscard]] std::vector<bool> reachable_from(const G& g, NodeIndex from)
{
    g.check_index(from);
    std::vector<bool> seen(g.node_count(), false);
    std::vector<NodeIndex> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
        NodeIndex u = stack.back();
        stack.pop_back();
        for (NodeIndex c : g.causal_children(u)) {
            if (!seen[c]) {
                seen[c] = true;
                stack.push_back(c);
            }
        }
    }
    return seen;
}

/// Nodes with a causal path into `target`, `target` included.
template <CausalGraph G>
[[nodiscard]] std::vector<bool> reaching_to(const G& g, NodeIndex target)
{
    g.check_index(target);
    const std::size_t n = g.node_count();
    std::vector<std::vector<NodeIndex>> rev(n);
    for (NodeIndex u = 0; u < n; ++u)
        for (NodeIndex c : g.causal_children(u)) rev[c].push_back(u);
    std::vector<bool> seen(n, false);
    std::vector<NodeIndex> stack{target};
    seen[target] = true;
    while (!stack.empty()) {
        NodeIndex u = stack.back();
        stack.pop_back();
        for (NodeIndex p : rev[u]) {
            if (!seen[p]) {
                seen[p] = true;
                stack.push_back(p);
            }
        }
    }
    return seen;
}

/// True iff a causal path leads from `from` to some node in `to`, passing
/// through `via` when given. A node reaches itself by the empty path, so
/// via == from means "any path from -> to".
template <CausalGraph G>
[[nodiscard]] bool directed_path_exists(const G& g, NodeIndex from, std::span<const NodeIndex> to,
                                        std::optional<NodeIndex> via = std::nullopt)
{
    for (NodeIndex t : to) g.check_index(t);
    NodeIndex start = from;
    if (via) {
        if (!reachable_from(g, from)[*via]) return false;
        start = *via;
    }
    const auto seen = reachable_from(g, start);
    return std::any_of(to.begin(), to.end(), [&](NodeIndex t) { return seen[t]; });
}

template <CausalGraph G>
[[nodiscard]] bool directed_path_exists(const G& g, NodeIndex from, NodeIndex to,
                                        std::optional<NodeIndex> via = std::nullopt)
{
    return directed_path_exists(g, from, std::span<const NodeIndex>(&to, 1), via);
}

/// Graphical instrumental-control-incentive test for a single decision: a
/// causal path decision -> x -> some utility node.
template <CausalGraph G>
[[nodiscard]] bool admits_ici(const G& g, NodeIndex decision, NodeIndex x)
{
    g.check_index(decision);
    g.check_index(x);
    if (g.kind(decision) != NodeKind::Decision)
        throw std::invalid_argument("admits_ici: first argument is not a decision node");
    const auto utilities = g.nodes_of_kind(NodeKind::Utility);
    return directed_path_exists(g, decision, std::span<const NodeIndex>(utilities), x);
}

template <CausalGraph G>
[[nodiscard]] std::vector<NodeIndex> topological_order(const G& g)
{
    const std::size_t n = g.node_count();
    std::vector<std::size_t> indeg(n, 0);
    for (NodeIndex u = 0; u < n; ++u)
        for (NodeIndex c : g.causal_children(u)) ++indeg[c];
    std::vector<NodeIndex> ready;
    for (NodeIndex u = n; u-- > 0;)
        if (indeg[u] == 0) ready.push_back(u);
    std::vector<NodeIndex> order;
    while (!ready.empty()) {
        NodeIndex u = ready.back();
        ready.pop_back();
        order.push_back(u);
        for (NodeIndex c : g.causal_children(u))
            if (--indeg[c] == 0) ready.push_back(c);
    }
    if (order.size() != n) throw std::logic_error("graph has a cycle");
    return order;
}

/// Topological order over all edges, information links included. This is the
/// evaluation order of a structural model.
[[nodiscard]] inline std::vector<NodeIndex> evaluation_order(const Cid& g)
{
    const std::size_t n = g.node_count();
    std::vector<std::size_t> indeg(n, 0);
    for (NodeIndex v = 0; v < n; ++v) indeg[v] = g.parents(v).size();
    std::vector<std::vector<NodeIndex>> out(n);
    for (const auto& [u, v] : g.edges()) out[u].push_back(v);
    std::set<NodeIndex> ready;
    for (NodeIndex u = 0; u < n; ++u)
        if (indeg[u] == 0) ready.insert(u);
    std::vector<NodeIndex> order;
    while (!ready.empty()) {
        NodeIndex u = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(u);
        for (NodeIndex c : out[u])
            if (--indeg[c] == 0) ready.insert(c);
    }
    if (order.size() != n) throw std::logic_error("graph has a cycle");
    return order;
}

[[nodiscard]] inline std::string tagged_label(Family f, int t)
{
    return std::string(to_string(f)) + std::to_string(t);
}

/// The general delicate T-step MDP diagram: S_t, Z_t, R_t for 0 <= t <= T
/// and A_t for t < T. R_0 is observed before the first decision and is a
/// chance node; later rewards are utilities.
[[nodiscard]] inline Cid build_delicate_mdp_cid(int horizon)
{
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    Cid g;
    for (int t = 0; t <= horizon; ++t) {
        g.add_node(tagged_label(Family::S, t), NodeKind::Chance, NodeTag{Family::S, t});
        g.add_node(tagged_label(Family::Z, t), NodeKind::Chance, NodeTag{Family::Z, t});
        g.add_node(tagged_label(Family::R, t), t == 0 ? NodeKind::Chance : NodeKind::Utility,
                   NodeTag{Family::R, t});
        if (t < horizon) g.add_node(tagged_label(Family::A, t), NodeKind::Decision, NodeTag{Family::A, t});
    }
    auto id = [&](Family f, int t) { return *g.find(f, t); };
    for (int t = 0; t <= horizon; ++t) {
        g.add_edge(id(Family::S, t), id(Family::R, t));
        g.add_edge(id(Family::Z, t), id(Family::R, t));
        if (t >= 1) g.add_edge(id(Family::A, t - 1), id(Family::R, t));
        if (t < horizon) {
            for (Family src : {Family::A, Family::S, Family::Z}) {
                g.add_edge(id(src, t), id(Family::S, t + 1));
                g.add_edge(id(src, t), id(Family::Z, t + 1));
            }
            for (Family obs : {Family::S, Family::Z, Family::R}) g.add_info_link(id(obs, t), id(Family::A, t));
        }
    }
    return g;
}

/// Delicate nodes downstream of a decision at `decision_time`: every Z_t'
/// with t' > decision_time.
[[nodiscard]] inline std::vector<NodeIndex> delicate_nodes_after(const Cid& g, int decision_time)
{
    std::vector<NodeIndex> out;
    for (NodeIndex i = 0; i < g.node_count(); ++i) {
        const auto& tag = g.node(i).tag;
        if (tag && tag->family == Family::Z && tag->t > decision_time) out.push_back(i);
    }
    return out;
}

/// Removes every edge A_{t'} -> Z_{t'+1} and S_{t'} -> Z_{t'+1} that ends in
/// one of `delicate`. With delicate = {Z_t' : t' > decision_time} this leaves
/// no causal path from A_{decision_time} into the delicate state.
[[nodiscard]] inline EdgeSubgraph cut_delicate_paths(const Cid& g, int decision_time,
                                                     std::span<const NodeIndex> delicate)
{
    std::set<Edge> removed;
    for (NodeIndex z : delicate) {
        g.check_index(z);
        const auto& tag = g.node(z).tag;
        if (!tag || tag->family != Family::Z)
            throw std::invalid_argument("cut_delicate_paths: '" + g.label(z) + "' is not a tagged Z node");
        if (tag->t <= decision_time)
            throw std::invalid_argument("cut_delicate_paths: '" + g.label(z) + "' precedes the decision");
        for (NodeIndex p : g.parents(z)) {
            const auto& ptag = g.node(p).tag;
            if (!ptag) continue;
            if ((ptag->family == Family::A || ptag->family == Family::S) && ptag->t == tag->t - 1 &&
                !g.is_info_link(p, z))
                removed.insert({p, z});
        }
    }
    return EdgeSubgraph(g, std::move(removed));
}

[[nodiscard]] inline EdgeSubgraph cut_delicate_paths(const Cid& g, int decision_time)
{
    const auto delicate = delicate_nodes_after(g, decision_time);
    return cut_delicate_paths(g, decision_time, delicate);
}

/// Nodes W != x that split a cut path from a kept path: x reaches W in g,
/// some W -> y path uses a removed edge, and some W -> y path survives in
/// `sub`. A non-empty result means the sub-graph-specific effect of x on y
/// is not experimentally identifiable.
[[nodiscard]] inline std::vector<NodeIndex> recanting_witnesses(const Cid& g, const EdgeSubgraph& sub,
                                                                NodeIndex x, NodeIndex y)
{
    g.check_index(x);
    g.check_index(y);
    if (!(sub.base() == g)) throw std::invalid_argument("edge-subgraph belongs to a different graph");
    const auto from_x = reachable_from(g, x);
    const auto to_y_full = reaching_to(g, y);
    const auto to_y_kept = reaching_to(sub, y);

    std::vector<NodeIndex> out;
    for (NodeIndex w = 0; w < g.node_count(); ++w) {
        if (w == x || !from_x[w] || !to_y_kept[w]) continue;
        const auto from_w = reachable_from(g, w);
        const bool uses_cut = std::any_of(sub.removed_edges().begin(), sub.removed_edges().end(),
                                          [&](const Edge& e) { return from_w[e.first] && to_y_full[e.second]; });
        if (uses_cut) out.push_back(w);
    }
    return out;
}

[[nodiscard]] inline bool has_recanting_witness(const Cid& g, const EdgeSubgraph& sub, NodeIndex x, NodeIndex y)
{
    return !recanting_witnesses(g, sub, x, y).empty();
}

}  // namespace psolab
