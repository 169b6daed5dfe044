#pragma once

// Text report on a causal influence diagram: instrumental control
// incentives per decision, and optionally the delicate-state surgery with
// its identifiability verdicts.

#include <optional>
#include <string>
#include <vector>

#include "psolab/cid.hpp"

namespace psolab::harness {

namespace detail {

template <CausalGraph G>
std::string ici_lines(const G& g, const Cid& base, NodeIndex decision)
{
    std::string out;
    for (NodeIndex x = 0; x < base.node_count(); ++x) {
        if (x == decision || base.kind(x) == NodeKind::Utility) continue;
        out += "  ICI on " + base.label(x) + ": " + (admits_ici(g, decision, x) ? "yes" : "no") + "\n";
    }
    return out;
}

}  // namespace detail

/// Verdict on the sub-graph-specific effect of `x` on `y` in `sub`.
[[nodiscard]] inline std::string identifiability_verdict(const Cid& g, const EdgeSubgraph& sub, NodeIndex x,
                                                         NodeIndex y)
{
    const auto w = recanting_witnesses(g, sub, x, y);
    if (w.empty()) return "identifiable";
    std::string out = "not experimentally identifiable; witness " + g.label(w.front());
    if (w.size() > 1) {
        out += " (also";
        for (std::size_t i = 1; i < w.size(); ++i) out += (i > 1 ? ", " : " ") + g.label(w[i]);
        out += ")";
    }
    return out;
}

/// `decision`: label of one decision node, or every decision when absent.
/// With `surgery`, the decision must carry a timestep tag.
[[nodiscard]] inline std::string cid_report(const Cid& g, const std::optional<std::string>& decision, bool surgery)
{
    std::vector<NodeIndex> decisions;
    if (decision) {
        const NodeIndex d = g.at(*decision);
        if (g.kind(d) != NodeKind::Decision) throw std::invalid_argument("'" + *decision + "' is not a decision node");
        decisions.push_back(d);
    } else {
        decisions = g.nodes_of_kind(NodeKind::Decision);
    }
    if (decisions.empty()) throw std::invalid_argument("graph has no decision node");

    std::string out;
    for (NodeIndex d : decisions) {
        out += "decision " + g.label(d) + "\n";
        out += detail::ici_lines(g, g, d);
        if (!surgery) continue;
        const auto& tag = g.node(d).tag;
        if (!tag) throw std::invalid_argument("surgery needs a timestep tag on decision '" + g.label(d) + "'");
        const auto sub = cut_delicate_paths(g, tag->t);
        out += "surgery removes:";
        if (sub.removed_edges().empty()) out += " (nothing)";
        for (const auto& [u, v] : sub.removed_edges()) out += " " + g.label(u) + "->" + g.label(v);
        out += "\nafter surgery\n";
        out += detail::ici_lines(sub, g, d);
        for (NodeIndex y : g.nodes_of_kind(NodeKind::Utility))
            if (directed_path_exists(g, d, y))
                out += "  effect of " + g.label(d) + " on " + g.label(y) + ": " + identifiability_verdict(g, sub, d, y) +
                       "\n";
    }
    return out;
}

}  // namespace psolab::harness
