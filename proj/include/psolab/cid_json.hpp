#pragma once

// JSON layout:
//   { "nodes": [ {"label": "Z1", "kind": "chance", "family": "Z", "t": 1}, ... ],
//     "edges": [ ["A0", "Z1"], ... ],
//     "info_links": [ ["S0", "A0"], ... ] }
// `family` and `t` are optional but must appear together. On write, `edges`
// holds causal edges only; on read an info link may also be repeated in
// `edges`.

#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "psolab/cid.hpp"

namespace psolab {

class GraphParseError : public std::runtime_error {
public:
    GraphParseError(const std::string& what, std::size_t line, std::size_t column)
        : std::runtime_error(what), line_(line), column_(column)
    {
    }
    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

namespace detail {

inline NodeKind parse_kind(const std::string& s)
{
    if (s == "decision") return NodeKind::Decision;
    if (s == "utility") return NodeKind::Utility;
    if (s == "chance") return NodeKind::Chance;
    throw std::invalid_argument("unknown node kind '" + s + "'");
}

inline Family parse_family(const std::string& s)
{
    if (s == "S") return Family::S;
    if (s == "Z") return Family::Z;
    if (s == "A") return Family::A;
    if (s == "R") return Family::R;
    throw std::invalid_argument("unknown node family '" + s + "'");
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace detail

[[nodiscard]] inline nlohmann::json cid_to_json(const Cid& g)
{
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : g.nodes()) {
        nlohmann::json j{{"label", n.label}, {"kind", to_string(n.kind)}};
        if (n.tag) {
            j["family"] = to_string(n.tag->family);
            j["t"] = n.tag->t;
        }
        nodes.push_back(std::move(j));
    }
    nlohmann::json edges = nlohmann::json::array();
    nlohmann::json info = nlohmann::json::array();
    for (const auto& [u, v] : g.edges()) {
        auto pair = nlohmann::json::array({g.label(u), g.label(v)});
        (g.is_info_link(u, v) ? info : edges).push_back(std::move(pair));
    }
    return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"info_links", std::move(info)}};
}

/// Builds a Cid from parsed JSON. Structural problems (unknown labels,
/// cycles, bad kinds) are reported as std::invalid_argument.
[[nodiscard]] inline Cid cid_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("nodes")) throw std::invalid_argument("graph JSON needs a 'nodes' array");
    Cid g;
    for (const auto& n : j.at("nodes")) {
        std::optional<NodeTag> tag;
        if (n.contains("family") != n.contains("t"))
            throw std::invalid_argument("node '" + n.value("label", std::string{}) +
                                        "': 'family' and 't' must be given together");
        if (n.contains("family"))
            tag = NodeTag{detail::parse_family(n.at("family").get<std::string>()), n.at("t").get<int>()};
        g.add_node(n.at("label").get<std::string>(), detail::parse_kind(n.at("kind").get<std::string>()), tag);
    }
    auto read_pairs = [&](const char* key, bool info) {
        if (!j.contains(key)) return;
        for (const auto& e : j.at(key)) {
            if (!e.is_array() || e.size() != 2)
                throw std::invalid_argument(std::string(key) + " entries must be [from, to] pairs");
            const auto from = e[0].get<std::string>();
            const auto to = e[1].get<std::string>();
            if (info)
                g.add_info_link(from, to);
            else if (g.kind(g.at(to)) == NodeKind::Decision)
                g.add_info_link(from, to);
            else
                g.add_edge(from, to);
        }
    };
    read_pairs("edges", false);
    read_pairs("info_links", true);
    return g;
}

/// Parses graph text; malformed JSON raises GraphParseError with the line
/// and column of the offending byte.
[[nodiscard]] inline Cid parse_cid(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
        const auto [line, col] = detail::line_column(text, byte);
        throw GraphParseError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                                  e.what(),
                              line, col);
    }
    try {
        return cid_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("graph JSON: ") + e.what());
    }
}

[[nodiscard]] inline Cid load_cid(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_cid(ss.str());
}

inline void save_cid(const Cid& g, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write graph file '" + path + "'");
    out << cid_to_json(g).dump(2) << '\n';
}

}  // namespace psolab
