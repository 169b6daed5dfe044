#include <gtest/gtest.h>

#include <string>

#include "psolab/cid_json.hpp"

using namespace psolab;

TEST(CidJson, RoundTripsDelicateGraph)
{
    const auto g = build_delicate_mdp_cid(3);
    const auto back = cid_from_json(nlohmann::json::parse(cid_to_json(g).dump()));
    EXPECT_TRUE(back == g);
}

TEST(CidJson, LoadsShippedGraphs)
{
    const std::string dir = PSOLAB_DATA_DIR "/graphs/";
    const auto a = load_cid(dir + "fig1a.json");
    EXPECT_TRUE(admits_ici(a, a.at("A"), a.at("Z")));
    const auto b = load_cid(dir + "fig1b.json");
    EXPECT_FALSE(admits_ici(b, b.at("A"), b.at("Z")));
    EXPECT_TRUE(load_cid(dir + "delicate_mdp_h2.json") == build_delicate_mdp_cid(2));
}

TEST(CidJson, EdgeIntoDecisionIsAnInfoLink)
{
    const auto g = parse_cid(R"({"nodes":[{"label":"X","kind":"chance"},{"label":"A","kind":"decision"}],
                                 "edges":[["X","A"]]})");
    EXPECT_TRUE(g.is_info_link(g.at("X"), g.at("A")));
}

TEST(CidJson, MalformedTextReportsLine)
{
    const std::string text = "{\n  \"nodes\": [\n    {\"label\": \"A\" \"kind\": \"decision\"}\n  ]\n}\n";
    try {
        (void)parse_cid(text);
        FAIL() << "expected a parse error";
    } catch (const GraphParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(CidJson, StructuralErrors)
{
    EXPECT_THROW((void)parse_cid(R"({"edges":[]})"), std::invalid_argument);
    EXPECT_THROW((void)parse_cid(R"({"nodes":[{"label":"A","kind":"oracle"}]})"), std::invalid_argument);
    EXPECT_THROW((void)parse_cid(R"({"nodes":[{"label":"A","kind":"chance"}],"edges":[["A","B"]]})"),
                 std::invalid_argument);
    EXPECT_THROW((void)parse_cid(R"({"nodes":[{"label":"A","kind":"chance","family":"S"}]})"),
                 std::invalid_argument);
    EXPECT_THROW((void)load_cid("/nonexistent/graph.json"), std::runtime_error);
}
