#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "psolab/cid_json.hpp"
#include "psolab/harness/barging_run.hpp"
#include "psolab/harness/cid_report.hpp"
#include "psolab/harness/config.hpp"
#include "psolab/harness/contentrec_run.hpp"

using namespace psolab;
using namespace psolab::harness;

namespace {

std::filesystem::path scratch(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("psolab_harness_" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_contentrec()
{
    ExperimentConfig c;
    c.experiment = "contentrec";
    c.seeds = 2;
    c.steps = 30;
    c.population = 5;
    c.threads = 1;
    return c;
}

class HarnessTest : public ::testing::Test {
protected:
    void SetUp() override { unsetenv("PSOLAB_SEED"); }
};

}  // namespace

TEST_F(HarnessTest, DefaultsMatchHyperparameterTable)
{
    const ExperimentConfig c;
    EXPECT_EQ(c.users, 10);
    EXPECT_EQ(c.articles, 10);
    EXPECT_EQ(c.population, 20);
    EXPECT_EQ(c.init_scale, 0.03);
    EXPECT_EQ(c.loyalty_rate, 0.03);
    EXPECT_EQ(c.preference_rate, 0.003);
    EXPECT_EQ(c.hidden, 100);
    EXPECT_EQ(c.lr, 0.01);
    EXPECT_EQ(c.rho, 0.1);
    EXPECT_EQ(c.batch, 10);
    EXPECT_EQ(c.steps, 2000);
    EXPECT_EQ(c.pbt_interval, 10);
    EXPECT_EQ(c.seeds, 100);
    EXPECT_EQ(c.epsilon, 0.1);
    EXPECT_EQ(c.horizon_cap, 20);
}

TEST_F(HarnessTest, ConfigRoundTrip)
{
    ExperimentConfig c;
    EXPECT_EQ(from_config_text(to_config_text(c)), c);
    c.experiment = "contentrec";
    c.scheme = "random-policy";
    c.out = "runs/a b";
    c.base_seed = 18446744073709551615ull;
    c.epsilon = 0.1 + 0.2;
    c.lr = 1e-7 / 3;
    c.steps = 17;
    c.epsilon_convention = "uniform";
    const auto text = to_config_text(c);
    EXPECT_EQ(from_config_text(text), c) << text;
    EXPECT_THROW((void)from_config_text("seeds = many\n"), std::invalid_argument);
}

TEST_F(HarnessTest, Presets)
{
    EXPECT_EQ(preset("desk").seeds, 20);
    EXPECT_EQ(preset("desk").steps, 500);
    EXPECT_EQ(preset("paper").seeds, 100);
    EXPECT_EQ(preset("paper").steps, 2000);
    EXPECT_THROW((void)preset("huge"), std::invalid_argument);
}

TEST_F(HarnessTest, BargingRows)
{
    ExperimentConfig c;
    const auto rep = run_barging_scheme(c, "fixed");
    const auto csv = barging_csv(rep);
    EXPECT_EQ(csv.rfind("# schema_version=1\nagent,policy_description,E_U,E_U_pso,E_U_oracle\n", 0), 0u);
    EXPECT_NE(csv.find("\nstandard,\"B,S\",10,,-1\n"), std::string::npos) << csv;
    EXPECT_NE(csv.find("\npso-det,L,1,1,1\n"), std::string::npos) << csv;
    ASSERT_EQ(rep.rows.size(), 3u);
    EXPECT_EQ(rep.rows[2].policy_description, "adaptive");
    EXPECT_NEAR(rep.rows[2].e_u, 1.4487, 1e-4);
    EXPECT_NEAR(rep.rows[2].e_u_oracle, 0.8698, 1e-4);
    EXPECT_EQ(rep.convention.convention, agents::EpsilonConvention::non_greedy);

    const auto log = barging_log(c, rep);
    EXPECT_NE(log.find("epsilon_convention=non-greedy (selected"), std::string::npos) << log;
    EXPECT_NE(log.find("uniform: E_U=1.29"), std::string::npos) << log;

    for (const auto& scheme : {"policy", "state"}) {
        const auto r = run_barging_scheme(c, scheme);
        EXPECT_EQ(r.rows[1].policy_description, "L");
        EXPECT_EQ(*r.rows[1].e_u_pso, 1.0);
    }
    EXPECT_THROW((void)run_barging_scheme(c, "bogus"), std::invalid_argument);
}

TEST_F(HarnessTest, EpsilonZeroRowEqualsDeterministicRow)
{
    ExperimentConfig c;
    c.epsilon = 0.0;
    const auto rep = run_barging_scheme(c, "fixed");
    EXPECT_EQ(rep.rows[1].policy_description, rep.rows[2].policy_description);
    EXPECT_EQ(rep.rows[1].e_u, rep.rows[2].e_u);
    EXPECT_EQ(rep.rows[1].e_u_pso, rep.rows[2].e_u_pso);
    EXPECT_EQ(rep.rows[1].e_u_oracle, rep.rows[2].e_u_oracle);
}

TEST_F(HarnessTest, ConfiguredConventionOverridesSelection)
{
    ExperimentConfig c;
    c.epsilon_convention = "uniform";
    const auto rep = run_barging_scheme(c, "fixed");
    EXPECT_NEAR(rep.rows[2].e_u, 1.2996, 1e-4);
    c.epsilon_convention = "sideways";
    EXPECT_THROW((void)run_barging_scheme(c, "fixed"), std::invalid_argument);
}

TEST_F(HarnessTest, BargingWritesFiles)
{
    ExperimentConfig c;
    c.out = scratch("barging").string();
    const auto reps = run_barging(c);
    EXPECT_EQ(reps.size(), 3u);
    for (const auto* s : {"fixed", "policy", "state"}) {
        EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.out) / (std::string("barging_") + s + ".csv")));
        EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.out) / (std::string("barging_") + s + ".log")));
    }
}

TEST_F(HarnessTest, ContentRecDeterministicCsv)
{
    auto c = small_contentrec();
    c.scheme = "fixed";
    c.out = scratch("cr1").string();
    (void)run_contentrec(c);
    const auto first = slurp(std::filesystem::path(c.out) / "contentrec_fixed.csv");
    c.out = scratch("cr2").string();
    c.threads = 2;
    (void)run_contentrec(c);
    const auto second = slurp(std::filesystem::path(c.out) / "contentrec_fixed.csv");
    EXPECT_FALSE(first.empty());
    EXPECT_EQ(first, second);
    EXPECT_EQ(first.rfind("# schema_version=1\nseed,step,scheme,metric,value\n", 0), 0u);
    EXPECT_EQ(first.find('\r'), std::string::npos);
}

TEST_F(HarnessTest, ContentRecStepZeroAndRows)
{
    const auto c = small_contentrec();
    const auto res = run_contentrec_scheme(c, "ordinary");
    ASSERT_EQ(res.seeds.size(), 2u);
    for (const auto& s : res.seeds) {
        ASSERT_EQ(s.steps.size(), 31u);
        EXPECT_EQ(s.steps[0].drift, 0.0);
        EXPECT_EQ(s.steps[0].kl, 0.0);
        for (std::size_t t = 1; t < s.steps.size(); ++t) {
            EXPECT_GE(s.steps[t].accuracy, 0.0);
            EXPECT_LE(s.steps[t].accuracy, 1.0);
        }
    }
    const auto csv = contentrec_csv(res);
    EXPECT_NE(csv.find("\n0,0,ordinary,cosine_drift,0\n0,0,ordinary,kl_loyalty,0\n"), std::string::npos);
    EXPECT_EQ(csv.find("0,0,ordinary,accuracy"), std::string::npos);
    EXPECT_NE(csv.find("\n1,30,ordinary,accuracy,"), std::string::npos);
    // header + schema + 2 seeds * (2 + 30 * 3) rows
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2 + 2 * (2 + 30 * 3));
}

TEST_F(HarnessTest, RandomPolicyDrifts)
{
    auto c = small_contentrec();
    c.steps = 200;
    const auto res = run_contentrec_scheme(c, "random-policy");
    for (const auto& s : res.seeds) EXPECT_GT(s.steps.back().drift, 0.0);
}

TEST_F(HarnessTest, SchemesShareSeedNoise)
{
    // Random-policy ignores the scheme entirely, so its first step matches
    // any other run's step-0 state; different seeds differ.
    const auto c = small_contentrec();
    const auto a = run_contentrec_seed(c, "random-policy", 0);
    const auto b = run_contentrec_seed(c, "random-policy", 0);
    const auto d = run_contentrec_seed(c, "random-policy", 1);
    EXPECT_EQ(a.steps.back().drift, b.steps.back().drift);
    EXPECT_NE(a.steps.back().drift, d.steps.back().drift);
}

TEST_F(HarnessTest, IoErrorsNameThePath)
{
    auto c = small_contentrec();
    c.steps = 1;
    c.seeds = 1;
    c.scheme = "ordinary";
    const auto blocker = scratch("blocker");
    write_file(blocker, "x");
    c.out = (blocker / "sub").string();
    try {
        (void)run_contentrec(c);
        FAIL() << "expected an I/O error";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("psolab_harness_blocker"), std::string::npos) << e.what();
    }
}

TEST_F(HarnessTest, SeedsRunInParallelWithoutChangingResults)
{
    auto c = small_contentrec();
    c.seeds = 4;
    c.scheme = "state";
    const auto one = run_contentrec_scheme(c, "state");
    c.threads = 3;
    const auto three = run_contentrec_scheme(c, "state");
    EXPECT_EQ(contentrec_csv(one), contentrec_csv(three));
}

TEST_F(HarnessTest, CidReportOnDelicateMdp)
{
    const auto g = load_cid(std::string(PSOLAB_DATA_DIR) + "/graphs/delicate_mdp_h2.json");
    const auto plain = cid_report(g, std::string("A0"), false);
    EXPECT_NE(plain.find("ICI on Z1: yes"), std::string::npos) << plain;

    const auto cut = cid_report(g, std::string("A0"), true);
    const auto after = cut.substr(cut.find("after surgery"));
    EXPECT_NE(after.find("ICI on Z1: no"), std::string::npos) << cut;
    EXPECT_NE(after.find("ICI on Z2: no"), std::string::npos) << cut;
    EXPECT_NE(cut.find("A0->Z1"), std::string::npos);
    EXPECT_NE(cut.find("S0->Z1"), std::string::npos);
    EXPECT_NE(cut.find("effect of A0 on R2: not experimentally identifiable; witness S1"), std::string::npos) << cut;
    EXPECT_NE(cut.find("effect of A0 on R1: identifiable"), std::string::npos) << cut;
}

TEST_F(HarnessTest, CidReportEmptySurgery)
{
    Cid g;
    const auto a = g.add_node("A0", NodeKind::Decision, NodeTag{Family::A, 0});
    const auto s = g.add_node("S1", NodeKind::Chance, NodeTag{Family::S, 1});
    const auto r = g.add_node("R1", NodeKind::Utility, NodeTag{Family::R, 1});
    g.add_edge(a, s);
    g.add_edge(s, r);
    const auto rep = cid_report(g, std::nullopt, true);
    EXPECT_NE(rep.find("surgery removes: (nothing)"), std::string::npos) << rep;
    EXPECT_NE(rep.find("effect of A0 on R1: identifiable"), std::string::npos) << rep;

    Cid untagged;
    untagged.add_node("D", NodeKind::Decision);
    EXPECT_THROW((void)cid_report(untagged, std::nullopt, true), std::invalid_argument);
    EXPECT_THROW((void)cid_report(g, std::string("S1"), false), std::invalid_argument);
}
