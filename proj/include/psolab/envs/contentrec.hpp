#pragma once

// Content recommendation with drifting users.
//
// M article types, K user types. W (M x K) holds click probabilities: column
// x is user type x's preference over articles and sums to one. g is the
// distribution of user types ("loyalty"); X is the batch of users the agent
// is shown this step. Clicked users become more loyal, and every user type
// shown an article becomes more interested in it. W is the delicate state;
// g and X are robust.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "psolab/noise.hpp"
#include "psolab/pso.hpp"

namespace psolab::contentrec {

struct Config {
    int users = 10;                 // K
    int articles = 10;              // M
    int batch = 10;
    double loyalty_rate = 0.03;     // alpha_1
    double preference_rate = 0.003;
    double init_scale = 0.03;
};

struct State {
    Eigen::MatrixXd W;   // articles x users, column-stochastic
    Eigen::VectorXd g;   // user-type distribution
    std::vector<int> X;  // users in the current batch
    int t = 0;
};

class UndefinedMetric : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace noise_name {
inline constexpr std::string_view init = "init-preferences";
inline constexpr std::string_view users = "users";
inline constexpr std::string_view click = "click";
inline constexpr std::string_view baseline_users = "baseline-users";
inline constexpr std::string_view baseline_articles = "baseline-articles";
}  // namespace noise_name

/// Adds `amount` to W(a, x) and rescales column x back onto the simplex.
inline void reinforce(Eigen::MatrixXd& W, int a, int x, double amount)
{
    W(a, x) += amount;
    W.col(x) /= W.col(x).sum();
}

class Env {
public:
    static constexpr bool enumerable = false;

    explicit Env(Config cfg = {}) : cfg_(cfg)
    {
        if (cfg_.users < 1 || cfg_.articles < 1 || cfg_.batch < 1)
            throw std::invalid_argument("content recommendation needs users, articles and a batch");
    }

    [[nodiscard]] const Config& config() const noexcept { return cfg_; }

    /// W columns are softmax(N(0, init_scale) logits); loyalty starts uniform.
    [[nodiscard]] State reset(const NoiseStream& noise) const
    {
        State st;
        st.W.resize(cfg_.articles, cfg_.users);
        for (int x = 0; x < cfg_.users; ++x) {
            for (int a = 0; a < cfg_.articles; ++a) {
                const auto slot = static_cast<std::uint64_t>(x * cfg_.articles + a);
                st.W(a, x) = std::exp(cfg_.init_scale * noise.normal(noise_name::init, 0, slot));
            }
            st.W.col(x) /= st.W.col(x).sum();
        }
        st.g = Eigen::VectorXd::Constant(cfg_.users, 1.0 / cfg_.users);
        st.X = sample_users(st.g, noise, 0);
        return st;
    }

    [[nodiscard]] std::vector<int> sample_users(const Eigen::VectorXd& g, const NoiseStream& noise,
                                                std::uint64_t t) const
    {
        std::vector<int> X(static_cast<std::size_t>(cfg_.batch));
        const std::span<const double> probs(g.data(), static_cast<std::size_t>(g.size()));
        for (int i = 0; i < cfg_.batch; ++i)
            X[static_cast<std::size_t>(i)] = noise.categorical(noise_name::users, t, static_cast<std::uint64_t>(i), probs);
        return X;
    }

    /// Clicks of the current batch on `actions` against preferences `W`.
    /// The uniform draw for slot i depends only on (t, i), so the same draws
    /// serve the actual world and any counterfactual W.
    [[nodiscard]] std::vector<int> clicks(const Eigen::MatrixXd& W, std::span<const int> X,
                                          std::span<const int> actions, const NoiseStream& noise,
                                          std::uint64_t t) const
    {
        check_actions(actions);
        std::vector<int> out(actions.size());
        for (std::size_t i = 0; i < actions.size(); ++i)
            out[i] = noise.uniform(noise_name::click, t, i) < W(actions[i], X[i]) ? 1 : 0;
        return out;
    }

    /// Preference dynamics alone: each shown (article, user) pair is
    /// reinforced in slot order.
    [[nodiscard]] Eigen::MatrixXd delicate_step(const Eigen::MatrixXd& W, std::span<const int> X,
                                                std::span<const int> actions) const
    {
        check_actions(actions);
        Eigen::MatrixXd out = W;
        for (std::size_t i = 0; i < actions.size(); ++i) reinforce(out, actions[i], X[i], cfg_.preference_rate);
        return out;
    }

    /// Advances `st` one step and returns the clicks.
    std::vector<int> step(State& st, std::span<const int> actions, const NoiseStream& noise) const
    {
        const auto t = static_cast<std::uint64_t>(st.t);
        auto c = clicks(st.W, st.X, actions, noise, t);
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c[i]) st.g[st.X[i]] += cfg_.loyalty_rate;
        st.g /= st.g.sum();
        st.W = delicate_step(st.W, st.X, actions);
        ++st.t;
        st.X = sample_users(st.g, noise, t + 1);
        return c;
    }

    void check_actions(std::span<const int> actions) const
    {
        if (static_cast<int>(actions.size()) != cfg_.batch) throw std::invalid_argument("one action per batch slot");
        for (int a : actions)
            if (a < 0 || a >= cfg_.articles) throw std::invalid_argument("article index out of range");
    }

private:
    Config cfg_;
};

/// How the counterfactual preference matrix evolves.
enum class WBaseline {
    fixed,            // W-bar = W_0
    uniform_policy,   // reinforce uniformly random articles for users drawn from g_0
    rich_get_richer,  // each user's favourite article gains a little every step
};

[[nodiscard]] inline WBaseline w_baseline(const BaselineScheme& scheme)
{
    if (std::holds_alternative<FixedState>(scheme)) return WBaseline::fixed;
    if (std::holds_alternative<PolicyBaseline>(scheme)) return WBaseline::uniform_policy;
    if (std::holds_alternative<StateBaseline>(scheme)) return WBaseline::rich_get_richer;
    throw UnsupportedScheme("content recommendation has no counterfactual W for the ordinary scheme");
}

/// One step of W-bar from time t to t + 1. Reads only W-bar, g_0 and its
/// own noise substreams: nothing the agent does can reach it.
inline void advance_counterfactual(const Env& env, WBaseline kind, Eigen::MatrixXd& Wbar, const Eigen::VectorXd& g0,
                                   const NoiseStream& noise, std::uint64_t t)
{
    const auto& cfg = env.config();
    switch (kind) {
    case WBaseline::fixed:
        return;
    case WBaseline::uniform_policy: {
        const std::span<const double> probs(g0.data(), static_cast<std::size_t>(g0.size()));
        for (int i = 0; i < cfg.batch; ++i) {
            const auto slot = static_cast<std::uint64_t>(i);
            const int x = noise.categorical(noise_name::baseline_users, t, slot, probs);
            const int a = static_cast<int>(noise.uniform(noise_name::baseline_articles, t, slot) * cfg.articles);
            reinforce(Wbar, a, x, cfg.preference_rate);
        }
        return;
    }
    case WBaseline::rich_get_richer:
        for (int x = 0; x < cfg.users; ++x) {
            Eigen::Index best = 0;
            Wbar.col(x).maxCoeff(&best);
            reinforce(Wbar, static_cast<int>(best), x, cfg.preference_rate);
        }
        return;
    }
}

/// W-bar_0 .. W-bar_horizon.
[[nodiscard]] inline std::vector<Eigen::MatrixXd> counterfactual_W(const Env& env, const BaselineScheme& scheme,
                                                                   const Eigen::MatrixXd& W0, const Eigen::VectorXd& g0,
                                                                   int horizon, const NoiseStream& noise)
{
    const WBaseline kind = w_baseline(scheme);
    std::vector<Eigen::MatrixXd> out{W0};
    Eigen::MatrixXd Wbar = W0;
    for (int t = 0; t < horizon; ++t) {
        advance_counterfactual(env, kind, Wbar, g0, noise, static_cast<std::uint64_t>(t));
        out.push_back(Wbar);
    }
    return out;
}

/// The actual environment and its path-specific counterpart on shared
/// noise. Clicks in the second world use W-bar in place of W, with the
/// actual users, articles and uniform draws. Ordinary uses the actual W.
class TwinEnv {
public:
    struct Outcome {
        std::vector<int> clicks;
        std::vector<int> pso_clicks;
    };

    TwinEnv(const Env& env, const BaselineScheme& scheme, NoiseStream noise)
        : env_(&env), noise_(noise), state_(env.reset(noise)), initial_(state_)
    {
        if (!std::holds_alternative<Ordinary>(scheme)) {
            kind_ = w_baseline(scheme);
            Wbar_ = state_.W;
        }
    }

    [[nodiscard]] const State& state() const noexcept { return state_; }
    [[nodiscard]] const State& initial() const noexcept { return initial_; }
    [[nodiscard]] const Eigen::MatrixXd& counterfactual() const noexcept { return Wbar_ ? *Wbar_ : state_.W; }

    Outcome step(std::span<const int> actions)
    {
        const auto t = static_cast<std::uint64_t>(state_.t);
        Outcome out;
        if (Wbar_) out.pso_clicks = env_->clicks(*Wbar_, state_.X, actions, noise_, t);
        out.clicks = env_->step(state_, actions, noise_);
        if (Wbar_) advance_counterfactual(*env_, *kind_, *Wbar_, initial_.g, noise_, t);
        else out.pso_clicks = out.clicks;
        return out;
    }

private:
    const Env* env_;
    NoiseStream noise_;
    State state_;
    State initial_;
    std::optional<WBaseline> kind_;
    std::optional<Eigen::MatrixXd> Wbar_;
};

/// 1 - cos(vec W0, vec Wt).
[[nodiscard]] inline double cosine_drift(const Eigen::MatrixXd& W0, const Eigen::MatrixXd& Wt)
{
    if (W0.rows() != Wt.rows() || W0.cols() != Wt.cols()) throw std::invalid_argument("preference shapes differ");
    const double n0 = W0.norm();
    const double nt = Wt.norm();
    if (n0 == 0.0 || nt == 0.0) throw UndefinedMetric("cosine drift of a zero matrix");
    if (W0 == Wt) return 0.0;  // exact, free of rounding in the norms
    return 1.0 - W0.cwiseProduct(Wt).sum() / (n0 * nt);
}

/// KL(g0 || gt).
[[nodiscard]] inline double kl_loyalty(const Eigen::VectorXd& g0, const Eigen::VectorXd& gt)
{
    if (g0.size() != gt.size()) throw std::invalid_argument("loyalty shapes differ");
    if (g0.sum() == 0.0 || gt.sum() == 0.0) throw UndefinedMetric("KL divergence of a zero vector");
    double kl = 0.0;
    for (Eigen::Index k = 0; k < g0.size(); ++k)
        if (g0[k] > 0.0) kl += g0[k] * std::log(g0[k] / gt[k]);
    return kl;
}

struct Metrics {
    double cosine_drift = 0.0;
    double kl_loyalty = 0.0;
};

[[nodiscard]] inline Metrics metrics(const State& s0, const State& st)
{
    return {cosine_drift(s0.W, st.W), kl_loyalty(s0.g, st.g)};
}

[[nodiscard]] inline nlohmann::json to_json(const State& st)
{
    nlohmann::json W = nlohmann::json::array();
    for (Eigen::Index a = 0; a < st.W.rows(); ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index x = 0; x < st.W.cols(); ++x) row.push_back(st.W(a, x));
        W.push_back(std::move(row));
    }
    return {{"W", std::move(W)}, {"g", std::vector<double>(st.g.data(), st.g.data() + st.g.size())}, {"X", st.X},
            {"t", st.t}};
}

[[nodiscard]] inline State state_from_json(const nlohmann::json& j)
{
    State st;
    const auto& W = j.at("W");
    const auto rows = static_cast<Eigen::Index>(W.size());
    const auto cols = rows ? static_cast<Eigen::Index>(W.at(0).size()) : 0;
    st.W.resize(rows, cols);
    for (Eigen::Index a = 0; a < rows; ++a) {
        if (static_cast<Eigen::Index>(W.at(static_cast<std::size_t>(a)).size()) != cols)
            throw std::invalid_argument("ragged preference matrix");
        for (Eigen::Index x = 0; x < cols; ++x)
            st.W(a, x) = W.at(static_cast<std::size_t>(a)).at(static_cast<std::size_t>(x)).get<double>();
    }
    const auto g = j.at("g").get<std::vector<double>>();
    st.g = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
    st.X = j.at("X").get<std::vector<int>>();
    st.t = j.at("t").get<int>();
    return st;
}

}  // namespace psolab::contentrec
