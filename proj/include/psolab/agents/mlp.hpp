#pragma once

// One-hidden-layer ReLU network mapping a user to article logits, trained
// with momentum SGD on the click-weighted log-likelihood of the shown
// article (REINFORCE with click reward).

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "psolab/noise.hpp"

namespace psolab::agents {

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MlpConfig {
    int inputs = 10;   // K
    int hidden = 100;
    int outputs = 10;  // M
    double lr = 0.01;
    double rho = 0.1;  // momentum coefficient
};

struct MlpGradient {
    Eigen::MatrixXd W1, W2;
    Eigen::VectorXd b1, b2;

    [[nodiscard]] bool finite() const
    {
        return W1.allFinite() && W2.allFinite() && b1.allFinite() && b2.allFinite();
    }

    MlpGradient& operator+=(const MlpGradient& o)
    {
        W1 += o.W1;
        W2 += o.W2;
        b1 += o.b1;
        b2 += o.b2;
        return *this;
    }
};

class Mlp {
public:
    explicit Mlp(MlpConfig cfg = {}) : cfg_(cfg)
    {
        if (cfg_.inputs < 1 || cfg_.hidden < 1 || cfg_.outputs < 1)
            throw std::invalid_argument("network dimensions must be positive");
        W1_ = Eigen::MatrixXd::Zero(cfg_.hidden, cfg_.inputs);
        W2_ = Eigen::MatrixXd::Zero(cfg_.outputs, cfg_.hidden);
        b1_ = Eigen::VectorXd::Zero(cfg_.hidden);
        b2_ = Eigen::VectorXd::Zero(cfg_.outputs);
        reset_momentum();
    }

    /// He-normal first layer, small second layer so the initial policy is
    /// close to uniform. Biases start at zero.
    [[nodiscard]] static Mlp random(MlpConfig cfg, const NoiseStream& noise, double output_scale = 0.1)
    {
        Mlp m(cfg);
        const double s1 = std::sqrt(2.0 / cfg.inputs);
        const double s2 = output_scale / std::sqrt(static_cast<double>(cfg.hidden));
        std::uint64_t k = 0;
        for (Eigen::Index i = 0; i < m.W1_.size(); ++i) m.W1_.data()[i] = s1 * noise.normal("mlp-init", 0, k++);
        for (Eigen::Index i = 0; i < m.W2_.size(); ++i) m.W2_.data()[i] = s2 * noise.normal("mlp-init", 1, k++);
        return m;
    }

    [[nodiscard]] const MlpConfig& config() const noexcept { return cfg_; }

    [[nodiscard]] Eigen::VectorXd onehot(int user) const
    {
        if (user < 0 || user >= cfg_.inputs) throw std::invalid_argument("user index out of range");
        Eigen::VectorXd x = Eigen::VectorXd::Zero(cfg_.inputs);
        x[user] = 1.0;
        return x;
    }

    [[nodiscard]] Eigen::VectorXd forward(const Eigen::VectorXd& x) const
    {
        if (x.size() != cfg_.inputs) throw std::invalid_argument("input width differs from the network's");
        const Eigen::VectorXd h = (W1_ * x + b1_).cwiseMax(0.0);
        return W2_ * h + b2_;
    }

    [[nodiscard]] Eigen::VectorXd logits(int user) const { return forward(onehot(user)); }

    [[nodiscard]] static Eigen::VectorXd softmax(const Eigen::VectorXd& z)
    {
        const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
        return e / e.sum();
    }

    [[nodiscard]] int act(int user, const NoiseStream& noise, std::uint64_t t, std::uint64_t slot) const
    {
        const Eigen::VectorXd p = softmax(logits(user));
        return noise.categorical("action", t, slot, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
    }

    /// -click * log softmax(forward(x))[action].
    [[nodiscard]] double loss(const Eigen::VectorXd& x, int action, double click) const
    {
        const Eigen::VectorXd z = forward(x);
        const double lse = z.maxCoeff() + std::log((z.array() - z.maxCoeff()).exp().sum());
        return -click * (z[action] - lse);
    }

    [[nodiscard]] MlpGradient gradient(const Eigen::VectorXd& x, int action, double click) const
    {
        if (action < 0 || action >= cfg_.outputs) throw std::invalid_argument("action index out of range");
        const Eigen::VectorXd pre = W1_ * x + b1_;
        const Eigen::VectorXd h = pre.cwiseMax(0.0);
        Eigen::VectorXd d2 = softmax(W2_ * h + b2_);
        d2[action] -= 1.0;
        d2 *= click;
        Eigen::VectorXd d1 = W2_.transpose() * d2;
        for (Eigen::Index i = 0; i < d1.size(); ++i)
            if (pre[i] <= 0.0) d1[i] = 0.0;
        MlpGradient g{d1 * x.transpose(), d2 * h.transpose(), d1, d2};
        if (!g.finite()) throw NumericError("non-finite gradient");
        return g;
    }

    [[nodiscard]] MlpGradient zero_gradient() const
    {
        return {Eigen::MatrixXd::Zero(W1_.rows(), W1_.cols()), Eigen::MatrixXd::Zero(W2_.rows(), W2_.cols()),
                Eigen::VectorXd::Zero(b1_.size()), Eigen::VectorXd::Zero(b2_.size())};
    }

    /// v <- rho v + g; w <- w - lr v.
    void apply(const MlpGradient& g)
    {
        if (!g.finite()) throw NumericError("non-finite gradient");
        auto step = [&](auto& w, auto& v, const auto& grad) {
            v = cfg_.rho * v + grad;
            w -= cfg_.lr * v;
        };
        step(W1_, vW1_, g.W1);
        step(W2_, vW2_, g.W2);
        step(b1_, vb1_, g.b1);
        step(b2_, vb2_, g.b2);
    }

    void update(int user, int action, int click)
    {
        if (click == 0) apply_zero();
        else apply(gradient(onehot(user), action, click));
    }

    /// One update per slot, in slot order.
    void update_batch(std::span<const int> users, std::span<const int> actions, std::span<const int> clicks)
    {
        for (std::size_t i = 0; i < users.size(); ++i) {
            if (clicks[i]) update(users[i], actions[i], clicks[i]);
            else apply_zero();
        }
    }

    /// The step for a zero gradient: momentum decays and still moves the
    /// weights. A fresh net (zero momentum) is left unchanged.
    void apply_zero()
    {
        auto step = [&](auto& w, auto& v) {
            v *= cfg_.rho;
            w -= cfg_.lr * v;
        };
        step(W1_, vW1_);
        step(W2_, vW2_);
        step(b1_, vb1_);
        step(b2_, vb2_);
    }

    void reset_momentum()
    {
        vW1_ = Eigen::MatrixXd::Zero(W1_.rows(), W1_.cols());
        vW2_ = Eigen::MatrixXd::Zero(W2_.rows(), W2_.cols());
        vb1_ = Eigen::VectorXd::Zero(b1_.size());
        vb2_ = Eigen::VectorXd::Zero(b2_.size());
    }

    /// Copies weights from `other`; momentum starts over.
    void clone_from(const Mlp& other)
    {
        cfg_ = other.cfg_;
        W1_ = other.W1_;
        W2_ = other.W2_;
        b1_ = other.b1_;
        b2_ = other.b2_;
        reset_momentum();
    }

    [[nodiscard]] std::size_t parameter_count() const
    {
        return static_cast<std::size_t>(W1_.size() + b1_.size() + W2_.size() + b2_.size());
    }

    /// W1, b1, W2, b2, each in column-major order.
    [[nodiscard]] std::vector<double> parameters() const
    {
        std::vector<double> out;
        out.reserve(parameter_count());
        auto put = [&](const auto& a) { out.insert(out.end(), a.data(), a.data() + a.size()); };
        put(W1_);
        put(b1_);
        put(W2_);
        put(b2_);
        return out;
    }

    void set_parameters(std::span<const double> p)
    {
        if (p.size() != parameter_count()) throw std::invalid_argument("parameter count mismatch");
        std::size_t k = 0;
        auto take = [&](auto& a) {
            for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = p[k++];
        };
        take(W1_);
        take(b1_);
        take(W2_);
        take(b2_);
    }

    [[nodiscard]] const Eigen::VectorXd& momentum_b2() const noexcept { return vb2_; }
    [[nodiscard]] bool momentum_is_zero() const
    {
        return vW1_.isZero(0) && vW2_.isZero(0) && vb1_.isZero(0) && vb2_.isZero(0);
    }

    Eigen::MatrixXd& W1() noexcept { return W1_; }
    Eigen::MatrixXd& W2() noexcept { return W2_; }
    Eigen::VectorXd& b1() noexcept { return b1_; }
    Eigen::VectorXd& b2() noexcept { return b2_; }

    friend bool operator==(const Mlp& a, const Mlp& b) { return a.parameters() == b.parameters(); }

private:
    MlpConfig cfg_;
    Eigen::MatrixXd W1_, W2_;
    Eigen::VectorXd b1_, b2_;
    Eigen::MatrixXd vW1_, vW2_;
    Eigen::VectorXd vb1_, vb2_;
};

// Checkpoints: one JSON header line, then the flat parameter vector, one
// shortest round-trip decimal per line.

inline void save_checkpoint(const Mlp& net, std::ostream& out)
{
    const auto& c = net.config();
    const nlohmann::json header{{"K", c.inputs}, {"M", c.outputs}, {"hidden", c.hidden}, {"lr", c.lr}, {"rho", c.rho}};
    out << header.dump() << '\n';
    char buf[32];
    for (double w : net.parameters()) {
        const auto r = std::to_chars(buf, buf + sizeof buf, w);
        out.write(buf, r.ptr - buf);
        out << '\n';
    }
}

[[nodiscard]] inline Mlp load_checkpoint(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint is empty");
    const auto h = nlohmann::json::parse(line);
    MlpConfig c{h.at("K").get<int>(), h.at("hidden").get<int>(), h.at("M").get<int>(), h.at("lr").get<double>(),
                h.at("rho").get<double>()};
    Mlp net(c);
    std::vector<double> p;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double v = 0.0;
        const auto r = std::from_chars(line.data(), line.data() + line.size(), v);
        if (r.ec != std::errc{}) throw std::runtime_error("bad weight in checkpoint: '" + line + "'");
        p.push_back(v);
    }
    net.set_parameters(p);
    return net;
}

inline void save_checkpoint(const Mlp& net, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    save_checkpoint(net, out);
}

[[nodiscard]] inline Mlp load_checkpoint(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    return load_checkpoint(in);
}

}  // namespace psolab::agents
