#pragma once

// Encodes a finite delicate MDP over a fixed horizon as a structural causal
// influence model on the general delicate-MDP diagram.
//
// The diagram gives R_{t+1} only S_{t+1}, Z_{t+1} and A_t as parents, while
// the environment's reward reads (s_t, s_{t+1}, z_t, z_{t+1}, a_t). The
// robust node therefore carries its predecessor's (s, z) along:
//   S_t = (s_{t-1}, z_{t-1}, s_t)   packed as ((s_prev * nZ + z_prev) * nS + s)
// which keeps the diagram unchanged; S_{t+1} already has Z_t as a parent.

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "psolab/cid.hpp"
#include "psolab/envs/finite.hpp"
#include "psolab/scim.hpp"

namespace psolab {

class EncodedMdp {
public:
    EncodedMdp(Scim scim, int horizon, int n_robust, int n_delicate)
        : scim_(std::move(scim)), horizon_(horizon), n_robust_(n_robust), n_delicate_(n_delicate)
    {
    }

    [[nodiscard]] const Scim& scim() const noexcept { return scim_; }
    [[nodiscard]] int horizon() const noexcept { return horizon_; }

    [[nodiscard]] int encode_robust(int s_prev, int z_prev, int s) const
    {
        return (s_prev * n_delicate_ + z_prev) * n_robust_ + s;
    }
    [[nodiscard]] int decode_robust(int code) const { return code % n_robust_; }

    [[nodiscard]] NodeIndex node(Family f, int t) const
    {
        if (auto i = scim_.graph().find(f, t)) return *i;
        throw std::invalid_argument("no node " + tagged_label(f, t));
    }

    /// Imputes a (s, z) -> action-distribution policy to every decision.
    [[nodiscard]] Scm impute(const FinitePolicy& pi, int noise_levels = 1) const
    {
        Policy policy;
        const int n_actions = scim_.node(node(Family::A, 0)).domain_size;
        for (int t = 0; t < horizon_; ++t) {
            const NodeIndex a = node(Family::A, t);
            const auto pos = positions(a);
            const int n_robust = n_robust_;
            policy.set(
                a,
                [pi, pos, n_robust, n_actions](std::span<const int> obs) {
                    auto d = pi(obs[pos.s] % n_robust, obs[pos.z]);
                    if (static_cast<int>(d.size()) != n_actions)
                        throw std::invalid_argument("policy returned a wrong-sized distribution");
                    return d;
                },
                noise_levels);
        }
        return impute_policy(scim_, policy);
    }

    struct ParentPositions {
        std::size_t s = 0, z = 0, a = 0;
    };

    /// Where the S, Z and A parents sit in a node's parent list.
    [[nodiscard]] ParentPositions positions(NodeIndex i) const
    {
        ParentPositions p;
        const auto& ps = scim_.graph().parents(i);
        for (std::size_t k = 0; k < ps.size(); ++k) {
            const auto& tag = scim_.graph().node(ps[k]).tag;
            if (!tag) continue;
            if (tag->family == Family::S) p.s = k;
            if (tag->family == Family::Z) p.z = k;
            if (tag->family == Family::A) p.a = k;
        }
        return p;
    }

private:
    Scim scim_;
    int horizon_;
    int n_robust_;
    int n_delicate_;
};

template <FiniteEnv E>
[[nodiscard]] EncodedMdp encode_scim(const E& env, int horizon)
{
    const int ns = env.robust_count();
    const int nz = env.delicate_count();
    const int na = env.action_count();
    const int n_codes = ns * nz * ns;

    std::set<double> reward_set{0.0};
    for (int s = 0; s < ns; ++s)
        for (int s2 = 0; s2 < ns; ++s2)
            for (int z = 0; z < nz; ++z)
                for (int z2 = 0; z2 < nz; ++z2)
                    for (int a = 0; a < na; ++a) reward_set.insert(env.reward(s, s2, z, z2, a));
    const std::vector<double> reward_values(reward_set.begin(), reward_set.end());
    auto reward_index = [reward_values](double r) {
        const auto it = std::lower_bound(reward_values.begin(), reward_values.end(), r);
        return static_cast<int>(it - reward_values.begin());
    };

    Scim scim(build_delicate_mdp_cid(horizon));
    EncodedMdp enc(scim, horizon, ns, nz);
    auto code = [ns, nz](int sp, int zp, int s) { return (sp * nz + zp) * ns + s; };

    scim.set_node(enc.node(Family::S, 0), n_codes, env.initial_robust(),
                  [code](std::span<const int>, int e) { return code(0, 0, e); });
    scim.set_node(enc.node(Family::Z, 0), nz, env.initial_delicate(), [](std::span<const int>, int e) { return e; });
    scim.set_node(enc.node(Family::R, 0), 1, {1.0}, [](std::span<const int>, int) { return 0; }, {0.0});

    for (int t = 0; t < horizon; ++t) {
        scim.set_node(enc.node(Family::A, t), na, {1.0});

        const NodeIndex s_next = enc.node(Family::S, t + 1);
        const auto ps = enc.positions(s_next);
        scim.set_node(s_next, n_codes, env.robust_noise(), [env, ps, ns, code](std::span<const int> v, int e) {
            const int s = v[ps.s] % ns;
            const int z = v[ps.z];
            return code(s, z, env.robust_next(s, z, v[ps.a], e));
        });

        const NodeIndex z_next = enc.node(Family::Z, t + 1);
        const auto pz = enc.positions(z_next);
        scim.set_node(z_next, nz, env.delicate_noise(), [env, pz, ns](std::span<const int> v, int e) {
            return env.delicate_next(v[pz.z], v[pz.s] % ns, v[pz.a], e);
        });

        const NodeIndex r_next = enc.node(Family::R, t + 1);
        const auto pr = enc.positions(r_next);
        scim.set_node(
            r_next, static_cast<int>(reward_values.size()), {1.0},
            [env, pr, ns, nz, reward_index](std::span<const int> v, int) {
                const int packed = v[pr.s];
                const int s2 = packed % ns;
                const int z_prev = (packed / ns) % nz;
                const int s_prev = packed / (ns * nz);
                return reward_index(env.reward(s_prev, s2, z_prev, v[pr.z], v[pr.a]));
            },
            reward_values);
    }
    return EncodedMdp(std::move(scim), horizon, ns, nz);
}

/// Noise source that replays one exogenous assignment of an encoded model,
/// so environment code and structural evaluation see identical draws.
/// Policy draws resolve through the decision node's uniform selector.
class AssignmentNoise {
public:
    AssignmentNoise(const EncodedMdp& enc, const Scm& scm, const NoiseAssignment& eps)
        : enc_(&enc), scm_(&scm), eps_(&eps)
    {
    }

    [[nodiscard]] int categorical(std::string_view mech, std::uint64_t t, std::uint64_t,
                                  std::span<const double> probs) const
    {
        const int ti = static_cast<int>(t);
        if (mech == mechanism::reset_robust) return value(enc_->node(Family::S, 0));
        if (mech == mechanism::reset_delicate) return value(enc_->node(Family::Z, 0));
        if (mech == mechanism::robust) return value(enc_->node(Family::S, ti + 1));
        if (mech == mechanism::delicate) return value(enc_->node(Family::Z, ti + 1));
        if (mech == mechanism::policy || mech == mechanism::baseline_policy) {
            const NodeIndex a = enc_->node(Family::A, ti);
            const int levels = static_cast<int>(scm_->node(a).noise_probs.size());
            return NoiseStream::sample_index(probs, Policy::quantile(value(a), levels));
        }
        throw std::invalid_argument("no exogenous variable for mechanism '" + std::string(mech) + "'");
    }

private:
    [[nodiscard]] int value(NodeIndex i) const { return eps_->at(i); }

    const EncodedMdp* enc_;
    const Scm* scm_;
    const NoiseAssignment* eps_;
};

static_assert(FiniteNoiseSource<AssignmentNoise>);

}  // namespace psolab
