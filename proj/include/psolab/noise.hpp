#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string_view>

namespace psolab {

/// Counter-based random source. Every draw is addressed by a mechanism name,
/// a timestep and a slot, so two evaluations that ask for the same address
/// see the same value no matter in which order they ask.
///
/// This is what makes twin rollouts share exogenous noise: the actual and
/// counterfactual passes both read e.g. ("click", t=7, slot=3) and get one
/// number.
class NoiseStream {
public:
    explicit constexpr NoiseStream(std::uint64_t seed = 0) noexcept : seed_(seed) {}

    [[nodiscard]] constexpr std::uint64_t seed() const noexcept { return seed_; }

    /// Independent stream for a sub-component (population member, seed index).
    [[nodiscard]] constexpr NoiseStream fork(std::uint64_t id) const noexcept
    {
        return NoiseStream(mix(seed_ ^ mix(id + 0x632be59bd9b4e019ULL)));
    }

    [[nodiscard]] constexpr std::uint64_t bits(std::string_view mechanism, std::uint64_t t,
                                               std::uint64_t slot = 0) const noexcept
    {
        std::uint64_t h = mix(seed_ + hash_name(mechanism));
        h = mix(h ^ (t * 0x9e3779b97f4a7c15ULL));
        h = mix(h ^ (slot * 0xc2b2ae3d27d4eb4fULL + 0x165667b19e3779f9ULL));
        return h;
    }

    /// Uniform in [0, 1) with 53 random bits.
    [[nodiscard]] constexpr double uniform(std::string_view mechanism, std::uint64_t t,
                                           std::uint64_t slot = 0) const noexcept
    {
        return static_cast<double>(bits(mechanism, t, slot) >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on two derived addresses.
    [[nodiscard]] double normal(std::string_view mechanism, std::uint64_t t,
                                std::uint64_t slot = 0) const
    {
        const double u1 = 1.0 - uniform(mechanism, t, 2 * slot);
        const double u2 = uniform(mechanism, t, 2 * slot + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Index drawn from `probs` by inverse CDF. Probabilities need not be
    /// normalized exactly; the last positive entry absorbs rounding.
    [[nodiscard]] int categorical(std::string_view mechanism, std::uint64_t t, std::uint64_t slot,
                                  std::span<const double> probs) const
    {
        return sample_index(probs, uniform(mechanism, t, slot));
    }

    [[nodiscard]] static int sample_index(std::span<const double> probs, double u)
    {
        if (probs.empty()) {
            throw std::invalid_argument("categorical draw over an empty distribution");
        }
        double total = 0.0;
        for (double p : probs) total += p;
        double acc = 0.0;
        int last_positive = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0) continue;
            last_positive = static_cast<int>(i);
            acc += probs[i];
            if (u * total < acc) return static_cast<int>(i);
        }
        return last_positive;
    }

private:
    static constexpr std::uint64_t mix(std::uint64_t x) noexcept
    {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    static constexpr std::uint64_t hash_name(std::string_view s) noexcept
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    std::uint64_t seed_;
};

/// Anything that can resolve a finite exogenous draw at an address. The
/// hash-based NoiseStream is one model; tests plug in fixed assignments so
/// that every exogenous combination can be enumerated.
template <class N>
concept FiniteNoiseSource = requires(const N& n, std::string_view mech, std::uint64_t t,
                                     std::span<const double> probs) {
    { n.categorical(mech, t, std::uint64_t{0}, probs) } -> std::convertible_to<int>;
};

static_assert(FiniteNoiseSource<NoiseStream>);

}  // namespace psolab
