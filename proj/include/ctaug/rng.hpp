#pragma once

/// @file rng.hpp
/// @brief Seeded, splittable random streams with a portable output contract.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniform reals take the top 53 bits of one engine output, so the
/// same seed yields the same doubles on every conforming implementation.
/// Child streams are keyed by integers or strings and seeded through a
/// SplitMix64 finalizer, which makes per-case output independent of batch
/// order.

#include <concepts>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace ctaug {

/// Identifies the generator contract in manifests.
inline constexpr std::string_view kGeneratorName = "mt19937_64+splitmix64/u53";

/// SplitMix64 output function.
std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a 64-bit hash, used to turn string keys (case ids) into stream keys.
std::uint64_t fnv1a64(std::string_view text);

/// Seed of the child stream identified by `key` under `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key);

/// Anything that hands out uniform doubles in [0, 1).
template <class T>
concept UniformSource = requires(T& source) {
    { source.uniform() } -> std::convertible_to<double>;
};

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller on two consecutive uniforms.
    /// Returns the (cos, sin) pair so both draws are used.
    std::pair<double, double> normal_pair();

    [[nodiscard]] RandomStream split(std::uint64_t key) const { return RandomStream(derive_seed(seed_, key)); }
    [[nodiscard]] RandomStream split(std::string_view key) const { return split(fnv1a64(key)); }

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// a + u (b - a), closed-open. Returns a when a == b.
double uniform_between(double a, double b, double u);

template <UniformSource Source>
double uniform_between(Source& source, double a, double b) {
    return uniform_between(a, b, source.uniform());
}

}  // namespace ctaug
