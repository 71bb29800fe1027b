#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace poisonlab {

/// Deterministic seeded random stream. Two streams constructed with the same
/// (seed, purpose) produce byte-identical draw sequences on every platform:
/// the generator is a pure integer xoshiro256** and the real-valued draws are
/// built from its bits with exact IEEE operations only (plus sqrt/log for
/// normals). Single-owner: one consumer sequence at a time.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string_view purpose);

    std::uint64_t seed() const { return seed_; }
    const std::string& purpose() const { return purpose_; }

    /// Next raw 64-bit word.
    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n). Rejection sampled, unbiased. n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n);

    /// Standard normal via the polar method (cached spare).
    double normal();
    double normal(double mean, double stddev);

    /// In-place Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    /// Derive an independent child stream. Deterministic in (seed, purpose,
    /// label); does not consume or depend on this stream's position.
    RandomStream fork(std::string_view label) const;

private:
    std::uint64_t seed_;
    std::string purpose_;
    std::uint64_t state_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// FNV-1a over arbitrary bytes; used to mix purpose labels into seeds and to
/// fingerprint numeric inputs.
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull);
std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull);

} // namespace poisonlab
