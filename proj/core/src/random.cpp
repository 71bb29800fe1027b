#include "poisonlab/random.hpp"

#include "poisonlab/errors.hpp"

#include <cmath>

namespace poisonlab {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
    return fnv1a(s.data(), s.size(), h);
}

RandomStream::RandomStream(std::uint64_t seed, std::string_view purpose)
    : seed_(seed), purpose_(purpose) {
    std::uint64_t sm = seed ^ fnv1a(purpose);
    for (auto& s : state_) s = splitmix64(sm);
}

std::uint64_t RandomStream::next_u64() {
    // xoshiro256**
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::uint64_t RandomStream::uniform_int(std::uint64_t n) {
    if (n == 0) throw InputError("uniform_int: n must be positive");
    const std::uint64_t threshold = (0 - n) % n; // 2^64 mod n
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

double RandomStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
}

double RandomStream::normal(double mean, double stddev) {
    return mean + stddev * normal();
}

RandomStream RandomStream::fork(std::string_view label) const {
    std::uint64_t h = fnv1a(label, fnv1a(purpose_));
    std::string child_purpose = purpose_ + "/" + std::string(label);
    return RandomStream(seed_ ^ (h | 1ull), child_purpose);
}

} // namespace poisonlab
