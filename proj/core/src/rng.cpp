#include "vampce/rng.hpp"

#include <cmath>
#include <numbers>

namespace vampce {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t hash_bytes(const void* data, std::size_t len, std::uint64_t seed) {
    // FNV-1a over the bytes, finalized with mix64.
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

SeedStream SeedStream::substream(std::string_view role,
                                 std::initializer_list<std::uint64_t> ids) const {
    std::uint64_t k = mix64(key_ ^ hash_bytes(role.data(), role.size(), 0x5eed));
    for (std::uint64_t id : ids) {
        k = mix64(k + kGoldenGamma * (id + 1));
    }
    return SeedStream(k);
}

std::uint64_t SeedStream::next_u64() {
    return mix64(key_ + kGoldenGamma * (++counter_));
}

double SeedStream::next_uniform() {
    return double(next_u64() >> 11) * 0x1.0p-53;
}

double SeedStream::next_uniform_open0() {
    return double((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double SeedStream::next_normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    const double u1 = next_uniform_open0();
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_normal_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

} // namespace vampce
