#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace vampce {

/// Counter-based deterministic random stream.
///
/// Output i is a pure function of (key, i): the SplitMix64 finalizer applied to
/// key + i * golden_gamma. Substreams are derived by hashing a parent key with
/// a role tag and integer identifiers, so Monte Carlo trials can be executed in
/// any order (or concurrently) and still draw identical numbers.
class SeedStream {
public:
    explicit SeedStream(std::uint64_t key) : key_(key) {}

    /// Child stream keyed by (this key, role, ids...).
    [[nodiscard]] SeedStream substream(std::string_view role,
                                       std::initializer_list<std::uint64_t> ids = {}) const;

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double next_uniform();
    /// Uniform in (0, 1].
    double next_uniform_open0();
    /// Standard normal (Box-Muller; the second variate is cached).
    double next_normal();

    [[nodiscard]] std::uint64_t key() const { return key_; }
    [[nodiscard]] std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

std::uint64_t mix64(std::uint64_t z);
std::uint64_t hash_bytes(const void* data, std::size_t len, std::uint64_t seed = 0);

} // namespace vampce
