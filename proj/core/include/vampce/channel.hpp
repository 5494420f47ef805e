#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "vampce/rng.hpp"
#include "vampce/types.hpp"

namespace vampce {

/// Bernoulli-Gaussian tap prior: zero w.p. 1 - lambda, else CN(0, 1/gamma_h).
struct BgParams {
    double lambda = 0.1;
    double gamma_h = 100.0;

    /// Throws ConfigError unless 0 < lambda < 1 and gamma_h > 0.
    void validate() const;
};

struct ChannelDims {
    std::size_t N = 1; // transducers
    std::size_t M = 1; // hydrophones
    std::size_t L = 1; // taps per subchannel
};

/// Sparse MIMO channel: one length-L tap vector per (hydrophone m, transducer n).
class ChannelRealization {
public:
    ChannelRealization() = default;
    explicit ChannelRealization(ChannelDims dims);

    [[nodiscard]] const ChannelDims& dims() const { return dims_; }
    [[nodiscard]] const CVector& taps(std::size_t m, std::size_t n) const;
    void set_taps(std::size_t m, std::size_t n, CVector taps);

    /// h_m = [h_{m,1}; ...; h_{m,N}], length N*L.
    [[nodiscard]] CVector stacked(std::size_t m) const;
    void set_stacked(std::size_t m, const CVector& h);

    [[nodiscard]] std::size_t support_size() const;
    [[nodiscard]] double energy() const;

    friend bool operator==(const ChannelRealization& a, const ChannelRealization& b);

private:
    ChannelDims dims_{};
    std::vector<CVector> taps_; // index m * N + n
};

struct ChannelSamplingOptions {
    /// Permits lambda in {0, 1}; only meant for tests of the limit cases.
    bool allow_degenerate = false;
    /// Redraw any hydrophone whose stacked channel came out all-zero.
    bool guarantee_nonempty = false;
};

ChannelRealization sample_bg_channel(ChannelDims dims, const BgParams& params, SeedStream& stream,
                                     ChannelSamplingOptions options = {});

/// Tap file: header "N M L", then one "m n l re im" line per tap (0-based indices).
void save_channel(const ChannelRealization& channel, const std::filesystem::path& path);
ChannelRealization load_channel(const std::filesystem::path& path);

} // namespace vampce
