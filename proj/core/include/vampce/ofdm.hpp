#pragma once

#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "vampce/channel.hpp"
#include "vampce/linalg.hpp"
#include "vampce/rng.hpp"
#include "vampce/types.hpp"

namespace vampce {

enum class PilotPattern {
    equally_spaced,  // I_j = j K / K_p, requires K_p | K
    nearest_uniform, // I_j = floor(j K / K_p), gaps differ by at most one
    automatic,       // equally_spaced when K_p | K, nearest_uniform otherwise
};

enum class PilotScheme {
    orthogonal,  // phase-rotated base sequence, W^H W diagonal on equally spaced tones
    random_qpsk, // i.i.d. QPSK per transducer
};

PilotPattern parse_pilot_pattern(std::string_view name);
PilotScheme parse_pilot_scheme(std::string_view name);
std::string_view to_string(PilotScheme scheme);

std::vector<std::size_t> pilot_pattern(std::size_t K, std::size_t K_p, PilotPattern scheme);

/// Dimensions of one zero-padded MIMO-OFDM link. Constellation is QPSK.
struct OfdmConfig {
    std::size_t K = 0;
    std::size_t N = 1;
    std::size_t M = 1;
    std::size_t L = 1;
    std::size_t N_zp = 1;
    std::vector<std::size_t> pilots; // ascending, unique
    std::vector<std::size_t> nulls;  // ascending, disjoint from pilots
    std::vector<std::size_t> data;   // everything else, ascending

    /// Builds the index sets. Nulls occupy the band edges of the non-pilot tones.
    static OfdmConfig make(std::size_t K, std::size_t K_p, std::size_t N, std::size_t M,
                           std::size_t L, std::size_t N_zp, std::size_t n_null = 0,
                           PilotPattern pattern = PilotPattern::automatic);

    [[nodiscard]] std::size_t K_p() const { return pilots.size(); }
    [[nodiscard]] std::size_t K_d() const { return data.size(); }
    [[nodiscard]] std::size_t NL() const { return N * L; }
    [[nodiscard]] ChannelDims channel_dims() const { return {N, M, L}; }

    void validate() const;
};

/// Pilot symbols X_n(I_j), one length-K_p vector per transducer; unit modulus.
struct PilotBook {
    PilotScheme scheme = PilotScheme::orthogonal;
    std::vector<CVector> symbols;

    [[nodiscard]] std::size_t N() const { return symbols.size(); }
    [[nodiscard]] std::size_t K_p() const { return symbols.empty() ? 0 : symbols.front().size(); }
};

PilotBook make_pilot_book(std::size_t N, std::size_t K_p, std::size_t L, PilotScheme scheme,
                          SeedStream& stream);

/// W = [S_1 F, ..., S_N F] together with its thin SVD.
struct PilotSystem {
    CMatrix W;
    SvdFactors svd;
    bool diagonal_gram = false; // W^H W diagonal to 1e-10 relative
};

CMatrix build_measurement_matrix(const OfdmConfig& config, const PilotBook& book);
PilotSystem build_pilot_system(const OfdmConfig& config, const PilotBook& book);
bool gram_is_diagonal(const CMatrix& W, double rel_tol = 1e-10);
bool gram_matrix_is_diagonal(const CMatrix& G, double rel_tol = 1e-10);

/// Pilot observation model y_m = W h_m + n_m for every hydrophone.
struct MeasurementModel {
    PilotSystem system;
    std::vector<CVector> y;                                  // per hydrophone, length K_p
    double gamma_w = std::numeric_limits<double>::infinity(); // synthesis truth, not for estimators
};

enum class NoiseMode {
    time_domain, // noise on every received sample before overlap-add (colored after folding)
    whitened,    // noise added after overlap-add, exactly white across tones
};

/// Per-hydrophone reception. pilots/data are in model scale: y = W h + n with
/// noise precision gamma_w, i.e. the raw spectrum divided by sqrt(K).
struct ReceivedBlock {
    CVector time_samples; // K + N_zp samples before overlap-add
    CVector spectrum;     // F_K applied to the overlap-added block, length K
    CVector pilots;       // length K_p
    CVector data;         // length K_d
};

/// Assemble X_n (pilots, data, zero nulls) for one transducer.
CVector assemble_spectrum(const OfdmConfig& config, const CVector& pilot_symbols,
                          const CVector& data_symbols);

/// gamma_w = +inf disables noise.
std::vector<ReceivedBlock> transmit_receive(const OfdmConfig& config, const PilotBook& book,
                                            const std::vector<CVector>& data_symbols,
                                            const ChannelRealization& channel, double gamma_w,
                                            SeedStream& noise_stream,
                                            NoiseMode mode = NoiseMode::time_domain);

/// H(k)[m][n] = sum_l h_{m,n}(l) exp(-j 2 pi k l / K), one M x N matrix per subcarrier.
std::vector<CMatrix> channel_frequency_response(const ChannelRealization& channel,
                                                std::size_t K);

/// Same response built from per-hydrophone stacked estimates (length N*L each).
std::vector<CMatrix> frequency_response_from_stacked(const std::vector<CVector>& h_stacked,
                                                     std::size_t N, std::size_t L, std::size_t K);

/// Uniform QPSK symbols (+-1 +-j)/sqrt(2); bit0 = real sign, bit1 = imaginary sign.
CVector random_qpsk(std::size_t n, SeedStream& stream);

} // namespace vampce
