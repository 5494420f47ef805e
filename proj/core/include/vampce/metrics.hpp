#pragma once

#include <cstdint>
#include <vector>

#include "vampce/ofdm.hpp"
#include "vampce/types.hpp"

namespace vampce {

/// Reported in place of -inf for an exact estimate.
inline constexpr double nmse_floor_db = -320.0;

/// 10 log10(||h_hat - h||^2 / ||h||^2). Throws ConfigError for a zero truth.
double nmse_db(const CVector& h_hat, const CVector& h_true);
/// Same ratio from pre-summed error and reference energies.
double nmse_db_from_energy(double error_energy, double reference_energy);

/// Gray-mapped QPSK: bit0 = (re < 0), bit1 = (im < 0).
struct QpskBits {
    std::uint8_t b0 = 0;
    std::uint8_t b1 = 0;
};
QpskBits qpsk_demod(cdouble x);

struct EqualizerOutput {
    std::vector<CVector> symbols;    // per transducer, one entry per data tone
    std::vector<std::uint8_t> bits;  // transducer-major, two bits per symbol
    bool zero_response = false;      // some tone had an all-zero channel estimate
};

/// Per-tone MMSE equalizer X = (H^H H + I / gamma_w)^-1 H^H Y.
/// H_data[d] is the M x N response on data tone d in the same scale as Y;
/// Y[m] holds hydrophone m's received data tones.
EqualizerOutput equalize_and_demod(const std::vector<CMatrix>& H_data, const std::vector<CVector>& Y,
                                   double gamma_w_hat);

/// H(k) / sqrt(K) on the data tones, the scale in which ReceivedBlock::data lives.
std::vector<CMatrix> data_tone_response(const std::vector<CMatrix>& H_full, const OfdmConfig& config);

struct SymbolStats {
    double symbol_mse_db = 0.0;
    double ber = 0.0;
    std::size_t bit_errors = 0;
    std::size_t bit_count = 0;
};
SymbolStats symbol_stats(const EqualizerOutput& eq, const std::vector<CVector>& transmitted);

} // namespace vampce
