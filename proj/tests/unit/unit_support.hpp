#pragma once
// Small synthetic single-hydrophone problems shared by the unit tests.

#include <cmath>

#include "vampce/channel.hpp"
#include "vampce/ofdm.hpp"

namespace vampce_test {

struct Problem {
    vampce::CMatrix W;
    vampce::SvdFactors svd;
    vampce::CVector h;
    vampce::CVector y;
    double gamma_w = 0.0; // +inf when noiseless
};

inline vampce::PilotSystem pilot_system(std::size_t K, std::size_t K_p, std::size_t N, std::size_t L,
                                        vampce::PilotScheme scheme, std::uint64_t seed) {
    vampce::SeedStream s(seed);
    const auto cfg = vampce::OfdmConfig::make(K, K_p, N, 1, L, L);
    const auto book = vampce::make_pilot_book(N, K_p, L, scheme, s);
    return vampce::build_pilot_system(cfg, book);
}

/// y = W h + n at the given pilot-domain SNR (dB); snr_db = +inf gives noiseless data.
inline Problem draw_problem(const vampce::PilotSystem& sys, std::size_t N, std::size_t L,
                            const vampce::BgParams& prior, double snr_db, vampce::SeedStream& s) {
    Problem p;
    p.W = sys.W;
    p.svd = sys.svd;
    vampce::ChannelSamplingOptions opt;
    opt.guarantee_nonempty = true;
    p.h = vampce::sample_bg_channel({N, 1, L}, prior, s, opt).stacked(0);
    const vampce::CVector clean = p.W * p.h;
    p.y = clean;
    if (std::isfinite(snr_db)) {
        const double ps = clean.squaredNorm() / double(clean.size());
        p.gamma_w = std::pow(10.0, snr_db / 10.0) / ps;
        p.y += vampce::sample_cgauss(std::size_t(clean.size()), 1.0 / p.gamma_w, s);
    } else {
        p.gamma_w = std::numeric_limits<double>::infinity();
    }
    return p;
}

inline double nmse_linear(const vampce::CVector& est, const vampce::CVector& truth) {
    return (est - truth).squaredNorm() / truth.squaredNorm();
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace vampce_test
