#pragma once

#include <cstdint>
#include <string>

#include "vampce/linalg.hpp"
#include "vampce/types.hpp"

namespace vampce {

enum EstimatorFlag : std::uint32_t {
    flag_none = 0,
    flag_rank_deficient = 1U << 0,
    flag_stalled = 1U << 1,
    flag_not_converged = 1U << 2,
    flag_diverged = 1U << 3,
    flag_all_pruned = 1U << 4,
    flag_zero_observation = 1U << 5,
    flag_init_fallback = 1U << 6,
    flag_zero_channel = 1U << 7,
};

/// "ok" or a '|'-joined list of flag names.
std::string flags_to_string(std::uint32_t flags);

struct EstimatorResult {
    CVector h_hat;
    int iterations = 0;
    std::uint64_t cmul = 0;       // total complex multiplies, setup included
    std::uint64_t cmul_setup = 0; // part of cmul spent before the first iteration
    std::uint32_t flags = flag_none;

    [[nodiscard]] double cmul_per_iteration() const {
        return iterations > 0 ? double(cmul - cmul_setup) / iterations : 0.0;
    }
};

/// Minimum-norm least squares over the numerical rank.
EstimatorResult ls_estimate(const CVector& y, const SvdFactors& svd);

/// (gamma_w W^H W + I / prior_variance)^-1 gamma_w W^H y, evaluated through the SVD.
EstimatorResult lmmse_estimate(const CVector& y, const SvdFactors& svd, double prior_variance,
                               double gamma_w);

struct OmpConfig {
    std::size_t max_atoms = 1;       // K_h
    double residual_threshold = 0.0; // stop once ||r||^2 <= this

    /// K_h = ceil(N L lambda_guess); threshold = K_p * noise_power.
    static OmpConfig for_channel(std::size_t N, std::size_t L, std::size_t K_p,
                                 double lambda_guess, double noise_power);
    void validate() const;
};

EstimatorResult omp_estimate(const CVector& y, const CMatrix& W, const OmpConfig& config);

struct SblConfig {
    int max_iterations = 200;        // K_s
    double prune_threshold = 1e8;    // per-tap precision above which a tap is removed
    double tolerance = 1e-4;         // relative change of the per-tap variance vector
    double zeta = 10.0;              // SNR guess for the initial noise precision
    bool learn_noise = true;
    double gamma_w = 0.0;            // used (and held fixed) when learn_noise is false

    void validate() const;
};

/// W together with its Gram matrix; build once and share across hydrophones.
struct SblSystem {
    CMatrix W;
    CMatrix gram;
    bool diagonal_gram = false;
    std::uint64_t cmul_build = 0;

    explicit SblSystem(CMatrix W_in);
};

/// Classic EM sparse Bayesian learning with per-tap Gaussian precisions.
EstimatorResult sbl_estimate(const CVector& y, const CMatrix& W, const SblConfig& config);
EstimatorResult sbl_estimate(const CVector& y, const SblSystem& system, const SblConfig& config);

} // namespace vampce
