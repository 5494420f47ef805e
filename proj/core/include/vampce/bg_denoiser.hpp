#pragma once

#include "vampce/channel.hpp"
#include "vampce/types.hpp"

namespace vampce {

/// Clamp bounds shared by the denoiser and the VAMP loop.
struct ClampBounds {
    double pi_min = 1e-12;
    double pi_max = 1.0 - 1e-12;
    double alpha_min = 1e-11;
    double alpha_max = 1.0 - 1e-11;
};

struct DenoiserOutput {
    RVector pi;       // posterior probability that tap i is active
    CVector mu;       // conditional mean of the active component
    double nu = 0.0;  // conditional variance of the active component (shared)
    CVector h_hat;    // posterior mean pi .* mu
    double alpha = 0; // average divergence <pi> gamma1 / (gamma1 + gamma_h), clamped
    double eta = 0;   // posterior precision gamma1 / alpha
    bool alpha_clamped = false;
};

/// Scalar Bernoulli-Gaussian MMSE denoiser applied element-wise to the
/// pseudo-observation r1 ~ h + CN(0, 1/gamma1).
///
/// The activity probability is evaluated from the log-ratio of the two
/// candidate Gaussian evidences, so large |r1|^2 gamma1 never underflows.
/// Set allow_degenerate to accept lambda in {0, 1}.
DenoiserOutput bg_posterior(const CVector& r1, double gamma1, const BgParams& params,
                            const ClampBounds& clamp = {}, bool allow_degenerate = false);

/// Log of the evidence ratio  (1-lambda) CN(0; r, 1/g1) / (lambda CN(0; r, 1/g1 + 1/gh)).
double bg_log_inactive_ratio(cdouble r, double gamma1, const BgParams& params);

struct DivisionResult {
    CVector r;
    double gamma = 0.0;
    bool valid = true; // false when alpha was outside (0, 1)
};

/// Extrinsic message from a posterior (h_hat, precision gamma_in / alpha) and
/// the incoming message (r_in, gamma_in).
DivisionResult gaussian_division(const CVector& h_hat, double alpha, const CVector& r_in,
                                 double gamma_in);

} // namespace vampce
