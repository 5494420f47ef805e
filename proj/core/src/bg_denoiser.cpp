#include "vampce/bg_denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vampce {

double bg_log_inactive_ratio(cdouble r, double gamma1, const BgParams& params) {
    const double v1 = 1.0 / gamma1;
    const double v_sum = v1 + 1.0 / params.gamma_h;
    const double r2 = std::norm(r);
    // log CN(0; r, v) = -log(pi v) - |r|^2 / v
    return std::log1p(-params.lambda) - std::log(params.lambda) + std::log(v_sum / v1) - r2 / v1 +
           r2 / v_sum;
}

DenoiserOutput bg_posterior(const CVector& r1, double gamma1, const BgParams& params,
                            const ClampBounds& clamp, bool allow_degenerate) {
    if (!(gamma1 > 0.0) || !std::isfinite(gamma1)) {
        throw ConfigError("bg_posterior: gamma1 must be positive and finite");
    }
    if (!(params.gamma_h > 0.0) || !std::isfinite(params.gamma_h)) {
        throw ConfigError("bg_posterior: gamma_h must be positive and finite");
    }
    if (allow_degenerate) {
        if (!(params.lambda >= 0.0 && params.lambda <= 1.0)) {
            throw ConfigError("bg_posterior: lambda must lie in [0, 1]");
        }
    } else {
        params.validate();
    }

    const Eigen::Index n = r1.size();
    DenoiserOutput out;
    out.pi.resize(n);
    out.nu = 1.0 / (gamma1 + params.gamma_h);
    const double shrink = gamma1 / (gamma1 + params.gamma_h);
    out.mu = r1 * shrink;

    for (Eigen::Index i = 0; i < n; ++i) {
        double p = 0.0;
        if (params.lambda >= 1.0) {
            p = 1.0;
        } else if (params.lambda <= 0.0) {
            p = 0.0;
        } else {
            const double t = bg_log_inactive_ratio(r1(i), gamma1, params);
            // pi = 1 / (1 + e^t), evaluated without overflow
            p = t > 0.0 ? std::exp(-t) / (1.0 + std::exp(-t)) : 1.0 / (1.0 + std::exp(t));
        }
        out.pi(i) = std::clamp(p, clamp.pi_min, clamp.pi_max);
    }
    out.h_hat = out.pi.cast<cdouble>().cwiseProduct(out.mu);

    const double raw_alpha = n > 0 ? out.pi.mean() * shrink : clamp.alpha_min;
    out.alpha = std::clamp(raw_alpha, clamp.alpha_min, clamp.alpha_max);
    out.alpha_clamped = out.alpha != raw_alpha;
    out.eta = gamma1 / out.alpha;
    return out;
}

DivisionResult gaussian_division(const CVector& h_hat, double alpha, const CVector& r_in,
                                 double gamma_in) {
    DivisionResult res;
    if (!(alpha > 0.0 && alpha < 1.0) || !(gamma_in > 0.0)) {
        res.valid = false;
        res.r = h_hat;
        res.gamma = std::numeric_limits<double>::quiet_NaN();
        return res;
    }
    res.r = (h_hat - alpha * r_in) / (1.0 - alpha);
    res.gamma = gamma_in * (1.0 - alpha) / alpha;
    res.valid = res.r.allFinite() && std::isfinite(res.gamma) && res.gamma > 0.0;
    return res;
}

} // namespace vampce
