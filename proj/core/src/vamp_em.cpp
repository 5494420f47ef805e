#include "vampce/vamp_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vampce {

void VampConfig::validate() const {
    if (max_iterations < 1) {
        throw ConfigError("VampConfig: max_iterations must be >= 1");
    }
    if (!(xi_threshold > 0.0)) {
        throw ConfigError("VampConfig: xi_threshold must be positive");
    }
    if (!(zeta >= 0.0) || !std::isfinite(zeta)) {
        throw ConfigError("VampConfig: zeta must be finite and non-negative");
    }
    if (!(damping > 0.0 && damping <= 1.0)) {
        throw ConfigError("VampConfig: damping must lie in (0, 1]");
    }
    if (!(theta_tolerance > 0.0)) {
        throw ConfigError("VampConfig: theta_tolerance must be positive");
    }
    if (divergence_streak < 1) {
        throw ConfigError("VampConfig: divergence_streak must be >= 1");
    }
}

namespace {

double clamp_gamma(double g, const HyperparamBounds& b) {
    if (std::isnan(g)) {
        return b.gamma_max;
    }
    return std::clamp(g, b.gamma_min, b.gamma_max);
}

double nmse_db_of(const CVector& est, const CVector& truth) {
    const double den = truth.squaredNorm();
    if (den == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double ratio = (est - truth).squaredNorm() / den;
    return ratio > 0.0 ? std::max(10.0 * std::log10(ratio), -320.0) : -320.0;
}

// ||y - U S V^H h||^2 using the orthonormal columns of U:
// ||y||^2 - ||U^H y||^2 + ||U^H y - S V^H h||^2
double projected_residual(double y_norm2, const CVector& u_h_y, const RVector& s,
                          const CVector& v_h_h) {
    const double out_of_range = std::max(0.0, y_norm2 - u_h_y.squaredNorm());
    const CVector in_range = u_h_y - s.cast<cdouble>().cwiseProduct(v_h_h);
    return out_of_range + in_range.squaredNorm();
}

double gamma_w_from_residual(double residual, const RVector& s, double gamma2,
                             double gamma_w_prev, std::size_t Kp, const HyperparamBounds& b) {
    double trace = 0.0;
    for (Eigen::Index n = 0; n < s.size(); ++n) {
        const double s2 = s(n) * s(n);
        trace += s2 / (gamma_w_prev * s2 + gamma2);
    }
    const double den = residual + trace;
    if (!(den > 0.0)) {
        return b.gamma_max;
    }
    return clamp_gamma(double(Kp) / den, b);
}

} // namespace

InitResult init_hyperparams(const CVector& y, double w_frobenius_sq, double zeta,
                            const HyperparamBounds& bounds) {
    const double y2 = y.squaredNorm();
    if (!(y2 > 0.0)) {
        throw ConfigError("init_hyperparams: observation must be nonzero");
    }
    const auto Kp = double(y.size());
    InitResult res;
    res.theta.lambda = 0.95;
    res.theta.gamma_w = clamp_gamma((1.0 + zeta) * Kp / y2, bounds);
    const double den = y2 - Kp / res.theta.gamma_w;
    if (den > 0.0) {
        res.theta.gamma_h = clamp_gamma(w_frobenius_sq * res.theta.lambda / den, bounds);
    } else {
        res.theta.gamma_h = clamp_gamma(w_frobenius_sq * res.theta.lambda / y2, bounds);
        res.gamma_h_fallback = true;
    }
    return res;
}

InitResult init_hyperparams(const CVector& y, const CMatrix& W, double zeta,
                            const HyperparamBounds& bounds) {
    if (W.rows() != y.size()) {
        throw ConfigError("init_hyperparams: W rows must match observation length");
    }
    return init_hyperparams(y, W.squaredNorm(), zeta, bounds);
}

LmmseOutput lmmse_stage_projected(const CVector& r2, double gamma2, double gamma_w,
                                  const SvdFactors& svd, const CVector& u_h_y,
                                  CmulCounter* counter) {
    const auto NL = static_cast<Eigen::Index>(svd.cols);
    const auto R = static_cast<Eigen::Index>(svd.rank());
    if (r2.size() != NL || u_h_y.size() != R) {
        throw ConfigError("lmmse_stage: dimension mismatch");
    }
    if (!(gamma2 > 0.0) || !(gamma_w > 0.0)) {
        throw ConfigError("lmmse_stage: precisions must be positive");
    }
    LmmseOutput out;
    if (R == 0) {
        out.h_hat = r2;
        out.v_h_hat = CVector(0);
        out.alpha = 1.0;
        return out;
    }
    const CVector v_h_r2 = svd.V.adjoint() * r2;
    CVector correction(R);
    double alpha_sum = double(NL - R);
    for (Eigen::Index n = 0; n < R; ++n) {
        const double s = svd.s(n);
        const double d = 1.0 / (gamma_w * s * s + gamma2);
        correction(n) = d * gamma_w * s * (u_h_y(n) - s * v_h_r2(n));
        alpha_sum += gamma2 * d;
    }
    out.h_hat = r2 + svd.V * correction;
    out.v_h_hat = v_h_r2 + correction;
    out.alpha = alpha_sum / double(NL);
    if (counter != nullptr) {
        counter->add_matvec(static_cast<std::size_t>(NL), static_cast<std::size_t>(R)); // V^H r2
        counter->add_matvec(static_cast<std::size_t>(NL), static_cast<std::size_t>(R)); // V c
        counter->add(6 * static_cast<std::uint64_t>(R));
    }
    return out;
}

LmmseOutput lmmse_stage(const CVector& r2, double gamma2, double gamma_w, const SvdFactors& svd,
                        const CVector& y, CmulCounter* counter) {
    if (static_cast<std::size_t>(y.size()) != svd.rows) {
        throw ConfigError("lmmse_stage: observation length must match W rows");
    }
    const CVector u_h_y = svd.U.adjoint() * y;
    if (counter != nullptr) {
        counter->add_matvec(svd.rows, svd.rank());
    }
    return lmmse_stage_projected(r2, gamma2, gamma_w, svd, u_h_y, counter);
}

double em_update_lambda(const RVector& pi, const HyperparamBounds& bounds) {
    if (pi.size() == 0) {
        throw ConfigError("em_update_lambda: empty posterior");
    }
    return std::clamp(pi.mean(), bounds.lambda_min, bounds.lambda_max);
}

double em_update_gamma_h(const RVector& pi, const CVector& mu, double nu, double lambda_k,
                         double gamma_h_prev, const HyperparamBounds& bounds) {
    if (pi.size() != mu.size() || pi.size() == 0) {
        throw ConfigError("em_update_gamma_h: dimension mismatch");
    }
    if (!(lambda_k > 0.0)) {
        throw ConfigError("em_update_gamma_h: lambda_k must be positive");
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
        acc += pi(i) * (std::norm(mu(i)) + nu);
    }
    const double second_moment = acc / (lambda_k * double(pi.size()));
    if (!(second_moment > 0.0) || !std::isfinite(second_moment)) {
        return gamma_h_prev;
    }
    return clamp_gamma(1.0 / second_moment, bounds);
}

double em_update_gamma_w(const CVector& y, const SvdFactors& svd, const CVector& h_hat2,
                         double gamma2, double gamma_w_prev, const HyperparamBounds& bounds) {
    if (static_cast<std::size_t>(y.size()) != svd.rows ||
        static_cast<std::size_t>(h_hat2.size()) != svd.cols) {
        throw ConfigError("em_update_gamma_w: dimension mismatch");
    }
    const CVector u_h_y = svd.U.adjoint() * y;
    const CVector v_h_h = svd.V.adjoint() * h_hat2;
    const double residual = projected_residual(y.squaredNorm(), u_h_y, svd.s, v_h_h);
    return gamma_w_from_residual(residual, svd.s, gamma2, gamma_w_prev, svd.rows, bounds);
}

VampResult run_em_vamp(const CVector& y, const SvdFactors& svd, const VampConfig& config,
                       const VampOptions& options) {
    config.validate();
    if (static_cast<std::size_t>(y.size()) != svd.rows) {
        throw ConfigError("run_em_vamp: observation length must match W rows");
    }
    if (options.mode == VampMode::fixed_hyperparams && !options.theta) {
        throw ConfigError("run_em_vamp: fixed mode needs hyperparameters");
    }
    const auto NL = static_cast<Eigen::Index>(svd.cols);
    const std::size_t Kp = svd.rows;
    const bool learn = options.mode == VampMode::em;
    const auto& bounds = config.bounds;

    VampResult res;
    const double y2 = y.squaredNorm();
    if (y2 == 0.0) {
        res.zero_observation = true;
        res.h_hat = CVector::Zero(NL);
        res.h_hat2 = res.h_hat;
        res.theta = options.theta.value_or(Hyperparams{bounds.lambda_min, bounds.gamma_max, bounds.gamma_max});
        if (learn) {
            res.theta.lambda = bounds.lambda_min;
            res.theta.gamma_w = bounds.gamma_max;
        }
        res.converged = true;
        return res;
    }

    Hyperparams theta;
    if (options.theta) {
        theta = *options.theta;
    } else {
        const InitResult init = init_hyperparams(y, svd.s.squaredNorm(), config.zeta, bounds);
        theta = init.theta;
        res.init_fallback = init.gamma_h_fallback;
    }
    theta.lambda = std::clamp(theta.lambda, bounds.lambda_min, bounds.lambda_max);
    theta.gamma_h = clamp_gamma(theta.gamma_h, bounds);
    theta.gamma_w = clamp_gamma(theta.gamma_w, bounds);

    CmulCounter setup;
    CmulCounter loop;
    const CVector u_h_y = svd.U.adjoint() * y;
    setup.add_matvec(Kp, svd.rank());

    CVector r1 = CVector::Zero(NL);
    double gamma1 = 1.0;
    CVector best = CVector::Zero(NL);
    CVector best2 = CVector::Zero(NL);
    int clamp_streak = 0;

    for (int k = 1; k <= config.max_iterations; ++k) {
        // denoiser stage with theta_{k-1}
        const DenoiserOutput den = bg_posterior(r1, gamma1, theta.bg(), config.clamp);
        loop.add(4 * static_cast<std::uint64_t>(NL));
        const DivisionResult to_lmmse = gaussian_division(den.h_hat, den.alpha, r1, gamma1);
        loop.add(2 * static_cast<std::uint64_t>(NL));

        Hyperparams next = theta;
        if (learn) {
            next.lambda = em_update_lambda(den.pi, bounds);
            next.gamma_h = em_update_gamma_h(den.pi, den.mu, den.nu, next.lambda, theta.gamma_h, bounds);
            loop.add(2 * static_cast<std::uint64_t>(NL));
        }

        bool ok = to_lmmse.valid;
        LmmseOutput lm;
        double alpha2 = 0.0;
        bool alpha2_clamped = false;
        DivisionResult to_denoiser;
        if (ok) {
            // LMMSE stage with gamma_w_{k-1}
            lm = lmmse_stage_projected(to_lmmse.r, to_lmmse.gamma, theta.gamma_w, svd, u_h_y, &loop);
            alpha2 = std::clamp(lm.alpha, config.clamp.alpha_min, config.clamp.alpha_max);
            alpha2_clamped = alpha2 != lm.alpha;
            to_denoiser = gaussian_division(lm.h_hat, alpha2, to_lmmse.r, to_lmmse.gamma);
            loop.add(2 * static_cast<std::uint64_t>(NL));
            ok = to_denoiser.valid;
        }
        if (ok && learn) {
            const double residual = projected_residual(y2, u_h_y, svd.s, lm.v_h_hat);
            next.gamma_w = gamma_w_from_residual(residual, svd.s, to_lmmse.gamma, theta.gamma_w, Kp, bounds);
            loop.add(3 * static_cast<std::uint64_t>(svd.rank()));
        }

        CVector r1_next;
        double gamma1_next = 0.0;
        if (ok) {
            r1_next = to_denoiser.r;
            gamma1_next = to_denoiser.gamma;
            if (config.damping < 1.0) {
                r1_next = config.damping * r1_next + (1.0 - config.damping) * r1;
                gamma1_next = config.damping * gamma1_next + (1.0 - config.damping) * gamma1;
                loop.add(2 * static_cast<std::uint64_t>(NL));
            }
        }

        double xi = std::numeric_limits<double>::quiet_NaN();
        if (ok) {
            const double num = (r1_next - r1).squaredNorm();
            const double den_norm = r1_next.squaredNorm();
            xi = den_norm > 0.0 ? num / den_norm : (num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        }

        if (options.observer) {
            VampState st;
            st.iteration = k;
            st.r1 = r1;
            st.gamma1 = gamma1;
            st.r2 = to_lmmse.r;
            st.gamma2 = to_lmmse.gamma;
            st.h_hat1 = den.h_hat;
            st.h_hat2 = lm.h_hat;
            st.alpha1 = den.alpha;
            st.alpha2 = alpha2;
            st.eta1 = den.eta;
            st.xi = xi;
            options.observer(st);
        }

        res.iterations = k;
        if (!ok || !std::isfinite(xi) || !den.h_hat.allFinite() || !lm.h_hat.allFinite()) {
            res.diverged = true;
            break;
        }

        const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
        const double theta_change =
            std::max({rel(next.lambda, theta.lambda), rel(next.gamma_h, theta.gamma_h), rel(next.gamma_w, theta.gamma_w)});
        theta = next;
        best = den.h_hat;
        best2 = lm.h_hat;

        VampTraceRow row;
        row.iteration = k;
        row.lambda = theta.lambda;
        row.gamma_h = theta.gamma_h;
        row.gamma_w = theta.gamma_w;
        row.xi = xi;
        if (options.truth != nullptr) {
            row.nmse_db = nmse_db_of(den.h_hat, *options.truth);
        }
        res.trace.rows.push_back(row);

        clamp_streak = (den.alpha_clamped || alpha2_clamped) ? clamp_streak + 1 : 0;
        if (clamp_streak >= config.divergence_streak) {
            res.diverged = true;
            break;
        }

        r1 = std::move(r1_next);
        gamma1 = gamma1_next;
        if (xi <= config.xi_threshold && (!learn || theta_change <= config.theta_tolerance)) {
            res.converged = true;
            break;
        }
    }

    res.h_hat = best;
    res.h_hat2 = best2;
    res.theta = theta;
    res.cmul_setup = setup.count;
    res.cmul_loop = loop.count;
    return res;
}

} // namespace vampce
