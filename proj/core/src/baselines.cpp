#include "vampce/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vampce/ofdm.hpp"
#include "vampce/vamp_em.hpp"

namespace vampce {

std::string flags_to_string(std::uint32_t flags) {
    if (flags == flag_none) {
        return "ok";
    }
    static constexpr std::pair<std::uint32_t, const char*> names[] = {
        {flag_rank_deficient, "rank_deficient"}, {flag_stalled, "stalled"},
        {flag_not_converged, "not_converged"},   {flag_diverged, "diverged"},
        {flag_all_pruned, "all_pruned"},         {flag_zero_observation, "zero_observation"},
        {flag_init_fallback, "init_fallback"},   {flag_zero_channel, "zero_channel"},
    };
    std::string out;
    for (const auto& [bit, name] : names) {
        if (flags & bit) {
            if (!out.empty()) {
                out += '|';
            }
            out += name;
        }
    }
    return out;
}

EstimatorResult ls_estimate(const CVector& y, const SvdFactors& svd) {
    if (static_cast<std::size_t>(y.size()) != svd.rows) {
        throw ConfigError("ls_estimate: observation length must match W rows");
    }
    EstimatorResult res;
    const auto R = static_cast<Eigen::Index>(svd.rank());
    CVector coeff = svd.U.adjoint() * y;
    for (Eigen::Index n = 0; n < R; ++n) {
        coeff(n) /= svd.s(n);
    }
    res.h_hat = svd.V * coeff;
    res.cmul = std::uint64_t(svd.rows) * svd.rank() + svd.rank() + std::uint64_t(svd.cols) * svd.rank();
    res.cmul = std::max<std::uint64_t>(res.cmul, 1);
    res.iterations = 1;
    if (svd.rank() < svd.cols) {
        res.flags |= flag_rank_deficient;
    }
    return res;
}

EstimatorResult lmmse_estimate(const CVector& y, const SvdFactors& svd, double prior_variance,
                               double gamma_w) {
    if (!(prior_variance > 0.0) || !(gamma_w > 0.0)) {
        throw ConfigError("lmmse_estimate: prior variance and gamma_w must be positive");
    }
    CmulCounter counter;
    const CVector r2 = CVector::Zero(static_cast<Eigen::Index>(svd.cols));
    const LmmseOutput lm = lmmse_stage(r2, 1.0 / prior_variance, gamma_w, svd, y, &counter);
    EstimatorResult res;
    res.h_hat = lm.h_hat;
    res.iterations = 1;
    // V^H r2 is identically zero here; do not charge for it
    res.cmul = std::max<std::uint64_t>(counter.count - std::uint64_t(svd.cols) * svd.rank(), 1);
    return res;
}

OmpConfig OmpConfig::for_channel(std::size_t N, std::size_t L, std::size_t K_p,
                                 double lambda_guess, double noise_power) {
    OmpConfig c;
    c.max_atoms = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(double(N * L) * lambda_guess - 1e-9)));
    c.max_atoms = std::min(c.max_atoms, K_p);
    c.residual_threshold = double(K_p) * noise_power;
    return c;
}

void OmpConfig::validate() const {
    if (max_atoms < 1) {
        throw ConfigError("OmpConfig: max_atoms must be >= 1");
    }
    if (!(residual_threshold >= 0.0)) {
        throw ConfigError("OmpConfig: residual_threshold must be non-negative");
    }
}

EstimatorResult omp_estimate(const CVector& y, const CMatrix& W, const OmpConfig& config) {
    config.validate();
    if (W.rows() != y.size()) {
        throw ConfigError("omp_estimate: observation length must match W rows");
    }
    const Eigen::Index Kp = W.rows();
    const Eigen::Index NL = W.cols();
    const RVector norms = W.colwise().norm().transpose();
    if (norms.minCoeff() <= 0.0) {
        throw ConfigError("omp_estimate: W has a zero column");
    }

    EstimatorResult res;
    CmulCounter cm;
    cm.add_matvec(static_cast<std::size_t>(Kp), static_cast<std::size_t>(NL));

    const auto cap = static_cast<Eigen::Index>(std::min<std::size_t>(config.max_atoms, std::min(Kp, NL)));
    CMatrix Q(Kp, cap);
    CMatrix Rf = CMatrix::Zero(cap, cap);
    std::vector<Eigen::Index> support;
    std::vector<char> chosen(static_cast<std::size_t>(NL), 0);
    CVector r = y;

    while (static_cast<Eigen::Index>(support.size()) < cap && r.squaredNorm() > config.residual_threshold) {
        const CVector corr = W.adjoint() * r;
        cm.add_matvec(static_cast<std::size_t>(Kp), static_cast<std::size_t>(NL));
        Eigen::Index best = 0;
        double best_score = -1.0;
        for (Eigen::Index j = 0; j < NL; ++j) {
            const double score = std::abs(corr(j)) / norms(j);
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        cm.add(static_cast<std::uint64_t>(NL));
        if (chosen[static_cast<std::size_t>(best)]) {
            res.flags |= flag_stalled;
            break;
        }
        // modified Gram-Schmidt, applied twice for orthogonality
        const auto k = static_cast<Eigen::Index>(support.size());
        CVector q = W.col(best);
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < k; ++i) {
                const cdouble c = Q.col(i).dot(q);
                Rf(i, k) += c;
                q -= c * Q.col(i);
            }
        }
        cm.add(4 * static_cast<std::uint64_t>(Kp) * static_cast<std::uint64_t>(k));
        const double qn = q.norm();
        if (qn <= 1e-10 * norms(best)) {
            res.flags |= flag_stalled;
            break;
        }
        Rf(k, k) = qn;
        Q.col(k) = q / qn;
        r -= Q.col(k) * Q.col(k).dot(r);
        cm.add(3 * static_cast<std::uint64_t>(Kp));
        chosen[static_cast<std::size_t>(best)] = 1;
        support.push_back(best);
    }

    res.h_hat = CVector::Zero(NL);
    const auto k = static_cast<Eigen::Index>(support.size());
    if (k > 0) {
        const CVector z = Q.leftCols(k).adjoint() * y;
        const CVector x = Rf.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(z);
        for (Eigen::Index i = 0; i < k; ++i) {
            res.h_hat(support[static_cast<std::size_t>(i)]) = x(i);
        }
        cm.add(static_cast<std::uint64_t>(Kp) * k + static_cast<std::uint64_t>(k) * (k + 1) / 2);
    }
    res.iterations = static_cast<int>(k);
    res.cmul = cm.count;
    res.cmul_setup = static_cast<std::uint64_t>(Kp) * static_cast<std::uint64_t>(NL);
    return res;
}

void SblConfig::validate() const {
    if (max_iterations < 1) {
        throw ConfigError("SblConfig: max_iterations must be >= 1");
    }
    if (!(prune_threshold > 0.0) || !(tolerance > 0.0)) {
        throw ConfigError("SblConfig: prune_threshold and tolerance must be positive");
    }
    if (!learn_noise && !(gamma_w > 0.0)) {
        throw ConfigError("SblConfig: fixed noise precision must be positive");
    }
}

SblSystem::SblSystem(CMatrix W_in) : W(std::move(W_in)) {
    gram = W.adjoint() * W;
    diagonal_gram = gram_matrix_is_diagonal(gram);
    // Hermitian: only the upper triangle needs computing
    cmul_build = std::uint64_t(W.rows()) * std::uint64_t(W.cols()) * (std::uint64_t(W.cols()) + 1) / 2;
}

EstimatorResult sbl_estimate(const CVector& y, const CMatrix& W, const SblConfig& config) {
    const SblSystem sys(W);
    EstimatorResult res = sbl_estimate(y, sys, config);
    res.cmul += sys.cmul_build;
    res.cmul_setup += sys.cmul_build;
    return res;
}

EstimatorResult sbl_estimate(const CVector& y, const SblSystem& system, const SblConfig& config) {
    config.validate();
    const CMatrix& W = system.W;
    if (W.rows() != y.size()) {
        throw ConfigError("sbl_estimate: observation length must match W rows");
    }
    const Eigen::Index Kp = W.rows();
    const Eigen::Index NL = W.cols();
    EstimatorResult res;
    res.h_hat = CVector::Zero(NL);

    const double y2 = y.squaredNorm();
    if (y2 == 0.0) {
        res.flags |= flag_all_pruned | flag_zero_observation;
        res.cmul = 1;
        return res;
    }

    CmulCounter cm;
    const CVector b = W.adjoint() * y;
    cm.add_matvec(static_cast<std::size_t>(Kp), static_cast<std::size_t>(NL));

    const double w_frob2 = system.gram.diagonal().real().sum();
    double gamma_w = config.learn_noise ? (1.0 + config.zeta) * double(Kp) / y2 : config.gamma_w;
    const double signal = std::max(y2 - double(Kp) / gamma_w, 1e-3 * y2);
    RVector a = RVector::Constant(NL, w_frob2 / signal);
    RVector variance = a.cwiseInverse();

    std::vector<Eigen::Index> active(static_cast<std::size_t>(NL));
    for (Eigen::Index i = 0; i < NL; ++i) {
        active[static_cast<std::size_t>(i)] = i;
    }
    res.cmul_setup = cm.count;

    CVector mu_full = CVector::Zero(NL);
    bool converged = false;
    int it = 0;
    for (it = 1; it <= config.max_iterations; ++it) {
        const auto na = static_cast<Eigen::Index>(active.size());
        CVector mu(na);
        RVector sigma_diag(na);
        double trace_term = 0.0;

        if (system.diagonal_gram) {
            for (Eigen::Index p = 0; p < na; ++p) {
                const Eigen::Index i = active[static_cast<std::size_t>(p)];
                const double g = system.gram(i, i).real();
                sigma_diag(p) = 1.0 / (gamma_w * g + a(i));
                mu(p) = gamma_w * sigma_diag(p) * b(i);
                trace_term += sigma_diag(p) * g;
            }
            cm.add(5 * static_cast<std::uint64_t>(na));
        } else {
            CMatrix P(na, na);
            CVector b_a(na);
            for (Eigen::Index q = 0; q < na; ++q) {
                const Eigen::Index j = active[static_cast<std::size_t>(q)];
                for (Eigen::Index p = 0; p < na; ++p) {
                    P(p, q) = gamma_w * system.gram(active[static_cast<std::size_t>(p)], j);
                }
                P(q, q) += a(j);
                b_a(q) = b(j);
            }
            Eigen::LLT<CMatrix> llt(P);
            if (llt.info() != Eigen::Success) {
                res.flags |= flag_diverged;
                break;
            }
            const CMatrix sigma = llt.solve(CMatrix::Identity(na, na));
            mu = gamma_w * (sigma * b_a);
            sigma_diag = sigma.diagonal().real();
            for (Eigen::Index q = 0; q < na; ++q) {
                const Eigen::Index j = active[static_cast<std::size_t>(q)];
                for (Eigen::Index p = 0; p < na; ++p) {
                    trace_term += (sigma(p, q) * system.gram(j, active[static_cast<std::size_t>(p)])).real();
                }
            }
            const auto n = static_cast<std::uint64_t>(na);
            // Cholesky (n^3/6) + triangular inverse and product (n^3/3) + scaling
            cm.add(n * n * n / 2 + n * n);
            cm.add(n * n + n); // Sigma b and the trace term
            cm.add(n * n);
        }

        // residual on the active columns
        CVector fit = CVector::Zero(Kp);
        for (Eigen::Index p = 0; p < na; ++p) {
            fit += mu(p) * W.col(active[static_cast<std::size_t>(p)]);
        }
        const double residual = (y - fit).squaredNorm();
        cm.add(static_cast<std::uint64_t>(Kp) * static_cast<std::uint64_t>(na));

        if (!mu.allFinite() || !std::isfinite(residual)) {
            res.flags |= flag_diverged;
            break;
        }

        mu_full.setZero();
        RVector new_variance = RVector::Zero(NL);
        std::vector<Eigen::Index> still_active;
        still_active.reserve(active.size());
        for (Eigen::Index p = 0; p < na; ++p) {
            const Eigen::Index i = active[static_cast<std::size_t>(p)];
            const double second = std::norm(mu(p)) + sigma_diag(p);
            a(i) = 1.0 / second;
            mu_full(i) = mu(p);
            if (a(i) > config.prune_threshold) {
                mu_full(i) = 0.0;
            } else {
                new_variance(i) = second;
                still_active.push_back(i);
            }
        }
        cm.add(2 * static_cast<std::uint64_t>(na));

        if (config.learn_noise) {
            const double den = residual + trace_term;
            gamma_w = den > 0.0 ? std::clamp(double(Kp) / den, 1e-8, 1e12) : 1e12;
            cm.add(1);
        }

        const double base = variance.norm();
        const double change = base > 0.0 ? (new_variance - variance).norm() / base : 0.0;
        variance = new_variance;
        active = std::move(still_active);
        if (active.empty()) {
            res.flags |= flag_all_pruned;
            break;
        }
        if (change < config.tolerance) {
            converged = true;
            break;
        }
    }
    res.iterations = std::min(it, config.max_iterations);
    if (!converged && !(res.flags & (flag_all_pruned | flag_diverged))) {
        res.flags |= flag_not_converged;
    }
    res.h_hat = mu_full;
    res.cmul = std::max<std::uint64_t>(cm.count, 1);
    return res;
}

} // namespace vampce
