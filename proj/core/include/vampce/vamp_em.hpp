#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "vampce/bg_denoiser.hpp"
#include "vampce/linalg.hpp"
#include "vampce/types.hpp"

namespace vampce {

/// theta = (lambda, gamma_h, gamma_w).
struct Hyperparams {
    double lambda = 0.95;
    double gamma_h = 1.0;
    double gamma_w = 1.0;

    [[nodiscard]] BgParams bg() const { return {lambda, gamma_h}; }
};

struct HyperparamBounds {
    double lambda_min = 1e-6;
    double lambda_max = 1.0 - 1e-6;
    double gamma_min = 1e-8;
    double gamma_max = 1e12;
};

struct VampConfig {
    int max_iterations = 50;        // K_max
    double xi_threshold = 1e-6;     // xi_T
    /// EM mode also waits for max relative change of (lambda, gamma_h, gamma_w) to drop
    /// below this; with orthogonal pilots r1 settles after two iterations while theta
    /// is still moving. Infinity restores the bare xi test.
    double theta_tolerance = 1e-4;
    double zeta = 10.0;             // linear SNR guess for the gamma_w initialization
    double damping = 1.0;           // 1 = undamped
    ClampBounds clamp{};
    HyperparamBounds bounds{};
    int divergence_streak = 3;      // consecutive alpha-clamp hits treated as divergence

    void validate() const;
};

struct InitResult {
    Hyperparams theta;
    bool gamma_h_fallback = false; // denominator of the gamma_h rule was not positive
};

/// Data-driven starting point: gamma_w from the SNR guess zeta, lambda_0 = 0.95,
/// gamma_h matched to the residual signal energy.
InitResult init_hyperparams(const CVector& y, double w_frobenius_sq, double zeta,
                            const HyperparamBounds& bounds = {});
InitResult init_hyperparams(const CVector& y, const CMatrix& W, double zeta,
                            const HyperparamBounds& bounds = {});

struct LmmseOutput {
    CVector h_hat;        // N*L
    CVector v_h_hat;      // V^H h_hat, length rank
    double alpha = 0.0;   // unclamped divergence, averaged over all N*L coordinates
};

/// Gaussian-prior LMMSE stage in SVD form:
///   h = r2 + V d (gamma_w S U^H y - gamma_w S^2 V^H r2),  d = (gamma_w S^2 + gamma2)^-1
///   alpha = ((NL - R) + sum_n gamma2 / (gamma_w s_n^2 + gamma2)) / NL
LmmseOutput lmmse_stage(const CVector& r2, double gamma2, double gamma_w, const SvdFactors& svd,
                        const CVector& y, CmulCounter* counter = nullptr);
/// Same, taking the pre-rotated observation U^H y.
LmmseOutput lmmse_stage_projected(const CVector& r2, double gamma2, double gamma_w,
                                  const SvdFactors& svd, const CVector& u_h_y,
                                  CmulCounter* counter = nullptr);

double em_update_lambda(const RVector& pi, const HyperparamBounds& bounds = {});

/// Returns gamma_h_prev when the weighted second moment is zero or not finite.
double em_update_gamma_h(const RVector& pi, const CVector& mu, double nu, double lambda_k,
                         double gamma_h_prev, const HyperparamBounds& bounds = {});

/// K_p / (||y - W h2||^2 + sum_n s_n^2 / (gamma_w_prev s_n^2 + gamma2)).
double em_update_gamma_w(const CVector& y, const SvdFactors& svd, const CVector& h_hat2,
                         double gamma2, double gamma_w_prev, const HyperparamBounds& bounds = {});

enum class VampMode { em, fixed_hyperparams };

/// Snapshot handed to the observer once per iteration.
struct VampState {
    int iteration = 0;
    CVector r1;
    double gamma1 = 0;
    CVector r2;
    double gamma2 = 0;
    CVector h_hat1;
    CVector h_hat2;
    double alpha1 = 0;
    double alpha2 = 0;
    double eta1 = 0;
    double xi = 0;
};

struct VampTraceRow {
    int iteration = 0;
    double lambda = 0;
    double gamma_h = 0;
    double gamma_w = 0;
    double xi = 0;
    std::optional<double> nmse_db;
};

struct VampTrace {
    std::vector<VampTraceRow> rows;
    [[nodiscard]] std::size_t size() const { return rows.size(); }
};

struct VampOptions {
    VampMode mode = VampMode::em;
    /// Fixed mode: the hyperparameters used throughout (required).
    /// EM mode: optional starting point replacing the data-driven initialization.
    std::optional<Hyperparams> theta;
    /// Ground truth, only used to fill the NMSE column of the trace.
    const CVector* truth = nullptr;
    std::function<void(const VampState&)> observer;
};

struct VampResult {
    CVector h_hat;        // h_hat_1 at the last executed iteration
    CVector h_hat2;       // LMMSE-stage estimate of the last iteration
    Hyperparams theta;    // final hyperparameters
    VampTrace trace;
    int iterations = 0;   // K_f
    bool converged = false;
    bool diverged = false;
    bool init_fallback = false;
    bool zero_observation = false;
    std::uint64_t cmul_setup = 0;
    std::uint64_t cmul_loop = 0;

    [[nodiscard]] std::uint64_t cmul_total() const { return cmul_setup + cmul_loop; }
};

/// EM-VAMP channel estimation for one hydrophone (or plain VAMP in fixed mode).
VampResult run_em_vamp(const CVector& y, const SvdFactors& svd, const VampConfig& config,
                       const VampOptions& options = {});

} // namespace vampce
