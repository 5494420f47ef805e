#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vampce/baselines.hpp"
#include "vampce/channel.hpp"
#include "vampce/ofdm.hpp"
#include "vampce/vamp_em.hpp"

namespace vampce {

/// Names accepted in the estimator list, in canonical order.
const std::vector<std::string>& known_estimators();

struct ExperimentSpec {
    std::size_t K = 1024;
    std::size_t N = 2;
    std::size_t M = 4;
    std::size_t L = 100;
    std::size_t N_zp = 0; // 0 = L
    std::size_t n_null = 0;
    PilotPattern pattern = PilotPattern::automatic;
    PilotScheme scheme = PilotScheme::orthogonal;
    NoiseMode noise_mode = NoiseMode::time_domain;

    BgParams channel{};
    std::optional<std::filesystem::path> channel_file; // replays fixed taps when set

    std::vector<std::string> estimators{"ls", "lmmse", "omp", "sbl", "em-vamp"};
    std::vector<double> snr_db{20.0};
    std::vector<std::size_t> pilot_counts{256};
    std::size_t trials = 1;
    std::uint64_t seed = 1;
    std::string out;

    VampConfig vamp{};
    SblConfig sbl{};
    double omp_lambda_guess = 0.25;

    std::size_t threads = 1;
    bool record_wall_time = false;

    [[nodiscard]] std::size_t zp() const { return N_zp == 0 ? L : N_zp; }
    [[nodiscard]] OfdmConfig ofdm(std::size_t K_p) const;
    void validate() const;
};

struct MetricsRecord {
    std::string estimator;
    double snr_db = 0.0;
    std::size_t k_p = 0;
    std::size_t trial = 0;
    double nmse_db = 0.0;
    double symbol_mse_db = 0.0;
    double raw_ber = 0.0;
    int iterations = 0;
    std::uint64_t cmul_count = 0;
    double wall_ms = 0.0;
    std::string status;
    bool failed = false; // numeric failure, metrics are NaN

    // not written to CSV
    std::vector<double> gamma_w_hat; // per hydrophone (em-vamp only)
    double gamma_w_true = 0.0;
    double signal_power = 0.0;       // P_s on the pilot tones
    std::vector<Hyperparams> theta;  // per hydrophone (em-vamp / vamp)
};

struct SweepResult {
    std::vector<MetricsRecord> records; // sorted by (estimator order, SNR, K_p, trial)
    [[nodiscard]] bool all_failed() const;
};

SweepResult run_sweep(const ExperimentSpec& spec);

/// One trial of the synthetic link, shared by every estimator.
struct TrialData {
    OfdmConfig config;
    ChannelRealization channel;
    std::vector<CVector> data_symbols; // per transducer
    std::vector<ReceivedBlock> rx;     // per hydrophone
    double gamma_w = 0.0;
    double signal_power = 0.0;
};

/// Draw channel, data and noise for (K_p, trial, SNR) using the keyed substreams of a sweep.
TrialData make_trial(const ExperimentSpec& spec, const PilotSystem& system, const PilotBook& book,
                     std::size_t K_p, std::size_t trial, double snr_db);

/// Pilot book and system used by every trial with this pilot count.
struct PilotSetup {
    OfdmConfig config;
    PilotBook book;
    PilotSystem system;
};
PilotSetup make_pilot_setup(const ExperimentSpec& spec, std::size_t K_p);

/// Rough complex-multiply count of a thin SVD of a rows x cols matrix.
std::uint64_t svd_cmul_estimate(std::size_t rows, std::size_t cols);

struct ConvergenceRow {
    std::size_t init = 0;
    std::size_t trial = 0;
    std::size_t hydrophone = 0;
    VampTraceRow row;
    std::string status;
};

/// EM-VAMP traces from several starting points on identical data
/// (first SNR and first pilot count of the spec).
std::vector<ConvergenceRow> convergence_study(const ExperimentSpec& spec,
                                              const std::vector<Hyperparams>& initializations);

/// Starting points of the reference convergence study.
std::vector<Hyperparams> reference_initializations();

struct BenchRow {
    std::string estimator;
    std::size_t N = 0;
    std::size_t L = 0;
    std::size_t k_p = 0;
    double iterations = 0;       // mean over trials and hydrophones
    double cmul_total = 0;       // mean per hydrophone, setup included
    double cmul_per_iteration = 0;
    double wall_ms = 0;          // mean per hydrophone, setup included
};

/// Per-estimator cost on the first pilot count and SNR of the spec.
std::vector<BenchRow> bench_estimators(const ExperimentSpec& spec);

} // namespace vampce
