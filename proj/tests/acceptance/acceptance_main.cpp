// Acceptance suite: one PASS/FAIL line per criterion.
//   vampce_acceptance            run everything
//   vampce_acceptance <name>...  run the named checks only
// Exit status is the number of failed checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstring>
#include <limits>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vampce/vampce.hpp"
#include "bg_quadrature.hpp"

using namespace vampce;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double median(std::vector<double> v) {
    if (v.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Noiseless time-domain chain (IDFT, zero-padding, linear convolution, overlap-add, DFT)
// against the pilot-domain product W h, over random geometries.
Outcome pipeline_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    SeedStream root(0xA11CE);
    double worst = 0.0;
    for (std::uint64_t c = 0; c < 200; ++c) {
        SeedStream s = root.substream("config", {c});
        const std::size_t K = std::size_t(16) << (s.next_u64() % 5); // 16..256
        const std::size_t N = 1 + s.next_u64() % 3;
        const std::size_t M = 1 + s.next_u64() % 3;
        const std::size_t L = 1 + s.next_u64() % std::min<std::size_t>(16, K / (2 * N));
        const std::size_t zp = L + s.next_u64() % 3;
        const std::size_t Kp = std::min(K, N * L + s.next_u64() % (K - N * L + 1));
        const auto scheme = (s.next_u64() % 2 == 0 && Kp >= N * L) ? PilotScheme::orthogonal : PilotScheme::random_qpsk;
        const auto pattern = s.next_u64() % 2 ? PilotPattern::nearest_uniform : PilotPattern::automatic;
        const OfdmConfig cfg = OfdmConfig::make(K, Kp, N, M, L, zp, 0, pattern);
        SeedStream ps = s.substream("pilots");
        const PilotBook book = make_pilot_book(N, Kp, L, scheme, ps);
        const CMatrix W = build_measurement_matrix(cfg, book);
        SeedStream cs = s.substream("channel");
        const ChannelRealization ch = sample_bg_channel(cfg.channel_dims(), {0.3, 1.0}, cs);
        SeedStream ds = s.substream("data");
        std::vector<CVector> data;
        for (std::size_t n = 0; n < N; ++n) {
            data.push_back(random_qpsk(cfg.K_d(), ds));
        }
        SeedStream ns = s.substream("noise");
        const auto rx = transmit_receive(cfg, book, data, ch, std::numeric_limits<double>::infinity(), ns);
        for (std::size_t m = 0; m < M; ++m) {
            worst = std::max(worst, (rx[m].pilots - W * ch.stacked(m)).cwiseAbs().maxCoeff());
        }
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-9 && secs < 30.0, fmt("max |err| = %.3e (< 1e-9), %.2f s (< 30 s)", worst, secs)};
}

Outcome denoiser_quadrature() {
    const auto t0 = std::chrono::steady_clock::now();
    SeedStream s(0xD3A0);
    const auto log_uniform = [&](double lo, double hi) {
        return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * s.next_uniform());
    };
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double g1 = log_uniform(1e-2, 1e2);
        const double gh = log_uniform(1e-2, 1e2);
        const double lambda = log_uniform(1e-2, 0.99);
        const double mag = log_uniform(1e-2, 1e2);
        const double phase = 2.0 * M_PI * s.next_uniform();
        const cdouble r = std::polar(mag, phase);

        const DenoiserOutput d = bg_posterior(CVector::Constant(1, r), g1, {lambda, gh});
        const auto q = vampce_test::bg_posterior_quadrature(r, g1, lambda, gh);
        const double var_c = d.pi(0) * (std::norm(d.mu(0)) + d.nu) - std::norm(d.h_hat(0));
        worst = std::max({worst, std::abs(d.pi(0) - q.pi), std::abs(d.h_hat(0) - q.mean), std::abs(var_c - q.var)});
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-6 && secs < 60.0, fmt("max abs err = %.3e (< 1e-6), %.2f s (< 60 s)", worst, secs)};
}

Outcome lmmse_svd_form() {
    SeedStream s(0x1A5E);
    double worst_h = 0.0, worst_a = 0.0;
    const std::pair<int, int> shapes[] = {{64, 40}, {64, 80}};
    for (const auto& [rows, cols] : shapes) {
        for (int t = 0; t < 5; ++t) {
            CMatrix W(rows, cols);
            for (int j = 0; j < cols; ++j) {
                W.col(j) = sample_cgauss(rows, 1.0, s);
            }
            const CVector y = sample_cgauss(rows, 1.0, s);
            const CVector r2 = sample_cgauss(cols, 1.0, s);
            const double g2 = 0.1 + 5.0 * s.next_uniform();
            const double gw = 0.1 + 20.0 * s.next_uniform();
            const LmmseOutput lm = lmmse_stage(r2, g2, gw, thin_svd(W), y);

            CMatrix A = gw * W.adjoint() * W;
            A.diagonal().array() += g2;
            const CMatrix Ainv = A.inverse();
            const CVector h_ref = Ainv * (gw * W.adjoint() * y + g2 * r2);
            const double a_ref = g2 * Ainv.trace().real() / cols;
            worst_h = std::max(worst_h, (lm.h_hat - h_ref).norm() / h_ref.norm());
            worst_a = std::max(worst_a, std::abs(lm.alpha - a_ref));
        }
    }
    return {worst_h < 1e-10 && worst_a < 1e-12,
            fmt("h rel err = %.3e (< 1e-10), alpha err = %.3e (< 1e-12)", worst_h, worst_a)};
}

Outcome exact_recovery() {
    const std::size_t N = 2, L = 20, Kp = 80, K = 320;
    const OfdmConfig cfg = OfdmConfig::make(K, Kp, N, 1, L, L);
    SeedStream root(0xE8AC7);
    SeedStream ps = root.substream("pilots");
    const PilotBook book = make_pilot_book(N, Kp, L, PilotScheme::orthogonal, ps);
    const PilotSystem sys = build_pilot_system(cfg, book);
    double worst_ls = -1e9, worst_vamp = -1e9;
    int worst_iter = 0;
    for (std::uint64_t t = 0; t < 20; ++t) {
        SeedStream cs = root.substream("channel", {t});
        const ChannelRealization ch = sample_bg_channel(cfg.channel_dims(), {0.1, 100.0}, cs, {false, true});
        SeedStream ds = root.substream("data", {t});
        std::vector<CVector> data{random_qpsk(cfg.K_d(), ds), random_qpsk(cfg.K_d(), ds)};
        SeedStream ns = root.substream("noise", {t});
        const auto rx = transmit_receive(cfg, book, data, ch, std::numeric_limits<double>::infinity(), ns);
        const CVector h = ch.stacked(0);
        worst_ls = std::max(worst_ls, nmse_db(ls_estimate(rx[0].pilots, sys.svd).h_hat, h));
        VampConfig vc;
        vc.max_iterations = 50;
        const VampResult r = run_em_vamp(rx[0].pilots, sys.svd, vc);
        worst_vamp = std::max(worst_vamp, nmse_db(r.h_hat, h));
        worst_iter = std::max(worst_iter, r.iterations);
    }
    return {worst_ls < -160.0 && worst_vamp < -80.0 && worst_iter <= 50,
            fmt("LS %.1f dB (< -160), EM-VAMP %.1f dB (< -80) in <= %d iterations", worst_ls, worst_vamp,
                worst_iter)};
}

std::map<std::string, std::map<double, double>> median_by(const std::vector<MetricsRecord>& recs,
                                                          double MetricsRecord::*field) {
    std::map<std::string, std::map<double, std::vector<double>>> acc;
    for (const auto& r : recs) {
        acc[r.estimator][r.snr_db].push_back(r.*field);
    }
    std::map<std::string, std::map<double, double>> out;
    for (auto& [e, by] : acc) {
        for (auto& [snr, v] : by) {
            out[e][snr] = median(v);
        }
    }
    return out;
}

Outcome estimator_comparison() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentSpec spec;
    spec.K = 1024;
    spec.N = 2;
    spec.M = 4;
    spec.L = 100;
    spec.channel = {0.1, 100.0};
    spec.pilot_counts = {256};
    spec.scheme = PilotScheme::orthogonal;
    spec.snr_db = {5, 10, 15, 20};
    spec.trials = 200;
    spec.seed = 2024;
    spec.estimators = {"ls", "omp", "sbl", "em-vamp"};
    const auto med = median_by(run_sweep(spec).records, &MetricsRecord::nmse_db);
    const double secs = seconds_since(t0);

    bool ok = secs < 900.0;
    std::string detail;
    for (double snr : spec.snr_db) {
        const double v = med.at("em-vamp").at(snr);
        const double gap_ls = med.at("ls").at(snr) - v;
        const double gap_omp = med.at("omp").at(snr) - v;
        const double gap_sbl = std::abs(med.at("sbl").at(snr) - v);
        if (snr >= 10.0) {
            ok = ok && gap_ls >= 2.0 && gap_omp >= 2.0;
        }
        ok = ok && gap_sbl <= 1.5;
        detail += fmt("%s%g dB: vamp %.2f, ls +%.2f, omp +%.2f, |sbl| %.2f", detail.empty() ? "" : "; ", snr, v,
                      gap_ls, gap_omp, gap_sbl);
    }
    detail += fmt(" (need ls/omp >= 2 at >= 10 dB, |sbl| <= 1.5); %.1f s", secs);
    return {ok, detail};
}

Outcome hyperparameter_convergence() {
    ExperimentSpec spec;
    spec.N = 2;
    spec.M = 1;
    spec.L = 100;
    spec.K = 1024;
    spec.pilot_counts = {256};
    spec.channel = {0.05, 100.0};
    spec.snr_db = {20.0};
    spec.trials = 50;
    spec.seed = 77;
    spec.vamp.max_iterations = 10;
    const auto inits = reference_initializations();
    const auto rows = convergence_study(spec, inits);

    // last recorded row (iteration 10 unless stopped earlier) per (init, trial)
    std::map<std::pair<std::size_t, std::size_t>, VampTraceRow> last;
    for (const auto& r : rows) {
        last[{r.init, r.trial}] = r.row;
    }
    std::vector<double> spread_l, spread_h, spread_w, lambdas;
    for (std::size_t t = 0; t < spec.trials; ++t) {
        std::vector<double> l, h, w;
        for (std::size_t i = 0; i < inits.size(); ++i) {
            const auto& row = last.at({i, t});
            l.push_back(row.lambda);
            h.push_back(row.gamma_h);
            w.push_back(row.gamma_w);
            lambdas.push_back(row.lambda);
        }
        const auto spread = [](const std::vector<double>& v) {
            const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            return (*hi - *lo) / median(v);
        };
        spread_l.push_back(spread(l));
        spread_h.push_back(spread(h));
        spread_w.push_back(spread(w));
    }
    const double sl = median(spread_l), sh = median(spread_h), sw = median(spread_w);
    const double lam = median(lambdas);
    const bool ok = sl <= 0.05 && sh <= 0.05 && sw <= 0.05 && std::abs(lam - 0.05) <= 0.3 * 0.05;
    return {ok, fmt("spread lambda %.4f, gamma_h %.4f, gamma_w %.4f (<= 0.05); lambda %.4f (0.035..0.065)", sl, sh,
                    sw, lam)};
}

Outcome under_pilot_ber() {
    ExperimentSpec spec;
    spec.N = 2;
    spec.M = 2;
    spec.L = 100;
    spec.K = 1024;
    spec.channel = {0.1, 100.0};
    spec.pilot_counts = {150};
    spec.pattern = PilotPattern::nearest_uniform;
    spec.scheme = PilotScheme::random_qpsk;
    spec.snr_db = {20.0};
    spec.trials = 100;
    spec.seed = 150;
    spec.estimators = {"ls", "omp", "em-vamp"};
    const auto med = median_by(run_sweep(spec).records, &MetricsRecord::raw_ber);
    const double ls = med.at("ls").at(20.0), omp = med.at("omp").at(20.0), vamp = med.at("em-vamp").at(20.0);
    return {ls > 0.1 && vamp < 0.05 && omp < 0.1,
            fmt("BER ls %.4f (> 0.1), em-vamp %.4f (< 0.05), omp %.4f (< 0.1)", ls, vamp, omp)};
}

Outcome noise_precision() {
    ExperimentSpec spec;
    spec.N = 2;
    spec.M = 2;
    spec.L = 100;
    spec.K = 1024;
    spec.pilot_counts = {256};
    spec.snr_db = {5, 10, 20};
    spec.trials = 50;
    spec.seed = 808;
    spec.estimators = {"em-vamp"};
    const SweepResult res = run_sweep(spec);
    bool ok = true;
    std::string detail;
    for (double snr : spec.snr_db) {
        std::vector<double> implied;
        for (const auto& r : res.records) {
            if (r.snr_db == snr) {
                for (double g : r.gamma_w_hat) {
                    implied.push_back(10.0 * std::log10(r.signal_power * g));
                }
            }
        }
        const double m = median(implied);
        ok = ok && std::abs(m - snr) <= 1.0;
        detail += fmt("%s%g dB -> %.2f dB", detail.empty() ? "" : ", ", snr, m);
    }
    return {ok, detail + " (within 1 dB)"};
}

Outcome complexity_scaling() {
    std::map<std::size_t, std::map<std::string, BenchRow>> rows;
    for (std::size_t L : {50, 100}) {
        ExperimentSpec spec;
        spec.N = 2;
        spec.M = 1;
        spec.L = L;
        spec.K = 1024;
        spec.pilot_counts = {256};
        spec.scheme = PilotScheme::random_qpsk;
        spec.snr_db = {20.0};
        spec.trials = 3;
        spec.seed = 9;
        spec.estimators = {"sbl", "em-vamp"};
        for (const auto& r : bench_estimators(spec)) {
            rows[L][r.estimator] = r;
        }
    }
    const double rv = rows[100]["em-vamp"].cmul_per_iteration / rows[50]["em-vamp"].cmul_per_iteration;
    const double rs = rows[100]["sbl"].cmul_per_iteration / rows[50]["sbl"].cmul_per_iteration;
    const double tv = rows[100]["em-vamp"].wall_ms, ts = rows[100]["sbl"].wall_ms;
    const bool ok = std::abs(rv - 4.0) <= 0.3 * 4.0 && rs >= 6.0 && tv < ts;
    return {ok, fmt("per-iteration ratio em-vamp %.2f (4 +- 30%%), sbl %.2f (>= 6); wall em-vamp %.1f ms < sbl %.1f ms", rv,
                    rs, tv, ts)};
}

Outcome determinism() {
    ExperimentSpec spec;
    spec.N = 2;
    spec.M = 2;
    spec.L = 40;
    spec.K = 512;
    spec.pilot_counts = {100, 128};
    spec.scheme = PilotScheme::random_qpsk;
    spec.snr_db = {5, 15};
    spec.trials = 6;
    spec.seed = 31337;
    spec.estimators = {"ls", "lmmse", "omp", "sbl", "vamp", "em-vamp", "perfect-csi"};
    std::vector<std::string> outputs;
    for (std::size_t threads : {1, 1, 2, 4}) {
        spec.threads = threads;
        outputs.push_back(metrics_csv_string(spec, run_sweep(spec).records));
    }
    const bool same = std::all_of(outputs.begin(), outputs.end(), [&](const std::string& o) { return o == outputs[0]; });
    return {same, fmt("%zu runs (threads 1,1,2,4), %zu bytes each, %s", outputs.size(), outputs[0].size(),
                      same ? "identical" : "DIFFERENT")};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
        {"pipeline_oracle", pipeline_oracle},
        {"denoiser_quadrature", denoiser_quadrature},
        {"lmmse_svd_form", lmmse_svd_form},
        {"exact_recovery", exact_recovery},
        {"estimator_comparison", estimator_comparison},
        {"hyperparameter_convergence", hyperparameter_convergence},
        {"under_pilot_ber", under_pilot_ber},
        {"noise_precision", noise_precision},
        {"complexity_scaling", complexity_scaling},
        {"determinism", determinism},
    };
    std::vector<std::string> wanted(argv + 1, argv + argc);
    for (const auto& w : wanted) {
        if (std::none_of(checks.begin(), checks.end(), [&](const auto& c) { return c.first == w; })) {
            std::fprintf(stderr, "unknown check '%s'\n", w.c_str());
            return 2;
        }
    }
    int failed = 0;
    int index = 0;
    for (const auto& [name, fn] : checks) {
        ++index;
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), name) == wanted.end()) {
            continue;
        }
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("[%2d] %s %-26s %s\n", index, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed;
}
