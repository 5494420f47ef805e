#include "vampce/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "vampce/metrics.hpp"

namespace vampce {

const std::vector<std::string>& known_estimators() {
    static const std::vector<std::string> names{"ls",  "lmmse", "omp",        "sbl",
                                                "vamp", "em-vamp", "perfect-csi"};
    return names;
}

OfdmConfig ExperimentSpec::ofdm(std::size_t K_p) const {
    return OfdmConfig::make(K, K_p, N, M, L, zp(), n_null, pattern);
}

void ExperimentSpec::validate() const {
    if (K == 0 || N == 0 || M == 0 || L == 0) {
        throw ConfigError("spec: K, N, M and L must be positive");
    }
    if (estimators.empty()) {
        throw ConfigError("spec: estimator list is empty");
    }
    for (const auto& e : estimators) {
        const auto& known = known_estimators();
        if (std::find(known.begin(), known.end(), e) == known.end()) {
            throw ConfigError("spec: unknown estimator '" + e + "'");
        }
    }
    for (std::size_t i = 0; i < estimators.size(); ++i) {
        for (std::size_t j = i + 1; j < estimators.size(); ++j) {
            if (estimators[i] == estimators[j]) {
                throw ConfigError("spec: estimator '" + estimators[i] + "' listed twice");
            }
        }
    }
    if (snr_db.empty() || pilot_counts.empty()) {
        throw ConfigError("spec: SNR and pilot grids must be non-empty");
    }
    for (double s : snr_db) {
        if (!std::isfinite(s)) {
            throw ConfigError("spec: SNR values must be finite");
        }
    }
    if (trials < 1) {
        throw ConfigError("spec: trials must be >= 1");
    }
    if (threads < 1) {
        throw ConfigError("spec: threads must be >= 1");
    }
    if (!channel_file) {
        channel.validate();
    }
    if (!(omp_lambda_guess > 0.0 && omp_lambda_guess <= 1.0)) {
        throw ConfigError("spec: omp_lambda_guess must lie in (0, 1]");
    }
    vamp.validate();
    sbl.validate();
    for (std::size_t kp : pilot_counts) {
        ofdm(kp).validate();
        if (scheme == PilotScheme::orthogonal && kp < N * L) {
            throw ConfigError("spec: orthogonal pilots need K_p >= N*L (K_p=" + std::to_string(kp) + ")");
        }
    }
}

bool SweepResult::all_failed() const {
    return !records.empty() &&
           std::all_of(records.begin(), records.end(), [](const MetricsRecord& r) { return r.failed; });
}

std::uint64_t svd_cmul_estimate(std::size_t rows, std::size_t cols) {
    const std::uint64_t lo = std::min(rows, cols);
    return std::uint64_t(rows) * cols * lo;
}

PilotSetup make_pilot_setup(const ExperimentSpec& spec, std::size_t K_p) {
    PilotSetup s;
    s.config = spec.ofdm(K_p);
    SeedStream ps = SeedStream(spec.seed).substream("pilots", {K_p});
    s.book = make_pilot_book(spec.N, K_p, spec.L, spec.scheme, ps);
    s.system = build_pilot_system(s.config, s.book);
    return s;
}

namespace {

TrialData make_trial_impl(const ExperimentSpec& spec, const PilotSystem& system, const PilotBook& book,
                          std::size_t K_p, std::size_t trial, double snr_db,
                          const ChannelRealization* fixed_channel) {
    const SeedStream master(spec.seed);
    TrialData td;
    td.config = spec.ofdm(K_p);
    if (fixed_channel != nullptr) {
        td.channel = *fixed_channel;
    } else {
        SeedStream cs = master.substream("channel", {trial});
        td.channel = sample_bg_channel(td.config.channel_dims(), spec.channel, cs, {false, true});
    }
    SeedStream ds = master.substream("data", {trial, K_p});
    for (std::size_t n = 0; n < spec.N; ++n) {
        td.data_symbols.push_back(random_qpsk(td.config.K_d(), ds));
    }

    double ps = 0.0;
    for (std::size_t m = 0; m < spec.M; ++m) {
        ps += (system.W * td.channel.stacked(m)).squaredNorm();
    }
    ps /= double(spec.M * K_p);
    if (!(ps > 0.0)) {
        throw ConfigError("trial: channel produces no pilot energy");
    }
    td.signal_power = ps;
    td.gamma_w = std::pow(10.0, snr_db / 10.0) / ps;

    SeedStream ns = master.substream("noise", {trial, K_p});
    td.rx = transmit_receive(td.config, book, td.data_symbols, td.channel, td.gamma_w, ns, spec.noise_mode);
    return td;
}

std::uint64_t input_hash(const CMatrix& W, const std::vector<CVector>& ys) {
    std::uint64_t h = hash_bytes(W.data(), sizeof(cdouble) * static_cast<std::size_t>(W.size()), 0x5eed);
    for (const auto& y : ys) {
        h = hash_bytes(y.data(), sizeof(cdouble) * static_cast<std::size_t>(y.size()), h);
    }
    return h;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

struct EstimatorRun {
    std::vector<CVector> h;
    int iterations = 0; // max over hydrophones
    std::uint64_t cmul = 0;
    std::uint64_t cmul_setup = 0;
    std::uint32_t flags = flag_none;
    std::vector<Hyperparams> theta;
    std::vector<double> gamma_w;
    double iter_sum = 0;
    double per_iteration_sum = 0;
    bool failed = false;
    std::string error;
};

struct RunInputs {
    const ExperimentSpec& spec;
    const PilotSetup& setup;
    const SblSystem* sbl;
    const std::vector<CVector>& y;
    double gamma_w_hat; // shared noise estimate
};

void note_result(EstimatorRun& run, const EstimatorResult& r) {
    run.h.push_back(r.h_hat);
    run.iterations = std::max(run.iterations, r.iterations);
    run.cmul += r.cmul;
    run.cmul_setup += r.cmul_setup;
    run.flags |= r.flags;
    run.iter_sum += r.iterations;
    run.per_iteration_sum += r.cmul_per_iteration();
}

EstimatorRun run_vamp(const RunInputs& in, VampMode mode) {
    EstimatorRun run;
    const SvdFactors& svd = in.setup.system.svd;
    for (const auto& y : in.y) {
        VampOptions opt;
        opt.mode = mode;
        if (mode == VampMode::fixed_hyperparams) {
            opt.theta = y.squaredNorm() > 0.0
                            ? init_hyperparams(y, svd.s.squaredNorm(), in.spec.vamp.zeta, in.spec.vamp.bounds).theta
                            : Hyperparams{};
        }
        const VampResult r = run_em_vamp(y, svd, in.spec.vamp, opt);
        EstimatorResult er;
        er.h_hat = r.h_hat;
        er.iterations = r.iterations;
        er.cmul = r.cmul_total();
        er.cmul_setup = r.cmul_setup;
        if (r.diverged) {
            er.flags |= flag_diverged;
        } else if (!r.converged) {
            er.flags |= flag_not_converged;
        }
        if (r.init_fallback) {
            er.flags |= flag_init_fallback;
        }
        if (r.zero_observation) {
            er.flags |= flag_zero_observation;
        }
        note_result(run, er);
        run.theta.push_back(r.theta);
        run.gamma_w.push_back(r.theta.gamma_w);
    }
    return run;
}

EstimatorRun run_estimator(const std::string& name, const RunInputs& in) {
    const SvdFactors& svd = in.setup.system.svd;
    const std::size_t Kp = in.setup.config.K_p();
    if (name == "vamp") {
        return run_vamp(in, VampMode::fixed_hyperparams);
    }
    if (name == "em-vamp") {
        return run_vamp(in, VampMode::em);
    }
    EstimatorRun run;
    for (const auto& y : in.y) {
        if (name == "ls") {
            note_result(run, ls_estimate(y, svd));
        } else if (name == "lmmse") {
            if (y.squaredNorm() == 0.0) {
                EstimatorResult z;
                z.h_hat = CVector::Zero(static_cast<Eigen::Index>(svd.cols));
                z.cmul = 1;
                z.flags = flag_zero_observation;
                note_result(run, z);
                continue;
            }
            const InitResult init = init_hyperparams(y, svd.s.squaredNorm(), in.spec.vamp.zeta, in.spec.vamp.bounds);
            note_result(run, lmmse_estimate(y, svd, init.theta.lambda / init.theta.gamma_h, in.gamma_w_hat));
        } else if (name == "omp") {
            const OmpConfig oc = OmpConfig::for_channel(in.spec.N, in.spec.L, Kp, in.spec.omp_lambda_guess,
                                                        1.0 / in.gamma_w_hat);
            note_result(run, omp_estimate(y, in.setup.system.W, oc));
        } else if (name == "sbl") {
            note_result(run, sbl_estimate(y, *in.sbl, in.spec.sbl));
        } else {
            throw ConfigError("unknown estimator '" + name + "'");
        }
    }
    return run;
}

/// Shared-setup cost charged once per trial.
std::uint64_t setup_cmul(const std::string& name, const PilotSetup& setup, const SblSystem* sbl) {
    if (name == "sbl") {
        return sbl != nullptr ? sbl->cmul_build : 0;
    }
    if (name == "ls" || name == "lmmse" || name == "vamp" || name == "em-vamp") {
        return svd_cmul_estimate(setup.system.W.rows(), setup.system.W.cols());
    }
    return 0;
}

double harmonic_precision(const std::vector<double>& gw) {
    double var = 0.0;
    for (double g : gw) {
        var += 1.0 / g;
    }
    var /= double(gw.size());
    return var > 0.0 ? 1.0 / var : std::numeric_limits<double>::infinity();
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct Task {
    std::size_t kp_index;
    std::size_t trial;
    std::size_t snr_index;
};

std::vector<MetricsRecord> run_task(const ExperimentSpec& spec, const Task& task, const PilotSetup& setup,
                                    const SblSystem* sbl, const ChannelRealization* fixed_channel) {
    const std::size_t Kp = spec.pilot_counts[task.kp_index];
    const double snr = spec.snr_db[task.snr_index];
    const TrialData td = make_trial_impl(spec, setup.system, setup.book, Kp, task.trial, snr, fixed_channel);

    std::vector<CVector> ys;
    std::vector<CVector> truth;
    std::vector<CVector> yd;
    for (std::size_t m = 0; m < spec.M; ++m) {
        ys.push_back(td.rx[m].pilots);
        yd.push_back(td.rx[m].data);
        truth.push_back(td.channel.stacked(m));
    }
    const std::string in_tag = ";in=" + hex16(input_hash(setup.system.W, ys));
    double truth_energy = 0.0;
    for (const auto& h : truth) {
        truth_energy += h.squaredNorm();
    }

    // EM-VAMP always runs first: its noise estimate feeds the other estimators and the equalizer.
    const RunInputs base{spec, setup, sbl, ys, 1.0};
    std::optional<EstimatorRun> em;
    double em_ms = 0.0;
    double gamma_w_hat = 0.0;
    std::string em_error;
    {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            em = run_estimator("em-vamp", base);
            gamma_w_hat = harmonic_precision(em->gamma_w);
        } catch (const NumericError& e) {
            em_error = e.what();
        }
        em_ms = elapsed_ms(t0);
    }
    if (!(gamma_w_hat > 0.0) || !std::isfinite(gamma_w_hat)) {
        // fall back to the data-driven starting value
        std::vector<double> g0;
        for (const auto& y : ys) {
            g0.push_back(y.squaredNorm() > 0.0
                             ? init_hyperparams(y, setup.system.svd.s.squaredNorm(), spec.vamp.zeta).theta.gamma_w
                             : spec.vamp.bounds.gamma_max);
        }
        gamma_w_hat = std::min(harmonic_precision(g0), spec.vamp.bounds.gamma_max);
    }
    const RunInputs inputs{spec, setup, sbl, ys, gamma_w_hat};

    std::vector<MetricsRecord> out;
    for (const auto& name : spec.estimators) {
        MetricsRecord rec;
        rec.estimator = name;
        rec.snr_db = snr;
        rec.k_p = Kp;
        rec.trial = task.trial;
        rec.gamma_w_true = td.gamma_w;
        rec.signal_power = td.signal_power;

        EstimatorRun run;
        double ms = 0.0;
        double eq_gamma = gamma_w_hat;
        if (name == "perfect-csi") {
            run.h = truth;
            eq_gamma = td.gamma_w;
        } else if (name == "em-vamp") {
            if (em) {
                run = *em;
            } else {
                run.failed = true;
                run.error = em_error;
            }
            ms = em_ms;
        } else {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                run = run_estimator(name, inputs);
            } catch (const NumericError& e) {
                run.failed = true;
                run.error = e.what();
            }
            ms = elapsed_ms(t0);
        }
        rec.wall_ms = spec.record_wall_time ? ms : 0.0;

        bool finite = !run.failed;
        for (const auto& h : run.h) {
            finite = finite && h.allFinite();
        }
        if (!finite) {
            constexpr double nan = std::numeric_limits<double>::quiet_NaN();
            rec.failed = true;
            rec.nmse_db = rec.symbol_mse_db = rec.raw_ber = nan;
            rec.iterations = run.iterations;
            rec.cmul_count = run.cmul;
            rec.status = "numeric_failure" + in_tag;
            out.push_back(std::move(rec));
            continue;
        }

        double err = 0.0;
        for (std::size_t m = 0; m < spec.M; ++m) {
            err += (run.h[m] - truth[m]).squaredNorm();
        }
        rec.nmse_db = nmse_db_from_energy(err, truth_energy);

        const auto H = data_tone_response(frequency_response_from_stacked(run.h, spec.N, spec.L, spec.K), td.config);
        const EqualizerOutput eq = equalize_and_demod(H, yd, eq_gamma);
        const SymbolStats st = symbol_stats(eq, td.data_symbols);
        rec.symbol_mse_db = st.symbol_mse_db;
        rec.raw_ber = st.ber;
        rec.iterations = run.iterations;
        rec.cmul_count = run.cmul + (name == "perfect-csi" ? 0 : setup_cmul(name, setup, sbl));
        std::uint32_t flags = run.flags;
        if (eq.zero_response) {
            flags |= flag_zero_channel;
        }
        rec.status = flags_to_string(flags) + in_tag;
        rec.theta = run.theta;
        rec.gamma_w_hat = run.gamma_w;
        out.push_back(std::move(rec));
    }
    return out;
}

template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& body) {
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                next.store(count);
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

std::optional<ChannelRealization> load_fixed_channel(const ExperimentSpec& spec) {
    if (!spec.channel_file) {
        return std::nullopt;
    }
    ChannelRealization ch = load_channel(*spec.channel_file);
    const auto& d = ch.dims();
    if (d.N != spec.N || d.M != spec.M || d.L != spec.L) {
        throw ConfigError("channel file dimensions do not match the experiment");
    }
    return ch;
}

} // namespace

TrialData make_trial(const ExperimentSpec& spec, const PilotSystem& system, const PilotBook& book,
                     std::size_t K_p, std::size_t trial, double snr_db) {
    const auto fixed = load_fixed_channel(spec);
    return make_trial_impl(spec, system, book, K_p, trial, snr_db, fixed ? &*fixed : nullptr);
}

SweepResult run_sweep(const ExperimentSpec& spec) {
    spec.validate();
    if (spec.M < spec.N) {
        throw ConfigError("spec: equalization needs M >= N");
    }
    const auto fixed = load_fixed_channel(spec);
    const bool want_sbl = std::find(spec.estimators.begin(), spec.estimators.end(), "sbl") != spec.estimators.end();

    std::vector<PilotSetup> setups;
    std::vector<std::optional<SblSystem>> sbl;
    for (std::size_t kp : spec.pilot_counts) {
        setups.push_back(make_pilot_setup(spec, kp));
        sbl.emplace_back();
        if (want_sbl) {
            sbl.back().emplace(setups.back().system.W);
        }
    }

    std::vector<Task> tasks;
    for (std::size_t k = 0; k < spec.pilot_counts.size(); ++k) {
        for (std::size_t t = 0; t < spec.trials; ++t) {
            for (std::size_t s = 0; s < spec.snr_db.size(); ++s) {
                tasks.push_back({k, t, s});
            }
        }
    }
    std::vector<std::vector<MetricsRecord>> slots(tasks.size());
    parallel_for(tasks.size(), spec.threads, [&](std::size_t i) {
        const Task& task = tasks[i];
        const auto& sb = sbl[task.kp_index];
        slots[i] = run_task(spec, task, setups[task.kp_index], sb ? &*sb : nullptr, fixed ? &*fixed : nullptr);
    });

    struct Keyed {
        std::size_t est, snr, kp, trial;
        MetricsRecord* rec;
    };
    std::vector<Keyed> keyed;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        for (std::size_t e = 0; e < slots[i].size(); ++e) {
            keyed.push_back({e, tasks[i].snr_index, tasks[i].kp_index, tasks[i].trial, &slots[i][e]});
        }
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        return std::tie(a.est, a.snr, a.kp, a.trial) < std::tie(b.est, b.snr, b.kp, b.trial);
    });
    SweepResult result;
    result.records.reserve(keyed.size());
    for (auto& k : keyed) {
        result.records.push_back(std::move(*k.rec));
    }
    return result;
}

std::vector<Hyperparams> reference_initializations() {
    return {{0.95, 298.7, 86.4}, {0.75, 200.0, 60.0}, {0.55, 100.0, 20.0}};
}

std::vector<ConvergenceRow> convergence_study(const ExperimentSpec& spec,
                                              const std::vector<Hyperparams>& initializations) {
    spec.validate();
    if (initializations.size() < 2) {
        throw ConfigError("convergence_study: needs at least two initializations");
    }
    for (const auto& h : initializations) {
        if (!(h.lambda > 0.0 && h.lambda < 1.0) || !(h.gamma_h > 0.0) || !(h.gamma_w > 0.0)) {
            throw ConfigError("convergence_study: initialization out of range");
        }
    }
    const auto fixed = load_fixed_channel(spec);
    const std::size_t Kp = spec.pilot_counts.front();
    const PilotSetup setup = make_pilot_setup(spec, Kp);

    std::vector<std::vector<ConvergenceRow>> slots(spec.trials);
    parallel_for(spec.trials, spec.threads, [&](std::size_t t) {
        const TrialData td = make_trial_impl(spec, setup.system, setup.book, Kp, t, spec.snr_db.front(),
                                             fixed ? &*fixed : nullptr);
        for (std::size_t i = 0; i < initializations.size(); ++i) {
            for (std::size_t m = 0; m < spec.M; ++m) {
                const CVector truth = td.channel.stacked(m);
                VampOptions opt;
                opt.theta = initializations[i];
                opt.truth = &truth;
                const VampResult r = run_em_vamp(td.rx[m].pilots, setup.system.svd, spec.vamp, opt);
                const std::string status = r.diverged ? "diverged" : (r.converged ? "ok" : "not_converged");
                for (const auto& row : r.trace.rows) {
                    slots[t].push_back({i, t, m, row, status});
                }
            }
        }
    });
    std::vector<ConvergenceRow> rows;
    for (auto& s : slots) {
        for (auto& r : s) {
            rows.push_back(std::move(r));
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ConvergenceRow& a, const ConvergenceRow& b) {
        return std::tie(a.init, a.trial, a.hydrophone, a.row.iteration) <
               std::tie(b.init, b.trial, b.hydrophone, b.row.iteration);
    });
    return rows;
}

std::vector<BenchRow> bench_estimators(const ExperimentSpec& spec) {
    spec.validate();
    const auto fixed = load_fixed_channel(spec);
    const std::size_t Kp = spec.pilot_counts.front();
    const PilotSetup setup = make_pilot_setup(spec, Kp);

    std::vector<BenchRow> rows;
    for (const auto& name : spec.estimators) {
        if (name == "perfect-csi") {
            continue;
        }
        BenchRow br;
        br.estimator = name;
        br.N = spec.N;
        br.L = spec.L;
        br.k_p = Kp;
        rows.push_back(br);
    }
    const double per = 1.0 / double(spec.trials * spec.M);
    for (std::size_t t = 0; t < spec.trials; ++t) {
        const TrialData td = make_trial_impl(spec, setup.system, setup.book, Kp, t, spec.snr_db.front(),
                                             fixed ? &*fixed : nullptr);
        std::vector<CVector> ys;
        for (const auto& b : td.rx) {
            ys.push_back(b.pilots);
        }
        const EstimatorRun em = run_estimator("em-vamp", RunInputs{spec, setup, nullptr, ys, 1.0});
        const double gamma_w_hat = harmonic_precision(em.gamma_w);

        for (auto& br : rows) {
            // each timing includes the setup its estimator needs (SVD or Gram)
            const auto t0 = std::chrono::steady_clock::now();
            std::optional<SblSystem> sbl;
            std::optional<PilotSetup> local;
            const PilotSetup* use = &setup;
            if (br.estimator == "sbl") {
                sbl.emplace(setup.system.W);
            } else if (br.estimator != "omp") {
                local.emplace(setup);
                local->system.svd = thin_svd(local->system.W);
                use = &*local;
            }
            const EstimatorRun run =
                run_estimator(br.estimator, RunInputs{spec, *use, sbl ? &*sbl : nullptr, ys, gamma_w_hat});
            br.wall_ms += elapsed_ms(t0) * per;
            br.iterations += run.iter_sum * per;
            br.cmul_total += double(run.cmul + setup_cmul(br.estimator, setup, sbl ? &*sbl : nullptr)) * per;
            br.cmul_per_iteration += run.per_iteration_sum * per;
        }
    }
    return rows;
}

} // namespace vampce
