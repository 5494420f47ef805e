// vampce: sparse channel estimation experiments from the command line.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vampce/vampce.hpp"

using namespace vampce;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string estimators;
    std::optional<std::size_t> trials;
    std::string snr;
    std::string pilots;
    std::optional<std::size_t> threads;
    bool timing = false;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "key=value experiment file");
    sub->add_option("--seed", f.seed, "master seed");
    sub->add_option("--out", f.out, "output CSV path (stdout when empty)");
    sub->add_option("--estimators", f.estimators, "comma list: ls,lmmse,omp,sbl,vamp,em-vamp,perfect-csi");
    sub->add_option("--trials", f.trials, "Monte Carlo trials per grid point");
    sub->add_option("--snr", f.snr, "SNR grid in dB, start:step:stop or a comma list");
    sub->add_option("--pilots", f.pilots, "comma list of pilot counts");
    sub->add_option("--threads", f.threads, "worker threads");
    sub->add_flag("--timing", f.timing, "record wall-clock time (output no longer reproducible)");
}

ConfigFile build_spec(const CommonFlags& f, const ExperimentSpec& defaults) {
    ConfigFile cfg{defaults, {}};
    if (!f.config.empty()) {
        cfg = load_config(f.config, defaults);
    }
    ExperimentSpec& s = cfg.spec;
    if (f.seed) s.seed = *f.seed;
    if (!f.out.empty()) s.out = f.out;
    if (!f.estimators.empty()) s.estimators = parse_name_list(f.estimators);
    if (f.trials) s.trials = *f.trials;
    if (!f.snr.empty()) s.snr_db = parse_snr_grid(f.snr);
    if (!f.pilots.empty()) s.pilot_counts = parse_size_list(f.pilots);
    if (f.threads) s.threads = *f.threads;
    if (f.timing) s.record_wall_time = true;
    return cfg;
}

template <class Writer>
void emit(const std::string& path, Writer&& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path);
    }
    write(out);
}

int run_and_write(const ExperimentSpec& spec) {
    const SweepResult res = run_sweep(spec);
    emit(spec.out, [&](std::ostream& os) { write_metrics_csv(os, spec, res.records); });
    if (res.all_failed()) {
        std::fprintf(stderr, "vampce: numeric failure in every trial\n");
        return 3;
    }
    return 0;
}

int cmd_simulate(const CommonFlags& f) {
    ExperimentSpec defaults;
    defaults.estimators = {"ls", "lmmse", "omp", "sbl", "vamp", "em-vamp", "perfect-csi"};
    ConfigFile cfg = build_spec(f, defaults);
    ExperimentSpec& spec = cfg.spec;
    if (!f.trials) {
        spec.trials = 1;
    }
    spec.validate();

    // verbose trace of the first trial
    const std::size_t Kp = spec.pilot_counts.front();
    const PilotSetup setup = make_pilot_setup(spec, Kp);
    const TrialData td = make_trial(spec, setup.system, setup.book, Kp, 0, spec.snr_db.front());
    std::fprintf(stderr, "# K=%zu K_p=%zu N=%zu M=%zu L=%zu rank(W)=%zu snr=%.2f dB gamma_w=%.6g\n", spec.K, Kp,
                 spec.N, spec.M, spec.L, setup.system.svd.rank(), spec.snr_db.front(), td.gamma_w);
    for (std::size_t m = 0; m < spec.M; ++m) {
        const CVector truth = td.channel.stacked(m);
        VampOptions opt;
        opt.truth = &truth;
        const VampResult r = run_em_vamp(td.rx[m].pilots, setup.system.svd, spec.vamp, opt);
        std::fprintf(stderr, "# hydrophone %zu: %d iterations%s%s\n", m, r.iterations,
                     r.converged ? ", converged" : "", r.diverged ? ", diverged" : "");
        std::fprintf(stderr, "#   iter  lambda      gamma_h       gamma_w       xi            nmse_db\n");
        for (const auto& row : r.trace.rows) {
            std::fprintf(stderr, "#   %4d  %.6f  %.6e  %.6e  %.6e  %.3f\n", row.iteration, row.lambda,
                         row.gamma_h, row.gamma_w, row.xi, row.nmse_db.value_or(0.0));
        }
    }
    return run_and_write(spec);
}

int cmd_sweep(const CommonFlags& f, bool pilots) {
    ExperimentSpec defaults;
    if (pilots) {
        defaults.scheme = PilotScheme::random_qpsk;
        defaults.pilot_counts = {150, 200, 256, 300};
        defaults.estimators = {"ls", "omp", "sbl", "em-vamp", "perfect-csi"};
    } else {
        defaults.snr_db = {5, 10, 15, 20};
    }
    const ConfigFile cfg = build_spec(f, defaults);
    return run_and_write(cfg.spec);
}

int cmd_learn(const CommonFlags& f) {
    ExperimentSpec defaults;
    defaults.M = 1;
    defaults.channel.lambda = 0.05;
    defaults.vamp.max_iterations = 10;
    const ConfigFile cfg = build_spec(f, defaults);
    const auto inits = cfg.initializations.empty() ? reference_initializations() : cfg.initializations;
    const auto rows = convergence_study(cfg.spec, inits);
    emit(cfg.spec.out, [&](std::ostream& os) { write_convergence_csv(os, rows); });
    return 0;
}

int cmd_bench(const CommonFlags& f) {
    ExperimentSpec defaults;
    defaults.M = 2;
    defaults.scheme = PilotScheme::random_qpsk;
    defaults.estimators = {"ls", "lmmse", "omp", "sbl", "em-vamp"};
    const ConfigFile cfg = build_spec(f, defaults);
    const auto rows = bench_estimators(cfg.spec);
    emit(cfg.spec.out, [&](std::ostream& os) { write_bench_csv(os, rows); });
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"EM-VAMP sparse channel estimation for zero-padded MIMO-OFDM"};
    app.require_subcommand(1);

    CommonFlags sim, snr, pil, learn, bench;
    auto* s1 = app.add_subcommand("simulate", "one trial with a verbose EM-VAMP trace on stderr");
    auto* s2 = app.add_subcommand("sweep-snr", "NMSE / BER over an SNR grid");
    auto* s3 = app.add_subcommand("sweep-pilots", "NMSE / BER over pilot counts");
    auto* s4 = app.add_subcommand("learn-params", "hyperparameter traces from several starting points");
    auto* s5 = app.add_subcommand("bench", "multiply counts and wall time per estimator");
    add_common(s1, sim);
    add_common(s2, snr);
    add_common(s3, pil);
    add_common(s4, learn);
    add_common(s5, bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (s1->parsed()) return cmd_simulate(sim);
        if (s2->parsed()) return cmd_sweep(snr, false);
        if (s3->parsed()) return cmd_sweep(pil, true);
        if (s4->parsed()) return cmd_learn(learn);
        if (s5->parsed()) return cmd_bench(bench);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "vampce: config error: %s\n", e.what());
        return 2;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "vampce: bad input file: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "vampce: numeric failure: %s\n", e.what());
        return 3;
    }
    return 0;
}
