#include "vampce/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "vampce/baselines.hpp"

namespace vampce {

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> metrics_csv_preamble(const ExperimentSpec& spec) {
    std::vector<std::string> lines;
    lines.push_back("# snr_db: 10log10(P_s gamma_w), P_s = sum_m ||W h_m||^2 / (M K_p), signal and noise power on the pilot tones");
    lines.push_back("# lmmse prior: flat tap variance lambda_0/gamma_h0 from the data-driven initialization");
    lines.push_back("# symbol_mse_db: mean |x_hat - x|^2 over data tones and transducers, against transmitted QPSK symbols");
    lines.push_back("# noise estimate for omp/lmmse/equalizer: em-vamp gamma_w (harmonic mean over hydrophones); perfect-csi uses the true value");
    char buf[256];
    std::snprintf(buf, sizeof buf, "# K=%zu N=%zu M=%zu L=%zu N_zp=%zu pilots=%s seed=%llu trials=%zu", spec.K,
                  spec.N, spec.M, spec.L, spec.zp(), std::string(to_string(spec.scheme)).c_str(),
                  static_cast<unsigned long long>(spec.seed), spec.trials);
    lines.emplace_back(buf);
    return lines;
}

void write_metrics_csv(std::ostream& out, const ExperimentSpec& spec, const std::vector<MetricsRecord>& records) {
    for (const auto& l : metrics_csv_preamble(spec)) {
        out << l << '\n';
    }
    out << metrics_csv_columns << '\n';
    for (const auto& r : records) {
        out << r.estimator << ',' << format_double(r.snr_db) << ',' << r.k_p << ',' << r.trial << ','
            << format_double(r.nmse_db) << ',' << format_double(r.symbol_mse_db) << ','
            << format_double(r.raw_ber) << ',' << r.iterations << ',' << r.cmul_count << ','
            << format_double(r.wall_ms) << ',' << r.status << '\n';
    }
}

std::string metrics_csv_string(const ExperimentSpec& spec, const std::vector<MetricsRecord>& records) {
    std::ostringstream os;
    write_metrics_csv(os, spec, records);
    return os.str();
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
    out << "init,trial,hydrophone,iteration,lambda,gamma_h,gamma_w,xi,nmse_db,status\n";
    for (const auto& r : rows) {
        out << r.init << ',' << r.trial << ',' << r.hydrophone << ',' << r.row.iteration << ','
            << format_double(r.row.lambda) << ',' << format_double(r.row.gamma_h) << ','
            << format_double(r.row.gamma_w) << ',' << format_double(r.row.xi) << ','
            << (r.row.nmse_db ? format_double(*r.row.nmse_db) : std::string()) << ',' << r.status << '\n';
    }
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "estimator,N,L,k_p,iterations,cmul_total,cmul_per_iteration,wall_ms\n";
    for (const auto& r : rows) {
        out << r.estimator << ',' << r.N << ',' << r.L << ',' << r.k_p << ',' << format_double(r.iterations) << ','
            << format_double(r.cmul_total) << ',' << format_double(r.cmul_per_iteration) << ','
            << format_double(r.wall_ms) << '\n';
    }
}

} // namespace vampce
