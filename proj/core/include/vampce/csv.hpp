#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "vampce/harness.hpp"

namespace vampce {

inline constexpr const char* metrics_csv_columns =
    "estimator,snr_db,k_p,trial,nmse_db,symbol_mse_db,raw_ber,iterations,cmul_count,wall_ms,status";

/// '#' comment lines describing the conventions behind the numbers.
std::vector<std::string> metrics_csv_preamble(const ExperimentSpec& spec);

void write_metrics_csv(std::ostream& out, const ExperimentSpec& spec, const std::vector<MetricsRecord>& records);
std::string metrics_csv_string(const ExperimentSpec& spec, const std::vector<MetricsRecord>& records);

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

/// Shortest round-trip representation ("nan", "inf" for non-finite values).
std::string format_double(double v);

} // namespace vampce
