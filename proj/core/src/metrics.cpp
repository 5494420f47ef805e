#include "vampce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vampce {

double nmse_db_from_energy(double error_energy, double reference_energy) {
    if (!(reference_energy > 0.0)) {
        throw ConfigError("nmse: reference channel has zero energy");
    }
    if (!std::isfinite(error_energy)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double ratio = error_energy / reference_energy;
    if (ratio <= 0.0) {
        return nmse_floor_db;
    }
    return std::max(10.0 * std::log10(ratio), nmse_floor_db);
}

double nmse_db(const CVector& h_hat, const CVector& h_true) {
    if (h_hat.size() != h_true.size()) {
        throw ConfigError("nmse: length mismatch");
    }
    return nmse_db_from_energy((h_hat - h_true).squaredNorm(), h_true.squaredNorm());
}

QpskBits qpsk_demod(cdouble x) {
    return {static_cast<std::uint8_t>(x.real() < 0.0), static_cast<std::uint8_t>(x.imag() < 0.0)};
}

EqualizerOutput equalize_and_demod(const std::vector<CMatrix>& H_data, const std::vector<CVector>& Y,
                                   double gamma_w_hat) {
    if (!(gamma_w_hat > 0.0)) {
        throw ConfigError("equalize_and_demod: gamma_w must be positive");
    }
    const std::size_t Kd = H_data.size();
    const std::size_t M = Y.size();
    if (M == 0) {
        throw ConfigError("equalize_and_demod: no hydrophones");
    }
    for (const auto& y : Y) {
        if (static_cast<std::size_t>(y.size()) != Kd) {
            throw ConfigError("equalize_and_demod: data length mismatch");
        }
    }
    const Eigen::Index N = Kd > 0 ? H_data.front().cols() : 0;
    if (N > static_cast<Eigen::Index>(M)) {
        throw ConfigError("equalize_and_demod: needs at least as many hydrophones as transducers");
    }
    const double reg = std::isfinite(gamma_w_hat) ? 1.0 / gamma_w_hat : 0.0;

    EqualizerOutput out;
    out.symbols.assign(static_cast<std::size_t>(N), CVector(static_cast<Eigen::Index>(Kd)));
    CVector yk(static_cast<Eigen::Index>(M));
    for (std::size_t d = 0; d < Kd; ++d) {
        const CMatrix& H = H_data[d];
        if (H.rows() != static_cast<Eigen::Index>(M) || H.cols() != N) {
            throw ConfigError("equalize_and_demod: response dimension mismatch");
        }
        for (std::size_t m = 0; m < M; ++m) {
            yk(static_cast<Eigen::Index>(m)) = Y[m](static_cast<Eigen::Index>(d));
        }
        CVector xk;
        if (H.squaredNorm() == 0.0) {
            out.zero_response = true;
            xk = CVector::Zero(N);
        } else {
            CMatrix A = H.adjoint() * H;
            A.diagonal().array() += reg;
            xk = A.ldlt().solve(H.adjoint() * yk);
            if (!xk.allFinite()) {
                // singular without regularization (noiseless run): least squares instead
                xk = H.completeOrthogonalDecomposition().solve(yk);
            }
        }
        for (Eigen::Index n = 0; n < N; ++n) {
            out.symbols[static_cast<std::size_t>(n)](static_cast<Eigen::Index>(d)) = xk(n);
        }
    }
    out.bits.reserve(static_cast<std::size_t>(N) * Kd * 2);
    for (const auto& s : out.symbols) {
        for (Eigen::Index d = 0; d < s.size(); ++d) {
            const QpskBits b = qpsk_demod(s(d));
            out.bits.push_back(b.b0);
            out.bits.push_back(b.b1);
        }
    }
    return out;
}

std::vector<CMatrix> data_tone_response(const std::vector<CMatrix>& H_full, const OfdmConfig& config) {
    if (H_full.size() != config.K) {
        throw ConfigError("data_tone_response: expected one response per subcarrier");
    }
    const double scale = 1.0 / std::sqrt(double(config.K));
    std::vector<CMatrix> out;
    out.reserve(config.K_d());
    for (std::size_t k : config.data) {
        out.push_back(H_full[k] * scale);
    }
    return out;
}

SymbolStats symbol_stats(const EqualizerOutput& eq, const std::vector<CVector>& transmitted) {
    if (transmitted.size() != eq.symbols.size()) {
        throw ConfigError("symbol_stats: transducer count mismatch");
    }
    SymbolStats st;
    double err = 0.0;
    std::size_t count = 0;
    std::size_t bit = 0;
    for (std::size_t n = 0; n < transmitted.size(); ++n) {
        const CVector& x = transmitted[n];
        const CVector& xh = eq.symbols[n];
        if (x.size() != xh.size()) {
            throw ConfigError("symbol_stats: symbol count mismatch");
        }
        err += (xh - x).squaredNorm();
        count += static_cast<std::size_t>(x.size());
        for (Eigen::Index d = 0; d < x.size(); ++d) {
            const QpskBits ref = qpsk_demod(x(d));
            st.bit_errors += (eq.bits[bit] != ref.b0) + (eq.bits[bit + 1] != ref.b1);
            bit += 2;
        }
    }
    st.bit_count = 2 * count;
    if (count > 0) {
        const double mse = err / double(count);
        st.symbol_mse_db = mse > 0.0 ? std::max(10.0 * std::log10(mse), nmse_floor_db) : nmse_floor_db;
        st.ber = double(st.bit_errors) / double(st.bit_count);
    }
    return st;
}

} // namespace vampce
