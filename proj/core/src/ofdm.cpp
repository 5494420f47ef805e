#include "vampce/ofdm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace vampce {

PilotPattern parse_pilot_pattern(std::string_view name) {
    if (name == "equally_spaced" || name == "equally-spaced") return PilotPattern::equally_spaced;
    if (name == "nearest_uniform" || name == "nearest-uniform") return PilotPattern::nearest_uniform;
    if (name == "auto" || name == "automatic") return PilotPattern::automatic;
    throw ConfigError("unknown pilot pattern '" + std::string(name) + "'");
}

PilotScheme parse_pilot_scheme(std::string_view name) {
    if (name == "orthogonal") return PilotScheme::orthogonal;
    if (name == "random_qpsk" || name == "random-qpsk") return PilotScheme::random_qpsk;
    throw ConfigError("unknown pilot scheme '" + std::string(name) + "'");
}

std::string_view to_string(PilotScheme scheme) {
    return scheme == PilotScheme::orthogonal ? "orthogonal" : "random_qpsk";
}

std::vector<std::size_t> pilot_pattern(std::size_t K, std::size_t K_p, PilotPattern scheme) {
    if (K_p == 0 || K_p > K) {
        throw ConfigError("pilot_pattern: need 0 < K_p <= K");
    }
    if (scheme == PilotPattern::automatic) {
        scheme = K % K_p == 0 ? PilotPattern::equally_spaced : PilotPattern::nearest_uniform;
    }
    if (scheme == PilotPattern::equally_spaced && K % K_p != 0) {
        throw ConfigError("pilot_pattern: equally spaced pilots need K divisible by K_p (K=" +
                          std::to_string(K) + ", K_p=" + std::to_string(K_p) + ")");
    }
    std::vector<std::size_t> idx(K_p);
    for (std::size_t j = 0; j < K_p; ++j) {
        idx[j] = (j * K) / K_p; // exact stride when K_p | K
    }
    return idx;
}

OfdmConfig OfdmConfig::make(std::size_t K, std::size_t K_p, std::size_t N, std::size_t M,
                            std::size_t L, std::size_t N_zp, std::size_t n_null,
                            PilotPattern pattern) {
    OfdmConfig c;
    c.K = K;
    c.N = N;
    c.M = M;
    c.L = L;
    c.N_zp = N_zp;
    c.pilots = pilot_pattern(K, K_p, pattern);
    if (K_p + n_null > K) {
        throw ConfigError("OfdmConfig: K_p + n_null exceeds K");
    }
    std::vector<std::size_t> rest;
    rest.reserve(K - K_p);
    std::size_t p = 0;
    for (std::size_t k = 0; k < K; ++k) {
        if (p < c.pilots.size() && c.pilots[p] == k) {
            ++p;
        } else {
            rest.push_back(k);
        }
    }
    const std::size_t head = (n_null + 1) / 2;
    const std::size_t tail = n_null / 2;
    for (std::size_t i = 0; i < rest.size(); ++i) {
        if (i < head || i >= rest.size() - tail) {
            c.nulls.push_back(rest[i]);
        } else {
            c.data.push_back(rest[i]);
        }
    }
    c.validate();
    return c;
}

void OfdmConfig::validate() const {
    if (K == 0 || N == 0 || M == 0 || L == 0) {
        throw ConfigError("OfdmConfig: K, N, M, L must be positive");
    }
    if (N_zp < L) {
        throw ConfigError("OfdmConfig: guard length N_zp must be >= L");
    }
    if (L > K) {
        throw ConfigError("OfdmConfig: channel length exceeds K");
    }
    if (pilots.empty()) {
        throw ConfigError("OfdmConfig: no pilot subcarriers");
    }
    if (pilots.size() + data.size() + nulls.size() != K) {
        throw ConfigError("OfdmConfig: K_p + K_d + n_null must equal K");
    }
    std::vector<char> used(K, 0);
    for (const auto* set : {&pilots, &data, &nulls}) {
        for (std::size_t i = 0; i < set->size(); ++i) {
            const std::size_t k = (*set)[i];
            if (k >= K || used[k]) {
                throw ConfigError("OfdmConfig: subcarrier index sets overlap or exceed K");
            }
            if (i > 0 && (*set)[i - 1] >= k) {
                throw ConfigError("OfdmConfig: subcarrier indices must be strictly ascending");
            }
            used[k] = 1;
        }
    }
}

namespace {

cdouble qpsk_symbol(std::uint64_t bits) {
    const double a = 1.0 / std::numbers::sqrt2;
    return {(bits & 1U) ? -a : a, (bits & 2U) ? -a : a};
}

} // namespace

CVector random_qpsk(std::size_t n, SeedStream& stream) {
    CVector s(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        s(i) = qpsk_symbol(stream.next_u64() >> 62);
    }
    return s;
}

PilotBook make_pilot_book(std::size_t N, std::size_t K_p, std::size_t L, PilotScheme scheme,
                          SeedStream& stream) {
    if (N == 0 || K_p == 0) {
        throw ConfigError("make_pilot_book: N and K_p must be positive");
    }
    PilotBook book;
    book.scheme = scheme;
    if (scheme == PilotScheme::random_qpsk) {
        for (std::size_t n = 0; n < N; ++n) {
            book.symbols.push_back(random_qpsk(K_p, stream));
        }
        return book;
    }
    if (K_p < N * L) {
        throw ConfigError("make_pilot_book: orthogonal pilots need K_p >= N*L (K_p=" +
                          std::to_string(K_p) + ", N*L=" + std::to_string(N * L) + ")");
    }
    const CVector base = random_qpsk(K_p, stream);
    for (std::size_t n = 0; n < N; ++n) {
        CVector s(static_cast<Eigen::Index>(K_p));
        for (std::size_t j = 0; j < K_p; ++j) {
            // shift transducer n into its own block of L delay bins
            const std::size_t idx = (n * L * j) % K_p;
            const double phase = -2.0 * std::numbers::pi * double(idx) / double(K_p);
            s(static_cast<Eigen::Index>(j)) = base(static_cast<Eigen::Index>(j)) * std::polar(1.0, phase);
        }
        book.symbols.push_back(std::move(s));
    }
    return book;
}

CMatrix build_measurement_matrix(const OfdmConfig& config, const PilotBook& book) {
    config.validate();
    if (book.N() != config.N || book.K_p() != config.K_p()) {
        throw ConfigError("build_measurement_matrix: pilot book does not match configuration");
    }
    const auto Kp = static_cast<Eigen::Index>(config.K_p());
    const auto L = static_cast<Eigen::Index>(config.L);
    const double scale = 1.0 / std::sqrt(double(config.K));
    CMatrix F(Kp, L);
    for (Eigen::Index j = 0; j < Kp; ++j) {
        const std::size_t Ij = config.pilots[static_cast<std::size_t>(j)];
        for (Eigen::Index l = 0; l < L; ++l) {
            const std::size_t idx = (Ij * static_cast<std::size_t>(l)) % config.K;
            F(j, l) = std::polar(scale, -2.0 * std::numbers::pi * double(idx) / double(config.K));
        }
    }
    CMatrix W(Kp, static_cast<Eigen::Index>(config.N) * L);
    for (std::size_t n = 0; n < config.N; ++n) {
        W.middleCols(static_cast<Eigen::Index>(n) * L, L) = book.symbols[n].asDiagonal() * F;
    }
    return W;
}

bool gram_is_diagonal(const CMatrix& W, double rel_tol) {
    return gram_matrix_is_diagonal(W.adjoint() * W, rel_tol);
}

bool gram_matrix_is_diagonal(const CMatrix& G, double rel_tol) {
    const double scale = G.diagonal().cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        return true;
    }
    for (Eigen::Index c = 0; c < G.cols(); ++c) {
        for (Eigen::Index r = 0; r < G.rows(); ++r) {
            if (r != c && std::abs(G(r, c)) > rel_tol * scale) {
                return false;
            }
        }
    }
    return true;
}

PilotSystem build_pilot_system(const OfdmConfig& config, const PilotBook& book) {
    PilotSystem sys;
    sys.W = build_measurement_matrix(config, book);
    sys.svd = thin_svd(sys.W);
    sys.diagonal_gram = gram_is_diagonal(sys.W);
    return sys;
}

CVector assemble_spectrum(const OfdmConfig& config, const CVector& pilot_symbols,
                          const CVector& data_symbols) {
    if (static_cast<std::size_t>(pilot_symbols.size()) != config.K_p() ||
        static_cast<std::size_t>(data_symbols.size()) != config.K_d()) {
        throw ConfigError("assemble_spectrum: symbol counts do not match configuration");
    }
    CVector X = CVector::Zero(static_cast<Eigen::Index>(config.K));
    for (std::size_t j = 0; j < config.K_p(); ++j) {
        X(static_cast<Eigen::Index>(config.pilots[j])) = pilot_symbols(static_cast<Eigen::Index>(j));
    }
    for (std::size_t d = 0; d < config.K_d(); ++d) {
        X(static_cast<Eigen::Index>(config.data[d])) = data_symbols(static_cast<Eigen::Index>(d));
    }
    return X;
}

std::vector<ReceivedBlock> transmit_receive(const OfdmConfig& config, const PilotBook& book,
                                            const std::vector<CVector>& data_symbols,
                                            const ChannelRealization& channel, double gamma_w,
                                            SeedStream& noise_stream, NoiseMode mode) {
    config.validate();
    const auto& cd = channel.dims();
    if (cd.N != config.N || cd.M != config.M) {
        throw ConfigError("transmit_receive: channel dimensions do not match configuration");
    }
    if (cd.L > config.N_zp) {
        throw ConfigError("transmit_receive: channel longer than the zero-padding guard");
    }
    if (book.N() != config.N || data_symbols.size() != config.N) {
        throw ConfigError("transmit_receive: need one pilot and one data vector per transducer");
    }
    if (!(gamma_w > 0.0)) {
        throw ConfigError("transmit_receive: gamma_w must be positive");
    }

    const std::size_t K = config.K;
    const std::size_t total = K + config.N_zp;
    const double sqrtK = std::sqrt(double(K));

    std::vector<CVector> tx(config.N);
    for (std::size_t n = 0; n < config.N; ++n) {
        tx[n] = ifft_unitary(assemble_spectrum(config, book.symbols[n], data_symbols[n]));
    }

    const bool noisy = std::isfinite(gamma_w);
    // Noise variances chosen so that pilot-domain noise (spectrum / sqrt(K)) has
    // average power 1/gamma_w per tone.
    const double var_time = noisy ? double(K) * double(K) / (double(total) * gamma_w) : 0.0;
    const double var_white = noisy ? double(K) / gamma_w : 0.0;

    std::vector<ReceivedBlock> out(config.M);
    for (std::size_t m = 0; m < config.M; ++m) {
        SeedStream ns = noise_stream.substream("rx-noise", {m});
        CVector y = CVector::Zero(static_cast<Eigen::Index>(total));
        for (std::size_t n = 0; n < config.N; ++n) {
            const CVector& h = channel.taps(m, n);
            const CVector& x = tx[n];
            for (Eigen::Index l = 0; l < h.size(); ++l) {
                const cdouble hl = h(l);
                if (hl == cdouble(0.0, 0.0)) {
                    continue;
                }
                y.segment(l, static_cast<Eigen::Index>(K)) += hl * x;
            }
        }
        if (mode == NoiseMode::time_domain && noisy) {
            y += sample_cgauss(total, var_time, ns);
        }
        CVector folded = y.head(static_cast<Eigen::Index>(K));
        folded.head(static_cast<Eigen::Index>(config.N_zp)) +=
            y.segment(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(config.N_zp));
        if (mode == NoiseMode::whitened && noisy) {
            folded += sample_cgauss(K, var_white, ns);
        }

        ReceivedBlock& rb = out[m];
        rb.time_samples = std::move(y);
        rb.spectrum = fft_unitary(folded);
        rb.pilots.resize(static_cast<Eigen::Index>(config.K_p()));
        for (std::size_t j = 0; j < config.K_p(); ++j) {
            rb.pilots(static_cast<Eigen::Index>(j)) =
                rb.spectrum(static_cast<Eigen::Index>(config.pilots[j])) / sqrtK;
        }
        rb.data.resize(static_cast<Eigen::Index>(config.K_d()));
        for (std::size_t d = 0; d < config.K_d(); ++d) {
            rb.data(static_cast<Eigen::Index>(d)) =
                rb.spectrum(static_cast<Eigen::Index>(config.data[d])) / sqrtK;
        }
    }
    return out;
}

std::vector<CMatrix> frequency_response_from_stacked(const std::vector<CVector>& h_stacked,
                                                     std::size_t N, std::size_t L, std::size_t K) {
    if (L > K) {
        throw ConfigError("channel_frequency_response: L must not exceed K");
    }
    const std::size_t M = h_stacked.size();
    std::vector<CMatrix> H(K, CMatrix::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(N)));
    const double sqrtK = std::sqrt(double(K));
    for (std::size_t m = 0; m < M; ++m) {
        if (static_cast<std::size_t>(h_stacked[m].size()) != N * L) {
            throw ConfigError("channel_frequency_response: stacked vector length must be N*L");
        }
        for (std::size_t n = 0; n < N; ++n) {
            CVector padded = CVector::Zero(static_cast<Eigen::Index>(K));
            padded.head(static_cast<Eigen::Index>(L)) =
                h_stacked[m].segment(static_cast<Eigen::Index>(n * L), static_cast<Eigen::Index>(L));
            const CVector resp = fft_unitary(padded) * sqrtK;
            for (std::size_t k = 0; k < K; ++k) {
                H[k](static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) =
                    resp(static_cast<Eigen::Index>(k));
            }
        }
    }
    return H;
}

std::vector<CMatrix> channel_frequency_response(const ChannelRealization& channel, std::size_t K) {
    const auto& d = channel.dims();
    std::vector<CVector> stacked;
    for (std::size_t m = 0; m < d.M; ++m) {
        stacked.push_back(channel.stacked(m));
    }
    return frequency_response_from_stacked(stacked, d.N, d.L, K);
}

} // namespace vampce
