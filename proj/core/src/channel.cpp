#include "vampce/channel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace vampce {

void BgParams::validate() const {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw ConfigError("BgParams: lambda must lie in (0, 1)");
    }
    if (!(gamma_h > 0.0) || !std::isfinite(gamma_h)) {
        throw ConfigError("BgParams: gamma_h must be positive and finite");
    }
}

ChannelRealization::ChannelRealization(ChannelDims dims) : dims_(dims) {
    if (dims.N == 0 || dims.M == 0 || dims.L == 0) {
        throw ConfigError("ChannelRealization: N, M, L must be positive");
    }
    taps_.assign(dims.N * dims.M, CVector::Zero(static_cast<Eigen::Index>(dims.L)));
}

const CVector& ChannelRealization::taps(std::size_t m, std::size_t n) const {
    return taps_.at(m * dims_.N + n);
}

void ChannelRealization::set_taps(std::size_t m, std::size_t n, CVector taps) {
    if (static_cast<std::size_t>(taps.size()) != dims_.L) {
        throw ConfigError("ChannelRealization: tap vector length must equal L");
    }
    taps_.at(m * dims_.N + n) = std::move(taps);
}

CVector ChannelRealization::stacked(std::size_t m) const {
    const auto L = static_cast<Eigen::Index>(dims_.L);
    CVector h(static_cast<Eigen::Index>(dims_.N) * L);
    for (std::size_t n = 0; n < dims_.N; ++n) {
        h.segment(static_cast<Eigen::Index>(n) * L, L) = taps(m, n);
    }
    return h;
}

void ChannelRealization::set_stacked(std::size_t m, const CVector& h) {
    const auto L = static_cast<Eigen::Index>(dims_.L);
    if (h.size() != static_cast<Eigen::Index>(dims_.N) * L) {
        throw ConfigError("ChannelRealization: stacked vector length must equal N*L");
    }
    for (std::size_t n = 0; n < dims_.N; ++n) {
        set_taps(m, n, h.segment(static_cast<Eigen::Index>(n) * L, L));
    }
}

std::size_t ChannelRealization::support_size() const {
    std::size_t count = 0;
    for (const auto& t : taps_) {
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            count += t(i) != cdouble(0.0, 0.0) ? 1 : 0;
        }
    }
    return count;
}

double ChannelRealization::energy() const {
    double e = 0.0;
    for (const auto& t : taps_) {
        e += t.squaredNorm();
    }
    return e;
}

bool operator==(const ChannelRealization& a, const ChannelRealization& b) {
    if (a.dims_.N != b.dims_.N || a.dims_.M != b.dims_.M || a.dims_.L != b.dims_.L) {
        return false;
    }
    for (std::size_t i = 0; i < a.taps_.size(); ++i) {
        if (a.taps_[i] != b.taps_[i]) {
            return false;
        }
    }
    return true;
}

ChannelRealization sample_bg_channel(ChannelDims dims, const BgParams& params, SeedStream& stream,
                                     ChannelSamplingOptions options) {
    const bool degenerate = params.lambda == 0.0 || params.lambda == 1.0;
    if (!(degenerate && options.allow_degenerate)) {
        params.validate();
    } else if (!(params.gamma_h > 0.0)) {
        throw ConfigError("BgParams: gamma_h must be positive");
    }
    if (degenerate && params.lambda == 0.0 && options.guarantee_nonempty) {
        throw ConfigError("sample_bg_channel: lambda = 0 cannot produce a nonempty support");
    }

    ChannelRealization channel(dims);
    const double sigma = std::sqrt(1.0 / (2.0 * params.gamma_h));
    const auto NL = static_cast<Eigen::Index>(dims.N * dims.L);
    for (std::size_t m = 0; m < dims.M; ++m) {
        CVector h = CVector::Zero(NL);
        do {
            for (Eigen::Index i = 0; i < NL; ++i) {
                const bool active = stream.next_uniform() < params.lambda;
                // always consume the Gaussian pair so the stream layout is fixed
                const double re = stream.next_normal();
                const double im = stream.next_normal();
                h(i) = active ? cdouble(sigma * re, sigma * im) : cdouble(0.0, 0.0);
            }
        } while (options.guarantee_nonempty && h.squaredNorm() == 0.0);
        channel.set_stacked(m, h);
    }
    return channel;
}

void save_channel(const ChannelRealization& channel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("save_channel: cannot open " + path.string());
    }
    const auto& d = channel.dims();
    out << d.N << ' ' << d.M << ' ' << d.L << '\n';
    char line[160];
    for (std::size_t m = 0; m < d.M; ++m) {
        for (std::size_t n = 0; n < d.N; ++n) {
            const CVector& t = channel.taps(m, n);
            for (std::size_t l = 0; l < d.L; ++l) {
                const cdouble v = t(static_cast<Eigen::Index>(l));
                std::snprintf(line, sizeof line, "%zu %zu %zu %.17g %.17g\n", m, n, l, v.real(),
                              v.imag());
                out << line;
            }
        }
    }
    if (!out) {
        throw FormatError("save_channel: write failed for " + path.string());
    }
}

namespace {

double parse_real(const std::string& token, std::size_t line_no) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &used);
    } catch (const std::exception&) {
        throw FormatError("tap file line " + std::to_string(line_no) + ": bad number '" + token +
                          "'");
    }
    if (used != token.size()) {
        throw FormatError("tap file line " + std::to_string(line_no) + ": bad number '" + token +
                          "'");
    }
    if (!std::isfinite(v)) {
        throw FormatError("tap file line " + std::to_string(line_no) + ": non-finite value");
    }
    return v;
}

std::size_t parse_index(const std::string& token, std::size_t limit, std::size_t line_no) {
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
        throw FormatError("tap file line " + std::to_string(line_no) + ": bad index '" + token +
                          "'");
    }
    const std::size_t v = std::stoul(token);
    if (v >= limit) {
        throw FormatError("tap file line " + std::to_string(line_no) + ": index out of range");
    }
    return v;
}

} // namespace

ChannelRealization load_channel(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("load_channel: cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    ChannelDims dims;
    bool have_header = false;
    while (!have_header && std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string a, b, c, extra;
        if (!(ss >> a)) {
            continue; // blank
        }
        if (!(ss >> b >> c) || (ss >> extra)) {
            throw FormatError("tap file: header must be 'N M L'");
        }
        dims.N = parse_index(a, SIZE_MAX, line_no);
        dims.M = parse_index(b, SIZE_MAX, line_no);
        dims.L = parse_index(c, SIZE_MAX, line_no);
        have_header = true;
    }
    if (have_header && (dims.N == 0 || dims.M == 0 || dims.L == 0)) {
        throw FormatError("tap file: N, M and L must be positive");
    }
    if (!have_header) {
        throw FormatError("tap file: missing header");
    }
    ChannelRealization channel(dims);
    std::vector<CVector> taps(dims.M * dims.N, CVector::Zero(static_cast<Eigen::Index>(dims.L)));
    std::vector<char> seen(dims.M * dims.N * dims.L, 0);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tm, tn, tl, tre, tim, extra;
        if (!(ss >> tm)) {
            continue;
        }
        if (!(ss >> tn >> tl >> tre >> tim) || (ss >> extra)) {
            throw FormatError("tap file line " + std::to_string(line_no) +
                              ": expected 'm n l re im'");
        }
        const std::size_t m = parse_index(tm, dims.M, line_no);
        const std::size_t n = parse_index(tn, dims.N, line_no);
        const std::size_t l = parse_index(tl, dims.L, line_no);
        const double re = parse_real(tre, line_no);
        const double im = parse_real(tim, line_no);
        const std::size_t flat = (m * dims.N + n) * dims.L + l;
        if (seen[flat]) {
            throw FormatError("tap file line " + std::to_string(line_no) + ": duplicate tap");
        }
        seen[flat] = 1;
        taps[m * dims.N + n](static_cast<Eigen::Index>(l)) = cdouble(re, im);
        ++rows;
    }
    if (rows != seen.size()) {
        throw FormatError("tap file: dimension mismatch, expected " + std::to_string(seen.size()) +
                          " rows, found " + std::to_string(rows));
    }
    for (std::size_t m = 0; m < dims.M; ++m) {
        for (std::size_t n = 0; n < dims.N; ++n) {
            channel.set_taps(m, n, taps[m * dims.N + n]);
        }
    }
    return channel;
}

} // namespace vampce
