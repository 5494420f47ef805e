#include "vampce/linalg.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace vampce {

CMatrix SvdFactors::reconstruct() const {
    if (rank() == 0) {
        return CMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    }
    return U * s.cast<cdouble>().asDiagonal() * V.adjoint();
}

CMatrix dft_matrix(std::size_t K) {
    if (K == 0) {
        throw ConfigError("dft_matrix: K must be positive");
    }
    const auto n = static_cast<Eigen::Index>(K);
    const double scale = 1.0 / std::sqrt(double(K));
    CMatrix F(n, n);
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index k = 0; k < n; ++k) {
            // reduce mn mod K first so the phase stays accurate for large K
            const auto idx = static_cast<std::size_t>((m * k) % n);
            const double phase = -2.0 * std::numbers::pi * double(idx) / double(K);
            F(m, k) = std::polar(scale, phase);
        }
    }
    return F;
}

SvdFactors thin_svd(const CMatrix& W) {
    if (W.size() == 0) {
        throw ConfigError("thin_svd: empty matrix");
    }
    if (!W.allFinite()) {
        throw NumericError("thin_svd: input contains non-finite entries");
    }
    Eigen::BDCSVD<CMatrix> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        throw NumericError("thin_svd: SVD did not converge");
    }
    const RVector& sv = svd.singularValues();
    if (!sv.allFinite() || !svd.matrixU().allFinite() || !svd.matrixV().allFinite()) {
        throw NumericError("thin_svd: non-finite factors");
    }
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    const double tol = double(std::max(W.rows(), W.cols())) *
                       std::numeric_limits<double>::epsilon() * smax;
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > tol) {
        ++rank;
    }

    SvdFactors out;
    out.rows = static_cast<std::size_t>(W.rows());
    out.cols = static_cast<std::size_t>(W.cols());
    out.U = svd.matrixU().leftCols(rank);
    out.V = svd.matrixV().leftCols(rank);
    out.s = sv.head(rank);
    return out;
}

CVector sample_cgauss(std::size_t n, double variance, SeedStream& stream) {
    if (!(variance >= 0.0) || !std::isfinite(variance)) {
        throw ConfigError("sample_cgauss: variance must be finite and non-negative");
    }
    CVector x(static_cast<Eigen::Index>(n));
    const double sigma = std::sqrt(variance / 2.0);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double re = stream.next_normal();
        const double im = stream.next_normal();
        x(i) = cdouble(sigma * re, sigma * im);
    }
    return x;
}

namespace {

// Eigen::FFT keeps per-size twiddle caches; one instance per thread.
Eigen::FFT<double>& thread_fft() {
    thread_local Eigen::FFT<double> fft;
    return fft;
}

} // namespace

CVector fft_unitary(const CVector& x) {
    if (x.size() <= 1) {
        return x; // kissfft cannot plan a length-1 transform
    }
    std::vector<cdouble> in(x.data(), x.data() + x.size());
    std::vector<cdouble> out;
    thread_fft().fwd(out, in);
    CVector X(x.size());
    const double scale = 1.0 / std::sqrt(double(x.size()));
    for (Eigen::Index i = 0; i < X.size(); ++i) {
        X(i) = out[static_cast<std::size_t>(i)] * scale;
    }
    return X;
}

CVector ifft_unitary(const CVector& X) {
    if (X.size() <= 1) {
        return X;
    }
    std::vector<cdouble> in(X.data(), X.data() + X.size());
    std::vector<cdouble> out;
    // Eigen's inverse divides by n; undo half of it for the unitary convention.
    thread_fft().inv(out, in);
    CVector x(X.size());
    const double scale = std::sqrt(double(X.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x(i) = out[static_cast<std::size_t>(i)] * scale;
    }
    return x;
}

} // namespace vampce
