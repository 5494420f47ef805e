#pragma once

#include <cstddef>

#include "vampce/rng.hpp"
#include "vampce/types.hpp"

namespace vampce {

/// Thin SVD W = U diag(s) V^H truncated to the numerical rank.
struct SvdFactors {
    CMatrix U;   // rows(W) x rank
    RVector s;   // rank singular values, descending, all > rank tolerance
    CMatrix V;   // cols(W) x rank
    std::size_t rows = 0;
    std::size_t cols = 0;

    [[nodiscard]] std::size_t rank() const { return static_cast<std::size_t>(s.size()); }
    [[nodiscard]] CMatrix reconstruct() const;
};

/// Unitary DFT matrix, entry (m, n) = exp(-j 2 pi m n / K) / sqrt(K).
CMatrix dft_matrix(std::size_t K);

/// Thin SVD with rank tolerance max(rows, cols) * eps * s_max.
/// Throws NumericError when the decomposition is not finite.
SvdFactors thin_svd(const CMatrix& W);

/// i.i.d. circularly-symmetric complex Gaussian samples, E|x|^2 = variance.
CVector sample_cgauss(std::size_t n, double variance, SeedStream& stream);

/// Unitary forward DFT (F_K x) computed by FFT.
CVector fft_unitary(const CVector& x);
/// Unitary inverse DFT (F_K^H X) computed by FFT.
CVector ifft_unitary(const CVector& X);

} // namespace vampce
