#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vampce {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

/// Invalid configuration or argument (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to produce a finite answer (exit code 3).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Complex-multiply tally. Divisions count as multiplies; additions are free.
struct CmulCounter {
    std::uint64_t count = 0;

    void add(std::uint64_t n) { count += n; }
    void add_matvec(std::size_t rows, std::size_t cols) { count += std::uint64_t(rows) * cols; }
};

inline bool all_finite(const CVector& v) { return v.allFinite(); }

} // namespace vampce
