#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hubnode {

using Complex = std::complex<double>;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;
using VectorXr = Eigen::VectorXd;
using MatrixXr = Eigen::MatrixXd;

/// Invalid argument to an operation (bad sites, counts, grids).
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A state vector violated a precondition (norm, sector).
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data (non-Hermitian input, degenerate scale).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Persistent artifact could not be read or failed validation.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical procedure failed (solver breakdown, non-finite values).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Composite trapezoid on a uniform grid with spacing h.
inline double trapezoid(std::span<const double> f, double h) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t k = 1; k + 1 < f.size(); ++k) s += f[k];
    return s * h;
}

// FNV-1a 64-bit over raw bytes; used for artifact integrity checks.
inline std::uint64_t fnv1a64(const void* data, std::size_t nbytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < nbytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline int binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return static_cast<int>(r);
}

}  // namespace hubnode
