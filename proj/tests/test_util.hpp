#pragma once

#include <cmath>
#include <vector>

#include "precoder/matrix.hpp"
#include "precoder/rng.hpp"

namespace precoder::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

inline Matrix random_symmetric(Rng& rng, std::size_t n) {
    Matrix a = random_matrix(rng, n, n);
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

/// Random PSD matrix B B^T, optionally rank-deficient.
inline Matrix random_psd(Rng& rng, std::size_t n, std::size_t rank = 0) {
    if (rank == 0) rank = n;
    Matrix b = random_matrix(rng, n, rank);
    Matrix q(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < rank; ++k) s += b(i, k) * b(j, k);
            q(i, j) = s;
        }
    return q;
}

/// Random PSD matrix rescaled to a given trace.
inline Matrix random_covariance(Rng& rng, std::size_t n, double trace) {
    Matrix q = random_psd(rng, n);
    const double t = q.trace();
    if (t > 0.0) q *= trace / t;
    return q;
}

} // namespace precoder::testing
