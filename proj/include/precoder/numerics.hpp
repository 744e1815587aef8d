#pragma once

#include <vector>

#include "precoder/matrix.hpp"

namespace precoder {

/// Eigendecomposition of a symmetric matrix, A = V diag(values) V^T.
/// Eigenvalues sorted descending, eigenvector columns in matching order.
struct SymEig {
    std::vector<double> values;
    Matrix vectors;
};

/// Full SVD, A = U diag(singulars) Vt with square orthonormal U and Vt.
/// Singular values nonnegative, sorted descending.
struct Svd {
    Matrix u;
    std::vector<double> singulars;
    Matrix vt;
};

/// Cyclic Jacobi eigendecomposition. Input must be square and symmetric
/// within 1e-10 relative tolerance, else NonSymmetric.
SymEig sym_eig(const Matrix& a);

/// One-sided Jacobi SVD with orthonormal completion of U and V.
Svd svd(const Matrix& a);

/// Plane rotation of Eq.-style form: identity except rows/cols i,j carrying
/// [[cos t, -sin t], [sin t, cos t]]. Indices are zero-based, i < j < m.
Matrix givens(std::size_t m, std::size_t i, std::size_t j, double theta);

/// 0.5 * log2 |I + H Q H^T| in bit/s/Hz. Q must be symmetric PSD.
double logdet_rate(const Matrix& h, const Matrix& q);

/// Same rate through the determinant identity |I + H Q H^T| = |I + (H^T H) Q|,
/// with the Gram matrix H^T H precomputed by the caller. This is the solver
/// hot path; `work` must be m x m and is overwritten.
double logdet_rate_gram(const Matrix& gram, const Matrix& q, Matrix& work);

/// Determinant by LU with partial pivoting.
double det(const Matrix& a);

} // namespace precoder
