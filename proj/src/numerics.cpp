#include "precoder/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace precoder {

namespace {

// Symmetric Schur rotation zeroing the (p,q) entry: returns (c, s) with
// B' = J^T B J, J carrying [[c, s], [-s, c]] on the (p,q) block.
std::pair<double, double> sym_schur(double app, double aqq, double apq) {
    if (apq == 0.0) return {1.0, 0.0};
    const double tau = (aqq - app) / (2.0 * apq);
    const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                  : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    return {c, t * c};
}

std::vector<std::size_t> descending_order(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return idx;
}

// Fill columns of u marked missing with an orthonormal completion,
// Gram-Schmidt against the accepted columns (two passes).
void complete_basis(Matrix& u, std::vector<bool>& valid) {
    const std::size_t n = u.rows();
    std::vector<double> w(n);
    for (std::size_t col = 0; col < u.cols(); ++col) {
        if (valid[col]) continue;
        bool placed = false;
        for (std::size_t cand = 0; cand < n && !placed; ++cand) {
            for (std::size_t k = 0; k < n; ++k) w[k] = (k == cand) ? 1.0 : 0.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t other = 0; other < u.cols(); ++other) {
                    if (!valid[other]) continue;
                    double dot = 0.0;
                    for (std::size_t k = 0; k < n; ++k) dot += w[k] * u(k, other);
                    for (std::size_t k = 0; k < n; ++k) w[k] -= dot * u(k, other);
                }
            }
            double norm = 0.0;
            for (std::size_t k = 0; k < n; ++k) norm += w[k] * w[k];
            norm = std::sqrt(norm);
            if (norm > 0.5) {
                for (std::size_t k = 0; k < n; ++k) u(k, col) = w[k] / norm;
                valid[col] = true;
                placed = true;
            }
        }
    }
}

// One-sided Jacobi on a tall (rows >= cols) matrix.
Svd svd_tall(const Matrix& a) {
    const std::size_t r = a.rows();
    const std::size_t c = a.cols();
    Matrix w = a;
    Matrix v = Matrix::identity(c);

    constexpr double kTol = 1e-15;
    constexpr int kMaxSweeps = 60;
    bool converged = false;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        converged = true;
        for (std::size_t i = 0; i + 1 < c; ++i) {
            for (std::size_t j = i + 1; j < c; ++j) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t k = 0; k < r; ++k) {
                    alpha += w(k, i) * w(k, i);
                    beta += w(k, j) * w(k, j);
                    gamma += w(k, i) * w(k, j);
                }
                if (std::fabs(gamma) <= kTol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                converged = false;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0) ? 1.0 / (zeta + std::sqrt(1.0 + zeta * zeta))
                                               : 1.0 / (zeta - std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t k = 0; k < r; ++k) {
                    const double wi = w(k, i), wj = w(k, j);
                    w(k, i) = cs * wi - sn * wj;
                    w(k, j) = sn * wi + cs * wj;
                }
                for (std::size_t k = 0; k < c; ++k) {
                    const double vi = v(k, i), vj = v(k, j);
                    v(k, i) = cs * vi - sn * vj;
                    v(k, j) = sn * vi + cs * vj;
                }
            }
        }
    }
    if (!converged) throw Error(ErrorCode::NotConverged, "one-sided Jacobi SVD did not converge");

    std::vector<double> sig(c);
    for (std::size_t j = 0; j < c; ++j) {
        double norm = 0.0;
        for (std::size_t k = 0; k < r; ++k) norm += w(k, j) * w(k, j);
        sig[j] = std::sqrt(norm);
    }
    const auto order = descending_order(sig);

    Svd out;
    out.singulars.resize(c);
    out.u = Matrix(r, r);
    Matrix vsorted(c, c);
    const double smax = sig.empty() ? 0.0 : sig[order[0]];
    const double cutoff = smax * 1e-13;
    std::vector<bool> valid(r, false);
    for (std::size_t j = 0; j < c; ++j) {
        const std::size_t src = order[j];
        out.singulars[j] = sig[src];
        for (std::size_t k = 0; k < c; ++k) vsorted(k, j) = v(k, src);
        if (sig[src] > cutoff && sig[src] > 0.0) {
            for (std::size_t k = 0; k < r; ++k) out.u(k, j) = w(k, src) / sig[src];
            valid[j] = true;
        }
    }
    complete_basis(out.u, valid);
    out.vt = vsorted.transposed();
    return out;
}

// LU determinant with partial pivoting; n x n input is copied.
double lu_det(Matrix m) {
    const std::size_t n = m.rows();
    double d = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(m(i, k)) > std::fabs(m(piv, k))) piv = i;
        if (m(piv, k) == 0.0) return 0.0;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
            d = -d;
        }
        d *= m(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = m(i, k) / m(k, k);
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return d;
}

} // namespace

SymEig sym_eig(const Matrix& a) {
    if (a.rows() != a.cols()) throw Error(ErrorCode::DimensionMismatch, "sym_eig requires a square matrix");
    a.require_finite("sym_eig input");
    const std::size_t n = a.rows();
    const double scale = 1.0 + a.frobenius_norm();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(a(i, j) - a(j, i)) > 1e-10 * scale)
                throw Error(ErrorCode::NonSymmetric, "sym_eig input is not symmetric");

    // Work on the symmetrized copy so the tiny admissible asymmetry cannot bias sweeps.
    Matrix b(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) b(i, j) = 0.5 * (a(i, j) + a(j, i));
    Matrix v = Matrix::identity(n);

    const double stop = 1e-15 * scale;
    constexpr int kMaxSweeps = 100;
    bool converged = false;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        converged = true;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(b(p, q)) <= stop) continue;
                converged = false;
                const auto [cs, sn] = sym_schur(b(p, p), b(q, q), b(p, q));
                const double t = sn / cs;
                const double bpq = b(p, q);
                b(p, p) -= t * bpq;
                b(q, q) += t * bpq;
                b(p, q) = b(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double bkp = b(k, p), bkq = b(k, q);
                    b(k, p) = b(p, k) = cs * bkp - sn * bkq;
                    b(k, q) = b(q, k) = sn * bkp + cs * bkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vp = v(k, p), vq = v(k, q);
                    v(k, p) = cs * vp - sn * vq;
                    v(k, q) = sn * vp + cs * vq;
                }
            }
        }
    }
    if (!converged) throw Error(ErrorCode::NotConverged, "Jacobi eigendecomposition did not converge");

    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = b(i, i);
    const auto order = descending_order(diag);

    SymEig out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = diag[order[j]];
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
    }
    return out;
}

Svd svd(const Matrix& a) {
    a.require_finite("svd input");
    if (a.rows() >= a.cols()) return svd_tall(a);
    Svd flipped = svd_tall(a.transposed());
    Svd out;
    out.singulars = std::move(flipped.singulars);
    out.u = flipped.vt.transposed();
    out.vt = flipped.u.transposed();
    return out;
}

Matrix givens(std::size_t m, std::size_t i, std::size_t j, double theta) {
    if (i >= j) throw Error(ErrorCode::IndexOrder, "givens requires i < j");
    if (j >= m) throw Error(ErrorCode::IndexOrder, "givens index out of range");
    Matrix g = Matrix::identity(m);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    g(i, i) = c;
    g(i, j) = -s;
    g(j, i) = s;
    g(j, j) = c;
    return g;
}

double logdet_rate(const Matrix& h, const Matrix& q) {
    if (q.rows() != q.cols() || h.cols() != q.rows())
        throw Error(ErrorCode::DimensionMismatch, "logdet_rate shape mismatch");
    const std::size_t n = h.rows();
    const std::size_t m = h.cols();

    // M = I + H Q H^T, symmetric positive definite by construction.
    Matrix hq(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) {
            double s = 0.0;
            for (std::size_t l = 0; l < m; ++l) s += h(i, l) * q(l, k);
            hq(i, k) = s;
        }
    Matrix mat = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) s += hq(i, k) * h(j, k);
            mat(i, j) += s;
        }

    // Cholesky, log det = 2 sum log L_ii.
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double d = mat(k, k);
        for (std::size_t l = 0; l < k; ++l) d -= mat(k, l) * mat(k, l);
        if (d <= 0.0) throw Error(ErrorCode::NotPSD, "logdet_rate: matrix not positive definite");
        const double lkk = std::sqrt(d);
        mat(k, k) = lkk;
        acc += std::log(lkk);
        for (std::size_t i = k + 1; i < n; ++i) {
            double s = mat(i, k);
            for (std::size_t l = 0; l < k; ++l) s -= mat(i, l) * mat(k, l);
            mat(i, k) = s / lkk;
        }
    }
    const double rate = acc / std::numbers::ln2_v<double>;
    return rate > 0.0 ? rate : 0.0;
}

double logdet_rate_gram(const Matrix& gram, const Matrix& q, Matrix& work) {
    const std::size_t m = gram.rows();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double s = (i == j) ? 1.0 : 0.0;
            for (std::size_t k = 0; k < m; ++k) s += gram(i, k) * q(k, j);
            work(i, j) = s;
        }
    double d;
    if (m == 3) {
        d = work(0, 0) * (work(1, 1) * work(2, 2) - work(1, 2) * work(2, 1)) -
            work(0, 1) * (work(1, 0) * work(2, 2) - work(1, 2) * work(2, 0)) +
            work(0, 2) * (work(1, 0) * work(2, 1) - work(1, 1) * work(2, 0));
    } else if (m == 2) {
        d = work(0, 0) * work(1, 1) - work(0, 1) * work(1, 0);
    } else if (m == 1) {
        d = work(0, 0);
    } else {
        d = lu_det(work);
    }
    if (d <= 0.0) throw Error(ErrorCode::NotPSD, "logdet_rate_gram: nonpositive determinant");
    const double rate = 0.5 * std::log2(d);
    return rate > 0.0 ? rate : 0.0;
}

double det(const Matrix& a) {
    if (a.rows() != a.cols()) throw Error(ErrorCode::DimensionMismatch, "det requires a square matrix");
    return lu_det(a);
}

} // namespace precoder
