#include "precoder/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace precoder {

double RotationParams::power() const {
    return std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
}

double FeasibilitySystem::max_violation(const RotationParams& r) const {
    std::vector<double> coords(r.lambdas);
    coords.insert(coords.end(), r.thetas.begin(), r.thetas.end());
    const auto lr = matvec(l, coords);
    double worst = 0.0;
    for (std::size_t i = 0; i < lr.size(); ++i) worst = std::max(worst, lr[i] - b[i]);
    return worst;
}

FeasibilitySystem feasibility_system(std::size_t m, double power) {
    const std::size_t na = num_angles(m);
    FeasibilitySystem sys;
    sys.l = Matrix(m + 1, m + na);
    for (std::size_t i = 0; i < m; ++i) sys.l(i, i) = -1.0;
    for (std::size_t j = 0; j < m; ++j) sys.l(m, j) = 1.0;
    sys.b.assign(m + 1, 0.0);
    sys.b[m] = power;
    return sys;
}

Matrix rotation_matrix(std::size_t m, std::span<const double> thetas) {
    if (thetas.size() != num_angles(m))
        throw Error(ErrorCode::DimensionMismatch, "angle count must be m(m-1)/2");
    Matrix v = Matrix::identity(m);
    std::size_t a = 0;
    for (std::size_t i = 0; i + 1 < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j, ++a)
            apply_givens_right(v, i, j, std::cos(thetas[a]), std::sin(thetas[a]));
    return v;
}

namespace detail {

void compose_covariance(const RotationParams& r, Matrix& v, Matrix& q) {
    const std::size_t m = r.dim();
    v = Matrix::identity(m);
    std::size_t a = 0;
    for (std::size_t i = 0; i + 1 < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j, ++a)
            apply_givens_right(v, i, j, std::cos(r.thetas[a]), std::sin(r.thetas[a]));

    q = Matrix(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) s += v(i, k) * r.lambdas[k] * v(j, k);
            q(i, j) = q(j, i) = s;
        }
}

void project_feasible_inplace(std::span<double> lambdas, double power) {
    const std::size_t m = lambdas.size();
    double sum = 0.0;
    for (double& l : lambdas) {
        if (l < 0.0) l = 0.0;
        sum += l;
    }
    if (sum - power <= 1e-12 * (1.0 + power)) return;

    // Sort-based Euclidean projection onto {lambda >= 0, sum = power}.
    std::array<double, 8> small;
    std::vector<double> big;
    std::span<double> sorted;
    if (m <= small.size()) {
        std::copy(lambdas.begin(), lambdas.end(), small.begin());
        sorted = std::span<double>(small.data(), m);
    } else {
        big.assign(lambdas.begin(), lambdas.end());
        sorted = big;
    }
    std::sort(sorted.begin(), sorted.end(), std::greater<>());

    double cumsum = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        cumsum += sorted[j];
        const double candidate = (cumsum - power) / static_cast<double>(j + 1);
        if (sorted[j] - candidate > -1e-12) tau = candidate;
    }
    for (double& l : lambdas) l = std::max(0.0, l - tau);
}

} // namespace detail

CovarianceMatrix params_to_covariance(const RotationParams& r) {
    const std::size_t m = r.dim();
    if (m == 0) throw Error(ErrorCode::InvalidArgument, "empty rotation parameters");
    if (r.thetas.size() != num_angles(m))
        throw Error(ErrorCode::DimensionMismatch, "angle count must be m(m-1)/2");
    for (double l : r.lambdas)
        if (!(l >= 0.0)) throw Error(ErrorCode::NegativeEigenvalue, "eigenvalue below zero");

    Matrix v, q;
    detail::compose_covariance(r, v, q);
    return CovarianceMatrix(std::move(q));
}

RotationParams covariance_to_params(const CovarianceMatrix& q) {
    const std::size_t m = q.dim();
    SymEig eig = sym_eig(q.matrix());
    const double scale = 1.0 + q.matrix().frobenius_norm();
    if (eig.values.back() < -1e-9 * scale)
        throw Error(ErrorCode::NotPSD, "covariance has negative eigenvalue");

    RotationParams out;
    out.lambdas.resize(m);
    for (std::size_t i = 0; i < m; ++i) out.lambdas[i] = std::max(0.0, eig.values[i]);
    out.thetas.assign(num_angles(m), 0.0);
    if (m == 1) return out;

    // The eigenbasis is orthogonal with det +-1; Q is blind to a column sign,
    // so put it in SO(m) by flipping the last column when needed.
    Matrix w = std::move(eig.vectors);
    if (det(w) < 0.0)
        for (std::size_t k = 0; k < m; ++k) w(k, m - 1) = -w(k, m - 1);

    // Peel one pair block at a time: angles of block i come from column i in
    // spherical-coordinate form, then the inverse block product reduces W to
    // the identity on row/column i.
    std::size_t a_base = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const std::size_t block = m - 1 - i;
        // prefix norms rho_j = |(w_ii, ..., w_{j-1,i})|
        for (std::size_t j = m - 1; j > i; --j) {
            double rho2 = 0.0;
            for (std::size_t k = i; k < j; ++k) rho2 += w(k, i) * w(k, i);
            const double rho = (j == i + 1) ? w(i, i) : std::sqrt(rho2);
            const double x = w(j, i);
            out.thetas[a_base + (j - i - 1)] = (x == 0.0 && rho == 0.0) ? 0.0 : std::atan2(x, rho);
        }
        // W <- (V_{i,i+1} ... V_{i,m-1})^{-1} W, rightmost factor first
        for (std::size_t j = i + 1; j < m; ++j) {
            const double t = out.thetas[a_base + (j - i - 1)];
            const double c = std::cos(t), s = std::sin(t);
            for (std::size_t col = 0; col < m; ++col) {
                const double wi = w(i, col), wj = w(j, col);
                w(i, col) = c * wi + s * wj;
                w(j, col) = -s * wi + c * wj;
            }
        }
        a_base += block;
    }
    return out;
}

RotationParams project_feasible(const RotationParams& r, double power) {
    RotationParams out = r;
    for (double l : out.lambdas)
        if (!std::isfinite(l)) throw Error(ErrorCode::NonFinite, "non-finite eigenvalue");
    detail::project_feasible_inplace(out.lambdas, power);
    return out;
}

} // namespace precoder
