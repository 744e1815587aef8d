#pragma once

#include <vector>

#include "precoder/channel.hpp"

namespace precoder {

/// Number of rotation angles for an m x m covariance: m(m-1)/2, 0 for m = 1.
inline constexpr std::size_t num_angles(std::size_t m) { return m * (m - 1) / 2; }

/// Rotation re-encoding of a covariance matrix: nonnegative eigenvalues plus
/// unconstrained Givens angles in the fixed pair order
/// (1,2),(1,3),...,(1,m),(2,3),...,(m-1,m).
struct RotationParams {
    std::vector<double> lambdas; // watts, >= 0
    std::vector<double> thetas;  // radians, unconstrained

    std::size_t dim() const noexcept { return lambdas.size(); }
    double power() const;
};

/// Linear feasibility system L r <= b equivalent to the PSD and total-power
/// constraints: L = [[-I_m, 0], [1_{1 x m}, 0]], b = [0, ..., 0, P].
struct FeasibilitySystem {
    Matrix l;
    std::vector<double> b;

    double max_violation(const RotationParams& r) const;
};

FeasibilitySystem feasibility_system(std::size_t m, double power);

/// Product of all Givens factors in the fixed order; always det +1.
Matrix rotation_matrix(std::size_t m, std::span<const double> thetas);

/// Q = V diag(lambda) V^T.
CovarianceMatrix params_to_covariance(const RotationParams& r);

/// Inverse re-encoding: eigendecompose, repair a det = -1 eigenbasis by
/// flipping the last column, then read the angles off column by column with
/// atan2. Round-trips to the input within 1e-9 Frobenius.
RotationParams covariance_to_params(const CovarianceMatrix& q);

/// Clamp eigenvalues at zero, then Euclidean-project onto the simplex slice
/// {lambda >= 0, sum <= P} when the budget is exceeded. Angles pass through.
RotationParams project_feasible(const RotationParams& r, double power);

namespace detail {
/// In-place fast path used by the solvers: V and Q are resized/overwritten.
void compose_covariance(const RotationParams& r, Matrix& v, Matrix& q);
/// In-place feasibility projection on a raw coordinate vector [lambda, theta].
void project_feasible_inplace(std::span<double> lambdas, double power);
} // namespace detail

} // namespace precoder
