#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "precoder/error.hpp"

namespace precoder {

/// Dense real matrix, row-major. Sized for small dense work (channels,
/// covariances, rotation factors); matrices up to 8x8 live inline so the
/// solver hot loops never touch the heap.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> entries);
    Matrix(std::size_t rows, std::size_t cols, std::span<const double> entries);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> d);
    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return rows_ * cols_; }
    bool empty() const noexcept { return size() == 0; }

    double* data() noexcept { return size() <= kInlineCap ? small_.data() : heap_.data(); }
    const double* data() const noexcept { return size() <= kInlineCap ? small_.data() : heap_.data(); }

    double operator()(std::size_t i, std::size_t j) const noexcept { return data()[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data()[i * cols_ + j]; }

    Matrix transposed() const;
    double trace() const;
    double frobenius_norm() const;
    double max_abs() const;
    bool is_finite() const noexcept;
    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    /// Throws NonFinite when any entry is NaN or Inf.
    void require_finite(const char* context) const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

private:
    static constexpr std::size_t kInlineCap = 64;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::array<double, kInlineCap> small_{};
    std::vector<double> heap_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

/// y = A x
std::vector<double> matvec(const Matrix& a, std::span<const double> x);

/// A <- A * G(i,j,theta), touching only columns i and j.
void apply_givens_right(Matrix& a, std::size_t i, std::size_t j, double c, double s);

/// max |a_ij - b_ij|
double max_abs_diff(const Matrix& a, const Matrix& b);

} // namespace precoder
