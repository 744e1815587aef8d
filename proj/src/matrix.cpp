#include "precoder/matrix.hpp"

#include <cmath>
#include <cstring>

namespace precoder {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::IndexOrder: return "IndexOrder";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NegativePower: return "NegativePower";
    case ErrorCode::NegativeEigenvalue: return "NegativeEigenvalue";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::UnsupportedM: return "UnsupportedM";
    case ErrorCode::DegenerateReference: return "DegenerateReference";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (size() > kInlineCap) heap_.assign(size(), 0.0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> entries)
    : Matrix(rows, cols, std::span<const double>(entries.begin(), entries.size())) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::span<const double> entries) : Matrix(rows, cols) {
    if (entries.size() != size())
        throw Error(ErrorCode::DimensionMismatch, "matrix entry count does not match shape");
    std::memcpy(data(), entries.data(), size() * sizeof(double));
    require_finite("matrix construction");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Matrix::trace() const {
    double s = 0.0;
    const std::size_t n = rows_ < cols_ ? rows_ : cols_;
    for (std::size_t i = 0; i < n; ++i) s += (*this)(i, i);
    return s;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    const double* p = data();
    for (std::size_t k = 0; k < size(); ++k) s += p[k] * p[k];
    return std::sqrt(s);
}

double Matrix::max_abs() const {
    double s = 0.0;
    const double* p = data();
    for (std::size_t k = 0; k < size(); ++k) s = std::max(s, std::fabs(p[k]));
    return s;
}

bool Matrix::is_finite() const noexcept {
    const double* p = data();
    for (std::size_t k = 0; k < size(); ++k)
        if (!std::isfinite(p[k])) return false;
    return true;
}

void Matrix::require_finite(const char* context) const {
    if (!is_finite())
        throw Error(ErrorCode::NonFinite, std::string("non-finite entries in ") + context);
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (!same_shape(other)) throw Error(ErrorCode::DimensionMismatch, "matrix add shape mismatch");
    double* p = data();
    const double* q = other.data();
    for (std::size_t k = 0; k < size(); ++k) p[k] += q[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    if (!same_shape(other)) throw Error(ErrorCode::DimensionMismatch, "matrix sub shape mismatch");
    double* p = data();
    const double* q = other.data();
    for (std::size_t k = 0; k < size(); ++k) p[k] -= q[k];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    double* p = data();
    for (std::size_t k = 0; k < size(); ++k) p[k] *= s;
    return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw Error(ErrorCode::DimensionMismatch, "matrix product shape mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    Matrix c = a;
    c += b;
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    Matrix c = a;
    c -= b;
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    c *= s;
    return c;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw Error(ErrorCode::DimensionMismatch, "matvec shape mismatch");
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

void apply_givens_right(Matrix& a, std::size_t i, std::size_t j, double c, double s) {
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double ai = a(r, i);
        const double aj = a(r, j);
        a(r, i) = c * ai + s * aj;
        a(r, j) = -s * ai + c * aj;
    }
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::fabs(a(i, j) - b(i, j)));
    return d;
}

} // namespace precoder
