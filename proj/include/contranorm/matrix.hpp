#ifndef CONTRANORM_MATRIX_HPP
#define CONTRANORM_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace contranorm {

/// Thrown when an iterative numerical procedure fails to converge.
/// Carries the residual at the point of failure.
class numerical_error : public std::runtime_error {
public:
    numerical_error(const std::string& msg, double residual)
        : std::runtime_error(msg + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Thrown when an input is too degenerate for the requested quantity
/// (all-zero singular spectrum, zero-norm rows, ...).
class degenerate_input_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles. Value semantics; instances are
/// treated as immutable once fully constructed, so sharing across
/// threads is safe.
class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix filled(std::size_t rows, std::size_t cols, double value);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept {
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const noexcept {
        return data_[i * cols_ + j];
    }

    double* row(std::size_t i) noexcept { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const noexcept { return data_.data() + i * cols_; }

    const std::vector<double>& entries() const noexcept { return data_; }

    bool all_finite() const noexcept;
    double frobenius_norm() const noexcept;
    double max_abs() const noexcept;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;

    void check_shape() const;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double c, const Matrix& m);

/// Standard dense product. Throws std::invalid_argument on inner-dimension
/// mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

/// H Hᵀ (n×n Gram over rows). Exploits symmetry.
Matrix gram_rows(const Matrix& h);

/// Hᵀ H (d×d Gram over columns). Exploits symmetry.
Matrix gram_cols(const Matrix& h);

/// Row-wise softmax with per-row max subtraction; each output row is
/// non-negative and sums to 1. Takes the argument by value so callers
/// holding a large temporary can move it in.
Matrix softmax_rows(Matrix m);

/// Column-wise softmax; softmax_cols(m) == transpose(softmax_rows(transpose(m)))
/// entry for entry (the per-column accumulation order matches the
/// transposed row-wise one).
Matrix softmax_cols(Matrix m);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace contranorm

#endif  // CONTRANORM_MATRIX_HPP
