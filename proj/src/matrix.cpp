#include "contranorm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace contranorm {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()));
    }
}

void check_entries_finite(const std::vector<double>& entries) {
    for (double v : entries) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("matrix entries must be finite");
        }
    }
}

}  // namespace

void Matrix::check_shape() const {
    if (rows_ == 0 || cols_ == 0) {
        throw std::invalid_argument("matrix dimensions must be at least 1x1");
    }
}

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    check_shape();
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    check_shape();
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("entry count " + std::to_string(data_.size()) +
                                    " does not match " + std::to_string(rows_) + "x" +
                                    std::to_string(cols_));
    }
    check_entries_finite(data_);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    check_shape();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw std::invalid_argument("ragged initializer rows");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
    check_entries_finite(data_);
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::filled(std::size_t rows, std::size_t cols, double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("fill value must be finite");
    Matrix m(rows, cols);
    std::fill(m.data_.begin(), m.data_.end(), value);
    return m;
}

bool Matrix::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double Matrix::frobenius_norm() const noexcept {
    double sum = 0.0;
    for (double v : data_) sum += v * v;
    return std::sqrt(sum);
}

double Matrix::max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "operator+");
    Matrix out = a;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* o = out.row(i);
        const double* br = b.row(i);
        for (std::size_t j = 0; j < out.cols(); ++j) o[j] += br[j];
    }
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "operator-");
    Matrix out = a;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* o = out.row(i);
        const double* br = b.row(i);
        for (std::size_t j = 0; j < out.cols(); ++j) o[j] -= br[j];
    }
    return out;
}

Matrix operator*(double c, const Matrix& m) {
    Matrix out = m;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* o = out.row(i);
        for (std::size_t j = 0; j < out.cols(); ++j) o[j] *= c;
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()));
    }
    Matrix out(a.rows(), b.cols());
    // i-k-j order: the inner loop runs over contiguous rows of b and out.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* o = out.row(i);
        const double* ar = a.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = ar[k];
            if (aik == 0.0) continue;
            const double* br = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aik * br[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = r[j];
    }
    return out;
}

Matrix gram_rows(const Matrix& h) {
    const std::size_t n = h.rows();
    const std::size_t d = h.cols();
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* hi = h.row(i);
        for (std::size_t j = i; j < n; ++j) {
            const double* hj = h.row(j);
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += hi[k] * hj[k];
            out(i, j) = dot;
            out(j, i) = dot;
        }
    }
    return out;
}

Matrix gram_cols(const Matrix& h) {
    const std::size_t n = h.rows();
    const std::size_t d = h.cols();
    Matrix out(d, d);
    for (std::size_t r = 0; r < n; ++r) {
        const double* hr = h.row(r);
        for (std::size_t i = 0; i < d; ++i) {
            const double v = hr[i];
            if (v == 0.0) continue;
            for (std::size_t j = i; j < d; ++j) out(i, j) += v * hr[j];
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
    }
    return out;
}

Matrix softmax_rows(Matrix m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* r = m.row(i);
        double mx = r[0];
        for (std::size_t j = 1; j < m.cols(); ++j) mx = std::max(mx, r[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            r[j] = std::exp(r[j] - mx);
            sum += r[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < m.cols(); ++j) r[j] *= inv;
    }
    return m;
}

Matrix softmax_cols(Matrix m) {
    const std::size_t n = m.rows();
    const std::size_t c = m.cols();
    std::vector<double> mx(c, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = m.row(i);
        for (std::size_t j = 0; j < c; ++j) mx[j] = std::max(mx[j], r[j]);
    }
    std::vector<double> sum(c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* r = m.row(i);
        for (std::size_t j = 0; j < c; ++j) {
            r[j] = std::exp(r[j] - mx[j]);
            sum[j] += r[j];
        }
    }
    for (std::size_t j = 0; j < c; ++j) sum[j] = 1.0 / sum[j];
    for (std::size_t i = 0; i < n; ++i) {
        double* r = m.row(i);
        for (std::size_t j = 0; j < c; ++j) r[j] *= sum[j];
    }
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.entries().size(); ++i) {
        m = std::max(m, std::abs(a.entries()[i] - b.entries()[i]));
    }
    return m;
}

}  // namespace contranorm
