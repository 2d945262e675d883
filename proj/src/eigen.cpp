#include "contranorm/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace contranorm {

bool Spectrum::is_descending() const noexcept {
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[i - 1]) return false;
    }
    return true;
}

double Spectrum::sum() const noexcept {
    return std::accumulate(values.begin(), values.end(), 0.0);
}

namespace {

double off_diagonal_norm(const Matrix& a) {
    double sum = 0.0;
    for (std::size_t p = 0; p < a.rows(); ++p) {
        for (std::size_t q = p + 1; q < a.cols(); ++q) {
            sum += 2.0 * a(p, q) * a(p, q);
        }
    }
    return std::sqrt(sum);
}

}  // namespace

EigenDecomposition sym_eigen(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("sym_eigen: matrix must be square");
    }
    const std::size_t n = m.rows();
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            asym = std::max(asym, std::abs(m(i, j) - m(j, i)));
        }
    }
    if (asym > 1e-10) {
        throw std::invalid_argument("sym_eigen: matrix not symmetric (max asymmetry " +
                                    std::to_string(asym) + ")");
    }

    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
    }
    Matrix v = Matrix::identity(n);

    // Tolerance scales with the input so large matrices are not held to an
    // unreachable absolute target; for unit-scale input it is the plain 1e-12.
    const double tol = 1e-12 * std::max(1.0, a.frobenius_norm());
    constexpr int kMaxSweeps = 100;

    double off = off_diagonal_norm(a);
    int sweep = 0;
    while (off > tol && sweep < kMaxSweeps) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
        off = off_diagonal_norm(a);
        ++sweep;
    }
    if (off > tol) {
        throw numerical_error("sym_eigen: Jacobi did not converge in 100 sweeps", off);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

    Spectrum eigenvalues;
    eigenvalues.values.resize(n);
    Matrix vectors(n, n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        eigenvalues.values[idx] = diag[order[idx]];
        for (std::size_t k = 0; k < n; ++k) vectors(k, idx) = v(k, order[idx]);
    }
    return {std::move(eigenvalues), std::move(vectors)};
}

Spectrum singular_values(const Matrix& m) {
    const bool rows_smaller = m.rows() <= m.cols();
    Matrix gram = rows_smaller ? gram_rows(m) : gram_cols(m);
    EigenDecomposition eig = sym_eigen(gram);
    Spectrum out;
    out.values.resize(eig.eigenvalues.size());
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = std::sqrt(std::max(eig.eigenvalues[i], 0.0));
    }
    return out;
}

}  // namespace contranorm
