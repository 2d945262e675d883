#ifndef CONTRANORM_EIGEN_HPP
#define CONTRANORM_EIGEN_HPP

#include <cstddef>
#include <vector>

#include "contranorm/matrix.hpp"

namespace contranorm {

/// A spectrum sorted in descending order: singular values (all >= 0) or
/// eigenvalues (signed).
struct Spectrum {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const noexcept { return values[i]; }
    bool is_descending() const noexcept;
    double sum() const noexcept;
};

struct EigenDecomposition {
    Spectrum eigenvalues;   // descending
    Matrix eigenvectors;    // column i pairs with eigenvalues[i]
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations (upper triangle,
/// row-major sweep order). The input must be square and symmetric within
/// 1e-10; it is symmetrized as (M+Mᵀ)/2 before solving. Convergence when
/// the off-diagonal Frobenius norm drops below 1e-12 relative to the input
/// scale, within 100 sweeps; otherwise throws numerical_error with the
/// remaining off-diagonal norm.
EigenDecomposition sym_eigen(const Matrix& m);

/// Singular values via eigendecomposition of the smaller Gram matrix
/// (HHᵀ if n <= d, else HᵀH); sigma_i = sqrt(max(lambda_i, 0)).
/// Returns min(n, d) values in descending order.
Spectrum singular_values(const Matrix& m);

}  // namespace contranorm

#endif  // CONTRANORM_EIGEN_HPP
