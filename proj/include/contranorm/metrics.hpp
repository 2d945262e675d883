#ifndef CONTRANORM_METRICS_HPP
#define CONTRANORM_METRICS_HPP

#include <optional>
#include <vector>

#include "contranorm/eigen.hpp"
#include "contranorm/matrix.hpp"

namespace contranorm {

/// One layer's collapse diagnostics. Optional fields stay empty when the
/// quantity is undefined for the input (all-zero spectrum, zero-norm rows,
/// no attention operator) rather than being zero-filled.
struct LayerDiagnostics {
    int layer_index = 0;
    double variance = 0.0;
    std::optional<double> effective_rank;
    double uniformity_loss = 0.0;
    double vicreg_exp_loss = 0.0;
    double dim_loss = 0.0;
    std::optional<double> feature_similarity;
    std::optional<double> attention_similarity;
    Spectrum singular_values;
};

/// Squared Frobenius norm of the row-centered matrix: sum over columns of
/// the squared deviations from the column mean. Equals ‖(I - eeᵀ)H‖²_F.
double variance(const Matrix& h);

/// exp(Shannon entropy) of the L1-normalized singular spectrum, in
/// [1, min(n, d)]. Natural log throughout; zero singular values contribute
/// nothing. Throws degenerate_input_error on an all-zero spectrum.
double effective_rank(const Spectrum& spectrum);
double effective_rank(const Matrix& h);

/// sum_i log sum_j exp(h_iᵀh_j / tau), self-term included, computed with a
/// per-row log-sum-exp shift.
double uniformity_loss(const Matrix& h, double tau);

/// Column-wise decorrelation loss: uniformity_loss(Hᵀ, 1).
double vicreg_exp_loss(const Matrix& h);

/// trace((I - HHᵀ)²) / 4.
double dim_loss(const Matrix& h);

/// Mean pairwise cosine similarity over unordered row pairs. Requires
/// n >= 2 and all row norms above 1e-12 (throws degenerate_input_error
/// otherwise: a silent guard would hide exactly the collapse being measured).
double feature_similarity(const Matrix& h);

/// Mean pairwise cosine similarity over unordered column pairs of each
/// attention head, averaged over heads. Heads must be square and share n.
double attention_similarity(const std::vector<Matrix>& heads);

/// Bundle of all metrics for one layer. Degenerate effective_rank or
/// feature_similarity are recorded as absent instead of aborting.
LayerDiagnostics diagnostics(const Matrix& h, const std::vector<Matrix>* attention,
                             double tau, int layer_index);

}  // namespace contranorm

#endif  // CONTRANORM_METRICS_HPP
