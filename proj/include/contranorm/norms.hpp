#ifndef CONTRANORM_NORMS_HPP
#define CONTRANORM_NORMS_HPP

#include <cstddef>
#include <vector>

#include "contranorm/matrix.hpp"

namespace contranorm {

enum class NormVariant {
    None,
    LayerNorm,
    PairNorm,
    ContraNormFull,  // both stochastic factors of the uniformity-loss gradient
    ContraNormSG,    // stop-gradient: row-softmax factor only
    ContraNormReg,   // feature-norm regularized: (1+s)H - (s/tau) softmax(HHᵀ)H
    ContraNorm,      // stop-gradient update followed by LayerNorm (the default)
    ContraNormD,     // dual form on the d×d feature-correlation matrix
};

/// Configuration for every normalization layer. gamma/beta empty means the
/// identity affine map (all ones / all zeros).
struct NormalizerConfig {
    NormVariant variant = NormVariant::None;
    double scale = 0.0;               // s, step size of the descent update
    double tau = 1.0;                 // temperature
    std::vector<double> gamma;        // per-dimension LayerNorm scale
    std::vector<double> beta;         // per-dimension LayerNorm shift
    double layernorm_eps = 1e-5;
    double pairnorm_scale = 1.0;
    // The printed stop-gradient / regularized / dual updates use raw HHᵀ
    // logits with the temperature only in the s/tau prefactor. Turning this
    // on divides the logits by tau as well, matching the full-gradient form.
    bool temper_logits = false;

    void validate(std::size_t feature_dim) const;
};

/// Per-row standardization: (h_i - mean) / sqrt(population variance + eps),
/// then gamma * . + beta.
Matrix layer_norm(const Matrix& h, const NormalizerConfig& cfg);

/// Full gradient-descent step on the uniformity loss:
/// H - (s/tau) (softmax_rows(HHᵀ/tau) + softmax_cols(HHᵀ/tau)) H.
Matrix contranorm_full(const Matrix& h, const NormalizerConfig& cfg);

/// Stop-gradient step: H - (s/tau) softmax_rows(HHᵀ) H.
Matrix contranorm_sg(const Matrix& h, const NormalizerConfig& cfg);

/// Feature-norm regularized step: (1+s) H - (s/tau) softmax_rows(HHᵀ) H.
Matrix contranorm_reg(const Matrix& h, const NormalizerConfig& cfg);

/// The default layer: layer_norm(contranorm_sg(h)).
Matrix contra_norm(const Matrix& h, const NormalizerConfig& cfg);

/// Dual layer on the feature-correlation matrix:
/// layer_norm(H - (s/tau) H softmax_rows(HᵀH)). O(n d²) instead of O(n² d).
Matrix contranorm_dual(const Matrix& h, const NormalizerConfig& cfg);

/// Scale-individual PairNorm: center columns, then rescale every row to
/// norm pairnorm_scale. Rows whose centered norm is below 1e-12 stay zero.
Matrix pair_norm(const Matrix& h, const NormalizerConfig& cfg);

/// Dispatch on cfg.variant; None returns the input unchanged.
Matrix apply_norm(const Matrix& h, const NormalizerConfig& cfg);

}  // namespace contranorm

#endif  // CONTRANORM_NORMS_HPP
