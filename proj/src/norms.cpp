#include "contranorm/norms.hpp"

#include <cmath>
#include <string>

namespace contranorm {

void NormalizerConfig::validate(std::size_t feature_dim) const {
    if (!(tau > 0.0)) throw std::invalid_argument("NormalizerConfig: tau must be positive");
    if (!(scale >= 0.0)) throw std::invalid_argument("NormalizerConfig: scale must be >= 0");
    if (!(layernorm_eps > 0.0)) {
        throw std::invalid_argument("NormalizerConfig: layernorm_eps must be positive");
    }
    if (!(pairnorm_scale > 0.0)) {
        throw std::invalid_argument("NormalizerConfig: pairnorm_scale must be positive");
    }
    if (!gamma.empty() && gamma.size() != feature_dim) {
        throw std::invalid_argument("NormalizerConfig: gamma length " +
                                    std::to_string(gamma.size()) + " != feature dim " +
                                    std::to_string(feature_dim));
    }
    if (!beta.empty() && beta.size() != feature_dim) {
        throw std::invalid_argument("NormalizerConfig: beta length " +
                                    std::to_string(beta.size()) + " != feature dim " +
                                    std::to_string(feature_dim));
    }
}

namespace {

// Similarity logits for the stop-gradient family: HHᵀ, divided by tau only
// when temper_logits is set.
Matrix sg_logits(const Matrix& h, const NormalizerConfig& cfg) {
    Matrix g = gram_rows(h);
    if (cfg.temper_logits) g = (1.0 / cfg.tau) * g;
    return g;
}

}  // namespace

Matrix layer_norm(const Matrix& h, const NormalizerConfig& cfg) {
    cfg.validate(h.cols());
    const std::size_t n = h.rows();
    const std::size_t d = h.cols();
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = h.row(i);
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += r[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = r[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + cfg.layernorm_eps);
        double* o = out.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double g = cfg.gamma.empty() ? 1.0 : cfg.gamma[j];
            const double b = cfg.beta.empty() ? 0.0 : cfg.beta[j];
            o[j] = g * ((r[j] - mean) * inv) + b;
        }
    }
    return out;
}

Matrix contranorm_full(const Matrix& h, const NormalizerConfig& cfg) {
    cfg.validate(h.cols());
    Matrix logits = (1.0 / cfg.tau) * gram_rows(h);
    Matrix mix = softmax_rows(logits);
    mix = mix + softmax_cols(std::move(logits));
    Matrix update = matmul(mix, h);
    const double step = cfg.scale / cfg.tau;
    return h - step * update;
}

Matrix contranorm_sg(const Matrix& h, const NormalizerConfig& cfg) {
    cfg.validate(h.cols());
    Matrix attn = softmax_rows(sg_logits(h, cfg));
    Matrix update = matmul(attn, h);
    const double step = cfg.scale / cfg.tau;
    return h - step * update;
}

Matrix contranorm_reg(const Matrix& h, const NormalizerConfig& cfg) {
    cfg.validate(h.cols());
    Matrix attn = softmax_rows(sg_logits(h, cfg));
    Matrix update = matmul(attn, h);
    const double step = cfg.scale / cfg.tau;
    return (1.0 + cfg.scale) * h - step * update;
}

Matrix contra_norm(const Matrix& h, const NormalizerConfig& cfg) {
    return layer_norm(contranorm_sg(h, cfg), cfg);
}

Matrix contranorm_dual(const Matrix& h, const NormalizerConfig& cfg) {
    cfg.validate(h.cols());
    Matrix corr = gram_cols(h);
    if (cfg.temper_logits) corr = (1.0 / cfg.tau) * corr;
    Matrix mix = softmax_rows(std::move(corr));
    const double step = cfg.scale / cfg.tau;

    // Row-fused equivalent of layer_norm(h - step * matmul(h, mix), cfg):
    // the d×d mix stays cache-resident and each row of h is touched once,
    // which keeps the layer memory-lean at large n. Accumulation order
    // matches matmul and layer_norm exactly.
    const std::size_t n = h.rows();
    const std::size_t d = h.cols();
    Matrix out(n, d);
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* hi = h.row(i);
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t k = 0; k < d; ++k) {
            const double v = hi[k];
            if (v == 0.0) continue;
            const double* mr = mix.row(k);
            for (std::size_t j = 0; j < d; ++j) row[j] += v * mr[j];
        }
        for (std::size_t j = 0; j < d; ++j) row[j] = hi[j] - step * row[j];

        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = row[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + cfg.layernorm_eps);
        double* o = out.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double g = cfg.gamma.empty() ? 1.0 : cfg.gamma[j];
            const double b = cfg.beta.empty() ? 0.0 : cfg.beta[j];
            o[j] = g * ((row[j] - mean) * inv) + b;
        }
    }
    return out;
}

Matrix pair_norm(const Matrix& h, const NormalizerConfig& cfg) {
    cfg.validate(h.cols());
    const std::size_t n = h.rows();
    const std::size_t d = h.cols();
    std::vector<double> col_mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = h.row(i);
        for (std::size_t j = 0; j < d; ++j) col_mean[j] += r[j];
    }
    for (std::size_t j = 0; j < d; ++j) col_mean[j] /= static_cast<double>(n);

    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = h.row(i);
        double* o = out.row(i);
        double norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            o[j] = r[j] - col_mean[j];
            norm += o[j] * o[j];
        }
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            for (std::size_t j = 0; j < d; ++j) o[j] = 0.0;
            continue;
        }
        const double rescale = cfg.pairnorm_scale / norm;
        for (std::size_t j = 0; j < d; ++j) o[j] *= rescale;
    }
    return out;
}

Matrix apply_norm(const Matrix& h, const NormalizerConfig& cfg) {
    switch (cfg.variant) {
        case NormVariant::None:
            return h;
        case NormVariant::LayerNorm:
            return layer_norm(h, cfg);
        case NormVariant::PairNorm:
            return pair_norm(h, cfg);
        case NormVariant::ContraNormFull:
            return contranorm_full(h, cfg);
        case NormVariant::ContraNormSG:
            return contranorm_sg(h, cfg);
        case NormVariant::ContraNormReg:
            return contranorm_reg(h, cfg);
        case NormVariant::ContraNorm:
            return contra_norm(h, cfg);
        case NormVariant::ContraNormD:
            return contranorm_dual(h, cfg);
    }
    throw std::invalid_argument("apply_norm: unknown variant");
}

}  // namespace contranorm
