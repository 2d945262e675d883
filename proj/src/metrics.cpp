#include "contranorm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace contranorm {

double variance(const Matrix& h) {
    const std::size_t n = h.rows();
    const std::size_t d = h.cols();
    std::vector<double> col_mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = h.row(i);
        for (std::size_t j = 0; j < d; ++j) col_mean[j] += r[j];
    }
    for (std::size_t j = 0; j < d; ++j) col_mean[j] /= static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = h.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double c = r[j] - col_mean[j];
            sum += c * c;
        }
    }
    return sum;
}

double effective_rank(const Spectrum& spectrum) {
    double total = 0.0;
    for (double s : spectrum.values) total += std::abs(s);
    if (!(total > 1e-300)) {
        throw degenerate_input_error("effective_rank: all-zero singular spectrum");
    }
    double entropy = 0.0;
    for (double s : spectrum.values) {
        const double p = std::abs(s) / total;
        if (p > 0.0) entropy -= p * std::log(p);
    }
    return std::exp(entropy);
}

double effective_rank(const Matrix& h) {
    return effective_rank(singular_values(h));
}

double uniformity_loss(const Matrix& h, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("uniformity_loss: tau must be positive");
    const std::size_t n = h.rows();
    Matrix sims = gram_rows(h);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = sims.row(i);
        double mx = r[0] / tau;
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, r[j] / tau);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += std::exp(r[j] / tau - mx);
        loss += std::log(sum) + mx;
    }
    return loss;
}

double vicreg_exp_loss(const Matrix& h) {
    return uniformity_loss(transpose(h), 1.0);
}

double dim_loss(const Matrix& h) {
    // trace(M²) = ‖M‖²_F for symmetric M = I - HHᵀ.
    Matrix m = gram_rows(h);
    double sum = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double v = (i == j ? 1.0 : 0.0) - r[j];
            sum += v * v;
        }
    }
    return sum / 4.0;
}

namespace {

// Mean cosine over unordered row pairs; norms must exceed 1e-12.
double mean_pairwise_row_cosine(const Matrix& m, const char* what) {
    const std::size_t n = m.rows();
    if (n < 2) {
        throw std::invalid_argument(std::string(what) + ": need at least 2 vectors");
    }
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = m.row(i);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) sum += r[j] * r[j];
        norms[i] = std::sqrt(sum);
        if (norms[i] <= 1e-12) {
            throw degenerate_input_error(std::string(what) + ": zero-norm vector at index " +
                                         std::to_string(i));
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* ri = m.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* rj = m.row(j);
            double dot = 0.0;
            for (std::size_t k = 0; k < m.cols(); ++k) dot += ri[k] * rj[k];
            total += dot / (norms[i] * norms[j]);
        }
    }
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return total / pairs;
}

}  // namespace

double feature_similarity(const Matrix& h) {
    return mean_pairwise_row_cosine(h, "feature_similarity");
}

double attention_similarity(const std::vector<Matrix>& heads) {
    if (heads.empty()) throw std::invalid_argument("attention_similarity: no heads");
    const std::size_t n = heads.front().rows();
    double total = 0.0;
    for (const Matrix& head : heads) {
        if (head.rows() != head.cols() || head.rows() != n) {
            throw std::invalid_argument("attention_similarity: heads must be square n x n");
        }
        // Columns of the head are the vectors being compared.
        total += mean_pairwise_row_cosine(transpose(head), "attention_similarity");
    }
    return total / static_cast<double>(heads.size());
}

LayerDiagnostics diagnostics(const Matrix& h, const std::vector<Matrix>* attention,
                             double tau, int layer_index) {
    LayerDiagnostics diag;
    diag.layer_index = layer_index;
    diag.variance = variance(h);
    diag.singular_values = singular_values(h);
    try {
        diag.effective_rank = effective_rank(diag.singular_values);
    } catch (const degenerate_input_error&) {
        diag.effective_rank.reset();
    }
    diag.uniformity_loss = uniformity_loss(h, tau);
    diag.vicreg_exp_loss = vicreg_exp_loss(h);
    diag.dim_loss = dim_loss(h);
    if (h.rows() >= 2) {
        try {
            diag.feature_similarity = feature_similarity(h);
        } catch (const degenerate_input_error&) {
            diag.feature_similarity.reset();
        }
    }
    if (attention != nullptr && !attention->empty()) {
        try {
            diag.attention_similarity = attention_similarity(*attention);
        } catch (const degenerate_input_error&) {
            diag.attention_similarity.reset();
        }
    }
    return diag;
}

}  // namespace contranorm
