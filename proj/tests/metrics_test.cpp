#include <cmath>
#include <iostream>
#include <vector>

#include "contranorm/metrics.hpp"
#include "contranorm/rng.hpp"
#include "test_support.hpp"

using namespace contranorm;
using testutil::check;
using testutil::check_near;
using testutil::check_throws;

namespace {

void test_variance() {
    Matrix identical = Matrix::filled(4, 3, 2.0);
    check_near(variance(identical), 0.0, 1e-15, "identical rows have zero variance");

    check_near(variance(Matrix::identity(2)), 1.0, 1e-12, "variance of I2 is 1");

    Rng rng(201);
    Matrix h = gaussian_matrix(5, 4, rng);
    const double c = 3.7;
    check_near(variance(c * h), c * c * variance(h), 1e-9 * (1.0 + variance(h)),
               "variance is quadratically homogeneous");

    // Identity with the explicit projector formulation (I - eeᵀ)H.
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 2 + rng.integer(7);  // up to 8
        Matrix x = gaussian_matrix(n, 3, rng);
        Matrix projector(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                projector(i, j) = (i == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(n);
            }
        }
        Matrix centered = matmul(projector, x);
        double frob2 = 0.0;
        for (double v : centered.entries()) frob2 += v * v;
        check_near(variance(x), frob2, 1e-9 * (1.0 + frob2),
                   "variance equals the projector Frobenius norm");
    }
}

void test_effective_rank() {
    check_near(effective_rank(Spectrum{{1.0, 1.0}}), 2.0, 1e-12,
               "uniform two-value spectrum has erank 2");
    check_near(effective_rank(Matrix::identity(2)), 2.0, 1e-9, "erank of I2");

    Matrix rank1 = matmul(Matrix{{1.0}, {2.0}, {-1.0}}, Matrix{{0.5, 1.5}});
    check_near(effective_rank(rank1), 1.0, 1e-6, "rank-1 matrix has erank 1");

    check_near(effective_rank(Spectrum{{1.0, 0.5}}), 1.8899, 1e-3,
               "erank of the (1, 0.5) spectrum");

    Rng rng(211);
    Matrix h = gaussian_matrix(6, 4, rng);
    check_near(effective_rank(2.5 * h), effective_rank(h), 1e-9, "erank is scale invariant");
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.integer(6);
        const std::size_t d = 1 + rng.integer(6);
        Matrix m = gaussian_matrix(n, d, rng);
        const double er = effective_rank(m);
        check(er >= 1.0 - 1e-12 && er <= static_cast<double>(std::min(n, d)) + 1e-9,
              "erank bounded by [1, min(n, d)]");
    }

    check_throws<degenerate_input_error>([] { effective_rank(Spectrum{{0.0, 0.0}}); },
                                         "all-zero spectrum rejected");
    check_throws<degenerate_input_error>([] { effective_rank(Matrix(3, 2)); },
                                         "zero matrix rejected");
}

void test_uniformity_loss() {
    const std::size_t n = 5, d = 3;
    check_near(uniformity_loss(Matrix(n, d), 1.0), n * std::log(static_cast<double>(n)),
               1e-12, "zero matrix gives n ln n");

    Matrix ortho{{1.0, 0.0}, {0.0, 1.0}};
    check_near(uniformity_loss(ortho, 1.0), 2.0 * std::log(std::exp(1.0) + 1.0), 1e-9,
               "two orthonormal rows");

    // Scalar oracle for antipodal unit rows: loss(tau) = 2 log(2 cosh(1/tau)),
    // strictly decreasing in tau.
    Matrix antipodal{{1.0, 0.0}, {-1.0, 0.0}};
    double previous = 0.0;
    bool first = true;
    for (double tau : {0.5, 1.0, 2.0}) {
        const double loss = uniformity_loss(antipodal, tau);
        check_near(loss, 2.0 * std::log(2.0 * std::cosh(1.0 / tau)), 1e-12,
                   "antipodal closed form");
        if (!first) check(loss < previous, "loss decreases as tau grows");
        previous = loss;
        first = false;
    }

    check_throws<std::invalid_argument>([] { uniformity_loss(Matrix(2, 2), 0.0); },
                                        "tau <= 0 rejected");
}

void test_collapse_raises_uniformity() {
    // Replacing two distinct rows by their common mean raises the pair's
    // mutual-similarity term: m·m - h_i·h_j = ||h_i - h_j||²/4 > 0.
    Rng rng(221);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.integer(6);
        const std::size_t d = 1 + rng.integer(6);
        Matrix h = gaussian_matrix(n, d, rng);
        double pair_sim = 0.0, mean_sim = 0.0, gap = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double m = 0.5 * (h(0, j) + h(1, j));
            pair_sim += h(0, j) * h(1, j);
            mean_sim += m * m;
            gap += (h(0, j) - h(1, j)) * (h(0, j) - h(1, j));
        }
        if (gap < 1e-12) continue;  // effectively identical rows
        check(mean_sim > pair_sim, "merged pair similarity strictly exceeds the original");
    }

    // Collapsing all unit-norm rows onto their common mean direction
    // strictly raises the loss (every cross term climbs to exp(1)).
    int tested = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 3 + rng.integer(5);
        const std::size_t d = 2 + rng.integer(5);
        Matrix h = gaussian_matrix(n, d, rng);
        std::vector<double> mean(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double norm = 0.0;
            for (std::size_t j = 0; j < d; ++j) norm += h(i, j) * h(i, j);
            norm = std::sqrt(norm);
            for (std::size_t j = 0; j < d; ++j) {
                h(i, j) /= norm;
                mean[j] += h(i, j) / static_cast<double>(n);
            }
        }
        double mean_norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean_norm += mean[j] * mean[j];
        mean_norm = std::sqrt(mean_norm);
        if (mean_norm < 1e-6) continue;  // mean direction undefined
        Matrix collapsed(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) collapsed(i, j) = mean[j] / mean_norm;
        }
        check(uniformity_loss(collapsed, 1.0) > uniformity_loss(h, 1.0),
              "complete collapse raises the uniformity loss");
        ++tested;
    }
    check(tested >= 150, "enough collapse instances were exercised");
}

void test_vicreg_exp_loss() {
    const std::size_t n = 4, d = 6;
    check_near(vicreg_exp_loss(Matrix(n, d)), d * std::log(static_cast<double>(d)), 1e-12,
               "zero matrix gives d ln d");

    Rng rng(231);
    Matrix h = gaussian_matrix(5, 3, rng);
    check(vicreg_exp_loss(h) == uniformity_loss(transpose(h), 1.0),
          "identical to the transposed uniformity loss");

    Matrix column = gaussian_matrix(6, 1, rng);
    double frob2 = 0.0;
    for (double v : column.entries()) frob2 += v * v;
    check_near(vicreg_exp_loss(column), frob2, 1e-9, "single column gives its squared norm");
}

void test_dim_loss() {
    Rng rng(241);
    Matrix q = orthogonal_matrix(5, rng);
    Matrix ortho_rows(3, 5);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 5; ++j) ortho_rows(i, j) = q(i, j);
    }
    check_near(dim_loss(ortho_rows), 0.0, 1e-12, "orthonormal rows have zero dim loss");

    const std::size_t n = 6;
    check_near(dim_loss(Matrix(n, 3)), n / 4.0, 1e-15, "zero matrix gives n/4");

    // (I - HHᵀ)H is the negative gradient of the loss; finite differences
    // recover it with flipped sign.
    Matrix h = 0.5 * gaussian_matrix(4, 3, rng);
    Matrix direction = matmul(Matrix::identity(4) - gram_rows(h), h);
    Matrix probe = h;
    for (std::size_t i = 0; i < h.rows(); ++i) {
        for (std::size_t j = 0; j < h.cols(); ++j) {
            const double saved = probe(i, j);
            probe(i, j) = saved + 1e-6;
            const double up = dim_loss(probe);
            probe(i, j) = saved - 1e-6;
            const double down = dim_loss(probe);
            probe(i, j) = saved;
            const double numeric = (up - down) / 2e-6;
            check_near(numeric, -direction(i, j), 1e-6, "dim loss finite-difference gradient");
        }
    }
}

void test_feature_similarity() {
    Matrix identical = Matrix::filled(3, 2, 1.5);
    check_near(feature_similarity(identical), 1.0, 1e-12, "identical rows");

    check_near(feature_similarity(Matrix{{1.0, 0.0}, {0.0, 2.0}}), 0.0, 1e-15,
               "orthogonal rows");

    Matrix three{{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}};
    check_near(feature_similarity(three), -1.0 / 3.0, 1e-12, "three-row pair enumeration");

    check_throws<degenerate_input_error>(
        [] { feature_similarity(Matrix{{1.0, 0.0}, {0.0, 0.0}}); }, "zero row rejected");

    Rng rng(251);
    Matrix h = gaussian_matrix(5, 3, rng);
    Matrix rescaled = h;
    for (std::size_t i = 0; i < 5; ++i) {
        const double c = 0.2 + 2.0 * rng.uniform01();
        for (std::size_t j = 0; j < 3; ++j) rescaled(i, j) *= c;
    }
    check_near(feature_similarity(rescaled), feature_similarity(h), 1e-9,
               "invariant under per-row positive rescaling");
}

void test_attention_similarity() {
    const std::size_t n = 4;
    std::vector<Matrix> uniform{Matrix::filled(n, n, 1.0 / n)};
    check_near(attention_similarity(uniform), 1.0, 1e-12, "uniform head has similarity 1");

    std::vector<Matrix> identity{Matrix::identity(n)};
    check_near(attention_similarity(identity), 0.0, 1e-15, "identity head has similarity 0");

    std::vector<Matrix> both{Matrix::filled(n, n, 1.0 / n), Matrix::identity(n)};
    check_near(attention_similarity(both), 0.5, 1e-12, "heads average");

    std::vector<Matrix> mismatched{Matrix::identity(3), Matrix::identity(4)};
    check_throws<std::invalid_argument>([&] { attention_similarity(mismatched); },
                                        "head dimension mismatch rejected");
}

void test_diagnostics_bundle() {
    Rng rng(261);
    Matrix q = orthogonal_matrix(8, rng);
    Matrix ortho_rows(4, 8);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 8; ++j) ortho_rows(i, j) = q(i, j);
    }
    LayerDiagnostics diag = diagnostics(ortho_rows, nullptr, 1.0, 3);
    check(diag.layer_index == 3, "layer index recorded");
    check(diag.effective_rank.has_value(), "erank present");
    check_near(*diag.effective_rank, 4.0, 1e-6, "orthonormal rows have full erank");
    check(diag.feature_similarity.has_value(), "feature similarity present");
    check_near(*diag.feature_similarity, 0.0, 1e-9, "orthonormal rows are dissimilar");
    check(!diag.attention_similarity.has_value(), "no attention supplied, field absent");
    check(diag.singular_values.size() == 4, "spectrum length is min(n, d)");

    Matrix constant = Matrix::filled(4, 3, 0.8);
    LayerDiagnostics flat = diagnostics(constant, nullptr, 1.0, 0);
    check_near(flat.variance, 0.0, 1e-15, "constant rows have zero variance");
    check(flat.feature_similarity.has_value() && std::abs(*flat.feature_similarity - 1.0) <= 1e-12,
          "constant rows are fully similar");

    LayerDiagnostics zero = diagnostics(Matrix(3, 2), nullptr, 1.0, 0);
    check(!zero.effective_rank.has_value(), "zero matrix records absent erank");
    check(!zero.feature_similarity.has_value(), "zero matrix records absent similarity");
    check_near(zero.uniformity_loss, 3.0 * std::log(3.0), 1e-12, "losses still recorded");

    std::vector<Matrix> heads{Matrix::filled(4, 4, 0.25)};
    LayerDiagnostics with_attn = diagnostics(constant, &heads, 1.0, 1);
    check(with_attn.attention_similarity.has_value() &&
              std::abs(*with_attn.attention_similarity - 1.0) <= 1e-12,
          "attention similarity recorded when heads supplied");
}

}  // namespace

int main() {
    test_variance();
    test_effective_rank();
    test_uniformity_loss();
    test_collapse_raises_uniformity();
    test_vicreg_exp_loss();
    test_dim_loss();
    test_feature_similarity();
    test_attention_similarity();
    test_diagnostics_bundle();
    std::cout << "metrics tests passed\n";
    return 0;
}
