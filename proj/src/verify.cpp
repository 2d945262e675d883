#include "contranorm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "contranorm/metrics.hpp"
#include "contranorm/rng.hpp"

namespace contranorm {

namespace {

void check_row_stochastic(const Matrix& attn, const char* what) {
    if (attn.rows() != attn.cols()) {
        throw std::invalid_argument(std::string(what) + ": attention matrix must be square");
    }
    for (std::size_t i = 0; i < attn.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < attn.cols(); ++j) {
            if (attn(i, j) < -1e-12) {
                throw std::invalid_argument(std::string(what) + ": negative attention entry");
            }
            sum += attn(i, j);
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw std::invalid_argument(std::string(what) + ": row " + std::to_string(i) +
                                        " sums to " + std::to_string(sum));
        }
    }
}

// I - eeᵀ with e = (1,...,1)ᵀ/sqrt(n): the centering projector.
Matrix centering_projector(std::size_t n) {
    Matrix c(n, n);
    const double off = -1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) c(i, j) = (i == j ? 1.0 + off : off);
    }
    return c;
}

}  // namespace

Matrix build_P(const Matrix& attn) {
    check_row_stochastic(attn, "build_P");
    const std::size_t n = attn.rows();
    Matrix residual = Matrix::identity(n) - attn;  // I - Ā
    Matrix first = matmul(centering_projector(n), residual);
    Matrix p = first + transpose(first);
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            asym = std::max(asym, std::abs(p(i, j) - p(j, i)));
        }
    }
    if (asym > 1e-12) {
        throw numerical_error("build_P: result not symmetric", asym);
    }
    return p;
}

PropositionReport check_prop1(const Matrix& h, double s) {
    if (!(s > 0.0)) throw std::invalid_argument("check_prop1: s must be positive");
    PropositionReport rep;
    rep.n = h.rows();
    rep.d = h.cols();
    rep.s = s;

    Matrix attn = softmax_rows(gram_rows(h));
    Matrix p = build_P(attn);
    EigenDecomposition eig = sym_eigen(p);
    const double sigma_min = eig.eigenvalues[eig.eigenvalues.size() - 1];
    rep.sigma = sigma_min;

    Matrix h_t = (1.0 + s) * h - s * matmul(attn, h);
    rep.lhs = variance(h_t);
    const double var_b = variance(h);
    rep.rhs = (1.0 + s * sigma_min) * var_b;
    const double tol = 1e-9 * (1.0 + std::abs(rep.rhs));
    rep.slack = rep.lhs - rep.rhs + tol;
    rep.claim_held = rep.slack >= 0.0;
    rep.condition_held = sigma_min >= 0.0;
    if (s * sigma_min < 1.0) {
        rep.alt_rhs = var_b / (1.0 - s * sigma_min);
    }
    return rep;
}

PropositionReport check_prop2(const Matrix& h, double s) {
    if (!(s > 0.0)) throw std::invalid_argument("check_prop2: s must be positive");
    PropositionReport rep;
    rep.n = h.rows();
    rep.d = h.cols();
    rep.s = s;

    Spectrum spec = singular_values(h);
    const double sigma_max = spec[0];
    if (!(sigma_max > 1e-300)) {
        throw degenerate_input_error("check_prop2: all-zero representation matrix");
    }
    rep.sigma = sigma_max;
    rep.boundary = (spec[0] - spec[spec.size() - 1]) <= 1e-12 * std::max(1.0, spec[0]);
    rep.condition_held = 1.0 + (1.0 - sigma_max * sigma_max) * s > 0.0;

    Matrix h_t = (1.0 + s) * h - s * matmul(gram_rows(h), h);
    rep.rhs = effective_rank(spec);
    rep.lhs = effective_rank(h_t);
    rep.slack = rep.lhs - rep.rhs + 1e-10;
    rep.claim_held = rep.slack > 0.0;
    return rep;
}

EigenMapReport check_eigen_map(const Matrix& h, double s) {
    if (!(s >= 0.0)) throw std::invalid_argument("check_eigen_map: s must be >= 0");
    EigenMapReport rep;
    rep.s = s;

    Matrix gram = gram_rows(h);
    EigenDecomposition eig = sym_eigen(gram);
    Matrix h_t = (1.0 + s) * h - s * matmul(gram, h);
    EigenDecomposition eig_t = sym_eigen(gram_rows(h_t));

    std::vector<double> mapped(eig.eigenvalues.size());
    for (std::size_t i = 0; i < mapped.size(); ++i) {
        const double lambda = eig.eigenvalues[i];
        const double factor = lambda * s - (1.0 + s);
        mapped[i] = factor * factor * lambda;
    }
    std::sort(mapped.begin(), mapped.end(), std::greater<double>());

    double max_diff = 0.0;
    for (std::size_t i = 0; i < mapped.size(); ++i) {
        max_diff = std::max(max_diff, std::abs(mapped[i] - eig_t.eigenvalues[i]));
    }
    rep.max_abs_diff = max_diff;
    rep.slack = 1e-8 - max_diff;
    rep.matched = rep.slack >= 0.0;
    return rep;
}

Lemma1Report check_lemma1(const Matrix& x0, const Matrix& p, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("check_lemma1: lambda must be positive");
    if (p.rows() != p.cols() || p.rows() != x0.rows()) {
        throw std::invalid_argument("check_lemma1: P must be square and match X0 rows");
    }
    Lemma1Report rep;
    rep.lambda = lambda;

    const std::size_t n = x0.rows();
    Matrix center = centering_projector(n);
    Matrix quad = matmul(transpose(p), matmul(center, p));
    quad = 0.5 * (quad + transpose(quad));  // exact symmetry before scaling by lambda
    Matrix sigma = center - lambda * quad;
    EigenDecomposition eig = sym_eigen(sigma);
    rep.top_eigenvalue = eig.eigenvalues[0];
    rep.condition_held = rep.top_eigenvalue <= 1e-12;

    rep.lhs = variance(matmul(p, x0));
    rep.rhs = variance(x0) / lambda;
    rep.slack = rep.lhs - rep.rhs + 1e-9;
    rep.claim_held = rep.slack >= 0.0;
    return rep;
}

Lemma3Report check_lemma3(const Spectrum& eigs_a, const Spectrum& eigs_b) {
    if (eigs_a.size() != eigs_b.size()) {
        throw std::invalid_argument("check_lemma3: spectra must have equal length");
    }
    Lemma3Report rep;
    std::vector<double> ratio(eigs_a.size());
    for (std::size_t i = 0; i < eigs_a.size(); ++i) {
        if (!(eigs_a[i] > 0.0)) {
            throw std::invalid_argument("check_lemma3: eigenvalues of AAᵀ must be positive");
        }
        if (eigs_b[i] < 0.0) {
            throw std::invalid_argument("check_lemma3: eigenvalues of BBᵀ must be >= 0");
        }
        ratio[i] = eigs_b[i] / eigs_a[i];
    }
    rep.ratio_increasing = true;
    for (std::size_t i = 1; i < ratio.size(); ++i) {
        if (ratio[i] < ratio[i - 1] * (1.0 - 1e-12)) {
            rep.ratio_increasing = false;
            break;
        }
    }

    auto erank_of_sqrt = [](const Spectrum& eigs) {
        Spectrum sv;
        sv.values.resize(eigs.size());
        for (std::size_t i = 0; i < eigs.size(); ++i) {
            sv.values[i] = std::sqrt(std::max(eigs[i], 0.0));
        }
        std::sort(sv.values.begin(), sv.values.end(), std::greater<double>());
        return effective_rank(sv);
    };
    rep.erank_a = erank_of_sqrt(eigs_a);
    rep.erank_b = erank_of_sqrt(eigs_b);
    rep.slack = rep.erank_b - rep.erank_a + 1e-10;
    rep.claim_held = !rep.ratio_increasing || rep.slack >= 0.0;
    return rep;
}

DiagDominanceReport check_diag_dominance(const Matrix& attn) {
    check_row_stochastic(attn, "check_diag_dominance");
    DiagDominanceReport rep;
    const std::size_t n = attn.rows();

    std::vector<double> col_sum(n, 0.0);
    std::vector<double> col_min(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        double mn = attn(0, j);
        for (std::size_t i = 0; i < n; ++i) {
            sum += attn(i, j);
            mn = std::min(mn, attn(i, j));
        }
        col_sum[j] = sum;
        col_min[j] = mn;
    }
    rep.condition_held = true;
    for (std::size_t j = 0; j < n; ++j) {
        if (col_sum[j] > 1.0 + static_cast<double>(n) * col_min[j] + 1e-12) {
            rep.condition_held = false;
            break;
        }
    }

    EigenDecomposition eig = sym_eigen(build_P(attn));
    rep.sigma_min = eig.eigenvalues[eig.eigenvalues.size() - 1];
    rep.slack = rep.sigma_min + 1e-9;
    rep.claim_held = !rep.condition_held || rep.slack >= 0.0;
    return rep;
}

GradientReport gradient_check(const Matrix& h, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("gradient_check: tau must be positive");
    GradientReport rep;
    rep.n = h.rows();
    rep.d = h.cols();
    rep.tau = tau;

    const double rms =
        h.frobenius_norm() / std::sqrt(static_cast<double>(h.rows() * h.cols()));
    const Matrix hs = rms > 1e-300 ? (1.0 / rms) * h : h;

    Matrix logits = (1.0 / tau) * gram_rows(hs);
    Matrix mix = softmax_rows(logits);
    mix = mix + softmax_cols(std::move(logits));
    Matrix analytic = (1.0 / tau) * matmul(mix, hs);

    constexpr double kStep = 1e-6;
    double max_rel = 0.0;
    Matrix probe = hs;
    for (std::size_t i = 0; i < hs.rows(); ++i) {
        for (std::size_t j = 0; j < hs.cols(); ++j) {
            const double saved = probe(i, j);
            probe(i, j) = saved + kStep;
            const double up = uniformity_loss(probe, tau);
            probe(i, j) = saved - kStep;
            const double down = uniformity_loss(probe, tau);
            probe(i, j) = saved;
            const double numeric = (up - down) / (2.0 * kStep);
            const double rel =
                std::abs(numeric - analytic(i, j)) / std::max(1.0, std::abs(analytic(i, j)));
            max_rel = std::max(max_rel, rel);
        }
    }
    rep.max_rel_error = max_rel;
    rep.passed = max_rel <= 1e-5;
    return rep;
}

// ---------------------------------------------------------------------------
// Randomized suites
// ---------------------------------------------------------------------------

namespace {

struct InstanceOutcome {
    bool condition_met = false;
    bool boundary = false;
    bool violated = false;
    FailureRecord failure;
};

FailureRecord make_failure(std::uint64_t iseed, std::size_t n, std::size_t d, double s,
                           double slack, std::string description, const Matrix* h) {
    FailureRecord f;
    f.instance_seed = iseed;
    f.n = n;
    f.d = d;
    f.s = s;
    f.slack = slack;
    f.description = std::move(description);
    if (h != nullptr) f.h_entries = h->entries();
    return f;
}

InstanceOutcome prop1_instance(std::uint64_t iseed, double shift) {
    Rng rng(iseed);
    const std::size_t n = 2 + rng.integer(15);  // 2..16
    const std::size_t d = 1 + rng.integer(8);   // 1..8
    Matrix h = gaussian_matrix(n, d, rng);
    const double s_grid[] = {0.1, 0.5, 1.0};
    const double s = s_grid[rng.integer(3)];

    PropositionReport rep = check_prop1(h, s);
    InstanceOutcome out;
    out.condition_met = rep.condition_held;
    if (rep.slack + shift < 0.0) {
        out.violated = true;
        out.failure = make_failure(iseed, n, d, s, rep.slack + shift,
                                   "variance bound violated: Var(H_t)=" + std::to_string(rep.lhs) +
                                       " < (1+s*sigma_min)*Var(H_b)=" + std::to_string(rep.rhs),
                                   &h);
    }
    return out;
}

InstanceOutcome prop2_instance(std::uint64_t iseed, double shift) {
    Rng rng(iseed);
    const std::size_t n = 2 + rng.integer(9);  // 2..10
    const std::size_t d = 1 + rng.integer(8);  // 1..8
    Matrix h = gaussian_matrix(n, d, rng);
    const double sigma_max = singular_values(h)[0];
    InstanceOutcome out;
    if (!(sigma_max > 1e-12)) {
        out.boundary = true;
        return out;
    }
    h = (1.0 / (sigma_max * (1.0 + rng.uniform01()))) * h;  // sigma_max in (0.5, 1]
    const double s = 0.001 + 0.998 * rng.uniform01();       // s in (0, 1)

    PropositionReport rep = check_prop2(h, s);
    out.condition_met = rep.condition_held;
    out.boundary = rep.boundary;
    if (out.boundary) return out;

    if (rep.condition_held && rep.slack + shift <= 0.0) {
        out.violated = true;
        out.failure = make_failure(iseed, h.rows(), h.cols(), s, rep.slack + shift,
                                   "erank did not increase: erank(H_t)=" + std::to_string(rep.lhs) +
                                       " vs erank(H_b)=" + std::to_string(rep.rhs),
                                   &h);
        return out;
    }
    EigenMapReport em = check_eigen_map(h, s);
    if (em.slack + shift < 0.0) {
        out.violated = true;
        out.failure = make_failure(
            iseed, h.rows(), h.cols(), s, em.slack + shift,
            "eigenvalue map mismatch: max |diff|=" + std::to_string(em.max_abs_diff), &h);
    }
    return out;
}

InstanceOutcome eigen_map_instance(std::uint64_t iseed, double shift) {
    Rng rng(iseed);
    const std::size_t n = 2 + rng.integer(9);
    const std::size_t d = 1 + rng.integer(8);
    Matrix h = gaussian_matrix(n, d, rng);
    const double sigma_max = singular_values(h)[0];
    InstanceOutcome out;
    if (!(sigma_max > 1e-12)) {
        out.boundary = true;
        return out;
    }
    h = (1.0 / (sigma_max * (1.0 + rng.uniform01()))) * h;
    const double s_grid[] = {0.0, 0.1, 0.5, 1.0};
    const double s = s_grid[rng.integer(4)];

    EigenMapReport em = check_eigen_map(h, s);
    out.condition_met = true;
    if (em.slack + shift < 0.0) {
        out.violated = true;
        out.failure = make_failure(
            iseed, h.rows(), h.cols(), s, em.slack + shift,
            "eigenvalue map mismatch: max |diff|=" + std::to_string(em.max_abs_diff), &h);
    }
    return out;
}

InstanceOutcome lemma1_instance(std::uint64_t iseed, double shift) {
    Rng rng(iseed);
    const std::size_t n = 2 + rng.integer(7);  // 2..8
    const std::size_t d = 1 + rng.integer(6);  // 1..7
    Matrix x0 = gaussian_matrix(n, d, rng);
    // The eigenvalue condition can only hold when P preserves the all-ones
    // direction (row-stochastic updates and their affine combinations do):
    // otherwise Pᵀ(I - eeᵀ)P has a null vector on which I - eeᵀ is positive.
    // Project a Gaussian draw onto that family: P·1 = c·1.
    Matrix p = (1.0 / std::sqrt(static_cast<double>(n))) * gaussian_matrix(n, n, rng);
    const double c = 0.5 + rng.uniform01();
    for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) row_sum += p(i, j);
        const double correction = (c - row_sum) / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) p(i, j) += correction;
    }

    InstanceOutcome out;
    // The smallest lambda on a doubling grid for which the eigenvalue
    // condition holds; the top eigenvalue is non-increasing in lambda.
    double lambda = 0.25;
    bool found = false;
    for (int attempt = 0; attempt < 40 && !found; ++attempt, lambda *= 2.0) {
        Lemma1Report rep = check_lemma1(x0, p, lambda);
        if (rep.condition_held) {
            found = true;
            out.condition_met = true;
            if (rep.slack + shift < 0.0) {
                out.violated = true;
                std::vector<double> packed = x0.entries();
                packed.insert(packed.end(), p.entries().begin(), p.entries().end());
                out.failure = make_failure(iseed, n, d, lambda, rep.slack + shift,
                                           "variance survival violated at lambda=" +
                                               std::to_string(lambda) + " (x0 rows then P rows)",
                                           nullptr);
                out.failure.h_entries = std::move(packed);
            }
        }
    }
    if (!found) out.boundary = true;  // no admissible lambda on the grid; skipped
    return out;
}

InstanceOutcome lemma3_instance(std::uint64_t iseed, double shift) {
    Rng rng(iseed);
    InstanceOutcome out;
    const std::size_t q = 2 + rng.integer(7);  // 2..8
    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<double> lam(q), ratio(q);
        for (std::size_t i = 0; i < q; ++i) lam[i] = std::exp(rng.normal());
        for (std::size_t i = 0; i < q; ++i) ratio[i] = std::exp(0.5 * rng.normal());
        std::sort(lam.begin(), lam.end(), std::greater<double>());
        std::sort(ratio.begin(), ratio.end());
        std::vector<double> sig(q);
        bool descending = true;
        for (std::size_t i = 0; i < q; ++i) {
            sig[i] = lam[i] * ratio[i];
            if (i > 0 && sig[i] > sig[i - 1]) descending = false;
        }
        if (!descending) continue;

        Lemma3Report rep = check_lemma3(Spectrum{lam}, Spectrum{sig});
        out.condition_met = rep.ratio_increasing;
        if (rep.ratio_increasing && rep.slack + shift < 0.0) {
            out.violated = true;
            std::vector<double> packed = lam;
            packed.insert(packed.end(), sig.begin(), sig.end());
            out.failure = make_failure(iseed, q, q, 0.0, rep.slack + shift,
                                       "erank monotonicity violated (lambda list then sigma list)",
                                       nullptr);
            out.failure.h_entries = std::move(packed);
        }
        return out;
    }
    out.boundary = true;  // could not draw a descending sigma list; skipped
    return out;
}

InstanceOutcome diag_dominance_instance(std::uint64_t iseed, double shift) {
    Rng rng(iseed);
    const std::size_t n = 2 + rng.integer(15);  // 2..16
    Matrix logits = gaussian_matrix(n, n, rng);
    InstanceOutcome out;
    double eps = 0.5 * rng.uniform01() + 0.1;
    for (int attempt = 0; attempt < 60; ++attempt, eps *= 0.5) {
        Matrix attn = softmax_rows(eps * logits);
        DiagDominanceReport rep = check_diag_dominance(attn);
        if (!rep.condition_held) continue;
        out.condition_met = true;
        if (rep.slack + shift < 0.0) {
            out.violated = true;
            out.failure = make_failure(iseed, n, n, eps, rep.slack + shift,
                                       "sigma_min(P) negative under the sufficient condition: " +
                                           std::to_string(rep.sigma_min),
                                       &attn);
        }
        return out;
    }
    out.boundary = true;
    return out;
}

InstanceOutcome run_instance(PropSuite which, std::uint64_t iseed, double shift) {
    switch (which) {
        case PropSuite::Prop1:
            return prop1_instance(iseed, shift);
        case PropSuite::Prop2:
            return prop2_instance(iseed, shift);
        case PropSuite::EigenMap:
            return eigen_map_instance(iseed, shift);
        case PropSuite::Lemma1:
            return lemma1_instance(iseed, shift);
        case PropSuite::Lemma3:
            return lemma3_instance(iseed, shift);
        case PropSuite::DiagDominance:
            return diag_dominance_instance(iseed, shift);
    }
    throw std::invalid_argument("run_suite: unknown suite");
}

}  // namespace

std::string suite_name(PropSuite which) {
    switch (which) {
        case PropSuite::Prop1:
            return "prop1";
        case PropSuite::Prop2:
            return "prop2";
        case PropSuite::EigenMap:
            return "eigenmap";
        case PropSuite::Lemma1:
            return "lemma1";
        case PropSuite::Lemma3:
            return "lemma3";
        case PropSuite::DiagDominance:
            return "diagdom";
    }
    return "unknown";
}

SuiteResult run_suite(PropSuite which, const SuiteOptions& options) {
    SuiteResult result;
    result.name = suite_name(which);
    result.instances_run = options.instances;

    std::vector<InstanceOutcome> outcomes(options.instances);
    unsigned threads = options.threads;
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min<unsigned>(threads, 16);
    if (options.instances < 64) threads = 1;

    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint64_t iseed = derive_seed(options.seed, i);
            try {
                outcomes[i] = run_instance(which, iseed, options.slack_shift);
            } catch (const std::exception& e) {
                outcomes[i].violated = true;
                outcomes[i].failure =
                    make_failure(iseed, 0, 0, 0.0, 0.0,
                                 std::string("exception during check: ") + e.what(), nullptr);
            }
        }
    };
    if (threads <= 1) {
        worker(0, options.instances);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (options.instances + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(options.instances, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    // Merge in seed order: identical output regardless of thread count.
    for (const InstanceOutcome& out : outcomes) {
        if (out.condition_met) ++result.condition_met;
        if (out.boundary) ++result.boundary_skipped;
        if (out.violated) {
            ++result.violations;
            if (result.failures.size() < 32) result.failures.push_back(out.failure);
        }
    }
    return result;
}

}  // namespace contranorm
