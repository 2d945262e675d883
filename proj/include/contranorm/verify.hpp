#ifndef CONTRANORM_VERIFY_HPP
#define CONTRANORM_VERIFY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "contranorm/eigen.hpp"
#include "contranorm/matrix.hpp"

namespace contranorm {

/// Outcome of one proposition check on one instance. `claim_held` must be
/// true whenever `condition_held` is true; `slack` is the margin by which
/// the asserted inequality held (negative = violated).
struct PropositionReport {
    std::uint64_t instance_seed = 0;
    std::size_t n = 0;
    std::size_t d = 0;
    double s = 0.0;
    double sigma = 0.0;  // sigma_min of P (variance bound) or sigma_max of H (rank bound)
    double lhs = 0.0;
    double rhs = 0.0;
    bool condition_held = false;
    bool claim_held = false;
    double slack = 0.0;
    std::optional<double> alt_rhs;  // reciprocal-form variance bound Var/(1 - s*sigma_min)
    bool boundary = false;          // equal-spectrum rank-bound instance (claim degenerates)
};

struct EigenMapReport {
    double s = 0.0;
    double max_abs_diff = 0.0;
    bool matched = false;
    double slack = 0.0;
};

struct Lemma1Report {
    double lambda = 0.0;
    double top_eigenvalue = 0.0;
    bool condition_held = false;
    double lhs = 0.0;
    double rhs = 0.0;
    bool claim_held = false;
    double slack = 0.0;
};

struct Lemma3Report {
    bool ratio_increasing = false;
    double erank_a = 0.0;
    double erank_b = 0.0;
    bool claim_held = false;
    double slack = 0.0;
};

struct DiagDominanceReport {
    bool condition_held = false;
    double sigma_min = 0.0;
    bool claim_held = false;
    double slack = 0.0;
};

struct GradientReport {
    std::size_t n = 0;
    std::size_t d = 0;
    double tau = 0.0;
    double max_rel_error = 0.0;
    bool passed = false;
};

/// P = (I - eeᵀ)(I - Ā) + (I - Ā)ᵀ(I - eeᵀ) for a row-stochastic Ā.
/// The result is symmetric by construction (asserted within 1e-12).
Matrix build_P(const Matrix& attn);

/// Variance lower bound: with Ā = softmax(HHᵀ) and the regularized update
/// H_t = ((1+s)I - sĀ)H, checks Var(H_t) >= (1 + s·sigma_min)·Var(H_b).
/// condition_held records sigma_min >= 0 (the monotonicity case); the
/// reciprocal-form bound Var/(1 - s·sigma_min) is reported when s·sigma_min < 1.
PropositionReport check_prop1(const Matrix& h, double s);

/// Effective-rank increase: with H_t = (1+s)H - s(HHᵀ)H and sigma_max the
/// largest singular value of H, checks erank(H_t) > erank(H_b) whenever
/// 1 + (1 - sigma_max²)s > 0. Equal-spectrum inputs are boundary cases.
PropositionReport check_prop2(const Matrix& h, double s);

/// Spectral identity behind the rank bound: the eigenvalues of H_tH_tᵀ are
/// exactly {(lambda_i·s - (1+s))²·lambda_i} for eigenvalues lambda_i of HHᵀ.
EigenMapReport check_eigen_map(const Matrix& h, double s);

/// Variance survival under a generic update X1 = P X0: if the top eigenvalue
/// of (I - eeᵀ) - lambda·Pᵀ(I - eeᵀ)P is <= 0, then Var(X1) >= Var(X0)/lambda.
Lemma1Report check_lemma1(const Matrix& x0, const Matrix& p, double lambda);

/// Effective-rank monotonicity: for eigenvalue lists of AAᵀ and BBᵀ with an
/// increasing ratio, erank(B) >= erank(A) (eranks from the square roots).
Lemma3Report check_lemma3(const Spectrum& eigs_a, const Spectrum& eigs_b);

/// Sufficient condition for sigma_min(P) >= 0: sum_k a_kj <= 1 + n·a_ij for
/// all i, j. When it holds the smallest eigenvalue of P must be >= -1e-9.
DiagDominanceReport check_diag_dominance(const Matrix& attn);

/// Analytic uniformity-loss gradient (softmax_rows(HHᵀ/tau) +
/// softmax_cols(HHᵀ/tau))·H/tau against central finite differences of the
/// loss (step 1e-6). Input is standardized to unit RMS first. Passes when
/// the max relative error (denominator max(1, |analytic|)) is <= 1e-5.
GradientReport gradient_check(const Matrix& h, double tau);

// ---------------------------------------------------------------------------
// Randomized suites
// ---------------------------------------------------------------------------

enum class PropSuite { Prop1, Prop2, EigenMap, Lemma1, Lemma3, DiagDominance };

struct SuiteOptions {
    std::size_t instances = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 0;      // 0 = hardware concurrency
    double slack_shift = 0.0;  // test hook: shifts every claim's slack
};

/// A violated instance, fully serialized for reproduction.
struct FailureRecord {
    std::uint64_t instance_seed = 0;
    std::size_t n = 0;
    std::size_t d = 0;
    double s = 0.0;
    double slack = 0.0;
    std::string description;
    std::vector<double> h_entries;  // row-major instance matrix when applicable
};

struct SuiteResult {
    std::string name;
    std::size_t instances_run = 0;
    std::size_t condition_met = 0;
    std::size_t boundary_skipped = 0;
    std::size_t violations = 0;
    std::vector<FailureRecord> failures;
};

/// Runs `options.instances` independent seeded instances of the chosen
/// check, sharded over threads (results merged in seed order, so the
/// outcome is independent of the thread count).
SuiteResult run_suite(PropSuite which, const SuiteOptions& options);

std::string suite_name(PropSuite which);

}  // namespace contranorm

#endif  // CONTRANORM_VERIFY_HPP
