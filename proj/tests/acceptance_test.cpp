// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. argv[1] is the path to the cnlab binary (criterion 9).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "contranorm/dynamics.hpp"
#include "contranorm/metrics.hpp"
#include "contranorm/norms.hpp"
#include "contranorm/rng.hpp"
#include "contranorm/verify.hpp"

using namespace contranorm;

namespace {

int g_failures = 0;
std::string g_binary;
std::string g_prefix;

// Attention temperature for the collapse replications: tau_attn = 2d keeps
// the similarity logits of Gaussian features at O(1), the regime where tokens
// actually mix and the rank decays layer by layer; swept over
// {1, sqrt(d), d/2, d, 2d} before being pinned here.
constexpr double kAttnTau = 64.0;

void report(int index, const std::string& name, bool passed, const std::string& detail) {
    std::cout << (passed ? "[PASS] " : "[FAIL] ") << "criterion " << index << ": " << name
              << " (" << detail << ")\n";
    if (!passed) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// 1. Analytic uniformity gradient vs central finite differences on the full
//    (n, d, tau) grid, 5 seeds each, max relative error <= 1e-5, under 5 s.
void criterion1_gradient_oracle() {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool ok = true;
    for (std::size_t n : {2, 4, 8}) {
        for (std::size_t d : {1, 3, 8}) {
            for (double tau : {0.5, 1.0, 2.0}) {
                for (std::uint64_t seed = 0; seed < 5; ++seed) {
                    Rng rng(derive_seed(1000 + seed, n * 100 + d * 10));
                    const GradientReport rep = gradient_check(gaussian_matrix(n, d, rng), tau);
                    worst = std::max(worst, rep.max_rel_error);
                    ok = ok && rep.passed;
                }
            }
        }
    }
    const double elapsed = seconds_since(start);
    ok = ok && worst <= 1e-5 && elapsed < 5.0;
    std::ostringstream detail;
    detail << "max rel err " << worst << ", " << elapsed << "s";
    report(1, "gradient oracle over the (n, d, tau) grid", ok, detail.str());
}

// 2. Variance bound (Proposition 1): 10,000 random instances, no violations.
void criterion2_prop1_suite() {
    const auto start = std::chrono::steady_clock::now();
    SuiteOptions options;
    options.instances = 10000;
    options.seed = 20240001;
    const SuiteResult result = run_suite(PropSuite::Prop1, options);
    const double elapsed = seconds_since(start);
    const bool ok = result.violations == 0 && elapsed < 60.0;
    std::ostringstream detail;
    detail << result.instances_run << " instances, " << result.violations << " violations, "
           << elapsed << "s";
    report(2, "variance lower bound suite", ok, detail.str());
}

// 3. Effective-rank bound (Proposition 2) plus the eigenvalue-map identity:
//    10,000 instances rescaled to sigma_max <= 1.
void criterion3_prop2_suite() {
    const auto start = std::chrono::steady_clock::now();
    SuiteOptions options;
    options.instances = 10000;
    options.seed = 20240002;
    const SuiteResult result = run_suite(PropSuite::Prop2, options);
    const double elapsed = seconds_since(start);
    const bool ok = result.violations == 0 && elapsed < 120.0;
    std::ostringstream detail;
    detail << result.instances_run << " instances, " << result.violations << " violations, "
           << result.boundary_skipped << " boundary, " << elapsed << "s";
    report(3, "effective-rank increase suite with eigenvalue map", ok, detail.str());
}

// 4. ContraNorm at s = 0 equals LayerNorm to 1e-15 on 100 random inputs.
void criterion4_reduction_identity() {
    Rng rng(20240004);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.integer(12);
        const std::size_t d = 2 + rng.integer(12);
        Matrix h = gaussian_matrix(n, d, rng);
        NormalizerConfig cfg;
        cfg.variant = NormVariant::ContraNorm;
        cfg.scale = 0.0;
        worst = std::max(worst, max_abs_diff(contra_norm(h, cfg), layer_norm(h, cfg)));
    }
    const bool ok = worst <= 1e-15;
    std::ostringstream detail;
    detail << "max abs diff " << worst << " over 100 inputs";
    report(4, "s = 0 reduces ContraNorm to LayerNorm", ok, detail.str());
}

// 5. Complete collapse on K_16 without normalization; ContraNorm keeps the
//    variance alive.
void criterion5_gcn_collapse() {
    Rng rng(20240005);
    Matrix h0 = gaussian_matrix(16, 8, rng);
    GraphTopology k16 = generate_graph(GraphKind::Complete, 16, 0, 0, 0);

    DynamicsConfig vanilla;
    vanilla.propagation = Propagation::GcnSymmetric;
    vanilla.depth = 32;
    vanilla.norm.variant = NormVariant::None;
    const auto collapsed = run(h0, vanilla, &k16);

    // The normalized arm runs inside a residual block: on a complete graph
    // one bare averaging step already yields bitwise-identical rows, which no
    // row-wise norm can separate again. Before-residual placement, because
    // the layer's LayerNorm re-pins rows to unit scale and the criterion
    // compares absolute variances against the raw N(0,1) input.
    DynamicsConfig with_norm = vanilla;
    with_norm.residual = true;
    with_norm.norm_position = NormPosition::BeforeResidual;
    with_norm.norm.variant = NormVariant::ContraNorm;
    with_norm.norm.scale = 0.5;
    with_norm.norm.tau = 1.0;
    const auto preserved = run(h0, with_norm, &k16);

    const double v0 = collapsed[0].variance;
    const bool collapse_ok = collapsed[32].variance < 1e-6 * v0;
    const bool preserve_ok = preserved[32].variance > 0.1 * preserved[0].variance;
    std::ostringstream detail;
    detail << "vanilla ratio " << collapsed[32].variance / v0 << ", contranorm ratio "
           << preserved[32].variance / preserved[0].variance;
    report(5, "GCN complete collapse and its prevention", collapse_ok && preserve_ok,
           detail.str());
}

// 6. Attention stacks: effective rank decays monotonically for the
//    LayerNorm baseline and ends strictly higher with ContraNorm, across
//    20 seeds.
void criterion6_attention_collapse() {
    const auto start = std::chrono::steady_clock::now();
    int monotone = 0;
    int higher = 0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        Rng rng(derive_seed(20240006, s));
        Matrix h0 = gaussian_matrix(64, 32, rng);

        DynamicsConfig vanilla;
        vanilla.propagation = Propagation::Attention;
        vanilla.depth = 32;
        vanilla.residual = true;
        vanilla.tau_attn = kAttnTau;
        vanilla.norm.variant = NormVariant::LayerNorm;
        const auto base = run(h0, vanilla, nullptr);

        bool descending = true;
        for (std::size_t l = 1; l < base.size(); ++l) {
            if (!base[l].effective_rank || !base[l - 1].effective_rank) {
                descending = false;
                break;
            }
            if (*base[l].effective_rank > *base[l - 1].effective_rank + 1e-6) {
                descending = false;
                break;
            }
        }
        if (descending) ++monotone;

        DynamicsConfig contra = vanilla;
        contra.norm.variant = NormVariant::ContraNorm;
        contra.norm.scale = 1.0;
        contra.norm.tau = 1.0;
        const auto treated = run(h0, contra, nullptr);
        if (base[32].effective_rank && treated[32].effective_rank &&
            *treated[32].effective_rank > *base[32].effective_rank) {
            ++higher;
        }
    }
    const double elapsed = seconds_since(start);
    const bool ok = monotone >= 18 && higher == seeds && elapsed < 60.0;
    std::ostringstream detail;
    detail << "monotone " << monotone << "/20, contranorm higher " << higher << "/20, " << elapsed
           << "s";
    report(6, "attention effective-rank collapse and its prevention", ok, detail.str());
}

// 7. Singular spectrum ablation at layer 12: both gradient variants leave
//    strictly fewer near-zero singular values than the bare stack.
void criterion7_spectrum_ablation() {
    auto near_zero_count = [](const Spectrum& sv) {
        int count = 0;
        for (double v : sv.values) {
            if (v < 0.01 * sv[0]) ++count;
        }
        return count;
    };
    int ok_seeds = 0;
    const int seeds = 10;
    for (int s = 0; s < seeds; ++s) {
        Rng rng(derive_seed(20240007, s));
        Matrix h0 = gaussian_matrix(64, 32, rng);

        DynamicsConfig cfg;
        cfg.propagation = Propagation::Attention;
        cfg.depth = 12;
        cfg.residual = true;
        cfg.tau_attn = kAttnTau;

        cfg.norm.variant = NormVariant::None;
        const auto bare = run(h0, cfg, nullptr);

        cfg.norm.variant = NormVariant::ContraNormSG;
        cfg.norm.scale = 0.5;
        cfg.norm.tau = 1.0;
        const auto sg = run(h0, cfg, nullptr);

        cfg.norm.variant = NormVariant::ContraNormFull;
        const auto full = run(h0, cfg, nullptr);

        const int bare_count = near_zero_count(bare[12].singular_values);
        const int sg_count = near_zero_count(sg[12].singular_values);
        const int full_count = near_zero_count(full[12].singular_values);
        if (sg_count < bare_count && full_count < bare_count) ++ok_seeds;
    }
    std::ostringstream detail;
    detail << ok_seeds << "/10 seeds with strictly fewer near-zero singular values";
    report(7, "layer-12 singular spectrum ablation", ok_seeds == seeds, detail.str());
}

// 8. ContraNorm-D runs in O(n d^2): growing n by 10x costs < 20x, while the
//    O(n^2 d) stop-gradient layer blows past 50x.
void criterion8_dual_scaling() {
    const std::size_t d = 32;
    Rng rng(20240008);
    Matrix small = gaussian_matrix(1000, d, rng);
    Matrix large = gaussian_matrix(10000, d, rng);

    NormalizerConfig dual_cfg;
    dual_cfg.variant = NormVariant::ContraNormD;
    dual_cfg.scale = 0.5;
    NormalizerConfig sg_cfg = dual_cfg;
    sg_cfg.variant = NormVariant::ContraNormSG;

    auto time_layer = [](const Matrix& h, const NormalizerConfig& cfg, int calls_per_block,
                         int blocks) {
        // Warm-up, then the best per-call time over blocks of calls; block
        // timing amortizes clock and allocator noise for the fast cases.
        double sink = apply_norm(h, cfg).max_abs();
        double best = 1e100;
        for (int b = 0; b < blocks; ++b) {
            const auto start = std::chrono::steady_clock::now();
            for (int c = 0; c < calls_per_block; ++c) {
                sink += apply_norm(h, cfg).max_abs();
            }
            best = std::min(best, seconds_since(start) / calls_per_block);
        }
        if (!(sink < 1e300)) std::cerr << "";  // keep the layer calls observable
        return best;
    };

    const double dual_small = time_layer(small, dual_cfg, 50, 3);
    const double dual_large = time_layer(large, dual_cfg, 5, 3);
    const double sg_small = time_layer(small, sg_cfg, 3, 3);
    const double sg_large = time_layer(large, sg_cfg, 1, 2);

    const double dual_ratio = dual_large / dual_small;
    const double sg_ratio = sg_large / sg_small;
    const bool ok = dual_ratio < 20.0 && sg_ratio > 50.0;
    std::ostringstream detail;
    detail << "dual 10x-n ratio " << dual_ratio << ", stop-gradient ratio " << sg_ratio;
    report(8, "ContraNorm-D scales linearly in n", ok, detail.str());
}

// 9. CLI determinism: repeating a run described by a manifest reproduces the
//    output byte for byte.
void criterion9_cli_determinism() {
    auto run_cli = [](const std::string& args) {
        const std::string cmd = g_binary + " " + args + " 2>/dev/null";
        const int status = std::system(cmd.c_str());
        return status == -1 ? -1 : WEXITSTATUS(status);
    };
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    const std::vector<std::string> invocations = {
        "dynamics --propagation attention --layers 6 --norm contranorm --scale 1 --tau 1 "
        "--tau-attn 64 --residual on --n 24 --d 12 --seed 31 --record-spectrum --format json",
        "dynamics --propagation gcn --gen sbm --n 30 --p-in 0.4 --p-out 0.05 --layers 5 "
        "--norm pairnorm --d 6 --seed 32 --format csv",
        "spectrum --compare sg,full --layers 4 --n 12 --d 6 --seed 33 --record-spectrum "
        "--residual on --format json",
    };
    bool ok = true;
    std::string why = "all outputs byte-identical";
    for (std::size_t i = 0; i < invocations.size(); ++i) {
        const std::string a = g_prefix + "acc9_" + std::to_string(i) + "_a.out";
        const std::string b = g_prefix + "acc9_" + std::to_string(i) + "_b.out";
        if (run_cli(invocations[i] + " --out " + a) != 0 ||
            run_cli(invocations[i] + " --out " + b) != 0) {
            ok = false;
            why = "invocation " + std::to_string(i) + " failed";
            break;
        }
        if (slurp(a) != slurp(b) || slurp(a).empty()) {
            ok = false;
            why = "invocation " + std::to_string(i) + " not reproducible";
            break;
        }
    }
    const std::string va = g_prefix + "acc9_v_a.json";
    const std::string vb = g_prefix + "acc9_v_b.json";
    if (ok) {
        if (run_cli("verify --prop 1 --instances 300 --seed 34 --out " + va) != 0 ||
            run_cli("verify --prop 1 --instances 300 --seed 34 --out " + vb) != 0 ||
            slurp(va) != slurp(vb)) {
            ok = false;
            why = "verify output not reproducible";
        }
    }
    report(9, "CLI reruns are byte-identical", ok, why);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance_test <path-to-cnlab>\n";
        return 2;
    }
    g_binary = argv[1];
    g_prefix = "/tmp/cn_acc_" + std::to_string(getpid()) + "_";

    criterion1_gradient_oracle();
    criterion2_prop1_suite();
    criterion3_prop2_suite();
    criterion4_reduction_identity();
    criterion5_gcn_collapse();
    criterion6_attention_collapse();
    criterion7_spectrum_ablation();
    criterion8_dual_scaling();
    criterion9_cli_determinism();

    if (g_failures == 0) {
        std::cout << "acceptance: all criteria passed\n";
        return 0;
    }
    std::cout << "acceptance: " << g_failures << " criterion(s) failed\n";
    return 1;
}
