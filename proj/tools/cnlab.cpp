// cnlab: command-line front end for the contranorm library.
//
// Subcommands:
//   dynamics   propagate representations through a layer stack, record
//              per-layer collapse diagnostics (JSON lines or CSV)
//   verify     randomized suites for the variance / effective-rank bounds
//              and the supporting lemmas
//   gradcheck  analytic uniformity-loss gradient vs finite differences
//   spectrum   per-layer singular spectra, optionally for several
//              normalization variants side by side
//
// Exit codes: 0 success, 1 counterexample/failed check, 2 divergence
// (partial output retained), 64 usage error, 66 file error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "contranorm/dynamics.hpp"
#include "contranorm/matrix.hpp"
#include "contranorm/metrics.hpp"
#include "contranorm/norms.hpp"
#include "contranorm/rng.hpp"
#include "contranorm/serialize.hpp"
#include "contranorm/verify.hpp"

namespace cn = contranorm;

namespace {

constexpr std::uint64_t kFeatureStream = 0xfea7u;
constexpr std::uint64_t kGraphStream = 0x6af0u;

struct DynFlags {
    std::string propagation = "attention";
    int layers = 1;
    std::string norm = "none";
    double scale = 1.0;
    double tau = 1.0;
    bool temper_logits = false;
    std::string residual = "off";
    std::string norm_position = "after";
    double tau_attn = 1.0;
    std::string graph_path;
    std::string features_path;
    std::string gen_kind;
    std::size_t n = 16;
    std::size_t d = 8;
    double p_in = 0.1;
    double p_out = 0.02;
    std::uint64_t seed = 0;
    std::string out_path;
    std::string format = "json";
    bool record_spectrum = false;
    bool gcn_row_normalized = false;
    bool orthogonal_mix = false;
};

void add_dynamics_flags(CLI::App* cmd, DynFlags& f) {
    cmd->add_option("--propagation", f.propagation, "Propagation operator")
        ->check(CLI::IsMember({"gcn", "attention"}));
    cmd->add_option("--layers", f.layers, "Stack depth L")->check(CLI::PositiveNumber);
    cmd->add_option("--norm", f.norm, "Normalization layer")
        ->check(CLI::IsMember({"none", "layernorm", "pairnorm", "contranorm", "contranorm-full",
                               "contranorm-sg", "contranorm-reg", "contranorm-d"}));
    cmd->add_option("--scale", f.scale, "Normalization step size s")->check(CLI::NonNegativeNumber);
    cmd->add_option("--tau", f.tau, "Normalization temperature")->check(CLI::PositiveNumber);
    cmd->add_flag("--temper-logits", f.temper_logits,
                  "Divide similarity logits by tau in the stop-gradient family");
    cmd->add_option("--residual", f.residual, "Residual connection")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--norm-position", f.norm_position,
                    "Norm placement relative to the residual")
        ->check(CLI::IsMember({"before", "after"}));
    cmd->add_option("--tau-attn", f.tau_attn, "Attention operator temperature")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--graph", f.graph_path, "Edge-list file (gcn propagation)");
    cmd->add_option("--features", f.features_path, "Headerless CSV of initial features");
    cmd->add_option("--gen", f.gen_kind, "Synthetic graph")
        ->check(CLI::IsMember({"ring", "complete", "sbm"}));
    cmd->add_option("--n", f.n, "Node/token count for generated inputs")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--d", f.d, "Feature dimension for generated inputs")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--p-in", f.p_in, "SBM intra-block edge probability");
    cmd->add_option("--p-out", f.p_out, "SBM inter-block edge probability");
    cmd->add_option("--seed", f.seed, "Master seed (features, graph, mixing)");
    cmd->add_option("--out", f.out_path, "Output path")->required();
    cmd->add_option("--format", f.format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_flag("--record-spectrum", f.record_spectrum,
                  "Include per-layer singular values in the output");
    cmd->add_flag("--gcn-row-normalized", f.gcn_row_normalized,
                  "Row-normalized GCN operator instead of the symmetric one");
    cmd->add_flag("--mix-orthogonal", f.orthogonal_mix,
                  "Apply a seeded per-layer orthogonal feature mixing matrix");
}

cn::NormVariant parse_variant(const std::string& name) {
    static const std::map<std::string, cn::NormVariant> table = {
        {"none", cn::NormVariant::None},
        {"layernorm", cn::NormVariant::LayerNorm},
        {"pairnorm", cn::NormVariant::PairNorm},
        {"contranorm", cn::NormVariant::ContraNorm},
        {"contranorm-full", cn::NormVariant::ContraNormFull},
        {"full", cn::NormVariant::ContraNormFull},
        {"contranorm-sg", cn::NormVariant::ContraNormSG},
        {"sg", cn::NormVariant::ContraNormSG},
        {"contranorm-reg", cn::NormVariant::ContraNormReg},
        {"reg", cn::NormVariant::ContraNormReg},
        {"contranorm-d", cn::NormVariant::ContraNormD},
        {"d", cn::NormVariant::ContraNormD},
    };
    const auto it = table.find(name);
    if (it == table.end()) throw std::invalid_argument("unknown norm variant: " + name);
    return it->second;
}

std::string canonical_variant_name(cn::NormVariant v) {
    switch (v) {
        case cn::NormVariant::None: return "none";
        case cn::NormVariant::LayerNorm: return "layernorm";
        case cn::NormVariant::PairNorm: return "pairnorm";
        case cn::NormVariant::ContraNormFull: return "contranorm-full";
        case cn::NormVariant::ContraNormSG: return "contranorm-sg";
        case cn::NormVariant::ContraNormReg: return "contranorm-reg";
        case cn::NormVariant::ContraNorm: return "contranorm";
        case cn::NormVariant::ContraNormD: return "contranorm-d";
    }
    return "unknown";
}

struct PreparedRun {
    cn::DynamicsConfig config;
    cn::Matrix h0;
    std::optional<cn::GraphTopology> graph;
    std::map<std::string, std::string> input_digests;
    nlohmann::json config_echo;
};

PreparedRun prepare_run(const DynFlags& f) {
    cn::DynamicsConfig cfg;
    cfg.propagation =
        f.propagation == "gcn" ? cn::Propagation::GcnSymmetric : cn::Propagation::Attention;
    cfg.depth = f.layers;
    cfg.residual = f.residual == "on";
    cfg.norm_position = f.norm_position == "before" ? cn::NormPosition::BeforeResidual
                                                    : cn::NormPosition::AfterResidual;
    cfg.tau_attn = f.tau_attn;
    cfg.seed = f.seed;
    cfg.record_spectrum = f.record_spectrum;
    cfg.gcn_row_normalized = f.gcn_row_normalized;
    cfg.orthogonal_mix = f.orthogonal_mix;
    cfg.norm.variant = parse_variant(f.norm);
    cfg.norm.scale = f.scale;
    cfg.norm.tau = f.tau;
    cfg.norm.temper_logits = f.temper_logits;
    cfg.validate();

    PreparedRun run{cfg, cn::Matrix(1, 1), std::nullopt, {}, {}};

    if (!f.graph_path.empty() && !f.gen_kind.empty()) {
        throw std::invalid_argument("--graph and --gen are mutually exclusive");
    }
    if (!f.graph_path.empty()) {
        run.graph = cn::load_graph(f.graph_path);
        run.input_digests["graph"] = cn::fnv1a64_digest_of_file(f.graph_path);
    } else if (!f.gen_kind.empty()) {
        cn::GraphKind kind = f.gen_kind == "ring"       ? cn::GraphKind::Ring
                             : f.gen_kind == "complete" ? cn::GraphKind::Complete
                                                        : cn::GraphKind::TwoBlockSBM;
        run.graph = cn::generate_graph(kind, f.n, f.p_in, f.p_out,
                                       cn::derive_seed(f.seed, kGraphStream));
    }
    if (cfg.propagation == cn::Propagation::GcnSymmetric && !run.graph) {
        throw std::invalid_argument("gcn propagation requires --graph or --gen");
    }

    if (!f.features_path.empty()) {
        run.h0 = cn::load_features(f.features_path);
        run.input_digests["features"] = cn::fnv1a64_digest_of_file(f.features_path);
    } else {
        const std::size_t rows = run.graph ? run.graph->node_count : f.n;
        cn::Rng rng(cn::derive_seed(f.seed, kFeatureStream));
        run.h0 = cn::gaussian_matrix(rows, f.d, rng);
    }
    if (run.graph && run.graph->node_count != run.h0.rows()) {
        throw cn::parse_error(f.features_path.empty() ? f.graph_path : f.features_path, 1,
                              "graph has " + std::to_string(run.graph->node_count) +
                                  " nodes but features have " + std::to_string(run.h0.rows()) +
                                  " rows");
    }

    nlohmann::json echo;
    echo["propagation"] = f.propagation;
    echo["layers"] = f.layers;
    echo["norm"] = canonical_variant_name(cfg.norm.variant);
    echo["scale"] = f.scale;
    echo["tau"] = f.tau;
    echo["temper_logits"] = f.temper_logits;
    echo["residual"] = cfg.residual;
    echo["norm_position"] = f.norm_position;
    echo["tau_attn"] = f.tau_attn;
    echo["seed"] = f.seed;
    echo["n"] = run.h0.rows();
    echo["d"] = run.h0.cols();
    echo["graph_file"] = f.graph_path;
    echo["features_file"] = f.features_path;
    echo["gen"] = f.gen_kind;
    if (f.gen_kind == "sbm") {
        echo["p_in"] = f.p_in;
        echo["p_out"] = f.p_out;
    }
    echo["format"] = f.format;
    echo["record_spectrum"] = f.record_spectrum;
    echo["gcn_row_normalized"] = f.gcn_row_normalized;
    echo["mix_orthogonal"] = f.orthogonal_mix;
    run.config_echo = std::move(echo);
    return run;
}

void finish_manifest(cn::RunManifest& manifest, const std::string& out_path) {
    manifest.finished = cn::iso8601_utc_now();
    manifest.output_digest = cn::fnv1a64_digest_of_file(out_path);
    cn::write_manifest(manifest, out_path);
}

// Shared by dynamics and spectrum; spectrum passes the variants to compare.
int run_dynamics_command(const DynFlags& flags, const std::vector<std::string>& compare,
                         const std::string& command) {
    PreparedRun prep = prepare_run(flags);

    cn::RunManifest manifest;
    manifest.command = command;
    manifest.seed = flags.seed;
    manifest.config = prep.config_echo;
    manifest.input_file_digests = prep.input_digests;
    if (!compare.empty()) {
        nlohmann::json names = nlohmann::json::array();
        for (const auto& c : compare) names.push_back(canonical_variant_name(parse_variant(c)));
        manifest.config["compare"] = names;
    }
    manifest.started = cn::iso8601_utc_now();

    std::vector<cn::NormVariant> variants;
    if (compare.empty()) {
        variants.push_back(prep.config.norm.variant);
    } else {
        for (const auto& name : compare) variants.push_back(parse_variant(name));
    }

    std::ofstream out(flags.out_path, std::ios::binary);
    if (!out) {
        std::cerr << "cnlab: cannot open output file " << flags.out_path << "\n";
        return 66;
    }
    const cn::OutputFormat format =
        flags.format == "csv" ? cn::OutputFormat::Csv : cn::OutputFormat::JsonLines;
    const std::size_t spectrum_len = std::min(prep.h0.rows(), prep.h0.cols());
    cn::DiagnosticsWriter writer(out, format, flags.record_spectrum, spectrum_len,
                                 !compare.empty());

    bool diverged = false;
    int divergence_layer = -1;
    for (cn::NormVariant variant : variants) {
        cn::DynamicsConfig cfg = prep.config;
        cfg.norm.variant = variant;
        const std::string label = canonical_variant_name(variant);
        try {
            const auto records = cn::run(prep.h0, cfg, prep.graph ? &*prep.graph : nullptr);
            for (const auto& rec : records) writer.write(rec, label);
        } catch (const cn::divergence_error& e) {
            for (const auto& rec : e.partial_diagnostics()) writer.write(rec, label);
            std::cerr << "cnlab: " << e.what() << " (variant " << label
                      << "); partial output retained\n";
            diverged = true;
            divergence_layer = e.layer();
        }
    }
    out.flush();
    out.close();

    if (diverged) manifest.config["diverged_at_layer"] = divergence_layer;
    finish_manifest(manifest, flags.out_path);
    return diverged ? 2 : 0;
}

int run_verify_command(const std::string& prop, std::size_t instances, std::uint64_t seed,
                       const std::string& out_path, unsigned threads, double perturb_slack) {
    std::vector<cn::PropSuite> suites;
    if (prop == "1") {
        suites = {cn::PropSuite::Prop1};
    } else if (prop == "2") {
        suites = {cn::PropSuite::Prop2};
    } else if (prop == "eigenmap") {
        suites = {cn::PropSuite::EigenMap};
    } else if (prop == "lemma1") {
        suites = {cn::PropSuite::Lemma1};
    } else if (prop == "lemma3") {
        suites = {cn::PropSuite::Lemma3};
    } else if (prop == "diagdom") {
        suites = {cn::PropSuite::DiagDominance};
    } else if (prop == "all") {
        suites = {cn::PropSuite::Prop1,  cn::PropSuite::Prop2,  cn::PropSuite::EigenMap,
                  cn::PropSuite::Lemma1, cn::PropSuite::Lemma3, cn::PropSuite::DiagDominance};
    } else {
        throw std::invalid_argument("unknown --prop value: " + prop);
    }

    cn::RunManifest manifest;
    manifest.command = "verify";
    manifest.seed = seed;
    manifest.config["prop"] = prop;
    manifest.config["instances"] = instances;
    manifest.config["perturb_slack"] = perturb_slack;
    manifest.started = cn::iso8601_utc_now();

    cn::SuiteOptions options;
    options.instances = instances;
    options.seed = seed;
    options.threads = threads;
    options.slack_shift = perturb_slack;

    nlohmann::json results = nlohmann::json::array();
    std::size_t total_violations = 0;
    for (cn::PropSuite suite : suites) {
        const cn::SuiteResult result = cn::run_suite(suite, options);
        total_violations += result.violations;
        std::cerr << result.name << ": " << result.instances_run << " instances, "
                  << result.violations << " violations, " << result.condition_met
                  << " with condition met, " << result.boundary_skipped << " skipped\n";
        results.push_back(cn::suite_to_json(result));
    }

    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "cnlab: cannot open output file " << out_path << "\n";
            return 66;
        }
        out << results.dump(2) << "\n";
        out.close();
        finish_manifest(manifest, out_path);
    }
    return total_violations == 0 ? 0 : 1;
}

int run_gradcheck_command(std::size_t n, std::size_t d, double tau, std::uint64_t seed) {
    cn::Rng rng(cn::derive_seed(seed, kFeatureStream));
    cn::Matrix h = cn::gaussian_matrix(n, d, rng);
    const cn::GradientReport rep = cn::gradient_check(h, tau);
    std::cerr << "gradcheck: n=" << n << " d=" << d << " tau=" << cn::format_double(tau)
              << " max_rel_error=" << cn::format_double(rep.max_rel_error) << " "
              << (rep.passed ? "pass" : "FAIL") << "\n";
    return rep.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ContraNorm propagation dynamics and proposition checks"};
    app.require_subcommand(1);

    DynFlags dyn_flags;
    CLI::App* dynamics = app.add_subcommand(
        "dynamics", "Run a propagation stack and record per-layer diagnostics");
    add_dynamics_flags(dynamics, dyn_flags);

    std::string verify_prop = "all";
    std::size_t verify_instances = 1000;
    std::uint64_t verify_seed = 0;
    std::string verify_out;
    unsigned verify_threads = 0;
    double perturb_slack = 0.0;
    CLI::App* verify = app.add_subcommand("verify", "Randomized proposition and lemma suites");
    verify->add_option("--prop", verify_prop, "Which suite to run")
        ->check(CLI::IsMember({"1", "2", "eigenmap", "lemma1", "lemma3", "diagdom", "all"}));
    verify->add_option("--instances", verify_instances, "Instances per suite")
        ->check(CLI::PositiveNumber);
    verify->add_option("--seed", verify_seed, "Master seed");
    verify->add_option("--out", verify_out, "Write full results as JSON");
    verify->add_option("--threads", verify_threads, "Worker threads (0 = auto)");
    verify->add_option("--perturb-slack", perturb_slack,
                       "Internal test hook: shift every claim's slack")
        ->group("");  // hidden

    std::size_t grad_n = 4, grad_d = 3;
    double grad_tau = 1.0;
    std::uint64_t grad_seed = 0;
    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "Analytic vs finite-difference uniformity gradient");
    gradcheck->add_option("--n", grad_n, "Rows")->check(CLI::PositiveNumber);
    gradcheck->add_option("--d", grad_d, "Columns")->check(CLI::PositiveNumber);
    gradcheck->add_option("--tau", grad_tau, "Temperature")->check(CLI::PositiveNumber);
    gradcheck->add_option("--seed", grad_seed, "Seed");

    DynFlags spec_flags;
    std::vector<std::string> compare;
    CLI::App* spectrum = app.add_subcommand(
        "spectrum", "Per-layer singular spectra, optionally comparing norm variants");
    add_dynamics_flags(spectrum, spec_flags);
    spectrum->add_option("--compare", compare, "Comma-separated norm variants to run side by side")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 64;
    }

    try {
        if (dynamics->parsed()) {
            return run_dynamics_command(dyn_flags, {}, "dynamics");
        }
        if (verify->parsed()) {
            return run_verify_command(verify_prop, verify_instances, verify_seed, verify_out,
                                      verify_threads, perturb_slack);
        }
        if (gradcheck->parsed()) {
            return run_gradcheck_command(grad_n, grad_d, grad_tau, grad_seed);
        }
        if (spectrum->parsed()) {
            if (!spec_flags.record_spectrum) {
                std::cerr << "cnlab: spectrum requires --record-spectrum\n";
                return 64;
            }
            return run_dynamics_command(spec_flags, compare, "spectrum");
        }
    } catch (const cn::parse_error& e) {
        std::cerr << "cnlab: " << e.what() << "\n";
        return 66;
    } catch (const std::invalid_argument& e) {
        std::cerr << "cnlab: " << e.what() << "\n";
        return 64;
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        if (what.find("cannot open") != std::string::npos ||
            what.find("cannot write") != std::string::npos) {
            std::cerr << "cnlab: " << what << "\n";
            return 66;
        }
        std::cerr << "cnlab: " << what << "\n";
        return 70;
    }
    return 64;
}
