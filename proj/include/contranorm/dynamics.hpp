#ifndef CONTRANORM_DYNAMICS_HPP
#define CONTRANORM_DYNAMICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "contranorm/matrix.hpp"
#include "contranorm/metrics.hpp"
#include "contranorm/norms.hpp"

namespace contranorm {

/// Undirected simple graph. Edges are stored as canonical (u < v) pairs,
/// sorted and de-duplicated. self_loops_added controls whether the GCN
/// operator augments the adjacency with I.
struct GraphTopology {
    std::size_t node_count = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    bool self_loops_added = true;

    void validate() const;
};

enum class Propagation { GcnSymmetric, Attention };
enum class NormPosition { BeforeResidual, AfterResidual };
enum class GraphKind { Ring, Complete, TwoBlockSBM };

/// Full description of a propagation experiment.
struct DynamicsConfig {
    Propagation propagation = Propagation::Attention;
    int depth = 1;
    bool residual = false;
    NormalizerConfig norm;
    NormPosition norm_position = NormPosition::AfterResidual;
    double tau_attn = 1.0;
    std::uint64_t seed = 0;
    bool record_spectrum = false;
    bool gcn_row_normalized = false;  // D⁻¹(A+I) instead of the symmetric operator
    bool orthogonal_mix = false;      // seeded per-layer orthogonal feature mixing

    void validate() const;
};

/// Raised when a representation entry becomes non-finite mid-run. Carries
/// the offending layer and the diagnostics collected so far.
class divergence_error : public std::runtime_error {
public:
    divergence_error(int layer, std::vector<LayerDiagnostics> partial)
        : std::runtime_error("non-finite representation at layer " + std::to_string(layer)),
          layer_(layer),
          partial_(std::move(partial)) {}

    int layer() const noexcept { return layer_; }
    const std::vector<LayerDiagnostics>& partial_diagnostics() const noexcept { return partial_; }

private:
    int layer_;
    std::vector<LayerDiagnostics> partial_;
};

/// Thrown by the file loaders; line numbers are 1-based.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& path, std::size_t line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Symmetrically normalized GCN operator D̃^{-1/2} Â D̃^{-1/2} with
/// Â = A + I when self loops are enabled (row-normalized D̃⁻¹Â behind the
/// flag). Every node must have positive degree in Â.
Matrix gcn_operator(const GraphTopology& g, bool row_normalized = false);

/// Row-stochastic self-similarity operator softmax(HHᵀ / tau).
Matrix attention_operator(const Matrix& h, double tau);

struct StepResult {
    Matrix h;
    std::optional<Matrix> attention;  // populated for Attention propagation
};

/// One propagation layer: h' = P h, then the configured normalization with
/// the before/after-residual placement.
StepResult step(const Matrix& h, const DynamicsConfig& cfg, const GraphTopology* g);

/// Full depth-L propagation. Returns L+1 diagnostics records (layer 0 is the
/// input). Throws divergence_error if any entry becomes non-finite.
std::vector<LayerDiagnostics> run(const Matrix& h0, const DynamicsConfig& cfg,
                                  const GraphTopology* g);

/// Synthetic graphs: deterministic ring/complete, seeded two-block SBM with
/// intra-block probability p_in and inter-block probability p_out.
GraphTopology generate_graph(GraphKind kind, std::size_t n, double p_in, double p_out,
                             std::uint64_t seed);

/// Edge-list file: one "u v" pair per whitespace-separated line, `#` starts
/// a comment, duplicates merged, self-loop lines dropped (the operator adds
/// its own), node count inferred as max id + 1.
GraphTopology load_graph(const std::string& path);

/// Headerless CSV of doubles, one node per row. Ragged or non-numeric rows
/// raise parse_error with the line number.
Matrix load_features(const std::string& path);

}  // namespace contranorm

#endif  // CONTRANORM_DYNAMICS_HPP
