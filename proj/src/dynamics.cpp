#include "contranorm/dynamics.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "contranorm/rng.hpp"

namespace contranorm {

void GraphTopology::validate() const {
    if (node_count == 0) throw std::invalid_argument("GraphTopology: node_count must be >= 1");
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& [u, v] : edges) {
        if (u >= node_count || v >= node_count) {
            throw std::invalid_argument("GraphTopology: edge endpoint out of range");
        }
        if (u == v) throw std::invalid_argument("GraphTopology: self-loop stored as edge");
        const auto canon = std::minmax(u, v);
        if (!seen.insert({canon.first, canon.second}).second) {
            throw std::invalid_argument("GraphTopology: duplicate edge");
        }
    }
}

void DynamicsConfig::validate() const {
    if (depth < 1) throw std::invalid_argument("DynamicsConfig: depth must be >= 1");
    if (!(tau_attn > 0.0)) throw std::invalid_argument("DynamicsConfig: tau_attn must be positive");
    // norm itself is validated against the feature dimension on first use.
}

Matrix gcn_operator(const GraphTopology& g, bool row_normalized) {
    g.validate();
    const std::size_t n = g.node_count;
    Matrix adj(n, n);
    for (const auto& [u, v] : g.edges) {
        adj(u, v) = 1.0;
        adj(v, u) = 1.0;
    }
    if (g.self_loops_added) {
        for (std::size_t i = 0; i < n; ++i) adj(i, i) = 1.0;
    }
    std::vector<double> degree(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) degree[i] += adj(i, j);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (degree[i] <= 0.0) {
            throw std::invalid_argument("gcn_operator: isolated node " + std::to_string(i) +
                                        " (enable self-loop augmentation)");
        }
    }
    Matrix out(n, n);
    if (row_normalized) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) out(i, j) = adj(i, j) / degree[i];
        }
    } else {
        std::vector<double> inv_sqrt(n);
        for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) out(i, j) = inv_sqrt[i] * adj(i, j) * inv_sqrt[j];
        }
    }
    return out;
}

Matrix attention_operator(const Matrix& h, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("attention_operator: tau must be positive");
    return softmax_rows((1.0 / tau) * gram_rows(h));
}

namespace {

StepResult step_with_operator(const Matrix& h, const DynamicsConfig& cfg,
                              const Matrix* gcn_op, const Matrix* mixing) {
    StepResult res{Matrix(1, 1), std::nullopt};
    Matrix propagated(1, 1);
    if (cfg.propagation == Propagation::Attention) {
        Matrix attn = attention_operator(h, cfg.tau_attn);
        propagated = matmul(attn, h);
        res.attention = std::move(attn);
    } else {
        propagated = matmul(*gcn_op, h);
    }
    if (mixing != nullptr) propagated = matmul(propagated, *mixing);

    if (!cfg.residual) {
        res.h = apply_norm(propagated, cfg.norm);
    } else if (cfg.norm_position == NormPosition::BeforeResidual) {
        res.h = apply_norm(propagated, cfg.norm) + h;
    } else {
        res.h = apply_norm(propagated + h, cfg.norm);
    }
    return res;
}

}  // namespace

StepResult step(const Matrix& h, const DynamicsConfig& cfg, const GraphTopology* g) {
    cfg.validate();
    if (cfg.propagation == Propagation::GcnSymmetric) {
        if (g == nullptr) throw std::invalid_argument("step: GCN propagation requires a graph");
        if (g->node_count != h.rows()) {
            throw std::invalid_argument("step: graph has " + std::to_string(g->node_count) +
                                        " nodes but features have " + std::to_string(h.rows()) +
                                        " rows");
        }
        Matrix op = gcn_operator(*g, cfg.gcn_row_normalized);
        return step_with_operator(h, cfg, &op, nullptr);
    }
    return step_with_operator(h, cfg, nullptr, nullptr);
}

std::vector<LayerDiagnostics> run(const Matrix& h0, const DynamicsConfig& cfg,
                                  const GraphTopology* g) {
    cfg.validate();
    std::optional<Matrix> gcn_op;
    if (cfg.propagation == Propagation::GcnSymmetric) {
        if (g == nullptr) throw std::invalid_argument("run: GCN propagation requires a graph");
        if (g->node_count != h0.rows()) {
            throw std::invalid_argument("run: graph has " + std::to_string(g->node_count) +
                                        " nodes but features have " + std::to_string(h0.rows()) +
                                        " rows");
        }
        gcn_op = gcn_operator(*g, cfg.gcn_row_normalized);
    }

    std::vector<LayerDiagnostics> diags;
    diags.reserve(static_cast<std::size_t>(cfg.depth) + 1);
    diags.push_back(diagnostics(h0, nullptr, cfg.norm.tau, 0));

    Matrix h = h0;
    for (int layer = 1; layer <= cfg.depth; ++layer) {
        std::optional<Matrix> mixing;
        if (cfg.orthogonal_mix) {
            Rng mix_rng(derive_seed(cfg.seed, 0x6d697800u + static_cast<std::uint64_t>(layer)));
            mixing = orthogonal_matrix(h.cols(), mix_rng);
        }
        StepResult res = step_with_operator(h, cfg, gcn_op ? &*gcn_op : nullptr,
                                            mixing ? &*mixing : nullptr);
        // Magnitudes past 1e50 would overflow the Gram computations inside
        // the diagnostics; treat them as divergence too.
        if (!res.h.all_finite() || res.h.max_abs() > 1e50) {
            throw divergence_error(layer, std::move(diags));
        }
        std::vector<Matrix> heads;
        if (res.attention) heads.push_back(std::move(*res.attention));
        diags.push_back(diagnostics(res.h, heads.empty() ? nullptr : &heads, cfg.norm.tau, layer));
        h = std::move(res.h);
    }
    return diags;
}

GraphTopology generate_graph(GraphKind kind, std::size_t n, double p_in, double p_out,
                             std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_graph: n must be >= 1");
    GraphTopology g;
    g.node_count = n;
    g.self_loops_added = true;
    switch (kind) {
        case GraphKind::Ring: {
            for (std::uint32_t i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1});
            if (n > 2) g.edges.push_back({0, static_cast<std::uint32_t>(n - 1)});
            break;
        }
        case GraphKind::Complete: {
            for (std::uint32_t i = 0; i < n; ++i) {
                for (std::uint32_t j = i + 1; j < n; ++j) g.edges.push_back({i, j});
            }
            break;
        }
        case GraphKind::TwoBlockSBM: {
            if (!(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0)) {
                throw std::invalid_argument(
                    "generate_graph: need 0 <= p_out <= p_in <= 1 for the SBM");
            }
            const std::size_t half = n / 2;
            Rng rng(seed);
            for (std::uint32_t i = 0; i < n; ++i) {
                for (std::uint32_t j = i + 1; j < n; ++j) {
                    const bool same_block = (i < half) == (j < half);
                    const double p = same_block ? p_in : p_out;
                    if (rng.uniform01() < p) g.edges.push_back({i, j});
                }
            }
            break;
        }
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.validate();
    return g;
}

GraphTopology load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_graph: cannot open " + path);
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::uint32_t max_id = 0;
    bool any_node = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        long long u = 0, v = 0;
        if (!(ss >> u)) continue;  // blank or comment-only line
        if (!(ss >> v)) throw parse_error(path, lineno, "expected two node ids");
        std::string extra;
        if (ss >> extra) throw parse_error(path, lineno, "trailing tokens after edge");
        if (u < 0 || v < 0) throw parse_error(path, lineno, "negative node id");
        if (u > 0xFFFFFFFFLL || v > 0xFFFFFFFFLL) throw parse_error(path, lineno, "node id too large");
        const auto uu = static_cast<std::uint32_t>(u);
        const auto vv = static_cast<std::uint32_t>(v);
        any_node = true;
        max_id = std::max({max_id, uu, vv});
        if (uu == vv) continue;  // self-loops come from the operator, not the file
        edges.insert({std::min(uu, vv), std::max(uu, vv)});
    }
    if (!any_node) throw parse_error(path, lineno == 0 ? 1 : lineno, "no edges in file");
    GraphTopology g;
    g.node_count = static_cast<std::size_t>(max_id) + 1;
    g.edges.assign(edges.begin(), edges.end());
    g.self_loops_added = true;
    g.validate();
    return g;
}

Matrix load_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_features: cannot open " + path);
    std::vector<double> entries;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::size_t this_cols = 0;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            errno = 0;
            char* end = nullptr;
            const double value = std::strtod(field.c_str(), &end);
            while (end != nullptr && *end != '\0' && std::isspace(static_cast<unsigned char>(*end))) {
                ++end;
            }
            if (end == field.c_str() || (end != nullptr && *end != '\0') || errno == ERANGE) {
                throw parse_error(path, lineno, "bad numeric field '" + field + "'");
            }
            if (!std::isfinite(value)) throw parse_error(path, lineno, "non-finite value");
            entries.push_back(value);
            ++this_cols;
        }
        if (cols == 0) {
            cols = this_cols;
        } else if (this_cols != cols) {
            throw parse_error(path, lineno,
                              "row has " + std::to_string(this_cols) + " fields, expected " +
                                  std::to_string(cols));
        }
        ++rows;
    }
    if (rows == 0 || cols == 0) {
        throw parse_error(path, lineno == 0 ? 1 : lineno, "no feature rows in file");
    }
    return Matrix(rows, cols, std::move(entries));
}

}  // namespace contranorm
