#include "contranorm/serialize.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace contranorm {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

DiagnosticsWriter::DiagnosticsWriter(std::ostream& out, OutputFormat format, bool with_spectrum,
                                     std::size_t spectrum_len, bool with_variant)
    : out_(out),
      format_(format),
      with_spectrum_(with_spectrum),
      spectrum_len_(spectrum_len),
      with_variant_(with_variant) {
    if (format_ == OutputFormat::Csv) {
        if (with_variant_) out_ << "variant,";
        out_ << "layer_index,variance,effective_rank,uniformity_loss,vicreg_exp_loss,"
                "dim_loss,feature_similarity,attention_similarity";
        if (with_spectrum_) {
            for (std::size_t i = 1; i <= spectrum_len_; ++i) out_ << ",sv_" << i;
        }
        out_ << "\n";
    }
}

void DiagnosticsWriter::write(const LayerDiagnostics& d, const std::string& variant) {
    if (format_ == OutputFormat::Csv) {
        if (with_variant_) out_ << variant << ",";
        out_ << d.layer_index << "," << format_double(d.variance) << ",";
        if (d.effective_rank) out_ << format_double(*d.effective_rank);
        out_ << "," << format_double(d.uniformity_loss) << ","
             << format_double(d.vicreg_exp_loss) << "," << format_double(d.dim_loss) << ",";
        if (d.feature_similarity) out_ << format_double(*d.feature_similarity);
        out_ << ",";
        if (d.attention_similarity) out_ << format_double(*d.attention_similarity);
        if (with_spectrum_) {
            for (std::size_t i = 0; i < spectrum_len_; ++i) {
                out_ << ",";
                if (i < d.singular_values.size()) out_ << format_double(d.singular_values[i]);
            }
        }
        out_ << "\n";
        return;
    }

    out_ << "{";
    if (with_variant_) out_ << "\"variant\":\"" << variant << "\",";
    out_ << "\"layer_index\":" << d.layer_index << ",\"variance\":" << format_double(d.variance);
    if (d.effective_rank) out_ << ",\"effective_rank\":" << format_double(*d.effective_rank);
    out_ << ",\"uniformity_loss\":" << format_double(d.uniformity_loss)
         << ",\"vicreg_exp_loss\":" << format_double(d.vicreg_exp_loss)
         << ",\"dim_loss\":" << format_double(d.dim_loss);
    if (d.feature_similarity) {
        out_ << ",\"feature_similarity\":" << format_double(*d.feature_similarity);
    }
    if (d.attention_similarity) {
        out_ << ",\"attention_similarity\":" << format_double(*d.attention_similarity);
    }
    if (with_spectrum_) {
        out_ << ",\"singular_values\":[";
        for (std::size_t i = 0; i < d.singular_values.size(); ++i) {
            if (i) out_ << ",";
            out_ << format_double(d.singular_values[i]);
        }
        out_ << "]";
    }
    out_ << "}\n";
}

std::string fnv1a64_digest(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string fnv1a64_digest_of_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for digest: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64_digest(bytes);
}

std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["tool_version"] = tool_version;
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = config;
    j["started"] = started;
    j["finished"] = finished;
    j["input_file_digests"] = input_file_digests;
    if (!output_digest.empty()) j["output_digest"] = output_digest;
    return j;
}

void write_manifest(const RunManifest& manifest, const std::string& out_path) {
    const std::string path = out_path + ".manifest.json";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << manifest.to_json().dump(2) << "\n";
}

nlohmann::json suite_to_json(const SuiteResult& result) {
    nlohmann::json j;
    j["suite"] = result.name;
    j["instances_run"] = result.instances_run;
    j["condition_met"] = result.condition_met;
    j["boundary_skipped"] = result.boundary_skipped;
    j["violations"] = result.violations;
    nlohmann::json failures = nlohmann::json::array();
    for (const FailureRecord& f : result.failures) {
        nlohmann::json fj;
        fj["instance_seed"] = f.instance_seed;
        fj["n"] = f.n;
        fj["d"] = f.d;
        fj["s"] = f.s;
        fj["slack"] = f.slack;
        fj["description"] = f.description;
        fj["matrix_entries"] = f.h_entries;
        failures.push_back(std::move(fj));
    }
    j["failures"] = std::move(failures);
    return j;
}

}  // namespace contranorm
