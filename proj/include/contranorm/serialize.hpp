#ifndef CONTRANORM_SERIALIZE_HPP
#define CONTRANORM_SERIALIZE_HPP

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "contranorm/metrics.hpp"
#include "contranorm/verify.hpp"

namespace contranorm {

inline constexpr const char* kToolVersion = "0.1.0";

enum class OutputFormat { JsonLines, Csv };

/// 17-significant-digit decimal rendering: round-trip exact for doubles,
/// shared by the CSV and JSON writers so both formats carry identical values.
std::string format_double(double v);

/// Streams LayerDiagnostics records as JSON lines or CSV. Absent optional
/// fields are omitted (JSON) or left empty (CSV), never zero-filled. When a
/// variant label is supplied the records carry a leading variant key/column.
class DiagnosticsWriter {
public:
    DiagnosticsWriter(std::ostream& out, OutputFormat format, bool with_spectrum,
                      std::size_t spectrum_len, bool with_variant);

    void write(const LayerDiagnostics& d, const std::string& variant = "");

private:
    std::ostream& out_;
    OutputFormat format_;
    bool with_spectrum_;
    std::size_t spectrum_len_;
    bool with_variant_;
};

/// FNV-1a 64-bit content hashes, rendered as "fnv1a64:<16 hex digits>".
std::string fnv1a64_digest(const std::string& bytes);
std::string fnv1a64_digest_of_file(const std::string& path);

std::string iso8601_utc_now();

/// Reproducibility sidecar written next to every output file. The echoed
/// config plus the seed fully determine the output bytes.
struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string command;
    std::uint64_t seed = 0;
    nlohmann::json config = nlohmann::json::object();
    std::string started;
    std::string finished;
    std::map<std::string, std::string> input_file_digests;
    std::string output_digest;

    nlohmann::json to_json() const;
};

/// Writes <out_path>.manifest.json.
void write_manifest(const RunManifest& manifest, const std::string& out_path);

nlohmann::json suite_to_json(const SuiteResult& result);

}  // namespace contranorm

#endif  // CONTRANORM_SERIALIZE_HPP
