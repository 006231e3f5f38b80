#pragma once

// Batch processing of JSONL snippet corpora and summaries of finished runs.

#include "cvmask/maskgen.hpp"
#include "cvmask/syntax_frontend.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cvmask {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// One JSONL line: {"id": ..., "code": ..., "docstring"?: ..., "label"?: ...}.
/// Other fields are ignored.
struct CorpusRecord {
    std::string id;
    std::string code;
    std::optional<std::string> docstring;
    std::optional<std::string> label;
};

enum class RecordStatus { Ok, FallbackToFull, ParseDegraded, Error };

std::string_view record_status_name(RecordStatus status) noexcept;
RecordStatus parse_record_status(std::string_view name);

struct RecordEntry {
    std::string id;
    std::size_t line = 0;  // 1-based line in the input file
    RecordStatus status = RecordStatus::Ok;
    std::string file_stem;  // empty when no mask was written
    double masked_fraction = 0.0;            // before the masking limit
    double effective_masked_fraction = 0.0;  // after it
    bool fallback = false;
    bool parse_degraded = false;
    std::size_t statements = 0;
    std::size_t tokens = 0;
    std::string message;
};

inline constexpr std::size_t kHistogramBins = 10;

struct RunManifest {
    std::string tool_version{kToolVersion};
    MaskConfig config;
    std::uint64_t config_digest = 0;
    std::vector<RecordEntry> records;  // sorted by id, then line
    std::array<std::size_t, kHistogramBins> histogram{};  // raw masked_fraction, [k/10, (k+1)/10)
};

struct BatchOptions {
    Language language = Language::Java;
    unsigned threads = 0;  // 0: hardware concurrency
};

/// Reads records; malformed lines are returned as errors rather than thrown.
struct CorpusLine {
    std::size_t line = 0;
    std::string id;  // set whenever the line carried an id
    std::optional<CorpusRecord> record;
    std::string error;
};
std::vector<CorpusLine> read_corpus(const std::filesystem::path& input);

/// Runs the full pipeline per record and writes <out>/masks/<stem>.amask,
/// <out>/masks/<stem>.json and, last, <out>/manifest.json.
/// Throws Error{IoError} / Error{ConfigError}; per-record failures become statuses.
RunManifest run_batch(const std::filesystem::path& input, const MaskConfig& config,
                      const std::filesystem::path& output_dir, const BatchOptions& options = {});

std::size_t histogram_bin(double masked_fraction) noexcept;
/// File-name-safe stem; ids that need escaping get a hash suffix.
std::string file_stem_for(std::string_view id);

std::string manifest_to_json_string(const RunManifest& manifest);
/// Throws Error{MissingManifest} or Error{FormatError}.
RunManifest read_manifest(const std::filesystem::path& output_dir);

struct Distribution {
    std::size_t count = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct StatsSummary {
    std::string views;  // e.g. "AST+DFG"
    std::size_t records = 0;
    std::size_t masked = 0;  // records that produced a mask
    std::size_t errors = 0;
    std::size_t degraded = 0;
    std::size_t fallbacks = 0;
    double fallback_rate = 0.0;
    Distribution density;          // effective mask density
    Distribution masked_fraction;  // before the limit
    Distribution statements;
    std::array<std::size_t, kHistogramBins> histogram{};
};

StatsSummary stats(const std::filesystem::path& output_dir);
StatsSummary summarize(const RunManifest& manifest);
std::string format_stats(const StatsSummary& summary);
std::string stats_to_json_string(const StatsSummary& summary);

} // namespace cvmask
