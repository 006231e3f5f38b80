#include "cvmask/corpus.hpp"

#include "cvmask/error.hpp"
#include "cvmask/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <map>
#include <sstream>
#include <thread>

namespace cvmask {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_file(const fs::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

std::string views_label(const std::set<ViewTag>& views) {
    std::string out;
    for (ViewTag t : views) {
        if (!out.empty()) out += '+';
        out += view_tag_name(t);
    }
    return out;
}

std::optional<std::string> optional_text(const json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    return it->dump();
}

RecordEntry process_record(const CorpusLine& line, const MaskConfig& config, const fs::path& mask_dir,
                           Language language) {
    RecordEntry entry;
    entry.line = line.line;
    if (!line.record) {
        entry.id = line.id.empty() ? "line-" + std::to_string(line.line) : line.id;
        entry.status = RecordStatus::Error;
        entry.message = line.error;
        return entry;
    }
    const CorpusRecord& record = *line.record;
    entry.id = record.id;
    try {
        PipelineResult result = run_pipeline(record.code, config, language);
        entry.statements = result.snippet.statement_count();
        entry.tokens = result.snippet.token_count();
        entry.masked_fraction = result.raw_mask.masked_fraction();
        entry.effective_masked_fraction = result.mask.masked_fraction();
        entry.fallback = result.mask.fallback();
        entry.parse_degraded = result.snippet.parse_degraded();
        entry.status = entry.parse_degraded ? RecordStatus::ParseDegraded
                       : entry.fallback     ? RecordStatus::FallbackToFull
                                            : RecordStatus::Ok;
        entry.file_stem = file_stem_for(record.id);
        const auto bytes = serialize_mask(result.mask);
        write_file(mask_dir / (entry.file_stem + ".amask"),
                   std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
        json sidecar = json::parse(sidecar_json(result.mask, config, entry.masked_fraction));
        sidecar["id"] = record.id;
        sidecar["statements"] = entry.statements;
        sidecar["tokens"] = entry.tokens;
        sidecar["parse_degraded"] = entry.parse_degraded;
        sidecar["status"] = record_status_name(entry.status);
        write_file(mask_dir / (entry.file_stem + ".json"), sidecar.dump(2) + "\n");
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        entry.status = RecordStatus::Error;
        entry.file_stem.clear();
        entry.message = e.what();
    }
    return entry;
}

json entry_to_json(const RecordEntry& e) {
    return {
        {"id", e.id},
        {"line", e.line},
        {"status", record_status_name(e.status)},
        {"file", e.file_stem},
        {"masked_fraction", e.masked_fraction},
        {"effective_masked_fraction", e.effective_masked_fraction},
        {"fallback", e.fallback},
        {"parse_degraded", e.parse_degraded},
        {"statements", e.statements},
        {"tokens", e.tokens},
        {"message", e.message},
    };
}

MaskConfig config_from_json(const json& doc) {
    MaskConfig config;
    config.views.clear();
    for (const auto& v : doc.at("views")) config.views.insert(parse_view_tag(v.get<std::string>()));
    config.last_def = doc.at("last_def").get<bool>();
    config.last_use = doc.at("last_use").get<bool>();
    config.mask_limit = doc.at("mask_limit").get<double>();
    config.layer_strategy = parse_layer_strategy(doc.at("layer_strategy").get<std::string>());
    return config;
}

Distribution distribution(const std::vector<double>& values) {
    Distribution d;
    d.count = values.size();
    if (values.empty()) return d;
    d.min = *std::min_element(values.begin(), values.end());
    d.max = *std::max_element(values.begin(), values.end());
    double total = 0.0;
    for (double v : values) total += v;
    d.mean = total / static_cast<double>(values.size());
    return d;
}

} // namespace

std::string_view record_status_name(RecordStatus status) noexcept {
    switch (status) {
    case RecordStatus::Ok: return "ok";
    case RecordStatus::FallbackToFull: return "fallback-to-full";
    case RecordStatus::ParseDegraded: return "parse-degraded";
    case RecordStatus::Error: return "error";
    }
    return "error";
}

RecordStatus parse_record_status(std::string_view name) {
    if (name == "ok") return RecordStatus::Ok;
    if (name == "fallback-to-full") return RecordStatus::FallbackToFull;
    if (name == "parse-degraded") return RecordStatus::ParseDegraded;
    if (name == "error") return RecordStatus::Error;
    throw Error(ErrorCode::FormatError, "unknown record status '" + std::string(name) + "'");
}

std::vector<CorpusLine> read_corpus(const fs::path& input) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read corpus " + input.string());
    std::vector<CorpusLine> lines;
    std::string text;
    std::size_t number = 0;
    while (std::getline(in, text)) {
        ++number;
        if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
        CorpusLine line;
        line.line = number;
        try {
            const json doc = json::parse(text);
            if (!doc.is_object()) throw Error(ErrorCode::FormatError, "record is not a JSON object");
            CorpusRecord record;
            auto id = doc.find("id");
            if (id == doc.end() || id->is_null()) throw Error(ErrorCode::FormatError, "record has no id");
            record.id = id->is_string() ? id->get<std::string>() : id->dump();
            line.id = record.id;
            auto code = doc.find("code");
            if (code == doc.end() || !code->is_string() || code->get<std::string>().empty()) {
                throw Error(ErrorCode::FormatError, "record '" + record.id + "' has no code");
            }
            record.code = code->get<std::string>();
            record.docstring = optional_text(doc, "docstring");
            record.label = optional_text(doc, "label");
            line.record = std::move(record);
        } catch (const json::exception& e) {
            line.error = std::string("FormatError: malformed JSON: ") + e.what();
        } catch (const Error& e) {
            line.error = e.what();
        }
        lines.push_back(std::move(line));
    }
    if (in.bad()) throw Error(ErrorCode::IoError, "failed reading corpus " + input.string());
    return lines;
}

std::size_t histogram_bin(double masked_fraction) noexcept {
    if (!(masked_fraction > 0.0)) return 0;
    const auto bin = static_cast<std::size_t>(std::floor(masked_fraction * static_cast<double>(kHistogramBins)));
    return std::min(bin, kHistogramBins - 1);
}

std::string file_stem_for(std::string_view id) {
    std::string stem;
    bool changed = id.empty();
    for (char c : id) {
        const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        stem += safe ? c : '_';
        changed = changed || !safe;
    }
    if (!stem.empty() && stem.front() == '.') {
        stem.front() = '_';
        changed = true;
    }
    if (stem.size() > 96) {
        stem.resize(96);
        changed = true;
    }
    if (changed) stem += "-" + hex64(fnv1a(id)).substr(0, 8);
    return stem;
}

RunManifest run_batch(const fs::path& input, const MaskConfig& config, const fs::path& output_dir,
                      const BatchOptions& options) {
    config.validate();
    std::vector<CorpusLine> lines = read_corpus(input);

    // The first occurrence of an id wins; later duplicates are rejected.
    std::map<std::string, std::size_t> seen;
    for (CorpusLine& line : lines) {
        if (!line.record) continue;
        auto [it, inserted] = seen.emplace(line.record->id, line.line);
        if (!inserted) {
            line.error = "FormatError: duplicate id '" + line.record->id + "' (first seen on line " +
                         std::to_string(it->second) + ")";
            line.record.reset();
        }
    }

    const fs::path mask_dir = output_dir / "masks";
    std::error_code ec;
    fs::create_directories(mask_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + mask_dir.string() + ": " + ec.message());

    std::vector<RecordEntry> entries(lines.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < lines.size(); i = next++) {
            try {
                entries[i] = process_record(lines[i], config, mask_dir, options.language);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    unsigned threads = options.threads != 0 ? options.threads : std::max(1U, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, lines.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }
    if (failure) std::rethrow_exception(failure);

    RunManifest manifest;
    manifest.config = config;
    manifest.config_digest = config.digest();
    manifest.records = std::move(entries);
    std::sort(manifest.records.begin(), manifest.records.end(), [](const RecordEntry& a, const RecordEntry& b) {
        return std::tie(a.id, a.line) < std::tie(b.id, b.line);
    });
    for (const RecordEntry& e : manifest.records) {
        if (e.status != RecordStatus::Error) ++manifest.histogram[histogram_bin(e.masked_fraction)];
    }
    write_file(output_dir / "manifest.json", manifest_to_json_string(manifest) + "\n");
    return manifest;
}

std::string manifest_to_json_string(const RunManifest& manifest) {
    json records = json::array();
    for (const RecordEntry& e : manifest.records) records.push_back(entry_to_json(e));
    std::vector<std::size_t> histogram(manifest.histogram.begin(), manifest.histogram.end());
    const json doc = {
        {"tool_version", manifest.tool_version},
        {"config", json::parse(manifest.config.canonical_json())},
        {"config_digest", hex64(manifest.config_digest)},
        {"record_count", manifest.records.size()},
        {"records", records},
        {"masked_fraction_histogram", histogram},
    };
    return doc.dump(2);
}

RunManifest read_manifest(const fs::path& output_dir) {
    const fs::path path = output_dir / "manifest.json";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingManifest, "no manifest at " + path.string());
    try {
        const json doc = json::parse(in);
        RunManifest m;
        m.tool_version = doc.at("tool_version").get<std::string>();
        m.config = config_from_json(doc.at("config"));
        m.config_digest = std::stoull(doc.at("config_digest").get<std::string>(), nullptr, 16);
        for (const json& r : doc.at("records")) {
            RecordEntry e;
            e.id = r.at("id").get<std::string>();
            e.line = r.at("line").get<std::size_t>();
            e.status = parse_record_status(r.at("status").get<std::string>());
            e.file_stem = r.at("file").get<std::string>();
            e.masked_fraction = r.at("masked_fraction").get<double>();
            e.effective_masked_fraction = r.at("effective_masked_fraction").get<double>();
            e.fallback = r.at("fallback").get<bool>();
            e.parse_degraded = r.at("parse_degraded").get<bool>();
            e.statements = r.at("statements").get<std::size_t>();
            e.tokens = r.at("tokens").get<std::size_t>();
            e.message = r.at("message").get<std::string>();
            m.records.push_back(std::move(e));
        }
        const auto& hist = doc.at("masked_fraction_histogram");
        if (hist.size() != kHistogramBins) throw Error(ErrorCode::FormatError, "histogram must have 10 bins");
        for (std::size_t k = 0; k < kHistogramBins; ++k) m.histogram[k] = hist[k].get<std::size_t>();
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("malformed manifest: ") + e.what());
    }
}

StatsSummary summarize(const RunManifest& manifest) {
    StatsSummary s;
    s.views = views_label(manifest.config.views);
    s.records = manifest.records.size();
    s.histogram = manifest.histogram;
    std::vector<double> density, fraction, statements;
    for (const RecordEntry& e : manifest.records) {
        if (e.status == RecordStatus::Error) {
            ++s.errors;
            continue;
        }
        ++s.masked;
        if (e.fallback) ++s.fallbacks;
        if (e.parse_degraded) ++s.degraded;
        density.push_back(1.0 - e.effective_masked_fraction);
        fraction.push_back(e.masked_fraction);
        statements.push_back(static_cast<double>(e.statements));
    }
    s.fallback_rate = s.masked == 0 ? 0.0 : static_cast<double>(s.fallbacks) / static_cast<double>(s.masked);
    s.density = distribution(density);
    s.masked_fraction = distribution(fraction);
    s.statements = distribution(statements);
    return s;
}

StatsSummary stats(const fs::path& output_dir) { return summarize(read_manifest(output_dir)); }

std::string format_stats(const StatsSummary& s) {
    std::ostringstream out;
    char buf[160];
    out << "views            " << s.views << "\n";
    out << "records          " << s.records << " (masked " << s.masked << ", errors " << s.errors << ", degraded "
        << s.degraded << ")\n";
    std::snprintf(buf, sizeof buf, "fallback rate    %.4f (%zu of %zu)\n", s.fallback_rate, s.fallbacks, s.masked);
    out << buf;
    auto row = [&](const char* name, const Distribution& d) {
        std::snprintf(buf, sizeof buf, "%-16s mean %.4f  min %.4f  max %.4f  (n=%zu)\n", name, d.mean, d.min, d.max,
                      d.count);
        out << buf;
    };
    row("density", s.density);
    row("masked_fraction", s.masked_fraction);
    row("statements", s.statements);
    out << "masked_fraction histogram\n";
    for (std::size_t k = 0; k < kHistogramBins; ++k) {
        std::snprintf(buf, sizeof buf, "  [%.1f, %.1f%c  %zu\n", static_cast<double>(k) / 10.0,
                      static_cast<double>(k + 1) / 10.0, k + 1 == kHistogramBins ? ']' : ')', s.histogram[k]);
        out << buf;
    }
    return out.str();
}

std::string stats_to_json_string(const StatsSummary& s) {
    auto dist = [](const Distribution& d) {
        return json{{"count", d.count}, {"mean", d.mean}, {"min", d.min}, {"max", d.max}};
    };
    std::vector<std::size_t> histogram(s.histogram.begin(), s.histogram.end());
    const json doc = {
        {"views", s.views},
        {"records", s.records},
        {"masked", s.masked},
        {"errors", s.errors},
        {"parse_degraded", s.degraded},
        {"fallbacks", s.fallbacks},
        {"fallback_rate", s.fallback_rate},
        {"density", dist(s.density)},
        {"masked_fraction", dist(s.masked_fraction)},
        {"statements", dist(s.statements)},
        {"masked_fraction_histogram", histogram},
    };
    return doc.dump(2);
}

} // namespace cvmask
