// cvmask: code-view graphs, statement masks and attention masks for Java snippets.

#include "cvmask/attention_ref.hpp"
#include "cvmask/corpus.hpp"
#include "cvmask/error.hpp"
#include "cvmask/metrics.hpp"
#include "cvmask/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

struct Options {
    std::string views = "dfg";
    bool last_def = false;
    bool last_use = false;
    std::string mask_limit = "0.9";
    std::string strategy = "all";
    std::string out;
    std::string lang = "java";
};

void add_view_flags(CLI::App& cmd, Options& o) {
    cmd.add_option("--views", o.views, "Comma-separated views: ast,cfg,dfg")->capture_default_str();
    cmd.add_flag("--last-def", o.last_def, "Add LAST_DEF edges to the DFG");
    cmd.add_flag("--last-use", o.last_use, "Add LAST_USE edges to the DFG");
    cmd.add_option("--lang", o.lang, "Source language")->capture_default_str();
}

void add_mask_flags(CLI::App& cmd, Options& o) {
    add_view_flags(cmd, o);
    cmd.add_option("--mask-limit", o.mask_limit, "Fallback to full attention above this masked fraction")
        ->capture_default_str();
    cmd.add_option("--strategy", o.strategy, "Layer strategy: all|alternate")->capture_default_str();
}

cvmask::MaskConfig make_config(const Options& o) {
    cvmask::MaskConfig c;
    c.views.clear();
    std::stringstream ss(o.views);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) c.views.insert(cvmask::parse_view_tag(item));
    }
    c.last_def = o.last_def;
    c.last_use = o.last_use;
    c.mask_limit = cvmask::parse_mask_limit(o.mask_limit);
    c.layer_strategy = cvmask::parse_layer_strategy(o.strategy);
    c.validate();
    return c;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cvmask::Error(cvmask::ErrorCode::IoError, "cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw cvmask::Error(cvmask::ErrorCode::IoError, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Writes to <out>/<name> when --out is given, stdout otherwise.
void emit(const Options& o, const std::string& name, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text << "\n";
    } else {
        write_file(fs::path(o.out) / name, text + "\n");
        std::cerr << "wrote " << (fs::path(o.out) / name).string() << "\n";
    }
}

int run_graph(const Options& o, const std::string& file) {
    const auto config = make_config(o);
    const auto snippet = cvmask::parse(read_file(file), cvmask::parse_language(o.lang));
    const auto view = cvmask::build_views(snippet, config.selection());
    emit(o, fs::path(file).stem().string() + ".graph.json", cvmask::to_json_string(view));
    return 0;
}

int run_mask(const Options& o, const std::string& file) {
    const auto config = make_config(o);
    const auto r = cvmask::run_pipeline(read_file(file), config, cvmask::parse_language(o.lang));
    json doc = json::parse(cvmask::sidecar_json(r.mask, config, r.raw_mask.masked_fraction()));
    doc["statement_masks"] = json::parse(cvmask::masks_to_json_string(r.masks, r.snippet));
    json rows = json::array();
    for (std::size_t i = 0; i < r.mask.n(); ++i) {
        const auto row = r.mask.row(i);
        rows.push_back(std::vector<std::uint32_t>(row.begin(), row.end()));
    }
    doc["rows"] = rows;
    const std::string stem = fs::path(file).stem().string();
    if (!o.out.empty()) {
        const auto bytes = cvmask::serialize_mask(r.mask);
        write_file(fs::path(o.out) / (stem + ".amask"),
                   std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    }
    emit(o, stem + ".mask.json", doc.dump(2));
    return 0;
}

int run_batch(const Options& o, const std::string& corpus, unsigned threads) {
    const auto config = make_config(o);
    if (o.out.empty()) throw cvmask::Error(cvmask::ErrorCode::ConfigError, "batch needs --out <dir>");
    const auto manifest =
        cvmask::run_batch(corpus, config, o.out, {cvmask::parse_language(o.lang), threads});
    std::cout << cvmask::format_stats(cvmask::summarize(manifest));
    return 0;
}

int run_stats(const std::string& dir, bool as_json) {
    const auto summary = cvmask::stats(dir);
    std::cout << (as_json ? cvmask::stats_to_json_string(summary) + "\n" : cvmask::format_stats(summary));
    return 0;
}

int run_demo(const Options& o, const std::string& mask_file, int layers, int dim, std::uint64_t seed,
             bool hadamard) {
    const std::string raw = read_file(mask_file);
    const auto mask = cvmask::deserialize_mask(
        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
    cvmask::ToyEncoderConfig c;
    c.layers = layers;
    c.model_dim = dim;
    c.seed = seed;
    c.layer_strategy = cvmask::parse_layer_strategy(o.strategy);
    c.literal_hadamard = hadamard;
    const cvmask::ToyEncoder encoder(c);
    const auto result = encoder.forward(cvmask::random_inputs(mask.n(), dim, seed + 1), mask);
    emit(o, fs::path(mask_file).stem().string() + ".trace.json", cvmask::trace_to_json_string(result.trace, c));
    return 0;
}

std::vector<std::string> words(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

long long to_int(const std::string& w) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(w, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != w.size()) throw cvmask::Error(cvmask::ErrorCode::FormatError, "not an integer: '" + w + "'");
    return v;
}

// Ranks: a JSON array of ints or {"query","rank"} objects, or whitespace-separated ints.
int run_mrr(const std::string& file) {
    const std::string text = read_file(file);
    std::vector<cvmask::QueryRanking> ranks;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::exception& e) {
            throw cvmask::Error(cvmask::ErrorCode::FormatError, e.what());
        }
        for (const auto& item : doc) {
            if (item.is_object()) {
                ranks.push_back({item.value("query", std::to_string(ranks.size())), item.at("rank").get<std::size_t>()});
            } else {
                ranks.push_back({std::to_string(ranks.size()), item.get<std::size_t>()});
            }
        }
    } else {
        for (const auto& w : words(text)) {
            const long long v = to_int(w);
            if (v < 1) throw cvmask::Error(cvmask::ErrorCode::ConfigError, "rank must be at least 1");
            ranks.push_back({std::to_string(ranks.size()), static_cast<std::size_t>(v)});
        }
    }
    std::cout << json{{"queries", ranks.size()}, {"mrr", cvmask::mrr(ranks)}}.dump(2) << "\n";
    return 0;
}

// One "predicted truth" pair per line.
int run_clf(const std::string& file, int classes) {
    const auto w = words(read_file(file));
    if (w.size() % 2 != 0) throw cvmask::Error(cvmask::ErrorCode::FormatError, "expected predicted/truth pairs");
    std::vector<int> pred, truth;
    int top = -1;
    for (std::size_t i = 0; i < w.size(); i += 2) {
        pred.push_back(static_cast<int>(to_int(w[i])));
        truth.push_back(static_cast<int>(to_int(w[i + 1])));
        top = std::max({top, pred.back(), truth.back()});
    }
    if (pred.empty()) throw cvmask::Error(cvmask::ErrorCode::EmptyInput, "no predictions");
    const int k = classes > 0 ? classes : top + 1;
    const auto r = cvmask::classification_metrics(pred, truth, k);
    json per = json::array();
    for (std::size_t c = 0; c < r.per_class.size(); ++c) {
        const auto& m = r.per_class[c];
        per.push_back({{"class", c}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}});
    }
    std::cout << json{{"classes", k},
                      {"macro_f1", r.macro_f1},
                      {"macro_precision", r.macro_precision},
                      {"macro_recall", r.macro_recall},
                      {"accuracy", r.accuracy},
                      {"per_class", per}}
                     .dump(2)
              << "\n";
    return 0;
}

int exit_code_for(cvmask::ErrorCode code) {
    switch (code) {
    case cvmask::ErrorCode::IoError:
    case cvmask::ErrorCode::MissingManifest:
    case cvmask::ErrorCode::FormatError:
    case cvmask::ErrorCode::EmptySource:
        return kExitIo;
    default:
        return kExitConfig;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Statement-level code views and attention masks for Java snippets"};
    app.set_version_flag("--version", std::string(cvmask::kToolVersion));
    app.require_subcommand(1);

    Options o;
    std::string input;

    auto* graph = app.add_subcommand("graph", "Emit the composed code-view graph as JSON");
    graph->add_option("file", input, "Java source file")->required();
    add_view_flags(*graph, o);
    graph->add_option("--out", o.out, "Write <stem>.graph.json here instead of stdout");

    auto* mask = app.add_subcommand("mask", "Emit statement masks and the token attention mask");
    mask->add_option("file", input, "Java source file")->required();
    add_mask_flags(*mask, o);
    mask->add_option("--out", o.out, "Write <stem>.amask and <stem>.mask.json here");

    unsigned threads = 0;
    auto* batch = app.add_subcommand("batch", "Run the full pipeline over a JSONL corpus");
    batch->add_option("corpus", input, "JSONL file with id/code records")->required();
    add_mask_flags(*batch, o);
    batch->add_option("--out", o.out, "Output directory")->required();
    batch->add_option("--threads", threads, "Worker threads, 0 for all cores")->capture_default_str();

    bool stats_json = false;
    auto* stats = app.add_subcommand("stats", "Summarize a finished batch run");
    stats->add_option("dir", input, "Batch output directory")->required();
    stats->add_flag("--json", stats_json, "Print JSON instead of a table");

    int layers = 2;
    int dim = 8;
    std::uint64_t seed = 7;
    bool hadamard = false;
    auto* demo = app.add_subcommand("demo-attn", "Run the toy masked encoder and dump per-layer attention");
    demo->add_option("mask", input, "Serialized .amask file")->required();
    demo->add_option("n", layers, "Number of encoder layers")->required()->check(CLI::PositiveNumber);
    demo->add_option("--strategy", o.strategy, "Layer strategy: all|alternate")->capture_default_str();
    demo->add_option("--dim", dim, "Model width")->capture_default_str();
    demo->add_option("--seed", seed, "Weight and input seed")->capture_default_str();
    demo->add_flag("--hadamard", hadamard, "Multiply normalized attention by the mask, no renormalization");
    demo->add_option("--out", o.out, "Write <stem>.trace.json here instead of stdout");

    std::string kind;
    int classes = 0;
    auto* metrics = app.add_subcommand("metrics", "MRR over ranks or macro-F1 over predictions");
    metrics->add_option("kind", kind, "mrr or clf")->required()->check(CLI::IsMember({"mrr", "clf"}));
    metrics->add_option("file", input, "Input file")->required();
    metrics->add_option("--classes", classes, "Class count for clf (default: largest label + 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*graph) return run_graph(o, input);
        if (*mask) return run_mask(o, input);
        if (*batch) return run_batch(o, input, threads);
        if (*stats) return run_stats(input, stats_json);
        if (*demo) return run_demo(o, input, layers, dim, seed, hadamard);
        if (*metrics) return kind == "mrr" ? run_mrr(input) : run_clf(input, classes);
    } catch (const cvmask::Error& e) {
        std::cerr << "cvmask: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "cvmask: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
