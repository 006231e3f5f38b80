#include "cvmask/corpus.hpp"
#include "cvmask/error.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <json.hpp>

#include <random>

using namespace cvmask;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path = fs::temp_directory_path() / ("cvmask-" + tag + "-" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string line(const std::string& id, const std::string& code) {
    return nlohmann::json{{"id", id}, {"code", code}}.dump() + "\n";
}

std::string twenty_calls() {
    std::string code;
    for (int i = 0; i < 20; ++i) code += "a" + std::to_string(i) + "();\n";
    return code;
}

}  // namespace

TEST_CASE("three-record corpus") {
    TempDir dir("three");
    oracle::write_text(dir.path / "in.jsonl",
                       line("a", "int x = 1;") + line("b", "x = 2;\ny = x;\n") + line("c", "void m() { f(); }"));
    const auto m = run_batch(dir.path / "in.jsonl", MaskConfig{}, dir.path / "out", {Language::Java, 2});
    REQUIRE(m.records.size() == 3);
    for (const auto& r : m.records) {
        CHECK(r.status == RecordStatus::Ok);
        CHECK(fs::exists(dir.path / "out" / "masks" / (r.file_stem + ".amask")));
        CHECK(fs::exists(dir.path / "out" / "masks" / (r.file_stem + ".json")));
    }
    CHECK(fs::exists(dir.path / "out" / "manifest.json"));
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path / "out" / "masks")) ++files;
    CHECK(files == 6);
    const auto back = read_manifest(dir.path / "out");
    CHECK(manifest_to_json_string(back) == manifest_to_json_string(m));
}

TEST_CASE("fallback and parse-degraded statuses") {
    TempDir dir("status");
    oracle::write_text(dir.path / "in.jsonl",
                       line("sparse", twenty_calls()) + line("broken", "void broken( {\n    int x = ;\n    f(x);\n}\n"));
    const auto m = run_batch(dir.path / "in.jsonl", MaskConfig{}, dir.path / "out");
    REQUIRE(m.records.size() == 2);
    const auto& broken = m.records[0];
    const auto& sparse = m.records[1];
    CHECK(broken.status == RecordStatus::ParseDegraded);
    CHECK_FALSE(broken.file_stem.empty());
    CHECK(sparse.status == RecordStatus::FallbackToFull);
    CHECK(sparse.masked_fraction == doctest::Approx(0.95));
    CHECK(sparse.effective_masked_fraction == 0.0);
    const auto side = nlohmann::json::parse(oracle::read_text(dir.path / "out" / "masks" / (sparse.file_stem + ".json")));
    CHECK(side["fallback"] == true);
    CHECK(side["status"] == "fallback-to-full");
}

TEST_CASE("malformed lines and duplicate ids become errors") {
    TempDir dir("errors");
    oracle::write_text(dir.path / "in.jsonl", line("a", "f();") + "{not json\n\n" + line("a", "g();") +
                                                  "{\"id\": \"nocode\"}\n" + line("c", "   "));
    const auto m = run_batch(dir.path / "in.jsonl", MaskConfig{}, dir.path / "out");
    REQUIRE(m.records.size() == 5);
    std::size_t ok = 0, errors = 0;
    for (const auto& r : m.records) {
        ok += r.status == RecordStatus::Ok;
        errors += r.status == RecordStatus::Error;
    }
    CHECK(ok == 1);
    CHECK(errors == 4);
    CHECK(m.records[0].id == "a");
    CHECK(m.records[0].line == 1);
}

TEST_CASE("config and io errors") {
    TempDir dir("cfg");
    MaskConfig bad;
    bad.views.clear();
    oracle::write_text(dir.path / "in.jsonl", line("a", "f();"));
    try {
        (void)run_batch(dir.path / "in.jsonl", bad, dir.path / "out");
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
    }
    try {
        (void)run_batch(dir.path / "missing.jsonl", MaskConfig{}, dir.path / "out");
        FAIL("expected IoError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoError);
    }
    try {
        (void)stats(dir.path / "nothing-here");
        FAIL("expected MissingManifest");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingManifest);
    }
}

TEST_CASE("determinism across runs and thread counts") {
    TempDir dir("det");
    oracle::write_text(dir.path / "in.jsonl", oracle::desk_corpus(40));
    MaskConfig c;
    c.views = {ViewTag::Ast, ViewTag::Dfg};
    (void)run_batch(dir.path / "in.jsonl", c, dir.path / "one", {Language::Java, 1});
    (void)run_batch(dir.path / "in.jsonl", c, dir.path / "many", {Language::Java, 8});
    for (const auto& e : fs::recursive_directory_iterator(dir.path / "one")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir.path / "one");
        CHECK(oracle::read_text(e.path()) == oracle::read_text(dir.path / "many" / rel));
    }
}

TEST_CASE("file stems") {
    CHECK(file_stem_for("rec-1") == "rec-1");
    const auto odd = file_stem_for("a/b c");
    CHECK(odd.find('/') == std::string::npos);
    CHECK(odd != file_stem_for("a_b_c"));
    CHECK(file_stem_for("a/b c") == odd);
    CHECK(histogram_bin(0.0) == 0);
    CHECK(histogram_bin(0.95) == 9);
    CHECK(histogram_bin(1.0) == 9);
    CHECK(histogram_bin(0.1) == 1);
}

TEST_CASE("stats") {
    TempDir dir("stats");
    SUBCASE("all fallback") {
        oracle::write_text(dir.path / "in.jsonl", line("x", twenty_calls()) + line("y", twenty_calls()));
        (void)run_batch(dir.path / "in.jsonl", MaskConfig{}, dir.path / "out");
        CHECK(stats(dir.path / "out").fallback_rate == 1.0);
    }
    SUBCASE("single statements") {
        oracle::write_text(dir.path / "in.jsonl", line("x", "f();") + line("y", "int z = 3;"));
        (void)run_batch(dir.path / "in.jsonl", MaskConfig{}, dir.path / "out");
        const auto s = stats(dir.path / "out");
        CHECK(s.masked_fraction.mean == 0.0);
        CHECK(s.density.mean == 1.0);
        CHECK(s.histogram[0] == 2);
    }
    SUBCASE("mixed") {
        const std::vector<std::string> codes{"f();\ng();\n", "a = 1;\nb = a;\nc = b;\n", "int q = 1;", twenty_calls(),
                                             "x = 1;\nf();\ny = x;\nz = 2;\n"};
        std::string text;
        for (std::size_t i = 0; i < codes.size(); ++i) text += line("m" + std::to_string(i), codes[i]);
        oracle::write_text(dir.path / "in.jsonl", text);
        (void)run_batch(dir.path / "in.jsonl", MaskConfig{}, dir.path / "out");
        // brute force per record: count allowed cells of the literal mask
        std::array<std::size_t, kHistogramBins> expected{};
        for (const auto& code : codes) {
            const auto sn = parse(code, Language::Java);
            const auto ms = all_masks(sn, build_views(sn, {{ViewTag::Dfg}, {}}), sn.holder_kinds());
            const auto dense = oracle::literal_mask(sn, ms);
            double ones = 0;
            for (const auto& row : dense) {
                for (bool b : row) ones += b;
            }
            const double mf = 1.0 - ones / static_cast<double>(dense.size() * dense.size());
            ++expected[std::min<std::size_t>(9, static_cast<std::size_t>(mf * 10))];
        }
        const auto s = stats(dir.path / "out");
        CHECK(s.histogram == expected);
        CHECK(s.records == 5);
        CHECK(s.fallbacks == 1);
        CHECK(format_stats(s) == format_stats(stats(dir.path / "out")));
        const auto doc = nlohmann::json::parse(stats_to_json_string(s));
        CHECK(doc["records"] == 5);
    }
}
