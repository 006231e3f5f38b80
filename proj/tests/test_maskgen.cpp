#include "cvmask/error.hpp"
#include "cvmask/maskgen.hpp"
#include "cvmask/pipeline.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <json.hpp>

#include <random>
#include <sstream>

using namespace cvmask;

namespace {

std::vector<StatementMask> masks_for(const CodeSnippet& s, const std::set<ViewTag>& views) {
    return all_masks(s, build_views(s, {views, {}}), s.holder_kinds());
}

AttentionMask random_block_mask(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::vector<std::uint32_t>> rows(n);
    std::bernoulli_distribution coin(0.3);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || coin(rng)) rows[i].push_back(static_cast<std::uint32_t>(j));
        }
    }
    return AttentionMask::from_rows(rows);
}

}  // namespace

TEST_CASE("single statement gives all ones") {
    const auto s = parse("int x = 1;", Language::Java);
    const auto m = attention_gen(s, masks_for(s, {ViewTag::Dfg}));
    CHECK(m == AttentionMask::all_ones(5));
    CHECK(m.density() == 1.0);
}

TEST_CASE("independent statements are block diagonal") {
    const auto s = parse("f();\ng(y);\n", Language::Java);
    const auto m = attention_gen(s, masks_for(s, {ViewTag::Dfg}));
    REQUIRE(m.n() == 9);
    for (std::size_t i = 0; i < 9; ++i) {
        for (std::size_t j = 0; j < 9; ++j) CHECK(m.allowed(i, j) == ((i < 4) == (j < 4)));
    }
    CHECK(m.masked_fraction() == doctest::Approx(1.0 - (16.0 + 25.0) / 81.0).epsilon(1e-15));
}

TEST_CASE("sum loop: rows of line 7 allow line 2, 5, 6, 7, 8 tokens") {
    const auto s = parse(oracle::read_fixture("sum_loop.java"), Language::Java);
    const auto m = attention_gen(s, masks_for(s, {ViewTag::Ast, ViewTag::Dfg}));
    for (const auto& t : s.tokens()) {
        if (t.line != 7) continue;
        std::set<int> lines;
        for (std::uint32_t j : m.row(t.index)) {
            if (s.tokens()[j].owner != kUnowned) lines.insert(s.tokens()[j].line);
        }
        CHECK(lines == std::set<int>{2, 5, 6, 7, 8});
    }
}

TEST_CASE("mask mismatch") {
    const auto s = parse("f();\ng();\n", Language::Java);
    auto ms = masks_for(s, {ViewTag::Dfg});
    ms[0].members.insert(7);
    CHECK_THROWS_AS(attention_gen(s, ms), Error);
    ms.pop_back();
    CHECK_THROWS_AS(attention_gen(s, ms), Error);
}

TEST_CASE("attention_gen equals the literal double loop; statement rows agree") {
    std::mt19937_64 rng(29);
    oracle::SnippetShape shape;
    const std::vector<std::set<ViewTag>> selections{{ViewTag::Ast}, {ViewTag::Cfg}, {ViewTag::Dfg}, {ViewTag::Ast, ViewTag::Dfg}};
    for (int trial = 0; trial < 60; ++trial) {
        const auto s = parse(oracle::random_snippet(rng, shape), Language::Java);
        REQUIRE(s.token_count() <= 30);
        for (const auto& views : selections) {
            const auto ms = masks_for(s, views);
            const auto m = attention_gen(s, ms);
            CHECK(oracle::same_as_dense(m, oracle::literal_mask(s, ms)));
            for (std::size_t i = 0; i < m.n(); ++i) CHECK(m.allowed(i, i));
            for (std::size_t i = 0; i < m.n(); ++i) {
                for (std::size_t k = 0; k < m.n(); ++k) {
                    if (s.tokens()[i].owner == kUnowned || s.tokens()[i].owner != s.tokens()[k].owner) continue;
                    for (std::size_t j = 0; j < m.n(); ++j) {
                        if (s.tokens()[j].owner != kUnowned) CHECK(m.allowed(i, j) == m.allowed(k, j));
                    }
                }
            }
            CHECK(m.masked_fraction() == doctest::Approx(1.0 - static_cast<double>(m.nnz()) /
                                                                     static_cast<double>(m.n() * m.n())));
        }
    }
}

TEST_CASE("mask limit") {
    std::vector<std::vector<std::uint32_t>> rows(20);
    for (std::uint32_t i = 0; i < 20; ++i) rows[i] = {i};
    const auto sparse = AttentionMask::from_rows(rows);  // masked_fraction 0.95
    CHECK(sparse.masked_fraction() == doctest::Approx(0.95));
    const auto out = apply_mask_limit(sparse, 0.9);
    CHECK(out.fallback());
    CHECK(out.nnz() == 400);
    CHECK(apply_mask_limit(out, 0.9) == out);
    CHECK(apply_mask_limit(sparse, 0.95) == sparse);

    std::vector<std::vector<std::uint32_t>> half(2);
    half[0] = {0};
    half[1] = {1};
    const auto m = AttentionMask::from_rows(half);  // 0.5
    CHECK(apply_mask_limit(m, 0.7) == m);
    const auto ones = AttentionMask::all_ones(6);
    for (double limit : {0.1, 0.7, 1.0}) CHECK(apply_mask_limit(ones, limit) == ones);
}

TEST_CASE("mask limit parsing and config") {
    CHECK(parse_mask_limit("0.7") == 0.7);
    CHECK(parse_mask_limit("0.85") == 0.85);
    CHECK(parse_mask_limit("1") == 1.0);
    for (const char* bad : {"0", "1.5", "-0.2", "abc", ""}) CHECK_THROWS_AS(parse_mask_limit(bad), Error);
    MaskConfig c;
    c.views.clear();
    CHECK_THROWS_AS(c.validate(), Error);
    MaskConfig a, b;
    CHECK(a.digest() == b.digest());
    b.last_use = true;
    CHECK(a.digest() != b.digest());
    CHECK(parse_layer_strategy("alternate") == LayerStrategy::Alternate);
    CHECK_THROWS_AS(parse_layer_strategy("odd"), Error);
}

TEST_CASE("expand_subwords") {
    std::mt19937_64 rng(2);
    const auto m = random_block_mask(rng, 5);
    CHECK(expand_subwords(m, {{1, 1, 1, 1, 1}, 0, 0}) == m);

    std::vector<std::vector<std::uint32_t>> diag{{0}, {1}};
    const auto e = expand_subwords(AttentionMask::from_rows(diag), {{2, 1}, 0, 0});
    const bool expected[3][3] = {{true, true, false}, {true, true, false}, {false, false, true}};
    REQUIRE(e.n() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) CHECK(e.allowed(i, j) == expected[i][j]);
    }

    const auto p = expand_subwords(m, {{1, 2, 1, 3, 1}, 1, 1});
    REQUIRE(p.n() == 10);
    for (std::size_t j = 0; j < p.n(); ++j) {
        CHECK(p.allowed(0, j));
        CHECK(p.allowed(j, 0));
        CHECK(p.allowed(9, j));
    }
    // density: allowed (i,j) weighted by piece counts plus special rows/cols
    const std::vector<double> c{1, 2, 1, 3, 1};
    double cells = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::uint32_t j : m.row(i)) cells += c[i] * c[j];
    }
    cells += 100 - 64;  // specials: N'^2 - (N' - 2)^2
    CHECK(p.density() == doctest::Approx(cells / 100.0).epsilon(1e-15));

    CHECK_THROWS_AS(expand_subwords(m, {{1, 1}, 0, 0}), Error);
    CHECK_THROWS_AS(expand_subwords(m, {{1, 1, 0, 1, 1}, 0, 0}), Error);
}

TEST_CASE("serialization layout") {
    std::vector<std::vector<std::uint32_t>> id{{0}, {1}, {2}};
    const auto m = AttentionMask::from_rows(id);
    CHECK(m.row_offsets() == std::vector<std::uint64_t>{0, 1, 2, 3});
    CHECK(m.columns() == std::vector<std::uint32_t>{0, 1, 2});
    const auto ones = AttentionMask::all_ones(2);
    CHECK(ones.row_offsets() == std::vector<std::uint64_t>{0, 2, 4});
    CHECK(ones.columns() == std::vector<std::uint32_t>{0, 1, 0, 1});

    auto tagged = ones;
    tagged.set_fallback(true);
    tagged.set_config_digest(0x0102030405060708ULL);
    const auto bytes = serialize_mask(tagged);
    // 4 magic + 4 version + 4 flags + 8 n + 8 nnz + 8 density + 8 digest + 3*8 offsets + 4*4 columns
    REQUIRE(bytes.size() == 44 + 24 + 16);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "AMSK");
    CHECK(bytes[4] == 1);
    CHECK(bytes[8] == 1);
    CHECK(bytes[12] == 2);
    CHECK(bytes[36] == 0x08);
    CHECK(bytes[43] == 0x01);
    CHECK(deserialize_mask(bytes) == tagged);

    std::ostringstream os;
    serialize_mask(tagged, os);
    CHECK(os.str() == std::string(bytes.begin(), bytes.end()));
}

TEST_CASE("serialization round trip and corruption") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        auto m = random_block_mask(rng, 1 + trial % 17);
        m.set_config_digest(rng());
        m.set_fallback(trial % 2 == 0);
        const auto bytes = serialize_mask(m);
        CHECK(deserialize_mask(bytes) == m);
        auto bad = bytes;
        bad[0] = 'X';
        CHECK_THROWS_AS(deserialize_mask(bad), Error);
        bad = bytes;
        bad.pop_back();
        CHECK_THROWS_AS(deserialize_mask(bad), Error);
    }
}

TEST_CASE("csr validation") {
    CHECK_THROWS_AS(AttentionMask(2, {0, 1}, {0}), Error);
    CHECK_THROWS_AS(AttentionMask(2, {0, 2, 2}, {1, 0}), Error);
    CHECK_THROWS_AS(AttentionMask(1, {0, 1}, {3}), Error);
}

TEST_CASE("sidecar") {
    MaskConfig c;
    c.views = {ViewTag::Ast, ViewTag::Dfg};
    const auto r = run_pipeline(oracle::read_fixture("sum_loop.java"), c);
    const auto doc = nlohmann::json::parse(sidecar_json(r.mask, c, r.raw_mask.masked_fraction()));
    CHECK(doc["n"] == r.mask.n());
    CHECK(doc["fallback"] == r.mask.fallback());
    CHECK(doc.contains("config"));
    CHECK(r.mask.config_digest() == c.digest());
}
