#include "cvmask/error.hpp"
#include "cvmask/syntax_frontend.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace cvmask;

namespace {

std::vector<std::string> texts(const CodeSnippet& s) {
    std::vector<std::string> out;
    for (const auto& t : s.tokens()) out.push_back(t.text);
    return out;
}

std::string squeeze(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    }
    return out;
}

}  // namespace

TEST_CASE("single declaration") {
    const auto s = parse("int x = 1;", Language::Java);
    REQUIRE(s.statement_count() == 1);
    CHECK(s.statements()[0].kind == "local_variable_declaration");
    CHECK(texts(s) == std::vector<std::string>{"int", "x", "=", "1", ";"});
    const auto table = token_table(s);
    REQUIRE(table.size() == 5);
    for (const auto& [text, owner] : table) CHECK(owner == 0);
    CHECK_FALSE(s.parse_degraded());
}

TEST_CASE("three straight-line statements partition the tokens") {
    const auto s = parse("void m() {\n  int a = 1;\n  a++;\n  f(a);\n}\n", Language::Java);
    REQUIRE(s.statement_count() == 3);
    std::vector<std::size_t> seen;
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(s.statements()[k].id == static_cast<StatementId>(k));
        CHECK(s.statements()[k].start_line == static_cast<int>(k) + 2);
        seen.insert(seen.end(), s.statements()[k].direct_token_ids.begin(), s.statements()[k].direct_token_ids.end());
    }
    // hand count: int a = 1 ; | a ++ ; | f ( a ) ;
    CHECK(s.statements()[0].direct_token_ids.size() == 5);
    CHECK(s.statements()[1].direct_token_ids.size() == 3);
    CHECK(s.statements()[2].direct_token_ids.size() == 5);
    // void m ( ) { } are outside every statement
    CHECK(s.token_count() == 13 + 6);
    std::size_t unowned = 0;
    for (const auto& t : s.tokens()) unowned += t.owner == kUnowned;
    CHECK(unowned == 6);
}

TEST_CASE("adjacent loops: the first for-loop spans lines 5-12 with nested statements") {
    const auto s = parse(oracle::read_fixture("adjacent_loops.java"), Language::Java);
    const auto it = std::find_if(s.statements().begin(), s.statements().end(),
                                 [](const Statement& st) { return st.kind == "for_statement"; });
    REQUIRE(it != s.statements().end());
    CHECK(it->start_line == 5);
    CHECK(it->end_line == 12);
    std::size_t nested = 0;
    for (const auto& st : s.statements()) nested += st.enclosing == it->id;
    CHECK(nested >= 3);
}

TEST_CASE("sum loop: line 7 tokens belong to one statement") {
    const auto s = parse(oracle::read_fixture("sum_loop.java"), Language::Java);
    std::set<StatementId> owners;
    for (const auto& t : s.tokens()) {
        if (t.line == 7) owners.insert(t.owner);
    }
    REQUIRE(owners.size() == 1);
    const auto& st = s.statements()[static_cast<std::size_t>(*owners.begin())];
    CHECK(st.start_line == 7);
    CHECK(st.end_line == 7);
}

TEST_CASE("compound statements own only header and delimiter tokens") {
    const auto s = parse(oracle::read_fixture("sum_loop.java"), Language::Java);
    const auto& loop = s.statements()[4];
    REQUIRE(loop.kind == "for_statement");
    std::set<int> lines;
    for (auto k : loop.direct_token_ids) lines.insert(s.tokens()[k].line);
    CHECK(lines == std::set<int>{6, 8});
}

TEST_CASE("import lines are statements") {
    const auto s = parse("import java.util.List;\nclass A { void f() { g(); } }\n", Language::Java);
    REQUIRE(s.statement_count() >= 2);
    CHECK(s.statements()[0].kind == "import_declaration");
    for (const auto& t : s.tokens()) {
        if (t.line == 1) CHECK(t.owner == 0);
    }
}

TEST_CASE("default holders") {
    const HolderSet h = default_holders(Language::Java);
    CHECK(h.contains("block"));
    CHECK_FALSE(h.contains("for_statement"));
    CHECK(h == default_holders(Language::Java));
    CHECK(h.kinds() == std::set<std::string, std::less<>>{"block", "class_body", "program", "method_declaration",
                                                         "constructor_declaration", "class_declaration",
                                                         "switch_block"});
}

TEST_CASE("errors") {
    CHECK_THROWS_AS(parse_language("cobol"), Error);
    try {
        parse_language("csharp");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedLanguage);
    }
    try {
        (void)parse("   // only a comment\n", Language::Java);
        FAIL("expected EmptySource");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptySource);
    }
    CHECK(parse_language("JAVA") == Language::Java);
}

TEST_CASE("syntax errors degrade instead of failing") {
    const auto s = parse("void broken( {\n    int x = ;\n    f(x);\n}\n", Language::Java);
    CHECK(s.parse_degraded());
    CHECK(s.token_count() > 0);
    CHECK(s.statement_count() > 0);
}

TEST_CASE("round trip, ownership partition and determinism on random snippets") {
    std::mt19937_64 rng(11);
    oracle::SnippetShape shape;
    shape.max_tokens = 80;
    for (int trial = 0; trial < 60; ++trial) {
        const std::string src = "/* lead */ " + oracle::random_snippet(rng, shape) + "// tail\n";
        const auto s = parse(src, Language::Java);
        CHECK(reconstruct_source(s) == src);

        for (std::size_t k = 0; k < s.token_count(); ++k) {
            const auto& t = s.tokens()[k];
            CHECK(t.index == k);
            CHECK(src.substr(t.start_byte, t.end_byte - t.start_byte) == t.text);
            if (k > 0) CHECK(s.tokens()[k - 1].end_byte <= t.start_byte);
        }
        std::vector<int> hits(s.token_count(), 0);
        for (const auto& st : s.statements()) {
            CHECK(st.start_line <= st.end_line);
            CHECK(st.start_byte <= st.end_byte);
            for (auto k : st.direct_token_ids) {
                ++hits[k];
                CHECK(s.tokens()[k].owner == st.id);
            }
            // transitive tokens reconstruct the statement slice modulo whitespace
            std::string joined;
            for (auto k : transitive_tokens(s, st.id)) joined += s.tokens()[k].text;
            std::string slice = src.substr(st.start_byte, st.end_byte - st.start_byte);
            CHECK(squeeze(joined) == squeeze(slice));
        }
        for (std::size_t k = 0; k < s.token_count(); ++k) {
            CHECK(hits[k] == (s.tokens()[k].owner == kUnowned ? 0 : 1));
        }
        // nested or disjoint spans
        for (const auto& a : s.statements()) {
            for (const auto& b : s.statements()) {
                const bool disjoint = a.end_byte <= b.start_byte || b.end_byte <= a.start_byte;
                const bool a_in_b = b.start_byte <= a.start_byte && a.end_byte <= b.end_byte;
                const bool b_in_a = a.start_byte <= b.start_byte && b.end_byte <= a.end_byte;
                CHECK((disjoint || a_in_b || b_in_a));
            }
        }
        CHECK(to_json_string(s) == to_json_string(parse(src, Language::Java)));
    }
}
