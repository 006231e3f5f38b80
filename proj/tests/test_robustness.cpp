#include "cvmask/error.hpp"
#include "cvmask/pipeline.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace cvmask;

namespace {

MaskConfig everything() {
    MaskConfig c;
    c.views = {ViewTag::Ast, ViewTag::Cfg, ViewTag::Dfg};
    c.last_def = true;
    c.last_use = true;
    return c;
}

// Either a well-formed result or a typed error, never anything else.
void survive(const std::string& src) {
    try {
        const auto r = run_pipeline(src, everything());
        REQUIRE(r.masks.size() == r.snippet.statement_count());
        REQUIRE(r.mask.n() == r.snippet.token_count());
        for (std::size_t i = 0; i < r.mask.n(); ++i) REQUIRE(r.mask.allowed(i, i));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptySource);
    }
}

}  // namespace

TEST_CASE("a class using most of the grammar") {
    const auto r = run_pipeline(oracle::read_fixture("rich_class.java"), everything());
    CHECK_FALSE(r.snippet.parse_degraded());
    std::set<std::string> kinds;
    for (const auto& st : r.snippet.statements()) kinds.insert(st.kind);
    for (const char* k : {"package_declaration", "import_declaration", "field_declaration",
                          "explicit_constructor_invocation", "enhanced_for_statement", "synchronized_statement",
                          "assert_statement", "yield_statement", "try_with_resources_statement", "catch_clause",
                          "throw_statement", "return_statement"}) {
        CHECK_MESSAGE(kinds.count(k) == 1, k);
    }
    // lambda bodies are their own flow regions: no CFG edge leaves `log(p)` for the outer method
    const auto& st = r.snippet.statements();
    for (const auto& e : r.view.edges()) {
        if (e.kind != EdgeKind::Cfg) continue;
        const auto& a = st[static_cast<std::size_t>(e.src)];
        const auto& b = st[static_cast<std::size_t>(e.dst)];
        if (a.start_line == 28) CHECK(b.start_line <= 29);
    }
}

TEST_CASE("every prefix of every fixture survives the pipeline") {
    for (const char* name : {"sum_loop.java", "adjacent_loops.java", "cfg_switch.java", "cfg_try.java", "rich_class.java"}) {
        const std::string src = oracle::read_fixture(name);
        for (std::size_t cut = 0; cut <= src.size(); cut += 3) survive(src.substr(0, cut));
    }
}

TEST_CASE("random junk survives the pipeline") {
    std::mt19937_64 rng(99);
    const std::string alphabet = "abcxyz019 (){};=+-*/<>!&|\"'.,:?@\n\t[]";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::string src(1 + trial % 120, ' ');
        for (auto& c : src) c = alphabet[pick(rng)];
        survive(src);
    }
}
