#include "cvmask/backslice.hpp"
#include "cvmask/error.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <json.hpp>

#include <random>

using namespace cvmask;

namespace {

const HolderSet& java_holders() {
    static const HolderSet h = default_holders(Language::Java);
    return h;
}

std::set<int> line_mask(const CodeSnippet& s, const std::set<ViewTag>& views, int line) {
    const auto g = build_views(s, {views, {}});
    for (const auto& st : s.statements()) {
        if (st.start_line == line) return render_line_mask(backslice(st.id, g, java_holders()), s);
    }
    FAIL("no statement on line " << line);
    return {};
}

}  // namespace

TEST_CASE("sum loop masks for the statement on line 7") {
    const auto s = parse(oracle::read_fixture("sum_loop.java"), Language::Java);
    CHECK(line_mask(s, {ViewTag::Dfg}, 7) == std::set<int>{2, 7});
    CHECK(line_mask(s, {ViewTag::Ast}, 7) == std::set<int>{6, 7, 8});
    CHECK(line_mask(s, {ViewTag::Ast, ViewTag::Dfg}, 7) == std::set<int>{2, 5, 6, 7, 8});
}

TEST_CASE("sum loop: the composed mask is strictly larger than either constituent") {
    const auto s = parse(oracle::read_fixture("sum_loop.java"), Language::Java);
    const auto ta = build_views(s, {{ViewTag::Ast}, {}});
    const auto td = build_views(s, {{ViewTag::Dfg}, {}});
    const auto tad = build_views(s, {{ViewTag::Ast, ViewTag::Dfg}, {}});
    const auto a = backslice(5, ta, java_holders()).members;
    const auto d = backslice(5, td, java_holders()).members;
    const auto ad = backslice(5, tad, java_holders()).members;
    CHECK_FALSE(a.count(3));
    CHECK_FALSE(d.count(3));
    CHECK(ad.count(3));  // line 5, `int n`
}

TEST_CASE("isolated statement") {
    const auto s = parse("f();\ng();\n", Language::Java);
    const auto g = build_views(s, {{ViewTag::Dfg}, {}});
    const auto m = backslice(1, g, java_holders());
    CHECK(m.members == std::set<StatementId>{1});
    CHECK(m.seed == 1);
    CHECK(m.view_tags == std::set<ViewTag>{ViewTag::Dfg});
}

TEST_CASE("all masks over a straight-line cfg") {
    const auto s = parse("a();\nb();\nc();\n", Language::Java);
    const auto g = build_views(s, {{ViewTag::Cfg}, {}});
    const auto ms = all_masks(s, g, java_holders());
    REQUIRE(ms.size() == 3);
    CHECK(ms[0].members == std::set<StatementId>{0});
    CHECK(ms[1].members == std::set<StatementId>{0, 1});
    CHECK(ms[2].members == std::set<StatementId>{0, 1, 2});
}

TEST_CASE("empty-edge view gives singletons") {
    const auto s = parse("a();\nb();\nc();\n", Language::Java);
    const CodeViewGraph g(node_universe(s), {}, {ViewTag::Dfg});
    for (const auto& m : all_masks(s, g, java_holders())) CHECK(m.members == std::set<StatementId>{m.seed});
}

TEST_CASE("errors") {
    const auto s = parse("void m() { f(); }", Language::Java);
    const auto g = build_views(s, {{ViewTag::Ast}, {}});
    try {
        (void)backslice(42, g, java_holders());
        FAIL("expected UnknownNode");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownNode);
    }
    const NodeId holder = static_cast<NodeId>(s.statement_count());
    try {
        (void)backslice(holder, g, java_holders());
        FAIL("expected NotAStatement");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotAStatement);
    }
}

TEST_CASE("render_line_mask") {
    const auto s = parse(oracle::read_fixture("sum_loop.java"), Language::Java);
    CHECK(render_line_mask({2, {2}, {}}, s) == std::set<int>{4});
    CHECK(render_line_mask({5, {4, 5}, {}}, s) == std::set<int>{6, 7, 8});
    CHECK(render_line_mask({5, {0, 5}, {}}, s) == std::set<int>{2, 7});
}

TEST_CASE("mask json") {
    const auto s = parse("a = 1;\nb = a;\n", Language::Java);
    const auto g = build_views(s, {{ViewTag::Dfg}, {}});
    const auto doc = nlohmann::json::parse(masks_to_json_string(all_masks(s, g, java_holders()), s));
    REQUIRE(doc.size() == 2);
    CHECK(doc[1]["seed"] == 1);
    CHECK(doc[1]["members"] == nlohmann::json::array({0, 1}));
    CHECK(doc[1]["lines"] == nlohmann::json::array({1, 2}));
}

TEST_CASE("backslice equals brute-force reachability, seeds included, monotone under composition") {
    std::mt19937_64 rng(17);
    oracle::SnippetShape shape;
    shape.max_tokens = 200;
    shape.max_statements = 9;
    const std::vector<std::set<ViewTag>> selections{
        {ViewTag::Ast}, {ViewTag::Cfg}, {ViewTag::Dfg}, {ViewTag::Ast, ViewTag::Dfg}, {ViewTag::Ast, ViewTag::Cfg, ViewTag::Dfg}};
    int graphs = 0;
    for (int trial = 0; trial < 80; ++trial) {
        const auto s = parse(oracle::random_snippet(rng, shape), Language::Java);
        const auto single_a = build_views(s, {{ViewTag::Ast}, {}});
        const auto single_d = build_views(s, {{ViewTag::Dfg}, {true, true}});
        const CodeViewGraph parts[] = {single_a, single_d};
        const auto both = compose(parts);
        for (const auto& views : selections) {
            const auto g = build_views(s, {views, {true, true}});
            if (g.nodes().size() > 15) continue;
            ++graphs;
            for (const auto& st : s.statements()) {
                const auto m = backslice(st.id, g, java_holders());
                CHECK(m.members == oracle::brute_backslice(st.id, g, s.statement_count()));
                CHECK(m.members.count(st.id) == 1);
            }
        }
        for (const auto& st : s.statements()) {
            const auto u = backslice(st.id, both, java_holders()).members;
            for (auto id : backslice(st.id, single_a, java_holders()).members) CHECK(u.count(id));
            for (auto id : backslice(st.id, single_d, java_holders()).members) CHECK(u.count(id));
        }
    }
    CHECK(graphs >= 50);
}
