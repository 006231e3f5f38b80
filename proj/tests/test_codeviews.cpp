#include "cvmask/codeviews.hpp"
#include "cvmask/error.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace cvmask;

namespace {

int line_of(const CodeSnippet& s, NodeId id) { return s.statements()[static_cast<std::size_t>(id)].start_line; }

std::set<std::pair<int, int>> line_edges(const CodeSnippet& s, const CodeViewGraph& g, EdgeKind kind) {
    std::set<std::pair<int, int>> out;
    for (const auto& e : g.edges()) {
        if (e.kind != kind) continue;
        if (e.src >= static_cast<NodeId>(s.statement_count()) || e.dst >= static_cast<NodeId>(s.statement_count())) {
            continue;
        }
        out.insert({line_of(s, e.src), line_of(s, e.dst)});
    }
    return out;
}

std::set<std::pair<NodeId, NodeId>> pairs(const CodeViewGraph& g, EdgeKind kind) {
    std::set<std::pair<NodeId, NodeId>> out;
    for (const auto& e : g.edges()) {
        if (e.kind == kind) out.insert({e.src, e.dst});
    }
    return out;
}

bool is_acyclic(const CodeViewGraph& g, EdgeKind kind) {
    const auto n = g.nodes().size();
    std::vector<int> indegree(n, 0);
    for (const auto& e : g.edges()) {
        if (e.kind == kind) ++indegree[static_cast<std::size_t>(e.dst)];
    }
    std::vector<NodeId> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] == 0) ready.push_back(static_cast<NodeId>(i));
    }
    std::size_t done = 0;
    while (!ready.empty()) {
        const NodeId v = ready.back();
        ready.pop_back();
        ++done;
        for (NodeId w : g.successors(v, kind)) {
            if (--indegree[static_cast<std::size_t>(w)] == 0) ready.push_back(w);
        }
    }
    return done == n;
}

std::vector<std::set<std::string>> gens(const DefUseFacts& f) { return f.gen; }

const char* const kCfgFixtures[] = {
    "sum_loop.java",
    "adjacent_loops.java",
    "batch_flush.java",
    "cfg_switch.java",
    "cfg_try.java",
    "cfg_labeled.java",
};

}  // namespace

TEST_CASE("ast view: single statement under the root holder") {
    const auto s = parse("int x = 1;", Language::Java);
    const auto g = build_ast_view(s, default_holders(Language::Java));
    REQUIRE(g.edges().size() == 1);
    const Edge e = *g.edges().begin();
    CHECK(e.dst == 0);
    CHECK(g.node(e.src).kind == "program");
    CHECK(get_parents(e.src, g).empty());
}

TEST_CASE("ast view: siblings share a parent and are not ancestors of each other") {
    const auto s = parse("void m() {\n  int a = 1;\n  f(a);\n}\n", Language::Java);
    const auto g = build_ast_view(s, default_holders(Language::Java));
    const auto p0 = get_parents(0, g);
    const auto p1 = get_parents(1, g);
    CHECK(p0 == p1);
    CHECK(p0.size() == 1);
    CHECK(std::find(p0.begin(), p0.end(), 1) == p0.end());
    CHECK(is_acyclic(g, EdgeKind::Ast));
}

TEST_CASE("ast view: sum loop parent chain") {
    const auto s = parse(oracle::read_fixture("sum_loop.java"), Language::Java);
    const auto g = build_ast_view(s, default_holders(Language::Java));
    // line 7 -> body block -> for statement at lines 6-8
    const auto up = get_parents(5, g);
    REQUIRE(up.size() == 1);
    CHECK(g.node(up[0]).kind == "block");
    const auto up2 = get_parents(up[0], g);
    REQUIRE(up2.size() == 1);
    CHECK(up2[0] == 4);
    CHECK(g.node(4).start_line == 6);
    CHECK(g.node(4).end_line == 8);
    // every node has at most one AST parent
    for (const auto& n : g.nodes()) CHECK(get_parents(n.id, g).size() <= 1);
}

TEST_CASE("ast view needs the parse-time holders") {
    const auto s = parse("int x = 1;", Language::Java);
    CHECK_THROWS_AS(build_ast_view(s, HolderSet({"block"})), Error);
}

TEST_CASE("cfg: straight line") {
    const auto s = parse("void m() {\n  int a = 1;\n  a++;\n  f(a);\n}\n", Language::Java);
    const auto g = build_cfg(s);
    CHECK(pairs(g, EdgeKind::Cfg) == std::set<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}});
}

TEST_CASE("cfg: while followed by a statement") {
    const auto s = parse("while (c) { s(); }\nt();\n", Language::Java);
    REQUIRE(s.statement_count() == 3);
    CHECK(pairs(build_cfg(s), EdgeKind::Cfg) == std::set<std::pair<NodeId, NodeId>>{{0, 1}, {1, 0}, {0, 2}});
}

TEST_CASE("cfg: adjacent loops back-edge to the loop header") {
    const auto s = parse(oracle::read_fixture("adjacent_loops.java"), Language::Java);
    CHECK(line_edges(s, build_cfg(s), EdgeKind::Cfg).count({11, 5}) == 1);
}

TEST_CASE("cfg: diamond and join") {
    const auto s = parse("if (c) x = 1; else x = 2;\nuse(x);\n", Language::Java);
    REQUIRE(s.statement_count() == 4);
    const auto g = build_cfg(s);
    CHECK(pairs(g, EdgeKind::Cfg) == std::set<std::pair<NodeId, NodeId>>{{0, 1}, {0, 2}, {1, 3}, {2, 3}});
    CHECK(get_parents(3, g) == std::vector<NodeId>{1, 2});
}

TEST_CASE("cfg: do-while, break, continue, return") {
    // 0 do | 1 if | 2 break | 3 if | 4 continue | 5 x++ | 6 return
    const auto s = parse("do {\n  if (a) break;\n  if (b) continue;\n  x++;\n} while (x < 3);\nreturn x;\n",
                         Language::Java);
    REQUIRE(s.statement_count() == 7);
    const std::set<std::pair<NodeId, NodeId>> expected{
        {0, 1}, {1, 2}, {1, 3}, {2, 6}, {3, 4}, {3, 5}, {4, 0}, {5, 0}, {0, 6},
    };
    CHECK(pairs(build_cfg(s), EdgeKind::Cfg) == expected);
}

TEST_CASE("cfg: return ends flow") {
    const auto s = parse("void m() {\n  if (a) return;\n  f();\n}\n", Language::Java);
    CHECK(pairs(build_cfg(s), EdgeKind::Cfg) == std::set<std::pair<NodeId, NodeId>>{{0, 1}, {0, 2}});
}

TEST_CASE("cfg: switch groups fall through, default decides the exit") {
    const auto s = parse(oracle::read_fixture("cfg_switch.java"), Language::Java);
    const auto e = line_edges(s, build_cfg(s), EdgeKind::Cfg);
    // dispatch to each group, fallthrough 5->7, break exits to 12, no bypass edge
    const std::set<std::pair<int, int>> expected{{2, 3}, {3, 5}, {3, 7}, {3, 10}, {5, 7}, {7, 8}, {8, 12}, {10, 12}};
    CHECK(e == expected);
}

TEST_CASE("cfg: try body reaches every catch, finally follows") {
    const auto s = parse(oracle::read_fixture("cfg_try.java"), Language::Java);
    const auto e = line_edges(s, build_cfg(s), EdgeKind::Cfg);
    for (int body : {3, 4}) {
        CHECK(e.count({body, 5}) == 1);
        CHECK(e.count({body, 7}) == 1);
    }
    CHECK(e.count({9, 10}) == 1);  // finally clause to its body
    CHECK(e.count({10, 12}) == 1);
}

TEST_CASE("cfg: labeled continue targets the outer loop") {
    const auto s = parse(oracle::read_fixture("cfg_labeled.java"), Language::Java);
    const auto e = line_edges(s, build_cfg(s), EdgeKind::Cfg);
    CHECK(e.count({5, 3}) == 1);
    CHECK(e.count({5, 4}) == 0);
}

TEST_CASE("rda: kill semantics") {
    const auto s = parse("x = 1;\nx = 2;\ny = x;\n", Language::Java);
    const auto f = compute_rda(s, build_cfg(s));
    CHECK(f.in[2] == std::set<Definition>{{1, "x"}});
}

TEST_CASE("rda: diamond keeps both definitions") {
    const auto s = parse("if (c) x = 1; else x = 2;\nuse(x);\n", Language::Java);
    const auto f = compute_rda(s, build_cfg(s));
    CHECK(f.in[3] == std::set<Definition>{{1, "x"}, {2, "x"}});
}

TEST_CASE("rda: adjacent loops, line 8 definition reaches line 5") {
    const auto s = parse(oracle::read_fixture("adjacent_loops.java"), Language::Java);
    const auto f = compute_rda(s, build_cfg(s));
    const auto header = std::find_if(s.statements().begin(), s.statements().end(),
                                     [](const Statement& st) { return st.start_line == 5; })->id;
    const auto redef = std::find_if(s.statements().begin(), s.statements().end(),
                                    [](const Statement& st) { return st.start_line == 8; })->id;
    CHECK(f.in[static_cast<std::size_t>(header)].count({redef, "j"}) == 1);
}

TEST_CASE("rda: worklist equals naive iteration and is a fixpoint") {
    std::vector<std::string> sources;
    for (const char* name : kCfgFixtures) sources.push_back(oracle::read_fixture(name));
    std::mt19937_64 rng(3);
    oracle::SnippetShape shape;
    shape.max_tokens = 400;
    shape.max_statements = 12;
    for (int i = 0; i < 80; ++i) sources.push_back(oracle::random_snippet(rng, shape));

    for (const auto& src : sources) {
        const auto s = parse(src, Language::Java);
        if (s.statement_count() > 12) continue;
        const auto cfg = build_cfg(s);
        const auto f = compute_rda(s, cfg);
        const auto naive = oracle::naive_rda(gens(f), cfg);
        CHECK(f.in == naive.in);
        CHECK(f.out == naive.out);
        for (std::size_t n = 0; n < s.statement_count(); ++n) {
            CHECK(transfer(f, static_cast<StatementId>(n), f.in[n]) == f.out[n]);
        }
    }
}

TEST_CASE("accesses: assignment forms") {
    const auto s = parse("a = b + c.d;\nx += 1;\ni++;\nint k;\nint m = n;\nthis.p = q;\nobj.call(r);\n",
                         Language::Java);
    const auto acc = extract_accesses(s);
    REQUIRE(acc.size() == 7);
    CHECK(acc[0].defs == std::set<std::string>{"a"});
    CHECK(acc[0].uses == std::set<std::string>{"b", "c"});
    CHECK(acc[1].defs == std::set<std::string>{"x"});
    CHECK(acc[1].uses == std::set<std::string>{"x"});
    CHECK(acc[2].defs == std::set<std::string>{"i"});
    CHECK(acc[2].uses == std::set<std::string>{"i"});
    CHECK(acc[3].defs.empty());
    CHECK(acc[4].defs == std::set<std::string>{"m"});
    CHECK(acc[4].uses == std::set<std::string>{"n"});
    CHECK(acc[5].defs == std::set<std::string>{"p"});
    CHECK(acc[5].uses == std::set<std::string>{"q"});
    CHECK(acc[6].defs.empty());
    CHECK(acc[6].uses == std::set<std::string>{"obj", "r"});
}

TEST_CASE("dfg: straight-line edges come from the latest definition") {
    std::mt19937_64 rng(5);
    oracle::SnippetShape shape;
    shape.max_tokens = 120;
    shape.control_flow = false;
    for (int trial = 0; trial < 40; ++trial) {
        const auto s = parse(oracle::random_snippet(rng, shape), Language::Java);
        const auto cfg = build_cfg(s);
        const auto f = compute_rda(s, cfg);
        const auto g = build_dfg(s, cfg, f, {});
        std::set<std::pair<NodeId, NodeId>> expected;
        std::map<std::string, NodeId> latest;
        for (std::size_t u = 0; u < s.statement_count(); ++u) {
            for (const auto& v : f.use[u]) {
                if (latest.count(v)) expected.insert({latest[v], static_cast<NodeId>(u)});
            }
            for (const auto& v : f.gen[u]) latest[v] = static_cast<NodeId>(u);
        }
        CHECK(pairs(g, EdgeKind::Dfg) == expected);
    }
}

TEST_CASE("dfg: adjacent loops") {
    const auto s = parse(oracle::read_fixture("adjacent_loops.java"), Language::Java);
    const auto g = build_views(s, {{ViewTag::Dfg}, {}});
    CHECK(line_edges(s, g, EdgeKind::Dfg).count({8, 5}) == 1);
}

TEST_CASE("dfg: batch flush last-use and last-def") {
    const auto s = parse(oracle::read_fixture("batch_flush.java"), Language::Java);
    const auto g = build_views(s, {{ViewTag::Dfg}, {true, true}});
    CHECK(line_edges(s, g, EdgeKind::LastUse).count({3, 4}) == 1);
    CHECK(line_edges(s, g, EdgeKind::LastDef).count({5, 9}) == 1);
    const auto plain = build_views(s, {{ViewTag::Dfg}, {}});
    CHECK(plain.count_edges(EdgeKind::LastUse) == 0);
    CHECK(plain.count_edges(EdgeKind::LastDef) == 0);
}

TEST_CASE("dfg: last-use is a may relation over both branches") {
    // 0 if | 1 f(x) | 2 g(x) | 3 h(x)
    const auto s = parse("if (c) f(x); else g(x);\nh(x);\n", Language::Java);
    const auto g = build_views(s, {{ViewTag::Dfg}, {false, true}});
    CHECK(get_parents(3, g) == std::vector<NodeId>{1, 2});
}

TEST_CASE("compose") {
    const auto s = parse(oracle::read_fixture("sum_loop.java"), Language::Java);
    const auto holders = default_holders(Language::Java);
    const auto ta = build_ast_view(s, holders);
    const auto cfg = build_cfg(s);
    const auto td = build_dfg(s, cfg, compute_rda(s, cfg), {});
    const CodeViewGraph single[] = {ta};
    CHECK(compose(single).edges() == ta.edges());
    CHECK(compose(single).views() == ta.views());
    const CodeViewGraph both[] = {ta, td};
    const auto tad = compose(both);
    CHECK(tad.edges().size() == ta.edges().size() + td.edges().size());
    CHECK(tad.views() == std::set<ViewTag>{ViewTag::Ast, ViewTag::Dfg});
    for (const auto& e : ta.edges()) CHECK(tad.edges().count(e) == 1);
    for (const auto& e : td.edges()) CHECK(tad.edges().count(e) == 1);
    CHECK_THROWS_AS(compose(std::span<const CodeViewGraph>{}), Error);

    const auto other = parse("int x = 1;", Language::Java);
    const CodeViewGraph mixed[] = {ta, build_cfg(other)};
    try {
        (void)compose(mixed);
        FAIL("expected MismatchedSnippet");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MismatchedSnippet);
    }
}

TEST_CASE("get_parents") {
    const auto s = parse(oracle::read_fixture("sum_loop.java"), Language::Java);
    const auto g = build_views(s, {{ViewTag::Dfg}, {}});
    // line 7 sits in the loop, so its own definition of total reaches it again
    CHECK(get_parents(5, g) == std::vector<NodeId>{0, 5});
    try {
        (void)get_parents(999, g);
        FAIL("expected UnknownNode");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownNode);
    }
}

TEST_CASE("graph construction rejects dangling edges") {
    std::vector<GraphNode> nodes{{0, "x", 1, 1}};
    CHECK_THROWS_AS(CodeViewGraph(nodes, {{0, 3, EdgeKind::Cfg}}, {ViewTag::Cfg}), Error);
}

TEST_CASE("graph json is stable") {
    const auto s = parse(oracle::read_fixture("batch_flush.java"), Language::Java);
    const auto a = to_json_string(build_views(s, {{ViewTag::Ast, ViewTag::Cfg, ViewTag::Dfg}, {true, true}}));
    const auto b = to_json_string(build_views(s, {{ViewTag::Ast, ViewTag::Cfg, ViewTag::Dfg}, {true, true}}));
    CHECK(a == b);
    CHECK(a.find("\"LAST_DEF\"") != std::string::npos);
}
