#include "oracles.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef CVMASK_FIXTURE_DIR
#error "CVMASK_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace oracle {

NaiveRda naive_rda(const std::vector<std::set<std::string>>& gen, const cvmask::CodeViewGraph& cfg) {
    const std::size_t m = gen.size();
    NaiveRda r;
    r.in.assign(m, {});
    r.out.assign(m, {});
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t n = 0; n < m; ++n) {
            std::set<Definition> in;
            for (const auto& e : cfg.edges()) {
                if (e.kind != cvmask::EdgeKind::Cfg || e.dst != static_cast<cvmask::NodeId>(n)) continue;
                in.insert(r.out[static_cast<std::size_t>(e.src)].begin(), r.out[static_cast<std::size_t>(e.src)].end());
            }
            std::set<Definition> out;
            for (const auto& v : gen[n]) out.insert({static_cast<cvmask::StatementId>(n), v});
            for (const auto& d : in) {
                if (!gen[n].count(d.var)) out.insert(d);
            }
            if (in != r.in[n] || out != r.out[n]) {
                r.in[n] = std::move(in);
                r.out[n] = std::move(out);
                changed = true;
            }
        }
    }
    return r;
}

std::set<cvmask::StatementId> brute_backslice(cvmask::StatementId seed, const cvmask::CodeViewGraph& view,
                                              std::size_t statement_count) {
    std::set<cvmask::NodeId> reached{seed};
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& e : view.edges()) {
            if (reached.count(e.dst) && !reached.count(e.src)) {
                reached.insert(e.src);
                grew = true;
            }
        }
    }
    std::set<cvmask::StatementId> members;
    for (auto id : reached) {
        if (id < static_cast<cvmask::NodeId>(statement_count)) members.insert(id);
    }
    return members;
}

std::vector<std::vector<bool>> literal_mask(const cvmask::CodeSnippet& snippet,
                                           const std::vector<cvmask::StatementMask>& masks) {
    const auto& toks = snippet.tokens();
    const std::size_t n = toks.size();
    std::vector<std::vector<bool>> a(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto si = toks[i].owner;
            const auto sj = toks[j].owner;
            if (i == j || si == cvmask::kUnowned || sj == cvmask::kUnowned) {
                a[i][j] = true;
                continue;
            }
            const auto& members = masks[static_cast<std::size_t>(si)].members;
            a[i][j] = std::find(members.begin(), members.end(), sj) != members.end();
        }
    }
    return a;
}

bool same_as_dense(const cvmask::AttentionMask& mask, const std::vector<std::vector<bool>>& dense) {
    if (mask.n() != dense.size()) return false;
    for (std::size_t i = 0; i < dense.size(); ++i) {
        for (std::size_t j = 0; j < dense.size(); ++j) {
            if (mask.allowed(i, j) != dense[i][j]) return false;
        }
    }
    return true;
}

double mrr(const std::vector<std::size_t>& ranks) {
    double s = 0.0;
    for (auto r : ranks) s += 1.0 / static_cast<double>(r);
    return s / static_cast<double>(ranks.size());
}

double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth, int classes) {
    double total = 0.0;
    for (int c = 0; c < classes; ++c) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == c && truth[i] == c) tp += 1;
            if (pred[i] == c && truth[i] != c) fp += 1;
            if (pred[i] != c && truth[i] == c) fn += 1;
        }
        // F1 = 2TP / (2TP + FP + FN), zero when undefined
        const double denom = 2 * tp + fp + fn;
        total += denom == 0 ? 0.0 : 2 * tp / denom;
    }
    return total / classes;
}

namespace {

struct Template {
    const char* text;
    std::size_t tokens;
    std::size_t statements;
    bool control;
};

// {v} {w} {x} are substituted with variable names.
const Template kTemplates[] = {
    {"int {v} = 1;", 5, 1, false},
    {"{v} = {w} + 1;", 6, 1, false},
    {"f({v});", 5, 1, false},
    {"{v}++;", 3, 1, false},
    {"g({v}, {w});", 7, 1, false},
    {"{v} = {w};", 4, 1, false},
    {"if ({v} > 0) { {w} = {v}; }", 12, 2, true},
    {"while ({v} < 3) {v}++;", 9, 2, true},
    {"return {v};", 3, 1, true},
    {"for (int i = 0; i < {v}; i++) {w} += i;", 18, 2, true},
    {"do { {v}--; } while ({v} > {w});", 13, 2, true},
    {"if ({v} > {w}) {x} = {v}; else {x} = {w};", 15, 3, true},
    {"switch ({v}) { case 1: {w} = 2; break; default: {x} = 3; }", 21, 4, true},
    {"try { f({v}); } catch (Exception e) { {w} = 1; }", 19, 4, true},
    {"while ({v} < 9) { if ({w} > {v}) break; {v}++; }", 19, 4, true},
};

std::string substitute(std::string text, std::mt19937_64& rng) {
    static const char* const kVars[] = {"a", "b", "c", "d"};
    std::uniform_int_distribution<int> pick(0, 3);
    for (const char* key : {"{v}", "{w}", "{x}"}) {
        const std::string name = kVars[pick(rng)];
        for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos)) {
            text.replace(pos, 3, name);
            pos += name.size();
        }
    }
    return text;
}

}  // namespace

std::string random_snippet(std::mt19937_64& rng, const SnippetShape& shape) {
    std::vector<const Template*> pool;
    for (const auto& t : kTemplates) {
        if (shape.control_flow || !t.control) pool.push_back(&t);
    }
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const bool wrap = std::bernoulli_distribution(0.5)(rng) && shape.max_tokens >= 12;
    std::size_t tokens = wrap ? 6 : 0;
    std::size_t statements = 0;
    std::string body;
    for (int attempt = 0; attempt < 40; ++attempt) {
        const Template& t = *pool[pick(rng)];
        if (tokens + t.tokens > shape.max_tokens || statements + t.statements > shape.max_statements) continue;
        tokens += t.tokens;
        statements += t.statements;
        body += (wrap ? "    " : "") + substitute(t.text, rng) + "\n";
    }
    if (body.empty()) body = "f(a);\n";
    return wrap ? "void m() {\n" + body + "}\n" : body;
}

std::string desk_corpus(std::size_t records, std::size_t broken_at) {
    std::mt19937_64 rng(20240521);
    std::ostringstream out;
    for (std::size_t k = 1; k <= records; ++k) {
        const std::string id = "rec-" + std::to_string(k);
        SnippetShape shape;
        shape.max_tokens = 60;
        shape.max_statements = 10;
        std::string code = random_snippet(rng, shape);
        if (k == broken_at) {
            out << "{\"id\": \"" << id << "\", \"code\": \"int x = 1;\n";  // unterminated string
            continue;
        }
        if (k % 37 == 0) code = "void broken( {\n    int x = ;\n    f(x);\n}\n";
        if (k % 41 == 0) {
            code.clear();
            for (int i = 0; i < 20; ++i) code += "a" + std::to_string(i) + "();\n";
        }
        nlohmann::json doc = {{"id", id}, {"code", code}, {"docstring", "record " + std::to_string(k)}};
        if (k % 3 == 0) doc["label"] = static_cast<int>(k % 5);
        out << doc.dump() << "\n";
    }
    return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string read_fixture(const std::string& name) {
    return read_text(std::filesystem::path(CVMASK_FIXTURE_DIR) / name);
}

}  // namespace oracle
