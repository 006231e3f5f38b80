#include "cvmask/codeviews.hpp"

#include "cvmask/error.hpp"

#include <deque>

namespace cvmask {
namespace {

// Collects the variables a statement reads and writes from its own syntax.
class AccessCollector {
public:
    AccessCollector(const CodeSnippet& snippet, StatementId owner, StatementAccess& out)
        : snippet_(snippet), tree_(snippet.tree()), owner_(owner), out_(out) {}

    void run(int statement_node) { visit(statement_node); }

private:
    [[nodiscard]] std::string text(int node) const {
        const SyntaxNode& n = tree_.node(node);
        return snippet_.source_text().substr(n.start_byte, n.end_byte - n.start_byte);
    }

    [[nodiscard]] bool foreign_statement(int node) const {
        auto s = snippet_.statement_of(node);
        return s && *s != owner_;
    }

    [[nodiscard]] bool excluded(const std::string& name) const {
        for (const auto& scope : lambda_params_) {
            if (scope.contains(name)) return true;
        }
        return false;
    }

    void use(const std::string& name) {
        if (!name.empty() && !excluded(name)) out_.uses.insert(name);
    }
    void def(const std::string& name) {
        if (!name.empty() && !excluded(name)) out_.defs.insert(name);
    }

    // Root variable written by an assignment target, if any.
    [[nodiscard]] std::string lvalue_root(int node) const {
        const SyntaxNode& n = tree_.node(node);
        if (n.kind == "identifier") return text(node);
        if (n.kind == "field_access") {
            const int object = tree_.child_by_field(node, "object");
            if (object >= 0 && tree_.node(object).kind == "this") {
                const int field = tree_.child_by_field(node, "field");
                return field >= 0 ? text(field) : std::string{};
            }
            return object >= 0 ? lvalue_root(object) : std::string{};
        }
        if (n.kind == "array_access") {
            const int array = tree_.child_by_field(node, "array");
            return array >= 0 ? lvalue_root(array) : std::string{};
        }
        if (n.kind == "parenthesized_expression") {
            auto kids = tree_.named_children(node);
            return kids.size() == 1 ? lvalue_root(kids.front()) : std::string{};
        }
        return {};
    }

    // Visits the non-root parts of an assignment target (indices, call receivers).
    void visit_lvalue_parts(int node) {
        const SyntaxNode& n = tree_.node(node);
        if (n.kind == "identifier" || n.kind == "this") return;
        if (n.kind == "field_access") {
            const int object = tree_.child_by_field(node, "object");
            if (object >= 0) visit_lvalue_parts(object);
            return;
        }
        if (n.kind == "array_access") {
            const int array = tree_.child_by_field(node, "array");
            if (array >= 0) visit_lvalue_parts(array);
            const int index = tree_.child_by_field(node, "index");
            if (index >= 0) visit(index);
            return;
        }
        if (n.kind == "parenthesized_expression") {
            for (int c : tree_.named_children(node)) visit_lvalue_parts(c);
            return;
        }
        visit(node);
    }

    void collect_lambda_params(int node, std::set<std::string>& names) const {
        const SyntaxNode& n = tree_.node(node);
        if (n.kind == "identifier") {
            names.insert(text(node));
            return;
        }
        if (n.kind == "formal_parameter" || n.kind == "spread_parameter") {
            const int name = tree_.child_by_field(node, "name");
            if (name >= 0) names.insert(text(name));
            for (int c : n.children) {
                if (tree_.node(c).kind == "variable_declarator") collect_lambda_params(c, names);
            }
            return;
        }
        if (n.kind == "variable_declarator") {
            const int name = tree_.child_by_field(node, "name");
            if (name >= 0) names.insert(text(name));
            return;
        }
        for (int c : n.children) collect_lambda_params(c, names);
    }

    void visit(int node) {
        const SyntaxNode& n = tree_.node(node);
        if (n.is_extra || foreign_statement(node)) return;
        const std::string& kind = n.kind;

        if (kind == "identifier") {
            visit_identifier(node);
            return;
        }
        if (kind == "class_body" || kind == "type_identifier" || kind == "scoped_identifier" ||
            kind == "annotation" || kind == "marker_annotation" || kind == "switch_label" ||
            kind == "scoped_type_identifier" || kind == "generic_type") {
            return;
        }
        if (kind == "assignment_expression") {
            const int left = tree_.child_by_field(node, "left");
            const int right = tree_.child_by_field(node, "right");
            const int op = tree_.child_by_field(node, "operator");
            if (left >= 0) {
                const std::string root = lvalue_root(left);
                if (!root.empty()) {
                    def(root);
                    if (op >= 0 && tree_.node(op).kind != "=") use(root);
                    visit_lvalue_parts(left);
                } else {
                    visit(left);
                }
            }
            if (right >= 0) visit(right);
            return;
        }
        if (kind == "update_expression") {
            for (int c : tree_.named_children(node)) {
                const std::string root = lvalue_root(c);
                if (!root.empty()) {
                    def(root);
                    use(root);
                    visit_lvalue_parts(c);
                } else {
                    visit(c);
                }
            }
            return;
        }
        if (kind == "variable_declarator") {
            const int name = tree_.child_by_field(node, "name");
            const int value = tree_.child_by_field(node, "value");
            if (value >= 0) {
                if (name >= 0) def(text(name));
                visit(value);
            }
            return;
        }
        if (kind == "enhanced_for_statement") {
            const int name = tree_.child_by_field(node, "name");
            if (name >= 0) def(text(name));
            const int value = tree_.child_by_field(node, "value");
            if (value >= 0) visit(value);
            return;
        }
        if (kind == "catch_formal_parameter" || kind == "resource") {
            const int name = tree_.child_by_field(node, "name");
            const int value = tree_.child_by_field(node, "value");
            if (name >= 0) {
                def(text(name));
                if (value >= 0) visit(value);
                return;
            }
        }
        if (kind == "field_access") {
            const int object = tree_.child_by_field(node, "object");
            if (object >= 0 && tree_.node(object).kind == "this") {
                const int field = tree_.child_by_field(node, "field");
                if (field >= 0) use(text(field));
            } else if (object >= 0) {
                visit(object);
            }
            return;
        }
        if (kind == "method_invocation") {
            const int object = tree_.child_by_field(node, "object");
            if (object >= 0) visit(object);
            const int args = tree_.child_by_field(node, "arguments");
            if (args >= 0) visit(args);
            return;
        }
        if (kind == "method_reference") {
            auto kids = tree_.named_children(node);
            if (!kids.empty()) visit(kids.front());
            return;
        }
        if (kind == "lambda_expression") {
            std::set<std::string> params;
            const int p = tree_.child_by_field(node, "parameters");
            if (p >= 0) collect_lambda_params(p, params);
            lambda_params_.push_back(std::move(params));
            const int body = tree_.child_by_field(node, "body");
            if (body >= 0) visit(body);
            lambda_params_.pop_back();
            return;
        }
        if (kind == "labeled_statement" || kind == "break_statement" || kind == "continue_statement") {
            for (int c : n.children) {
                if (tree_.node(c).kind != "identifier") visit(c);
            }
            return;
        }
        for (int c : n.children) visit(c);
    }

    void visit_identifier(int node) {
        const SyntaxNode& n = tree_.node(node);
        if (n.parent >= 0) {
            const std::string& parent = tree_.node(n.parent).kind;
            if (parent == "formal_parameter" || parent == "inferred_parameters" || parent == "type_parameter" ||
                parent == "method_declaration" || parent == "constructor_declaration") {
                return;
            }
        }
        use(text(node));
    }

    const CodeSnippet& snippet_;
    const SyntaxTree& tree_;
    StatementId owner_;
    StatementAccess& out_;
    std::vector<std::set<std::string>> lambda_params_;
};

struct FlowSolution {
    std::vector<std::set<Definition>> in;
    std::vector<std::set<Definition>> out;
};

std::set<Definition> apply_transfer(const std::set<std::string>& gen, StatementId node,
                                    const std::set<Definition>& in) {
    std::set<Definition> out;
    for (const Definition& d : in) {
        if (!gen.contains(d.var)) out.insert(d);
    }
    for (const std::string& v : gen) out.insert({node, v});
    return out;
}

// Forward may-analysis where each statement generates (statement, var) facts
// for `gen` and kills every other fact on the same variable.
FlowSolution solve_forward(const CodeViewGraph& cfg, const std::vector<std::set<std::string>>& gen) {
    const std::size_t count = gen.size();
    FlowSolution sol{std::vector<std::set<Definition>>(count), std::vector<std::set<Definition>>(count)};
    std::vector<std::vector<StatementId>> preds(count);
    std::vector<std::vector<StatementId>> succs(count);
    for (const Edge& e : cfg.edges()) {
        if (e.kind != EdgeKind::Cfg) continue;
        if (static_cast<std::size_t>(e.src) >= count || static_cast<std::size_t>(e.dst) >= count) continue;
        preds[static_cast<std::size_t>(e.dst)].push_back(e.src);
        succs[static_cast<std::size_t>(e.src)].push_back(e.dst);
    }

    std::deque<StatementId> worklist;
    std::vector<bool> queued(count, true);
    for (std::size_t i = 0; i < count; ++i) worklist.push_back(static_cast<StatementId>(i));
    while (!worklist.empty()) {
        const StatementId n = worklist.front();
        worklist.pop_front();
        const auto idx = static_cast<std::size_t>(n);
        queued[idx] = false;
        std::set<Definition> in;
        for (StatementId p : preds[idx]) {
            const auto& o = sol.out[static_cast<std::size_t>(p)];
            in.insert(o.begin(), o.end());
        }
        std::set<Definition> out = apply_transfer(gen[idx], n, in);
        sol.in[idx] = std::move(in);
        if (out != sol.out[idx]) {
            sol.out[idx] = std::move(out);
            for (StatementId s : succs[idx]) {
                if (!queued[static_cast<std::size_t>(s)]) {
                    queued[static_cast<std::size_t>(s)] = true;
                    worklist.push_back(s);
                }
            }
        }
    }
    return sol;
}

void require_matching_cfg(const CodeSnippet& snippet, const CodeViewGraph& cfg) {
    if (cfg.nodes().size() != snippet.statement_count() + snippet.holders().size()) {
        throw Error(ErrorCode::MismatchedSnippet, "control-flow graph was built over a different snippet");
    }
}

} // namespace

std::vector<StatementAccess> extract_accesses(const CodeSnippet& snippet) {
    std::vector<StatementAccess> out(snippet.statement_count());
    for (const Statement& s : snippet.statements()) {
        AccessCollector collector(snippet, s.id, out[static_cast<std::size_t>(s.id)]);
        collector.run(s.syntax_node);
    }
    return out;
}

std::set<Definition> transfer(const DefUseFacts& facts, StatementId node, const std::set<Definition>& in) {
    return apply_transfer(facts.gen.at(static_cast<std::size_t>(node)), node, in);
}

DefUseFacts compute_rda(const CodeSnippet& snippet, const CodeViewGraph& cfg) {
    require_matching_cfg(snippet, cfg);
    DefUseFacts facts;
    for (StatementAccess& a : extract_accesses(snippet)) {
        facts.gen.push_back(std::move(a.defs));
        facts.use.push_back(std::move(a.uses));
    }
    FlowSolution sol = solve_forward(cfg, facts.gen);
    facts.in = std::move(sol.in);
    facts.out = std::move(sol.out);
    return facts;
}

CodeViewGraph build_dfg(const CodeSnippet& snippet, const CodeViewGraph& cfg, const DefUseFacts& facts,
                        DfgOptions options) {
    require_matching_cfg(snippet, cfg);
    const std::size_t count = snippet.statement_count();
    if (facts.gen.size() != count || facts.in.size() != count) {
        throw Error(ErrorCode::MismatchedSnippet, "def-use facts do not match the snippet");
    }
    std::set<Edge> edges;
    for (std::size_t u = 0; u < count; ++u) {
        for (const Definition& d : facts.in[u]) {
            if (facts.use[u].contains(d.var)) edges.insert({d.site, static_cast<NodeId>(u), EdgeKind::Dfg});
            if (options.last_def && facts.gen[u].contains(d.var)) {
                edges.insert({d.site, static_cast<NodeId>(u), EdgeKind::LastDef});
            }
        }
    }
    if (options.last_use) {
        const FlowSolution reads = solve_forward(cfg, facts.use);
        for (std::size_t u = 0; u < count; ++u) {
            for (const Definition& r : reads.in[u]) {
                if (facts.use[u].contains(r.var)) edges.insert({r.site, static_cast<NodeId>(u), EdgeKind::LastUse});
            }
        }
    }
    return CodeViewGraph(node_universe(snippet), std::move(edges), {ViewTag::Dfg});
}

} // namespace cvmask
