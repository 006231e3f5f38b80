#include "cvmask/codeviews.hpp"

#include "cvmask/error.hpp"

#include <algorithm>

namespace cvmask {
namespace {

using Preds = std::vector<StatementId>;

// Syntax that starts a separate control-flow body; never entered while
// building the enclosing one.
bool is_body_boundary(std::string_view kind) {
    return kind == "lambda_expression" || kind == "class_body" || kind == "method_declaration" ||
           kind == "constructor_declaration" || kind == "class_declaration" || kind == "interface_declaration" ||
           kind == "enum_declaration" || kind == "record_declaration" || kind == "interface_body" ||
           kind == "enum_body" || kind == "annotation_type_declaration";
}

bool is_loop_kind(std::string_view kind) {
    return kind == "while_statement" || kind == "for_statement" || kind == "enhanced_for_statement" ||
           kind == "do_statement";
}

void merge_into(Preds& into, const Preds& from) {
    for (StatementId s : from) {
        if (std::find(into.begin(), into.end(), s) == into.end()) into.push_back(s);
    }
}

class CfgBuilder {
public:
    explicit CfgBuilder(const CodeSnippet& snippet) : snippet_(snippet), tree_(snippet.tree()) {}

    std::set<Edge> run() {
        for (std::size_t i = 0; i < tree_.size(); ++i) discover_body(static_cast<int>(i));
        return std::move(edges_);
    }

private:
    enum class TargetKind { Loop, Switch, Label };
    struct Target {
        TargetKind kind;
        std::string label;
        StatementId continue_to = kUnowned;
        Preds breaks;
    };

    void discover_body(int node) {
        const SyntaxNode& n = tree_.node(node);
        if (n.kind == "program") {
            build_container(node, {});
        } else if (n.kind == "method_declaration" || n.kind == "constructor_declaration") {
            if (int body = tree_.child_by_field(node, "body"); body >= 0) build_container(body, {});
        } else if (n.kind == "lambda_expression") {
            int body = tree_.child_by_field(node, "body");
            if (body >= 0 && tree_.node(body).kind == "block") build_container(body, {});
        } else if (n.kind == "static_initializer") {
            for (int c : tree_.named_children(node)) {
                if (tree_.node(c).kind == "block") build_container(c, {});
            }
        } else if (n.kind == "block" && n.parent >= 0 && tree_.node(n.parent).kind == "class_body") {
            build_container(node, {});
        }
    }

    [[nodiscard]] std::optional<StatementId> statement(int node) const { return snippet_.statement_of(node); }

    void link(const Preds& preds, StatementId to) {
        for (StatementId p : preds) edges_.insert({p, to, EdgeKind::Cfg});
    }

    // Blocks and other grouping syntax: run the contained statements in order.
    Preds build_container(int node, Preds preds) {
        for (int c : tree_.named_children(node)) {
            const SyntaxNode& child = tree_.node(c);
            if (statement(c)) {
                if (child.kind == "import_declaration" || child.kind == "package_declaration") continue;
                preds = build_statement(c, std::move(preds));
            } else if (child.kind == "block" || child.kind == "constructor_body") {
                preds = build_container(c, std::move(preds));
            }
        }
        return preds;
    }

    // Statement, block, or anything else sitting in a statement slot.
    Preds build_any(int node, Preds preds) {
        if (node < 0) return preds;
        if (statement(node)) return build_statement(node, std::move(preds));
        const std::string& kind = tree_.node(node).kind;
        if (kind == "block" || kind == "constructor_body") return build_container(node, std::move(preds));
        return preds;
    }

    // Statements reachable below `node` without crossing another statement or
    // a body boundary, in source order.
    void collect_nested(int node, std::vector<int>& out) const {
        for (int c : tree_.node(node).children) {
            const SyntaxNode& child = tree_.node(c);
            if (statement(c)) {
                out.push_back(c);
            } else if (!is_body_boundary(child.kind)) {
                collect_nested(c, out);
            }
        }
    }

    void collect_all(int node, Preds& out) const {
        if (auto s = statement(node)) out.push_back(*s);
        for (int c : tree_.node(node).children) {
            if (!is_body_boundary(tree_.node(c).kind)) collect_all(c, out);
        }
    }

    // Sequential fallback: the statement runs, then anything nested in it.
    Preds build_sequential(int node, StatementId s, Preds preds) {
        link(preds, s);
        std::vector<int> nested;
        collect_nested(node, nested);
        Preds cur{s};
        for (int c : nested) cur = build_statement(c, std::move(cur));
        return cur;
    }

    Target* find_target(const std::string& label, bool for_continue) {
        for (auto it = targets_.rbegin(); it != targets_.rend(); ++it) {
            if (!label.empty()) {
                if (it->kind == TargetKind::Label && it->label == label) return &*it;
            } else if (it->kind == TargetKind::Loop || (!for_continue && it->kind == TargetKind::Switch)) {
                return &*it;
            }
        }
        return nullptr;
    }

    std::string jump_label(int node) const {
        for (int c : tree_.named_children(node)) {
            if (tree_.node(c).kind == "identifier") {
                const SyntaxNode& n = tree_.node(c);
                return snippet_.source_text().substr(n.start_byte, n.end_byte - n.start_byte);
            }
        }
        return {};
    }

    bool is_literal_true(int node) const {
        if (node < 0) return false;
        const SyntaxNode& n = tree_.node(node);
        if (n.kind == "true") return true;
        if (n.kind == "parenthesized_expression") {
            auto kids = tree_.named_children(node);
            return kids.size() == 1 && is_literal_true(kids.front());
        }
        return false;
    }

    Preds build_loop(int node, StatementId s, Preds preds, bool infinite) {
        const int body = tree_.child_by_field(node, "body");
        if (body < 0) return build_sequential(node, s, std::move(preds));
        link(preds, s);
        targets_.push_back({TargetKind::Loop, {}, s, {}});
        Preds body_exits = build_any(body, {s});
        link(body_exits, s);
        Target done = std::move(targets_.back());
        targets_.pop_back();
        Preds exits;
        if (!infinite) exits.push_back(s);
        merge_into(exits, done.breaks);
        return exits;
    }

    Preds build_switch(int node, StatementId s, Preds preds) {
        const int body = tree_.child_by_field(node, "body");
        if (body < 0) return build_sequential(node, s, std::move(preds));
        link(preds, s);
        targets_.push_back({TargetKind::Switch, {}, kUnowned, {}});
        bool has_default = false;
        Preds fall;
        Preds rule_exits;
        for (int c : tree_.named_children(body)) {
            const SyntaxNode& child = tree_.node(c);
            if (child.kind == "switch_block_statement_group") {
                Preds cur{s};
                merge_into(cur, fall);
                for (int g : tree_.named_children(c)) {
                    if (tree_.node(g).kind == "switch_label") {
                        has_default = has_default || is_default_label(g);
                        continue;
                    }
                    cur = build_any(g, std::move(cur));
                }
                fall = std::move(cur);
            } else if (child.kind == "switch_rule") {
                for (int g : tree_.named_children(c)) {
                    if (tree_.node(g).kind == "switch_label") {
                        has_default = has_default || is_default_label(g);
                    } else {
                        merge_into(rule_exits, build_any(g, {s}));
                    }
                }
            }
        }
        Target done = std::move(targets_.back());
        targets_.pop_back();
        Preds exits = fall;
        merge_into(exits, rule_exits);
        merge_into(exits, done.breaks);
        if (!has_default) merge_into(exits, {s});
        return exits;
    }

    bool is_default_label(int label) const {
        const auto& kids = tree_.node(label).children;
        return std::any_of(kids.begin(), kids.end(), [&](int k) { return tree_.node(k).kind == "default"; });
    }

    Preds build_try(int node, StatementId s, Preds preds) {
        link(preds, s);
        const int body = tree_.child_by_field(node, "body");
        Preds body_exits = build_any(body, {s});
        Preds body_statements;
        if (body >= 0) collect_all(body, body_statements);
        const bool has_resources = tree_.node(node).kind == "try_with_resources_statement";

        Preds exits = body_exits;
        int finally_node = -1;
        for (int c : tree_.named_children(node)) {
            const SyntaxNode& child = tree_.node(c);
            if (child.kind == "finally_clause") {
                finally_node = c;
                continue;
            }
            if (child.kind != "catch_clause") continue;
            const auto catch_id = statement(c);
            if (!catch_id) continue;
            link(body_statements, *catch_id);
            if (has_resources || body_statements.empty()) link({s}, *catch_id);
            merge_into(exits, build_any(tree_.child_by_field(c, "body"), {*catch_id}));
        }
        if (finally_node >= 0) {
            if (auto fin = statement(finally_node)) {
                link(exits, *fin);
                Preds fin_exits{*fin};
                for (int k : tree_.named_children(finally_node)) fin_exits = build_any(k, std::move(fin_exits));
                return fin_exits;
            }
        }
        return exits;
    }

    Preds build_statement(int node, Preds preds) {
        const auto sid = statement(node);
        if (!sid) return build_any(node, std::move(preds));
        const StatementId s = *sid;
        const SyntaxNode& n = tree_.node(node);
        const std::string& kind = n.kind;

        if (kind == "if_statement") {
            const int then_branch = tree_.child_by_field(node, "consequence");
            if (then_branch < 0) return build_sequential(node, s, std::move(preds));
            link(preds, s);
            Preds exits = build_any(then_branch, {s});
            const int else_branch = tree_.child_by_field(node, "alternative");
            merge_into(exits, else_branch >= 0 ? build_any(else_branch, {s}) : Preds{s});
            return exits;
        }
        if (kind == "while_statement") {
            return build_loop(node, s, std::move(preds), is_literal_true(tree_.child_by_field(node, "condition")));
        }
        if (kind == "for_statement") {
            return build_loop(node, s, std::move(preds), tree_.child_by_field(node, "condition") < 0);
        }
        if (kind == "enhanced_for_statement") return build_loop(node, s, std::move(preds), false);
        if (kind == "do_statement") {
            const int body = tree_.child_by_field(node, "body");
            if (body < 0) return build_sequential(node, s, std::move(preds));
            targets_.push_back({TargetKind::Loop, {}, s, {}});
            merge_into(preds, {s});
            Preds body_exits = build_any(body, std::move(preds));
            link(body_exits, s);
            Target done = std::move(targets_.back());
            targets_.pop_back();
            Preds exits{s};
            if (is_literal_true(tree_.child_by_field(node, "condition"))) exits.clear();
            merge_into(exits, done.breaks);
            return exits;
        }
        if (kind == "labeled_statement") {
            link(preds, s);
            int inner = -1;
            for (int c : tree_.named_children(node)) {
                if (tree_.node(c).kind != "identifier") inner = c;
            }
            Target label{TargetKind::Label, jump_label(node), kUnowned, {}};
            if (inner >= 0 && is_loop_kind(tree_.node(inner).kind)) {
                if (auto loop = statement(inner)) label.continue_to = *loop;
            }
            targets_.push_back(std::move(label));
            Preds exits = build_any(inner, {s});
            Target done = std::move(targets_.back());
            targets_.pop_back();
            merge_into(exits, done.breaks);
            return exits;
        }
        if (kind == "break_statement" || kind == "yield_statement") {
            link(preds, s);
            Target* t = kind == "yield_statement" ? find_switch() : find_target(jump_label(node), false);
            if (t == nullptr) return {s};
            t->breaks.push_back(s);
            return {};
        }
        if (kind == "continue_statement") {
            link(preds, s);
            Target* t = find_target(jump_label(node), true);
            if (t == nullptr || t->continue_to == kUnowned) return {s};
            edges_.insert({s, t->continue_to, EdgeKind::Cfg});
            return {};
        }
        if (kind == "return_statement" || kind == "throw_statement") {
            link(preds, s);
            return {};
        }
        if (kind == "switch_expression") return build_switch(node, s, std::move(preds));
        if (kind == "try_statement" || kind == "try_with_resources_statement") return build_try(node, s, std::move(preds));
        if (kind == "synchronized_statement") {
            link(preds, s);
            int body = tree_.child_by_field(node, "body");
            if (body < 0) {
                for (int c : tree_.named_children(node)) {
                    if (tree_.node(c).kind == "block") body = c;
                }
            }
            return build_any(body, {s});
        }

        // Simple statements, error-recovery nodes and anything unrecognised.
        std::vector<int> nested;
        collect_nested(node, nested);
        if (nested.empty()) {
            link(preds, s);
            return {s};
        }
        Preds exits = build_sequential(node, s, std::move(preds));
        if (!n.is_error) merge_into(exits, {s});
        return exits;
    }

    Target* find_switch() {
        for (auto it = targets_.rbegin(); it != targets_.rend(); ++it) {
            if (it->kind == TargetKind::Switch) return &*it;
        }
        return nullptr;
    }

    const CodeSnippet& snippet_;
    const SyntaxTree& tree_;
    std::set<Edge> edges_;
    std::vector<Target> targets_;
};

} // namespace

CodeViewGraph build_cfg(const CodeSnippet& snippet) {
    CfgBuilder builder(snippet);
    return CodeViewGraph(node_universe(snippet), builder.run(), {ViewTag::Cfg});
}

} // namespace cvmask
