#include "cvmask/syntax_frontend.hpp"

#include "cvmask/error.hpp"

#include <tree_sitter/api.h>

#include <json.hpp>

#include <algorithm>
#include <memory>

extern "C" const TSLanguage* tree_sitter_java(void);

namespace cvmask {
namespace {

using KindSet = std::set<std::string, std::less<>>;

// Subtrees that become a single leaf token.
const KindSet kAtomicTokenKinds = {"string_literal", "character_literal"};

const KindSet kCommentKinds = {"line_comment", "block_comment"};

// Parents under which a switch_expression sits in statement position.
const KindSet kStatementContainers = {
    "block", "program", "switch_block_statement_group", "labeled_statement", "if_statement",
    "while_statement", "for_statement", "enhanced_for_statement", "do_statement",
    "constructor_body", "ERROR",
};

class LineIndex {
public:
    explicit LineIndex(std::string_view text) {
        starts_.push_back(0);
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (text[i] == '\n') starts_.push_back(static_cast<std::uint32_t>(i + 1));
        }
    }

    [[nodiscard]] int line_of(std::uint32_t byte) const {
        auto it = std::upper_bound(starts_.begin(), starts_.end(), byte);
        return static_cast<int>(it - starts_.begin());
    }

    [[nodiscard]] int end_line_of(std::uint32_t start, std::uint32_t end) const {
        return line_of(end > start ? end - 1 : start);
    }

private:
    std::vector<std::uint32_t> starts_;
};

struct ParserDeleter {
    void operator()(TSParser* p) const noexcept { ts_parser_delete(p); }
};
struct TreeDeleter {
    void operator()(TSTree* t) const noexcept { ts_tree_delete(t); }
};

void copy_subtree(TSTreeCursor& cursor, int parent, const LineIndex& lines, std::vector<SyntaxNode>& out) {
    TSNode n = ts_tree_cursor_current_node(&cursor);
    SyntaxNode node;
    node.kind = ts_node_type(n);
    if (const char* field = ts_tree_cursor_current_field_name(&cursor)) node.field = field;
    node.start_byte = ts_node_start_byte(n);
    node.end_byte = ts_node_end_byte(n);
    node.start_line = lines.line_of(node.start_byte);
    node.end_line = lines.end_line_of(node.start_byte, node.end_byte);
    node.parent = parent;
    node.named = ts_node_is_named(n);
    node.is_error = ts_node_is_error(n);
    node.is_missing = ts_node_is_missing(n);
    node.is_extra = ts_node_is_extra(n);

    const int self = static_cast<int>(out.size());
    out.push_back(std::move(node));
    if (parent >= 0) out[static_cast<std::size_t>(parent)].children.push_back(self);

    if (ts_tree_cursor_goto_first_child(&cursor)) {
        do {
            copy_subtree(cursor, self, lines, out);
        } while (ts_tree_cursor_goto_next_sibling(&cursor));
        ts_tree_cursor_goto_parent(&cursor);
    }
}

SyntaxTree run_parser(const std::string& source, Language language) {
    std::unique_ptr<TSParser, ParserDeleter> parser(ts_parser_new());
    const TSLanguage* grammar = nullptr;
    switch (language) {
    case Language::Java: grammar = tree_sitter_java(); break;
    }
    if (grammar == nullptr || !ts_parser_set_language(parser.get(), grammar)) {
        throw Error(ErrorCode::UnsupportedLanguage, "no grammar bundled for language");
    }
    std::unique_ptr<TSTree, TreeDeleter> tree(
        ts_parser_parse_string(parser.get(), nullptr, source.data(), static_cast<std::uint32_t>(source.size())));
    if (!tree) throw Error(ErrorCode::EmptySource, "parser produced no tree");

    LineIndex lines(source);
    std::vector<SyntaxNode> nodes;
    TSTreeCursor cursor = ts_tree_cursor_new(ts_tree_root_node(tree.get()));
    copy_subtree(cursor, -1, lines, nodes);
    ts_tree_cursor_delete(&cursor);
    return SyntaxTree(std::move(nodes));
}

bool is_java_statement(const SyntaxTree& tree, int index, const HolderSet& holders) {
    const SyntaxNode& n = tree.node(index);
    if (n.is_error) return true;
    if (!n.named || n.is_extra) return false;
    if (holders.contains(n.kind)) return false;
    if (!statement_kinds(Language::Java).contains(n.kind)) return false;
    const std::string_view parent_kind = n.parent >= 0 ? std::string_view(tree.node(n.parent).kind) : "";
    if (n.kind == "local_variable_declaration" && parent_kind == "for_statement") return false;
    if (n.kind == "switch_expression" && !kStatementContainers.contains(parent_kind)) return false;
    return true;
}

} // namespace

Language parse_language(std::string_view name) {
    std::string lowered(name);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lowered == "java") return Language::Java;
    throw Error(ErrorCode::UnsupportedLanguage, "unsupported language '" + std::string(name) + "'");
}

std::string_view language_name(Language language) noexcept {
    switch (language) {
    case Language::Java: return "java";
    }
    return "unknown";
}

int SyntaxTree::child_by_field(int index, std::string_view field) const {
    for (int c : node(index).children) {
        if (node(c).field == field) return c;
    }
    return -1;
}

std::vector<int> SyntaxTree::children_by_field(int index, std::string_view field) const {
    std::vector<int> out;
    for (int c : node(index).children) {
        if (node(c).field == field) out.push_back(c);
    }
    return out;
}

std::vector<int> SyntaxTree::named_children(int index) const {
    std::vector<int> out;
    for (int c : node(index).children) {
        const SyntaxNode& n = node(c);
        if (n.named && !n.is_extra) out.push_back(c);
    }
    return out;
}

bool SyntaxTree::has_error() const {
    return std::any_of(nodes_.begin(), nodes_.end(), [](const SyntaxNode& n) { return n.is_error || n.is_missing; });
}

std::int32_t CodeSnippet::graph_id_of(int syntax_node) const {
    if (syntax_node < 0 || static_cast<std::size_t>(syntax_node) >= graph_ids_.size()) return -1;
    return graph_ids_[static_cast<std::size_t>(syntax_node)];
}

std::optional<StatementId> CodeSnippet::statement_of(int syntax_node) const {
    const std::int32_t id = graph_id_of(syntax_node);
    if (id >= 0 && static_cast<std::size_t>(id) < statements_.size()) return id;
    return std::nullopt;
}

bool CodeSnippet::is_holder_node(int syntax_node) const {
    const std::int32_t id = graph_id_of(syntax_node);
    return id >= 0 && static_cast<std::size_t>(id) >= statements_.size();
}

HolderSet default_holders(Language language) {
    switch (language) {
    case Language::Java:
        return HolderSet({"block", "class_body", "program", "method_declaration", "constructor_declaration",
                          "class_declaration", "switch_block"});
    }
    throw Error(ErrorCode::UnsupportedLanguage, "no holder set for language");
}

const std::set<std::string, std::less<>>& statement_kinds(Language language) {
    static const KindSet java = {
        "local_variable_declaration",
        "expression_statement",
        "if_statement",
        "for_statement",
        "enhanced_for_statement",
        "while_statement",
        "do_statement",
        "break_statement",
        "continue_statement",
        "return_statement",
        "throw_statement",
        "yield_statement",
        "switch_expression",
        "try_statement",
        "try_with_resources_statement",
        "catch_clause",
        "finally_clause",
        "labeled_statement",
        "synchronized_statement",
        "assert_statement",
        "explicit_constructor_invocation",
        "field_declaration",
        "constant_declaration",
        "import_declaration",
        "package_declaration",
        "ERROR",
    };
    switch (language) {
    case Language::Java: return java;
    }
    throw Error(ErrorCode::UnsupportedLanguage, "no statement kinds for language");
}

CodeSnippet parse(std::string source, Language language) {
    return parse(std::move(source), language, default_holders(language));
}

CodeSnippet parse(std::string source, Language language, const HolderSet& holders) {
    if (holders.empty()) throw Error(ErrorCode::ConfigError, "holder set must not be empty");

    CodeSnippet snippet;
    snippet.language_ = language;
    snippet.tree_ = run_parser(source, language);
    snippet.source_ = std::move(source);
    snippet.holder_kinds_ = holders;
    const SyntaxTree& tree = snippet.tree_;
    const std::string& text = snippet.source_;

    snippet.graph_ids_.assign(tree.size(), -1);
    std::vector<int> holder_nodes;

    // Pre-order walk: statements are numbered in source order, parents first.
    struct Frame {
        int node;
        StatementId owner;
    };
    std::vector<Frame> stack{{tree.root(), kUnowned}};
    while (!stack.empty()) {
        const Frame frame = stack.back();
        stack.pop_back();
        const SyntaxNode& n = tree.node(frame.node);
        if (kCommentKinds.contains(n.kind)) continue;

        StatementId owner = frame.owner;
        if (n.named && holders.contains(n.kind) && !n.is_error) {
            holder_nodes.push_back(frame.node);
        } else if (is_java_statement(tree, frame.node, holders)) {
            Statement s;
            s.id = static_cast<StatementId>(snippet.statements_.size());
            s.kind = n.kind;
            s.start_line = n.start_line;
            s.end_line = n.end_line;
            s.start_byte = n.start_byte;
            s.end_byte = n.end_byte;
            s.syntax_node = frame.node;
            s.enclosing = frame.owner;
            snippet.graph_ids_[static_cast<std::size_t>(frame.node)] = s.id;
            owner = s.id;
            snippet.statements_.push_back(std::move(s));
        }

        const bool leaf = n.children.empty() || kAtomicTokenKinds.contains(n.kind);
        if (leaf) {
            if (n.end_byte > n.start_byte) {
                LeafToken tok;
                tok.index = snippet.tokens_.size();
                tok.text = text.substr(n.start_byte, n.end_byte - n.start_byte);
                tok.start_byte = n.start_byte;
                tok.end_byte = n.end_byte;
                tok.line = n.start_line;
                tok.owner = owner;
                tok.syntax_node = frame.node;
                if (owner != kUnowned) {
                    snippet.statements_[static_cast<std::size_t>(owner)].direct_token_ids.push_back(tok.index);
                }
                snippet.tokens_.push_back(std::move(tok));
            }
            continue;
        }
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back({*it, owner});
    }

    if (snippet.tokens_.empty()) throw Error(ErrorCode::EmptySource, "no tokens in source");

    const auto statement_count = static_cast<std::int32_t>(snippet.statements_.size());
    for (std::size_t k = 0; k < holder_nodes.size(); ++k) {
        const SyntaxNode& n = tree.node(holder_nodes[k]);
        HolderNode h;
        h.id = statement_count + static_cast<std::int32_t>(k);
        h.kind = n.kind;
        h.start_line = n.start_line;
        h.end_line = n.end_line;
        h.start_byte = n.start_byte;
        h.end_byte = n.end_byte;
        h.syntax_node = holder_nodes[k];
        snippet.graph_ids_[static_cast<std::size_t>(holder_nodes[k])] = h.id;
        snippet.holders_.push_back(std::move(h));
    }
    snippet.degraded_ = tree.has_error();
    return snippet;
}

std::vector<std::pair<std::string, StatementId>> token_table(const CodeSnippet& snippet) {
    std::vector<std::pair<std::string, StatementId>> out;
    out.reserve(snippet.token_count());
    for (const LeafToken& t : snippet.tokens()) out.emplace_back(t.text, t.owner);
    return out;
}

std::vector<std::size_t> transitive_tokens(const CodeSnippet& snippet, StatementId statement) {
    if (statement < 0 || static_cast<std::size_t>(statement) >= snippet.statement_count()) {
        throw Error(ErrorCode::UnknownNode, "statement " + std::to_string(statement) + " out of range");
    }
    std::vector<std::size_t> out;
    for (const LeafToken& t : snippet.tokens()) {
        for (StatementId s = t.owner; s != kUnowned; s = snippet.statements()[static_cast<std::size_t>(s)].enclosing) {
            if (s == statement) {
                out.push_back(t.index);
                break;
            }
        }
    }
    return out;
}

std::string reconstruct_source(const CodeSnippet& snippet) {
    const std::string& src = snippet.source_text();
    std::string out;
    out.reserve(src.size());
    std::uint32_t cursor = 0;
    for (const LeafToken& t : snippet.tokens()) {
        out.append(src, cursor, t.start_byte - cursor);
        out += t.text;
        cursor = t.end_byte;
    }
    out.append(src, cursor, std::string::npos);
    return out;
}

std::string to_json_string(const CodeSnippet& snippet) {
    nlohmann::json doc;
    doc["language"] = language_name(snippet.language());
    doc["parse_degraded"] = snippet.parse_degraded();
    nlohmann::json statements = nlohmann::json::array();
    for (const Statement& s : snippet.statements()) {
        statements.push_back({{"id", s.id},
                              {"kind", s.kind},
                              {"start_line", s.start_line},
                              {"end_line", s.end_line},
                              {"start_byte", s.start_byte},
                              {"end_byte", s.end_byte},
                              {"enclosing", s.enclosing},
                              {"direct_token_ids", s.direct_token_ids}});
    }
    doc["statements"] = std::move(statements);
    nlohmann::json tokens = nlohmann::json::array();
    for (const LeafToken& t : snippet.tokens()) {
        tokens.push_back({{"index", t.index},
                          {"text", t.text},
                          {"start_byte", t.start_byte},
                          {"end_byte", t.end_byte},
                          {"line", t.line},
                          {"owner", t.owner}});
    }
    doc["tokens"] = std::move(tokens);
    nlohmann::json holders = nlohmann::json::array();
    for (const HolderNode& h : snippet.holders()) {
        holders.push_back({{"id", h.id}, {"kind", h.kind}, {"start_line", h.start_line}, {"end_line", h.end_line}});
    }
    doc["holders"] = std::move(holders);
    return doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace);
}

} // namespace cvmask
