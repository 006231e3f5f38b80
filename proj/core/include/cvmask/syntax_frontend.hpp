#pragma once

// Parsing of (possibly non-compilable) source text into a statement table and
// a leaf-token table. The concrete syntax tree produced by the parser is copied
// into an owned arena so that a CodeSnippet is a self-contained immutable value.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cvmask {

enum class Language { Java };

/// Resolves a language name ("java"); throws Error{UnsupportedLanguage}.
Language parse_language(std::string_view name);
std::string_view language_name(Language language) noexcept;

using StatementId = std::int32_t;
inline constexpr StatementId kUnowned = -1;

/// One node of the concrete syntax tree, including anonymous punctuation.
struct SyntaxNode {
    std::string kind;
    std::string field;  // field name under the parent, empty if none
    std::uint32_t start_byte = 0;
    std::uint32_t end_byte = 0;
    int start_line = 0;  // 1-based
    int end_line = 0;    // 1-based, line of the last byte
    int parent = -1;
    std::vector<int> children;
    bool named = false;
    bool is_error = false;
    bool is_missing = false;
    bool is_extra = false;
};

class SyntaxTree {
public:
    SyntaxTree() = default;
    explicit SyntaxTree(std::vector<SyntaxNode> nodes) : nodes_(std::move(nodes)) {}

    [[nodiscard]] const SyntaxNode& node(int index) const { return nodes_.at(static_cast<std::size_t>(index)); }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] int root() const noexcept { return nodes_.empty() ? -1 : 0; }

    /// First child carrying `field`, or -1.
    [[nodiscard]] int child_by_field(int index, std::string_view field) const;
    [[nodiscard]] std::vector<int> children_by_field(int index, std::string_view field) const;
    [[nodiscard]] std::vector<int> named_children(int index) const;
    [[nodiscard]] bool has_error() const;

private:
    std::vector<SyntaxNode> nodes_;
};

struct LeafToken {
    std::size_t index = 0;
    std::string text;
    std::uint32_t start_byte = 0;
    std::uint32_t end_byte = 0;
    int line = 0;
    StatementId owner = kUnowned;
    int syntax_node = -1;
};

struct Statement {
    StatementId id = 0;
    std::string kind;
    int start_line = 0;
    int end_line = 0;
    std::uint32_t start_byte = 0;
    std::uint32_t end_byte = 0;
    std::vector<std::size_t> direct_token_ids;
    int syntax_node = -1;
    StatementId enclosing = kUnowned;  // innermost enclosing statement
};

/// Grammar constructs that group statements without being maskable themselves.
class HolderSet {
public:
    HolderSet() = default;
    explicit HolderSet(std::set<std::string, std::less<>> kinds) : kinds_(std::move(kinds)) {}

    [[nodiscard]] bool contains(std::string_view kind) const { return kinds_.find(kind) != kinds_.end(); }
    [[nodiscard]] const std::set<std::string, std::less<>>& kinds() const noexcept { return kinds_; }
    [[nodiscard]] bool empty() const noexcept { return kinds_.empty(); }

    friend bool operator==(const HolderSet&, const HolderSet&) = default;

private:
    std::set<std::string, std::less<>> kinds_;
};

/// Holder instance found in a parsed snippet. Its graph id follows the
/// statement ids: statement_count() + position in holders().
struct HolderNode {
    std::int32_t id = 0;
    std::string kind;
    int start_line = 0;
    int end_line = 0;
    std::uint32_t start_byte = 0;
    std::uint32_t end_byte = 0;
    int syntax_node = -1;
};

class CodeSnippet {
public:
    [[nodiscard]] const std::string& source_text() const noexcept { return source_; }
    [[nodiscard]] Language language() const noexcept { return language_; }
    [[nodiscard]] const std::vector<Statement>& statements() const noexcept { return statements_; }
    [[nodiscard]] const std::vector<LeafToken>& tokens() const noexcept { return tokens_; }
    [[nodiscard]] const std::vector<HolderNode>& holders() const noexcept { return holders_; }
    [[nodiscard]] const HolderSet& holder_kinds() const noexcept { return holder_kinds_; }
    [[nodiscard]] const SyntaxTree& tree() const noexcept { return tree_; }
    [[nodiscard]] std::size_t statement_count() const noexcept { return statements_.size(); }
    [[nodiscard]] std::size_t token_count() const noexcept { return tokens_.size(); }
    /// True when the parser had to recover from syntax errors.
    [[nodiscard]] bool parse_degraded() const noexcept { return degraded_; }

    /// Statement id or holder graph id for a syntax node, or -1.
    [[nodiscard]] std::int32_t graph_id_of(int syntax_node) const;
    [[nodiscard]] std::optional<StatementId> statement_of(int syntax_node) const;
    [[nodiscard]] bool is_holder_node(int syntax_node) const;

private:
    friend CodeSnippet parse(std::string source, Language language, const HolderSet& holders);

    std::string source_;
    Language language_ = Language::Java;
    std::vector<Statement> statements_;
    std::vector<LeafToken> tokens_;
    std::vector<HolderNode> holders_;
    HolderSet holder_kinds_;
    SyntaxTree tree_;
    std::vector<std::int32_t> graph_ids_;  // indexed by syntax node
    bool degraded_ = false;
};

/// Frozen holder kinds for a language (versioned with the fixtures).
HolderSet default_holders(Language language);

/// Statement kinds recognised for a language, before positional filtering.
const std::set<std::string, std::less<>>& statement_kinds(Language language);

CodeSnippet parse(std::string source, Language language);
CodeSnippet parse(std::string source, Language language, const HolderSet& holders);

/// (token text, owner statement id or kUnowned), in source order.
std::vector<std::pair<std::string, StatementId>> token_table(const CodeSnippet& snippet);

/// Tokens of a statement including those of all nested statements, sorted.
std::vector<std::size_t> transitive_tokens(const CodeSnippet& snippet, StatementId statement);

/// Rebuilds the source from the token table and the original inter-token gaps.
std::string reconstruct_source(const CodeSnippet& snippet);

/// Deterministic JSON rendering of the statement and token tables.
std::string to_json_string(const CodeSnippet& snippet);

} // namespace cvmask
