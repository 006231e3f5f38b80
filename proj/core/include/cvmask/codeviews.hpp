#pragma once

// Statement-level code views: AST projection, control flow, reaching-definition
// data flow (plus last-def / last-use edges), and their composition.

#include "cvmask/syntax_frontend.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cvmask {

using NodeId = std::int32_t;

enum class EdgeKind : std::uint8_t { Ast, Cfg, Dfg, LastDef, LastUse };
enum class ViewTag : std::uint8_t { Ast, Cfg, Dfg };

std::string_view edge_kind_name(EdgeKind kind) noexcept;
std::string_view view_tag_name(ViewTag tag) noexcept;
/// Accepts "ast", "cfg", "dfg" in any case; throws Error{ConfigError}.
ViewTag parse_view_tag(std::string_view name);

struct GraphNode {
    NodeId id = 0;
    std::string kind;
    int start_line = 0;
    int end_line = 0;

    friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct Edge {
    NodeId src = 0;
    NodeId dst = 0;
    EdgeKind kind = EdgeKind::Ast;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Typed directed multigraph over statement and holder nodes. Node ids are
/// dense: statements first, then holders. Immutable once built.
class CodeViewGraph {
public:
    CodeViewGraph() = default;
    /// Throws Error{UnknownNode} when an edge endpoint is not a node.
    CodeViewGraph(std::vector<GraphNode> nodes, std::set<Edge> edges, std::set<ViewTag> views);

    [[nodiscard]] const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::set<Edge>& edges() const noexcept { return edges_; }
    [[nodiscard]] const std::set<ViewTag>& views() const noexcept { return views_; }
    [[nodiscard]] bool has_node(NodeId id) const noexcept;
    [[nodiscard]] const GraphNode& node(NodeId id) const;
    /// Sources of edges into `id` (any kind), sorted and de-duplicated.
    [[nodiscard]] const std::vector<NodeId>& incoming(NodeId id) const;
    [[nodiscard]] std::vector<NodeId> successors(NodeId id, EdgeKind kind) const;
    [[nodiscard]] std::size_t count_edges(EdgeKind kind) const;

private:
    std::vector<GraphNode> nodes_;
    std::set<Edge> edges_;
    std::set<ViewTag> views_;
    std::vector<std::vector<NodeId>> incoming_;
};

/// Statement nodes followed by holder nodes of a parsed snippet.
std::vector<GraphNode> node_universe(const CodeSnippet& snippet);

/// Parent -> child edges over the statement/holder projection of the tree.
/// `holders` must be the set the snippet was parsed with.
CodeViewGraph build_ast_view(const CodeSnippet& snippet, const HolderSet& holders);

CodeViewGraph build_cfg(const CodeSnippet& snippet);

/// Variables written and read by a statement's own syntax (nested statements
/// excluded). Names are simple identifiers; `a.b` is tracked as `a`.
struct StatementAccess {
    std::set<std::string> defs;
    std::set<std::string> uses;
};

std::vector<StatementAccess> extract_accesses(const CodeSnippet& snippet);

struct Definition {
    StatementId site = 0;
    std::string var;

    friend auto operator<=>(const Definition&, const Definition&) = default;
};

struct DefUseFacts {
    std::vector<std::set<std::string>> gen;  // variables defined per statement
    std::vector<std::set<std::string>> use;  // variables read per statement
    std::vector<std::set<Definition>> in;
    std::vector<std::set<Definition>> out;
};

/// Forward may reaching-definitions, solved with a worklist to the least fixpoint.
DefUseFacts compute_rda(const CodeSnippet& snippet, const CodeViewGraph& cfg);

/// gen(n) ∪ (in − kill(n)) for a single node.
std::set<Definition> transfer(const DefUseFacts& facts, StatementId node, const std::set<Definition>& in);

struct DfgOptions {
    bool last_def = false;
    bool last_use = false;
};

CodeViewGraph build_dfg(const CodeSnippet& snippet, const CodeViewGraph& cfg, const DefUseFacts& facts,
                        DfgOptions options);

/// Union of nodes, edges and view tags. Throws Error{MismatchedSnippet} when
/// node universes differ and Error{EmptyInput} for an empty list.
CodeViewGraph compose(std::span<const CodeViewGraph> views);

/// { p | (p -> node) in view }. Throws Error{UnknownNode}.
std::vector<NodeId> get_parents(NodeId node, const CodeViewGraph& view);

struct ViewSelection {
    std::set<ViewTag> views;
    DfgOptions dfg;
};

/// Builds every selected view and composes them.
CodeViewGraph build_views(const CodeSnippet& snippet, const ViewSelection& selection);

/// {"edges":[{dst,kind,src}], "nodes":[{end_line,id,kind,start_line}], "views":[...]}
std::string to_json_string(const CodeViewGraph& graph);

} // namespace cvmask
