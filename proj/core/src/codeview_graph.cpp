#include "cvmask/codeviews.hpp"

#include "cvmask/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>

namespace cvmask {

std::string_view edge_kind_name(EdgeKind kind) noexcept {
    switch (kind) {
    case EdgeKind::Ast: return "AST";
    case EdgeKind::Cfg: return "CFG";
    case EdgeKind::Dfg: return "DFG";
    case EdgeKind::LastDef: return "LAST_DEF";
    case EdgeKind::LastUse: return "LAST_USE";
    }
    return "UNKNOWN";
}

std::string_view view_tag_name(ViewTag tag) noexcept {
    switch (tag) {
    case ViewTag::Ast: return "AST";
    case ViewTag::Cfg: return "CFG";
    case ViewTag::Dfg: return "DFG";
    }
    return "UNKNOWN";
}

ViewTag parse_view_tag(std::string_view name) {
    std::string lowered(name);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lowered == "ast") return ViewTag::Ast;
    if (lowered == "cfg") return ViewTag::Cfg;
    if (lowered == "dfg") return ViewTag::Dfg;
    throw Error(ErrorCode::ConfigError, "unknown code view '" + std::string(name) + "'");
}

CodeViewGraph::CodeViewGraph(std::vector<GraphNode> nodes, std::set<Edge> edges, std::set<ViewTag> views)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), views_(std::move(views)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].id != static_cast<NodeId>(i)) {
            throw Error(ErrorCode::UnknownNode, "node ids must be dense and ordered");
        }
    }
    incoming_.resize(nodes_.size());
    for (const Edge& e : edges_) {
        if (!has_node(e.src) || !has_node(e.dst)) {
            throw Error(ErrorCode::UnknownNode, "edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                                                    " references a missing node");
        }
        incoming_[static_cast<std::size_t>(e.dst)].push_back(e.src);
    }
    for (auto& parents : incoming_) {
        std::sort(parents.begin(), parents.end());
        parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
    }
}

bool CodeViewGraph::has_node(NodeId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < nodes_.size();
}

const GraphNode& CodeViewGraph::node(NodeId id) const {
    if (!has_node(id)) throw Error(ErrorCode::UnknownNode, "node " + std::to_string(id) + " not in view");
    return nodes_[static_cast<std::size_t>(id)];
}

const std::vector<NodeId>& CodeViewGraph::incoming(NodeId id) const {
    if (!has_node(id)) throw Error(ErrorCode::UnknownNode, "node " + std::to_string(id) + " not in view");
    return incoming_[static_cast<std::size_t>(id)];
}

std::vector<NodeId> CodeViewGraph::successors(NodeId id, EdgeKind kind) const {
    std::vector<NodeId> out;
    for (auto it = edges_.lower_bound(Edge{id, 0, EdgeKind::Ast}); it != edges_.end() && it->src == id; ++it) {
        if (it->kind == kind) out.push_back(it->dst);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::size_t CodeViewGraph::count_edges(EdgeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(edges_.begin(), edges_.end(), [kind](const Edge& e) { return e.kind == kind; }));
}

std::vector<GraphNode> node_universe(const CodeSnippet& snippet) {
    std::vector<GraphNode> nodes;
    nodes.reserve(snippet.statement_count() + snippet.holders().size());
    for (const Statement& s : snippet.statements()) nodes.push_back({s.id, s.kind, s.start_line, s.end_line});
    for (const HolderNode& h : snippet.holders()) nodes.push_back({h.id, h.kind, h.start_line, h.end_line});
    return nodes;
}

CodeViewGraph build_ast_view(const CodeSnippet& snippet, const HolderSet& holders) {
    if (!(holders == snippet.holder_kinds())) {
        throw Error(ErrorCode::MismatchedSnippet, "holder set differs from the one used to parse the snippet");
    }
    const SyntaxTree& tree = snippet.tree();
    std::set<Edge> edges;
    auto link_to_projected_parent = [&](NodeId child, int syntax_node) {
        for (int p = tree.node(syntax_node).parent; p >= 0; p = tree.node(p).parent) {
            const std::int32_t gid = snippet.graph_id_of(p);
            if (gid >= 0) {
                edges.insert({gid, child, EdgeKind::Ast});
                return;
            }
        }
    };
    for (const Statement& s : snippet.statements()) link_to_projected_parent(s.id, s.syntax_node);
    for (const HolderNode& h : snippet.holders()) link_to_projected_parent(h.id, h.syntax_node);
    return CodeViewGraph(node_universe(snippet), std::move(edges), {ViewTag::Ast});
}

CodeViewGraph compose(std::span<const CodeViewGraph> views) {
    if (views.empty()) throw Error(ErrorCode::EmptyInput, "compose needs at least one view");
    const auto& base = views.front().nodes();
    std::set<Edge> edges;
    std::set<ViewTag> tags;
    for (const CodeViewGraph& v : views) {
        if (v.nodes() != base) throw Error(ErrorCode::MismatchedSnippet, "views are built over different snippets");
        edges.insert(v.edges().begin(), v.edges().end());
        tags.insert(v.views().begin(), v.views().end());
    }
    return CodeViewGraph(base, std::move(edges), std::move(tags));
}

std::vector<NodeId> get_parents(NodeId node, const CodeViewGraph& view) {
    return view.incoming(node);
}

CodeViewGraph build_views(const CodeSnippet& snippet, const ViewSelection& selection) {
    if (selection.views.empty()) throw Error(ErrorCode::ConfigError, "at least one code view must be selected");
    std::vector<CodeViewGraph> parts;
    std::optional<CodeViewGraph> cfg;
    auto ensure_cfg = [&]() -> const CodeViewGraph& {
        if (!cfg) cfg = build_cfg(snippet);
        return *cfg;
    };
    for (ViewTag tag : selection.views) {
        switch (tag) {
        case ViewTag::Ast: parts.push_back(build_ast_view(snippet, snippet.holder_kinds())); break;
        case ViewTag::Cfg: parts.push_back(ensure_cfg()); break;
        case ViewTag::Dfg: {
            const CodeViewGraph& flow = ensure_cfg();
            const DefUseFacts facts = compute_rda(snippet, flow);
            parts.push_back(build_dfg(snippet, flow, facts, selection.dfg));
            break;
        }
        }
    }
    return compose(parts);
}

std::string to_json_string(const CodeViewGraph& graph) {
    nlohmann::json doc;
    nlohmann::json nodes = nlohmann::json::array();
    for (const GraphNode& n : graph.nodes()) {
        nodes.push_back({{"id", n.id}, {"kind", n.kind}, {"start_line", n.start_line}, {"end_line", n.end_line}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const Edge& e : graph.edges()) {
        edges.push_back({{"src", e.src}, {"dst", e.dst}, {"kind", edge_kind_name(e.kind)}});
    }
    nlohmann::json views = nlohmann::json::array();
    for (ViewTag t : graph.views()) views.push_back(view_tag_name(t));
    doc["nodes"] = std::move(nodes);
    doc["edges"] = std::move(edges);
    doc["views"] = std::move(views);
    return doc.dump(2);
}

} // namespace cvmask
