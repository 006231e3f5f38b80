#include "cvmask/backslice.hpp"

#include "cvmask/error.hpp"

#include <json.hpp>

#include <deque>

namespace cvmask {

StatementMask backslice(StatementId seed, const CodeViewGraph& view, const HolderSet& holders) {
    if (!view.has_node(seed)) throw Error(ErrorCode::UnknownNode, "seed " + std::to_string(seed) + " not in view");
    if (holders.contains(view.node(seed).kind)) {
        throw Error(ErrorCode::NotAStatement, "seed " + std::to_string(seed) + " is a holder node");
    }

    StatementMask mask;
    mask.seed = seed;
    mask.view_tags = view.views();
    std::vector<bool> visited(view.nodes().size(), false);
    std::deque<NodeId> can_visit{seed};
    visited[static_cast<std::size_t>(seed)] = true;

    while (!can_visit.empty()) {
        const NodeId node = can_visit.front();
        can_visit.pop_front();
        if (!holders.contains(view.node(node).kind)) mask.members.insert(node);
        for (NodeId parent : get_parents(node, view)) {
            if (!visited[static_cast<std::size_t>(parent)]) {
                visited[static_cast<std::size_t>(parent)] = true;
                can_visit.push_back(parent);
            }
        }
    }
    return mask;
}

std::vector<StatementMask> all_masks(const CodeSnippet& snippet, const CodeViewGraph& view,
                                     const HolderSet& holders) {
    if (view.nodes().size() != snippet.statement_count() + snippet.holders().size()) {
        throw Error(ErrorCode::MismatchedSnippet, "view was built over a different snippet");
    }
    std::vector<StatementMask> masks;
    masks.reserve(snippet.statement_count());
    for (const Statement& s : snippet.statements()) masks.push_back(backslice(s.id, view, holders));
    return masks;
}

std::set<int> render_line_mask(const StatementMask& mask, const CodeSnippet& snippet) {
    std::set<int> lines;
    for (StatementId m : mask.members) {
        if (m < 0 || static_cast<std::size_t>(m) >= snippet.statement_count()) {
            throw Error(ErrorCode::MaskMismatch, "mask member " + std::to_string(m) + " is not a statement");
        }
        const Statement& s = snippet.statements()[static_cast<std::size_t>(m)];
        for (int line = s.start_line; line <= s.end_line; ++line) lines.insert(line);
    }
    return lines;
}

std::string masks_to_json_string(const std::vector<StatementMask>& masks, const CodeSnippet& snippet) {
    nlohmann::json doc = nlohmann::json::array();
    for (const StatementMask& m : masks) {
        doc.push_back({{"seed", m.seed}, {"members", m.members}, {"lines", render_line_mask(m, snippet)}});
    }
    return doc.dump(2);
}

} // namespace cvmask
