#pragma once

#include "cvmask/codeviews.hpp"
#include "cvmask/syntax_frontend.hpp"

#include <set>
#include <string>
#include <vector>

namespace cvmask {

/// The statements deemed relevant context for `seed` under a code view.
struct StatementMask {
    StatementId seed = 0;
    std::set<StatementId> members;
    std::set<ViewTag> view_tags;

    [[nodiscard]] std::size_t size() const noexcept { return members.size(); }
    friend bool operator==(const StatementMask&, const StatementMask&) = default;
};

/// Backward closure over parent edges from `seed`. Holder nodes are traversed
/// but never become members. Throws Error{UnknownNode} / Error{NotAStatement}.
StatementMask backslice(StatementId seed, const CodeViewGraph& view, const HolderSet& holders);

/// One mask per statement, in statement-id order.
std::vector<StatementMask> all_masks(const CodeSnippet& snippet, const CodeViewGraph& view,
                                     const HolderSet& holders);

/// Union of the member statements' [start_line, end_line] ranges.
std::set<int> render_line_mask(const StatementMask& mask, const CodeSnippet& snippet);

/// [{"lines":[...],"members":[...],"seed":n}, ...]
std::string masks_to_json_string(const std::vector<StatementMask>& masks, const CodeSnippet& snippet);

} // namespace cvmask
