#pragma once

#include "cvmask/backslice.hpp"
#include "cvmask/codeviews.hpp"
#include "cvmask/maskgen.hpp"
#include "cvmask/syntax_frontend.hpp"

#include <string>
#include <vector>

namespace cvmask {

struct PipelineResult {
    CodeSnippet snippet;
    CodeViewGraph view;
    std::vector<StatementMask> masks;
    AttentionMask raw_mask;  // before the masking limit
    AttentionMask mask;      // after the masking limit, tagged with the config digest
};

/// parse -> selected views -> compose -> masks for every statement ->
/// attention mask -> masking limit.
PipelineResult run_pipeline(std::string source, const MaskConfig& config, Language language = Language::Java);

} // namespace cvmask
