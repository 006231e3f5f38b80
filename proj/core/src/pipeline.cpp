#include "cvmask/pipeline.hpp"

namespace cvmask {

PipelineResult run_pipeline(std::string source, const MaskConfig& config, Language language) {
    config.validate();
    PipelineResult result{parse(std::move(source), language), {}, {}, {}, {}};
    result.view = build_views(result.snippet, config.selection());
    result.masks = all_masks(result.snippet, result.view, result.snippet.holder_kinds());
    result.raw_mask = attention_gen(result.snippet, result.masks);
    result.raw_mask.set_config_digest(config.digest());
    result.mask = apply_mask_limit(result.raw_mask, config.mask_limit);
    return result;
}

} // namespace cvmask
