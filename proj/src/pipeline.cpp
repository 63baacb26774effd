#include "gaseraser/pipeline.hpp"

namespace gaseraser {

std::pair<AttentionTensor, ReallocReport> apply_to_layer(const AttentionTensor & t,
                                                         const TokenContext & ctx,
                                                         const SinkCriterion & criterion,
                                                         const InterventionConfig & config) {
    config.validate();

    SinkPartition sinks = detect_sinks(ctx, criterion);
    if (!config.token_selection) {
        // Token-selection ablation: every token outside the image span counts
        // as a text sink; detected visual sinks are kept as-is.
        std::vector<int> non_image;
        for (int i = 0; i < ctx.seq(); ++i) {
            if (!ctx.image_span().contains(i)) {
                non_image.push_back(i);
            }
        }
        sinks.text_sinks = IndexSet::of(std::move(non_image));
        std::vector<int> all = sinks.text_sinks.indices();
        for (int i : sinks.visual_sinks.indices()) {
            all.push_back(i);
        }
        sinks.all_sinks = IndexSet::of(std::move(all));
    }

    HeadSelection selection;
    if (config.head_selection) {
        const HeadScores scores = score_heads(t, ctx, sinks, config.epsilon);
        selection = select_visual_heads(scores, config.rho, config.alpha, config.directions);
    } else {
        selection = HeadSelection::all_pairs(t.heads(), t.seq());
    }

    return reallocate(t, ctx, sinks, selection, config.realloc_params());
}

std::pair<std::vector<AttentionTensor>, std::vector<ReallocReport>> apply_to_layer_stack(
    const std::vector<AttentionTensor> & tensors, const TokenContext & ctx,
    const SinkCriterion & criterion, const InterventionConfig & config) {
    config.validate();
    const int layers = static_cast<int>(tensors.size());
    const bool empty_range = config.layer_begin == config.layer_end;
    if (!empty_range && (config.layer_begin < 0 || config.layer_end > layers)) {
        fail(ErrorCode::InvalidParams,
             "layer range [" + std::to_string(config.layer_begin) + "," +
                 std::to_string(config.layer_end) + ") exceeds a stack of " +
                 std::to_string(layers) + " layers");
    }

    std::vector<AttentionTensor> out;
    std::vector<ReallocReport> reports;
    out.reserve(tensors.size());
    for (int l = 0; l < layers; ++l) {
        if (!empty_range && l >= config.layer_begin && l < config.layer_end) {
            auto [tensor, report] = apply_to_layer(tensors[l], ctx, criterion, config);
            out.push_back(std::move(tensor));
            reports.push_back(std::move(report));
        } else {
            out.push_back(tensors[l]);
        }
    }
    return {std::move(out), std::move(reports)};
}

} // namespace gaseraser
