#pragma once

#include "gaseraser/config.hpp"

namespace gaseraser {

/// Runs detect -> score -> select -> reallocate on a single layer's map,
/// honoring the config's ablation switches. `criterion` normally comes from
/// the config but may be overridden (trace sidecars carry their own dims).
std::pair<AttentionTensor, ReallocReport> apply_to_layer(const AttentionTensor & t,
                                                         const TokenContext & ctx,
                                                         const SinkCriterion & criterion,
                                                         const InterventionConfig & config);

/// Applies the per-layer pipeline independently to every layer in the
/// config's layer range; other layers pass through unchanged. One report per
/// intervened layer, in stack order.
std::pair<std::vector<AttentionTensor>, std::vector<ReallocReport>> apply_to_layer_stack(
    const std::vector<AttentionTensor> & tensors, const TokenContext & ctx,
    const SinkCriterion & criterion, const InterventionConfig & config);

} // namespace gaseraser
