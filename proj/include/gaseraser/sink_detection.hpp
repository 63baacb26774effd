#pragma once

#include "gaseraser/attention.hpp"

namespace gaseraser {

/// How the per-token score compared against tau is computed from the
/// 1/sqrt(d)-normalized embedding row:
///   monitored_max — max absolute normalized value over the monitored dims
///                   (default; matches the per-dimension spike evidence),
///   full_norm     — the normalized l2 norm of the whole row.
enum class SinkScoreMode {
    monitored_max,
    full_norm,
};

struct SinkCriterion {
    std::vector<int> monitored_dims;
    double tau         = 20.0;
    SinkScoreMode mode = SinkScoreMode::monitored_max;
};

/// Detected sink indices, split by the image span: visual sinks are the sinks
/// inside the span, text sinks the rest. The two sets are disjoint and cover
/// all_sinks.
struct SinkPartition {
    IndexSet all_sinks;
    IndexSet visual_sinks;
    IndexSet text_sinks;

    static SinkPartition split(const IndexSet & all, Span image_span);
};

double token_norm_score(const TokenContext & ctx, int token, const SinkCriterion & criterion);

/// all_sinks = { i | token_norm_score(i) > tau }, strict inequality.
SinkPartition detect_sinks(const TokenContext & ctx, const SinkCriterion & criterion);

} // namespace gaseraser
