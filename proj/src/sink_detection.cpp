#include "gaseraser/sink_detection.hpp"

#include <cmath>

namespace gaseraser {

SinkPartition SinkPartition::split(const IndexSet & all, Span image_span) {
    SinkPartition p;
    p.all_sinks    = all;
    p.visual_sinks = all.intersect_span(image_span);
    p.text_sinks   = all.difference(p.visual_sinks);
    return p;
}

static void check_criterion(const TokenContext & ctx, const SinkCriterion & criterion) {
    if (!(criterion.tau > 0.0)) {
        fail(ErrorCode::InvalidParams, "tau must be positive");
    }
    if (criterion.mode == SinkScoreMode::monitored_max) {
        if (criterion.monitored_dims.empty()) {
            fail(ErrorCode::InvalidParams, "monitored dimension set is empty");
        }
        for (int d : criterion.monitored_dims) {
            if (d < 0 || d >= ctx.dim()) {
                fail(ErrorCode::DimensionOutOfRange,
                     "monitored dimension " + std::to_string(d) + " out of range for d = " +
                         std::to_string(ctx.dim()));
            }
        }
    }
}

double token_norm_score(const TokenContext & ctx, int token, const SinkCriterion & criterion) {
    if (token < 0 || token >= ctx.seq()) {
        fail(ErrorCode::IndexOutOfRange, "token index out of range");
    }
    check_criterion(ctx, criterion);

    const double * e = ctx.embedding(token);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(ctx.dim()));

    if (criterion.mode == SinkScoreMode::full_norm) {
        double sq = 0.0;
        for (int j = 0; j < ctx.dim(); ++j) {
            sq += e[j] * e[j];
        }
        return inv_sqrt_d * std::sqrt(sq);
    }

    double best = 0.0;
    for (int d : criterion.monitored_dims) {
        const double v = std::abs(e[d]) * inv_sqrt_d;
        if (v > best) {
            best = v;
        }
    }
    return best;
}

SinkPartition detect_sinks(const TokenContext & ctx, const SinkCriterion & criterion) {
    check_criterion(ctx, criterion);
    std::vector<int> hits;
    for (int i = 0; i < ctx.seq(); ++i) {
        if (token_norm_score(ctx, i, criterion) > criterion.tau) {
            hits.push_back(i);
        }
    }
    return SinkPartition::split(IndexSet::of(std::move(hits)), ctx.image_span());
}

} // namespace gaseraser
