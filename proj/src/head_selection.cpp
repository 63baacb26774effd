#include "gaseraser/head_selection.hpp"

namespace gaseraser {

HeadSelection HeadSelection::all_pairs(int heads, int seq) {
    HeadSelection sel;
    sel.pairs.reserve(static_cast<size_t>(heads) * seq);
    for (int h = 0; h < heads; ++h) {
        for (int s = 0; s < seq; ++s) {
            sel.pairs.emplace_back(h, s);
        }
    }
    return sel;
}

HeadScores score_heads(const AttentionTensor & t, const TokenContext & ctx,
                       const SinkPartition & sinks, double epsilon) {
    if (ctx.seq() != t.seq()) {
        fail(ErrorCode::DimensionMismatch, "context S = " + std::to_string(ctx.seq()) +
                                               " but tensor S = " + std::to_string(t.seq()));
    }
    if (!(epsilon > 0.0)) {
        fail(ErrorCode::InvalidParams, "epsilon must be positive");
    }
    for (int j : sinks.all_sinks.indices()) {
        if (j >= t.seq()) {
            fail(ErrorCode::IndexOutOfRange, "sink index out of range");
        }
    }

    HeadScores scores;
    scores.heads   = t.heads();
    scores.seq     = t.seq();
    scores.epsilon = epsilon;
    scores.delta.resize(static_cast<size_t>(t.heads()) * t.seq());
    scores.xi.resize(scores.delta.size());

    const Span span = ctx.image_span();
    for (int h = 0; h < t.heads(); ++h) {
        for (int s = 0; s < t.seq(); ++s) {
            const size_t idx = static_cast<size_t>(h) * t.seq() + s;
            const double d   = row_mass(t, h, s, span);
            const double vs  = row_mass(t, h, s, sinks.visual_sinks);
            scores.delta[idx] = d;
            scores.xi[idx]    = vs / (d + epsilon);
        }
    }
    return scores;
}

HeadSelection select_visual_heads(const HeadScores & scores, double rho, double alpha,
                                  SelectionDirections directions) {
    if (!(rho >= 0.0 && rho <= 1.0)) {
        fail(ErrorCode::InvalidParams, "rho must lie in [0, 1]");
    }
    if (!(alpha >= 0.0)) {
        fail(ErrorCode::InvalidParams, "alpha must be non-negative");
    }

    HeadSelection sel;
    sel.rho        = rho;
    sel.alpha      = alpha;
    sel.directions = directions;
    for (int h = 0; h < scores.heads; ++h) {
        for (int s = 0; s < scores.seq; ++s) {
            const double d  = scores.delta_at(h, s);
            const double x  = scores.xi_at(h, s);
            const bool d_ok = directions.delta_select_high ? (d >= rho) : (d <= rho);
            const bool x_ok = directions.xi_select_low ? (x <= alpha) : (x >= alpha);
            if (d_ok && x_ok) {
                sel.pairs.emplace_back(h, s);
            }
        }
    }
    return sel;
}

} // namespace gaseraser
