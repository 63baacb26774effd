#pragma once

#include "gaseraser/attention.hpp"
#include "gaseraser/sink_detection.hpp"

#include <utility>

namespace gaseraser {

/// Per-(head, source) scores over one layer's attention map:
///   delta — attention mass on the image span (image relevance),
///   xi    — visual-sink attention mass divided by (delta + epsilon).
struct HeadScores {
    int heads = 0;
    int seq   = 0;
    std::vector<double> delta; // [H x S], row-major
    std::vector<double> xi;    // [H x S]
    double epsilon = 0.0;

    double delta_at(int h, int s) const { return delta[static_cast<size_t>(h) * seq + s]; }
    double xi_at(int h, int s) const { return xi[static_cast<size_t>(h) * seq + s]; }
};

/// Comparison directions for the two selection thresholds. The defaults pick
/// rows that are image-focused (delta >= rho) and not sink-dominated
/// (xi <= alpha). Flipping a flag switches that comparison to the opposite,
/// non-strict inequality.
struct SelectionDirections {
    bool delta_select_high = true;
    bool xi_select_low     = true;

    bool operator==(const SelectionDirections &) const = default;
};

/// Vision-centric (head, source) pairs, ordered head-major then by source.
struct HeadSelection {
    std::vector<std::pair<int, int>> pairs;
    double rho   = 0.0;
    double alpha = 0.0;
    SelectionDirections directions;

    static HeadSelection all_pairs(int heads, int seq);
};

HeadScores score_heads(const AttentionTensor & t, const TokenContext & ctx,
                       const SinkPartition & sinks, double epsilon);

HeadSelection select_visual_heads(const HeadScores & scores, double rho, double alpha,
                                  SelectionDirections directions = {});

} // namespace gaseraser
