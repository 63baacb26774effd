#pragma once

#include "gaseraser/attention.hpp"
#include "gaseraser/head_selection.hpp"
#include "gaseraser/sink_detection.hpp"

namespace gaseraser {

struct ReallocParams {
    /// Text-sink scaling factor; must lie in (0, 1), with p = 1 permitted as
    /// an explicit no-op sentinel (no budget is harvested).
    double p = 0.6;
    bool use_text_sinks   = true;
    bool use_image_sinks  = true;
    bool renormalize_rows = false;
};

/// Outcome for one selected (head, source) row.
struct RowRealloc {
    int head   = 0;
    int source = 0;
    double budget           = 0.0; // harvested from text sinks
    double pre_image_mass   = 0.0; // image-span mass before any edit
    double post_image_mass  = 0.0; // image-span mass in the output row
    double zeroed_sink_mass = 0.0; // visual-sink mass removed from the row
    bool modified               = false;
    bool skipped_zero_image_mass = false; // span empty after zeroing; row untouched
};

struct ReallocReport {
    int layer_index = 0;
    std::vector<RowRealloc> rows; // one entry per selected pair, selection order
    int modified_row_count = 0;

    double total_budget() const;
};

/// Applies the reallocation to every selected row, in selection order:
/// scale text-sink columns by p, harvest the (1-p) fraction of their
/// pre-scaling mass as the budget, zero visual-sink columns, then spread the
/// budget over the image span proportionally to the row's post-zeroing image
/// profile. Rows outside the selection are returned bit-identical; with
/// renormalization on, every modified row is rescaled to sum to 1.
std::pair<AttentionTensor, ReallocReport> reallocate(const AttentionTensor & t,
                                                     const TokenContext & ctx,
                                                     const SinkPartition & sinks,
                                                     const HeadSelection & selection,
                                                     const ReallocParams & params);

} // namespace gaseraser
