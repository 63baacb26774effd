#include "gaseraser/reallocation.hpp"

#include <cmath>

namespace gaseraser {

double ReallocReport::total_budget() const {
    double sum = 0.0;
    for (const RowRealloc & r : rows) {
        sum += r.budget;
    }
    return sum;
}

static void check_inputs(const AttentionTensor & t, const TokenContext & ctx,
                         const SinkPartition & sinks, const HeadSelection & selection,
                         const ReallocParams & params) {
    if (ctx.seq() != t.seq()) {
        fail(ErrorCode::DimensionMismatch, "context and tensor sequence lengths differ");
    }
    if (!std::isfinite(params.p) || !(params.p > 0.0) || params.p > 1.0) {
        fail(ErrorCode::InvalidP, "p must lie in (0, 1) or be the no-op sentinel 1");
    }
    for (int j : sinks.all_sinks.indices()) {
        if (j >= t.seq()) {
            fail(ErrorCode::IndexOutOfRange, "sink index out of range");
        }
    }
    for (const auto & [h, s] : selection.pairs) {
        if (h < 0 || h >= t.heads() || s < 0 || s >= t.seq()) {
            fail(ErrorCode::IndexOutOfRange, "selected pair (" + std::to_string(h) + "," +
                                                 std::to_string(s) + ") out of range");
        }
    }
}

std::pair<AttentionTensor, ReallocReport> reallocate(const AttentionTensor & t,
                                                     const TokenContext & ctx,
                                                     const SinkPartition & sinks,
                                                     const HeadSelection & selection,
                                                     const ReallocParams & params) {
    check_inputs(t, ctx, sinks, selection, params);

    const Span span = ctx.image_span();
    const int  seq  = t.seq();
    const IndexSet empty;
    const IndexSet & text_sinks   = params.use_text_sinks ? sinks.text_sinks : empty;
    const IndexSet & visual_sinks = params.use_image_sinks ? sinks.visual_sinks : empty;
    const bool scale_text = params.p < 1.0;

    std::vector<double> weights = t.weights();
    ReallocReport report;
    report.layer_index = t.layer_index();
    report.rows.reserve(selection.pairs.size());

    for (const auto & [h, s] : selection.pairs) {
        double * row = weights.data() + (static_cast<size_t>(h) * seq + s) * seq;

        RowRealloc rr;
        rr.head   = h;
        rr.source = s;

        double text_mass = 0.0;
        for (int j : text_sinks.indices()) {
            text_mass += row[j];
        }
        double visual_mass = 0.0;
        for (int j : visual_sinks.indices()) {
            visual_mass += row[j];
        }
        rr.budget = scale_text ? text_mass * (1.0 - params.p) : 0.0;

        double pre_image = 0.0;
        for (int j = span.begin; j < span.end; ++j) {
            pre_image += row[j];
        }
        rr.pre_image_mass  = pre_image;
        rr.post_image_mass = pre_image;

        const bool would_change = visual_mass > 0.0 || rr.budget > 0.0;
        if (!would_change) {
            report.rows.push_back(rr);
            continue;
        }

        // Image-span mass left once the visual sinks are removed; this is the
        // denominator of the redistribution ratio.
        double post_zero_mass = 0.0;
        for (int j = span.begin; j < span.end; ++j) {
            post_zero_mass += visual_sinks.contains(j) ? 0.0 : row[j];
        }
        if (post_zero_mass == 0.0) {
            rr.skipped_zero_image_mass = true;
            report.rows.push_back(rr);
            continue;
        }

        if (scale_text) {
            for (int j : text_sinks.indices()) {
                row[j] *= params.p;
            }
        }
        for (int j : visual_sinks.indices()) {
            row[j] = 0.0;
        }
        for (int j = span.begin; j < span.end; ++j) {
            row[j] += rr.budget * (row[j] / post_zero_mass);
        }

        if (params.renormalize_rows) {
            double total = 0.0;
            for (int j = 0; j < seq; ++j) {
                total += row[j];
            }
            for (int j = 0; j < seq; ++j) {
                row[j] /= total;
            }
        }

        double post_image = 0.0;
        for (int j = span.begin; j < span.end; ++j) {
            post_image += row[j];
        }
        rr.post_image_mass  = post_image;
        rr.zeroed_sink_mass = visual_mass;
        rr.modified         = true;
        report.modified_row_count += 1;
        report.rows.push_back(rr);
    }

    return {AttentionTensor::unchecked(std::move(weights), t.heads(), seq, t.layer_index()),
            std::move(report)};
}

} // namespace gaseraser
