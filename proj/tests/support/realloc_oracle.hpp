#pragma once

// Scalar-loop reference for the reallocation procedure, deliberately kept
// independent of the library implementation: plain vectors, explicit slice
// copies, one step per statement. Used to cross-check `reallocate`.

#include <utility>
#include <vector>

namespace oracle {

struct Inputs {
    int heads = 0;
    int seq   = 0;
    std::vector<double> weights; // [H x S x S] row-major
    int image_begin = 0;
    int image_end   = 0;
    std::vector<int> text_sinks;
    std::vector<int> visual_sinks;
    std::vector<std::pair<int, int>> selected; // (head, source)
    double p              = 0.6;
    bool use_text_sinks   = true;
    bool use_image_sinks  = true;
    bool renormalize_rows = false;
};

inline std::vector<double> reallocate(const Inputs & in) {
    std::vector<double> out = in.weights;
    const std::vector<int> text  = in.use_text_sinks ? in.text_sinks : std::vector<int>{};
    const std::vector<int> visual = in.use_image_sinks ? in.visual_sinks : std::vector<int>{};

    for (const auto & [h, s] : in.selected) {
        const size_t base = (static_cast<size_t>(h) * in.seq + s) * in.seq;

        // slice of the selected row
        std::vector<double> slice(out.begin() + base, out.begin() + base + in.seq);
        const std::vector<double> slice_old = slice;

        // scale the text-sink entries
        if (in.p < 1.0) {
            for (int i : text) {
                slice[i] = slice[i] * in.p;
            }
        }

        // budget removed from the text sinks (pre-scaling values)
        double budget = 0.0;
        if (in.p < 1.0) {
            for (int i : text) {
                budget += slice_old[i] * (1.0 - in.p);
            }
        }

        // zero the visual-sink entries
        double zeroed = 0.0;
        for (int i : visual) {
            zeroed += slice[i];
            slice[i] = 0.0;
        }

        if (zeroed == 0.0 && budget == 0.0) {
            continue; // untouched row
        }

        // vision ratio over the image span, after zeroing
        double span_mass = 0.0;
        for (int i = in.image_begin; i < in.image_end; ++i) {
            span_mass += slice[i];
        }
        if (span_mass == 0.0) {
            continue; // ratio undefined; row stays as it was
        }
        for (int i = in.image_begin; i < in.image_end; ++i) {
            const double ratio = slice[i] / span_mass;
            slice[i] = slice[i] + budget * ratio;
        }

        if (in.renormalize_rows) {
            double total = 0.0;
            for (int i = 0; i < in.seq; ++i) {
                total += slice[i];
            }
            for (int i = 0; i < in.seq; ++i) {
                slice[i] = slice[i] / total;
            }
        }

        for (int i = 0; i < in.seq; ++i) {
            out[base + i] = slice[i];
        }
    }
    return out;
}

} // namespace oracle
