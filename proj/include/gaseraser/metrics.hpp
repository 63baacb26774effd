#pragma once

#include <optional>
#include <vector>

namespace gaseraser {

struct EpisodeOutcome {
    int correct             = 0;
    int answer_before       = 0;
    int answer_after_base   = 0;
    int answer_after_eraser = 0;
};

/// Accuracy and misguidance accounting for a benchmark run. Accuracies and
/// misguidance rates are percentages; the misguidance rate is the fraction of
/// the before-negation accuracy lost after negation, and is absent when the
/// before-negation accuracy is zero.
struct BenchSummary {
    int episodes          = 0;
    double acc_before       = 0.0;
    double acc_after_base   = 0.0;
    double acc_after_eraser = 0.0;
    double gain             = 0.0; // acc_after_eraser - acc_after_base
    std::optional<double> misguidance_base;
    std::optional<double> misguidance_eraser;
    std::optional<double> relative_misguidance_reduction;
};

BenchSummary summarize(const std::vector<EpisodeOutcome> & outcomes);

/// Same accounting starting from already-aggregated accuracies (percent).
BenchSummary summarize_accuracies(double acc_before, double acc_after_base,
                                  double acc_after_eraser, int episodes = 0);

} // namespace gaseraser
