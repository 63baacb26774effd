#include "gaseraser/metrics.hpp"

#include "gaseraser/errors.hpp"

namespace gaseraser {

BenchSummary summarize_accuracies(double acc_before, double acc_after_base,
                                  double acc_after_eraser, int episodes) {
    BenchSummary s;
    s.episodes         = episodes;
    s.acc_before       = acc_before;
    s.acc_after_base   = acc_after_base;
    s.acc_after_eraser = acc_after_eraser;
    s.gain             = acc_after_eraser - acc_after_base;
    if (acc_before > 0.0) {
        const double mis_base   = (acc_before - acc_after_base) / acc_before * 100.0;
        const double mis_eraser = (acc_before - acc_after_eraser) / acc_before * 100.0;
        s.misguidance_base   = mis_base;
        s.misguidance_eraser = mis_eraser;
        if (mis_base != 0.0) {
            s.relative_misguidance_reduction = (mis_base - mis_eraser) / mis_base * 100.0;
        }
    }
    return s;
}

BenchSummary summarize(const std::vector<EpisodeOutcome> & outcomes) {
    if (outcomes.empty()) {
        fail(ErrorCode::EmptyInput, "no episodes to summarize");
    }
    int before = 0, after_base = 0, after_eraser = 0;
    for (const EpisodeOutcome & e : outcomes) {
        before       += e.answer_before == e.correct;
        after_base   += e.answer_after_base == e.correct;
        after_eraser += e.answer_after_eraser == e.correct;
    }
    const double n = static_cast<double>(outcomes.size());
    return summarize_accuracies(100.0 * before / n, 100.0 * after_base / n,
                                100.0 * after_eraser / n, static_cast<int>(outcomes.size()));
}

} // namespace gaseraser
