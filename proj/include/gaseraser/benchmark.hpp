#pragma once

#include "gaseraser/metrics.hpp"
#include "gaseraser/toy_model.hpp"

namespace gaseraser {

/// Generator knobs for the planted-gaslighting benchmark. Defaults are the
/// calibrated values the shipped thresholds were locked against; see
/// docs/benchmark.md.
struct GenParams {
    int grid_w       = 6;
    int grid_h       = 6;
    int salient_w    = 2;
    int salient_h    = 2;
    int question_len = 6;
    int option_count = 4;
    int gaslight_len = 3;
    int dim          = 256;

    double tau = 20.0;
    std::vector<int> monitored_dims = {channels::sink_visual, channels::sink_text};

    double content_value    = 1.2;  // salient-cell category strength
    double content_jitter   = 0.10; // uniform +- per sample
    double bg_content_value = 0.25; // background-cell category strength
    double gaslight_value   = 4.0;  // assertion strength of the gaslight carrier

    // sink spikes, expressed as detection scores (raw value = score * sqrt(d))
    double text_spike_min   = 25.5;
    double text_spike_max   = 30.5;
    double visual_spike_min = 22.0;
    double visual_spike_max = 28.0;
    double visual_sink_prob = 0.35;
    int max_visual_sinks    = 2;
    double spike_scale      = 1.0; // 0 disables every planted spike

    double embed_noise = 0.02; // sigma on all dims
    double free_noise  = 0.45; // extra sigma on the free dims

    void validate() const;
};

struct SinkSpike {
    int position = 0; // round-2 token index
    int dim      = 0;
    double value = 0.0;
};

/// One benchmark instance: the same scene with and without the gaslight
/// block. The correct option is the planted salient region's category; the
/// gaslight carrier asserts a different option and carries a text-sink spike.
struct GaslightSample {
    TokenContext round1; // system, image, question, options, answer
    TokenContext round2; // same plus the gaslight block before the answer
    int correct         = 0;
    int gaslight_target = 0;
    std::vector<SinkSpike> spikes;
};

std::vector<GaslightSample> generate_benchmark(uint64_t seed, int n, const GenParams & gp = {});

struct EpisodeResult {
    int answer_before       = 0;
    int answer_after_base   = 0;
    int answer_after_eraser = 0;
    std::vector<ReallocReport> reports; // from the intervened round-2 run
};

/// Round 1 without the gaslight block, round 2 with it (plain), round 2 with
/// the intervention.
EpisodeResult run_episode(const ToyModel & model, const GaslightSample & sample,
                          const InterventionConfig & config);

EpisodeOutcome to_outcome(const GaslightSample & sample, const EpisodeResult & episode);

/// Runs every episode (optionally on several worker threads; results do not
/// depend on the worker count) and returns per-episode results in order.
std::vector<EpisodeResult> run_episodes(const ToyModel & model,
                                        const std::vector<GaslightSample> & samples,
                                        const InterventionConfig & config, int workers = 1);

} // namespace gaseraser
