#pragma once

#include "gaseraser/head_selection.hpp"
#include "gaseraser/reallocation.hpp"
#include "gaseraser/sink_detection.hpp"

#include <cstdint>
#include <string>

namespace gaseraser {

/// Full intervention configuration. Serializes to a plain-text `key = value`
/// run-config file; every field round-trips.
struct InterventionConfig {
    // sink detection
    double tau = 20.0;
    std::vector<int> monitored_dims = {32, 33};
    SinkScoreMode sink_score_mode   = SinkScoreMode::monitored_max;

    // head selection
    double rho     = 0.6;
    double alpha   = 0.005;
    double epsilon = 1e-6;
    SelectionDirections directions;

    // reallocation
    double p = 0.6;
    bool use_text_sinks   = true;
    bool use_image_sinks  = true;
    bool renormalize_rows = false;

    // pipeline ablation switches: with head_selection off every (head, source)
    // pair is reallocated; with token_selection off every non-image token is
    // treated as a text sink.
    bool head_selection  = true;
    bool token_selection = true;

    // intervened layers, half-open [layer_begin, layer_end)
    int layer_begin = 0;
    int layer_end   = 4;

    uint64_t seed = 17;

    SinkCriterion criterion() const { return {monitored_dims, tau, sink_score_mode}; }
    ReallocParams realloc_params() const {
        return {p, use_text_sinks, use_image_sinks, renormalize_rows};
    }

    void validate() const;

    std::string to_text() const;
    static InterventionConfig from_text(const std::string & text);

    void save(const std::string & path) const;
    static InterventionConfig load(const std::string & path);

    bool operator==(const InterventionConfig &) const = default;
};

/// Hyperparameter presets for the models whose dumps the pipeline was tuned
/// against; they differ only in the sink-likelihood threshold.
InterventionConfig preset_config(const std::string & name);

} // namespace gaseraser
