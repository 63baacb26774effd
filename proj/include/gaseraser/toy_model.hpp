#pragma once

#include "gaseraser/config.hpp"
#include "gaseraser/pipeline.hpp"

#include <Eigen/Dense>

namespace gaseraser {

/// Embedding channel convention shared by the toy model and the synthetic
/// benchmark generator. The first 64 dimensions carry planted structure, the
/// rest is free space for positional encodings and noise.
namespace channels {
constexpr int vote            = 0;  // width `max_options`: accumulated per-option evidence
constexpr int content         = 8;  // width `max_options`: image-cell category
constexpr int assertion       = 16; // width `max_options`: option pushed by a gaslight token
constexpr int question_marker = 24;
constexpr int image_marker    = 25;
constexpr int answer_marker   = 26;
constexpr int bias            = 27; // 1.0 on every token
constexpr int option_marker   = 28;
constexpr int grounded        = 29; // positive on benign tokens, negative on gaslight tokens
constexpr int sink_visual     = 32; // default monitored dim for planted image sinks
constexpr int sink_text       = 33; // default monitored dim for planted gaslight sinks
constexpr int free_begin      = 64;
constexpr int max_options     = 8;
} // namespace channels

struct ToyModelParams {
    int layers      = 8;
    int heads       = 4;
    int dim         = 256;
    int num_options = 4;
    uint64_t seed   = 2024;

    double pe_scale      = 0.25;  // sinusoidal positional encoding amplitude
    double qk_noise      = 0.004; // sigma of random query/key projection entries
    double v_noise       = 0.02;  // sigma of random value projection entries
    double o_noise       = 0.02;  // sigma of random output projection entries
    double readout_noise = 0.01;  // sigma of the readout's dense part
    // Vote-write gain for the back half of the stack. Option evidence is
    // accumulated mostly by the front layers, mirroring where visual
    // grounding lives in the stack.
    double late_layer_gain = 0.02;
};

struct ForwardResult {
    std::vector<double> logits;
    int answer = 0; // argmax over options
    std::vector<AttentionTensor> attention; // filled when keep_attention is set
    std::vector<ReallocReport> reports;     // filled when an intervention ran
};

/// Deterministic seeded multi-head attention stack standing in for a language
/// model at desk scale. Queries, keys and values carry planted channels wired
/// to the embedding convention above (content attracts grounded queries, sink
/// dimensions attract every query, per-option evidence accumulates into the
/// vote dimensions) plus seeded dense noise; the answer readout maps the final
/// answer-position state to option logits.
class ToyModel {
public:
    explicit ToyModel(ToyModelParams params = {});

    const ToyModelParams & params() const { return params_; }

    /// Standard scaled-dot-product forward pass with lower-triangular masking
    /// and 64-bit softmax. When an intervention config is supplied, every
    /// in-range layer's post-softmax map is replaced by the reallocation
    /// output before value aggregation.
    ForwardResult forward(const TokenContext & ctx,
                          const InterventionConfig * intervention = nullptr,
                          bool keep_attention = false) const;

private:
    ToyModelParams params_;
    std::vector<Eigen::MatrixXd> wq_, wk_, wv_, wo_; // one d x d matrix per layer
    Eigen::MatrixXd readout_;                        // num_options x d
};

} // namespace gaseraser
