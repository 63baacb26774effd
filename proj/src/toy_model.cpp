#include "gaseraser/toy_model.hpp"

#include "gaseraser/rng.hpp"

#include <cmath>

namespace gaseraser {

namespace {

// Per-head planted wiring. The first five entries are logit coefficients for
// the key channels (logit = coefficient * source embedding entry), the last
// three are value gains. Heads 0-2 are grounded content heads with mild
// repulsion from planted visual sinks; head 3 is a sink-chasing head that
// contributes no assertion votes and no relay.
struct HeadProfile {
    double img, content, tsink, vsink, quest;
    double vote_content, vote_assert, vote_relay;
};

constexpr HeadProfile kProfiles[4] = {
    {1.15, 3.00, 0.0110, -0.0060, 2.0, 1.00, 1.10, 0.30},
    {1.15, 3.00, 0.0110, -0.0060, 2.0, 0.90, 1.30, 0.30},
    {1.15, 3.00, 0.0110, -0.0060, 2.0, 0.80, 1.50, 0.30},
    {0.70, -2.00, 0.0150, 0.0120, 0.3, 3.00, 0.00, 0.00},
};

void validate_params(const ToyModelParams & p) {
    if (p.layers < 1 || p.heads < 1) {
        fail(ErrorCode::InvalidParams, "toy model needs at least one layer and one head");
    }
    if (p.dim % p.heads != 0) {
        fail(ErrorCode::InvalidParams, "hidden dimension must be divisible by the head count");
    }
    const int head_dim = p.dim / p.heads;
    if (head_dim < 16 || p.dim < channels::free_begin + 16) {
        fail(ErrorCode::InvalidParams, "toy model dimensions too small for the channel layout");
    }
    if (p.num_options < 2 || p.num_options > channels::max_options) {
        fail(ErrorCode::InvalidParams, "num_options must lie in [2, 8]");
    }
}

} // namespace

ToyModel::ToyModel(ToyModelParams params) : params_(params) {
    validate_params(params_);
    const int d  = params_.dim;
    const int dh = d / params_.heads;
    const int K  = params_.num_options;

    Rng rng(Rng::derive(params_.seed, 0xA11));

    wq_.reserve(params_.layers);
    wk_.reserve(params_.layers);
    wv_.reserve(params_.layers);
    wo_.reserve(params_.layers);

    for (int l = 0; l < params_.layers; ++l) {
        Eigen::MatrixXd wq = Eigen::MatrixXd::Zero(d, d);
        Eigen::MatrixXd wk = Eigen::MatrixXd::Zero(d, d);
        Eigen::MatrixXd wv = Eigen::MatrixXd::Zero(d, d);
        Eigen::MatrixXd wo = Eigen::MatrixXd::Zero(d, d);

        const double layer_gain =
            l < params_.layers / 2 ? 1.0 : params_.late_layer_gain;
        const double scale = std::sqrt(static_cast<double>(dh));

        for (int h = 0; h < params_.heads; ++h) {
            const HeadProfile & hp = kProfiles[h % 4];
            const int c0 = h * dh; // this head's column block

            // random mixing lives on the free dims; the planted channel rows
            // stay exact so spike magnitudes translate into attention cleanly
            for (int r = channels::free_begin; r < d; ++r) {
                for (int c = 0; c < dh; ++c) {
                    wq(r, c0 + c) = rng.normal(0.0, params_.qk_noise);
                    wk(r, c0 + c) = rng.normal(0.0, params_.qk_noise);
                }
            }
            // query side: channel 0-3 driven by grounding/bias markers,
            // channel 4 only by the answer marker
            // the sink-chasing head keys off raw presence everywhere; the
            // content heads key off the grounding marker
            const int query_dim = h % 4 == 3 ? channels::bias : channels::grounded;
            wq(query_dim, c0 + 0)               = 1.0;
            wq(query_dim, c0 + 1)               = 1.0;
            wq(query_dim, c0 + 2)               = 1.0;
            wq(query_dim, c0 + 3)               = 1.0;
            wq(channels::answer_marker, c0 + 4) = 1.0;
            // key side: fold sqrt(dh) in so a channel's logit equals
            // coefficient * source entry
            wk(channels::image_marker, c0 + 0) = scale * hp.img;
            for (int k = 0; k < channels::max_options; ++k) {
                wk(channels::content + k, c0 + 1) = scale * hp.content;
            }
            wk(channels::sink_text, c0 + 2)       = scale * hp.tsink;
            wk(channels::sink_visual, c0 + 3)     = scale * hp.vsink;
            wk(channels::question_marker, c0 + 4) = scale * hp.quest;

            // value/output: slot k aggregates the option-k evidence visible at
            // the source token; the output projection writes it to vote dim k
            for (int k = 0; k < K; ++k) {
                wv(channels::content + k, c0 + k)   = hp.vote_content;
                wv(channels::assertion + k, c0 + k) = hp.vote_assert;
                wv(channels::vote + k, c0 + k)      = hp.vote_relay;
                wo(c0 + k, channels::vote + k)      = layer_gain;
            }
            for (int c = K; c < dh; ++c) {
                for (int r = channels::free_begin; r < d; ++r) {
                    wv(r, c0 + c) = rng.normal(0.0, params_.v_noise);
                }
                for (int r = channels::free_begin; r < d; ++r) {
                    wo(c0 + c, r) = rng.normal(0.0, params_.o_noise);
                }
            }
        }

        wq_.push_back(std::move(wq));
        wk_.push_back(std::move(wk));
        wv_.push_back(std::move(wv));
        wo_.push_back(std::move(wo));
    }

    readout_ = Eigen::MatrixXd::Zero(K, d);
    for (int k = 0; k < K; ++k) {
        for (int c = 0; c < d; ++c) {
            readout_(k, c) = rng.normal(0.0, params_.readout_noise);
        }
        readout_(k, channels::vote + k) += 1.0;
    }
}

ForwardResult ToyModel::forward(const TokenContext & ctx,
                                const InterventionConfig * intervention,
                                bool keep_attention) const {
    const int S  = ctx.seq();
    const int d  = params_.dim;
    const int H  = params_.heads;
    const int dh = d / H;
    if (ctx.dim() != d) {
        fail(ErrorCode::ShapeMismatch, "context dimension " + std::to_string(ctx.dim()) +
                                           " does not match model dimension " + std::to_string(d));
    }
    int answer_pos = -1;
    for (int i = 0; i < S; ++i) {
        if (ctx.roles()[i] == TokenRole::answer) {
            answer_pos = i;
        }
    }
    if (answer_pos < 0) {
        fail(ErrorCode::InvalidParams, "context has no answer token");
    }
    if (intervention) {
        intervention->validate();
        const bool empty_range = intervention->layer_begin == intervention->layer_end;
        if (!empty_range && intervention->layer_end > params_.layers) {
            fail(ErrorCode::InvalidParams, "intervention layer range exceeds the stack");
        }
    }

    Eigen::MatrixXd h(S, d);
    for (int s = 0; s < S; ++s) {
        const double * e = ctx.embedding(s);
        for (int c = 0; c < d; ++c) {
            h(s, c) = e[c];
        }
    }
    // fixed sinusoidal positional encoding on the free dims; the planted
    // channels stay position-independent
    for (int c = channels::free_begin; c < d; c += 2) {
        const double freq = std::pow(10000.0, -static_cast<double>(c) / d);
        for (int s = 0; s < S; ++s) {
            h(s, c) += params_.pe_scale * std::sin(s * freq);
            if (c + 1 < d) {
                h(s, c + 1) += params_.pe_scale * std::cos(s * freq);
            }
        }
    }

    ForwardResult result;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    Eigen::MatrixXd concat(S, d);

    for (int l = 0; l < params_.layers; ++l) {
        const Eigen::MatrixXd q = h * wq_[l];
        const Eigen::MatrixXd k = h * wk_[l];
        const Eigen::MatrixXd v = h * wv_[l];

        std::vector<double> weights(static_cast<size_t>(H) * S * S, 0.0);
        for (int head = 0; head < H; ++head) {
            const auto qh = q.middleCols(head * dh, dh);
            const auto kh = k.middleCols(head * dh, dh);
            for (int s = 0; s < S; ++s) {
                double * row = weights.data() + (static_cast<size_t>(head) * S + s) * S;
                double max_logit = -1e300;
                for (int j = 0; j <= s; ++j) {
                    const double logit = qh.row(s).dot(kh.row(j)) * inv_sqrt_dh;
                    row[j] = logit;
                    if (logit > max_logit) {
                        max_logit = logit;
                    }
                }
                double sum = 0.0;
                for (int j = 0; j <= s; ++j) {
                    row[j] = std::exp(row[j] - max_logit);
                    sum += row[j];
                }
                for (int j = 0; j <= s; ++j) {
                    row[j] /= sum;
                }
            }
        }

        AttentionTensor tensor = AttentionTensor::unchecked(std::move(weights), H, S, l);
        if (intervention && intervention->layer_begin != intervention->layer_end &&
            l >= intervention->layer_begin && l < intervention->layer_end) {
            auto [edited, report] =
                apply_to_layer(tensor, ctx, intervention->criterion(), *intervention);
            tensor = std::move(edited);
            result.reports.push_back(std::move(report));
        }

        for (int head = 0; head < H; ++head) {
            const auto vh = v.middleCols(head * dh, dh);
            auto out     = concat.middleCols(head * dh, dh);
            for (int s = 0; s < S; ++s) {
                const double * row = tensor.row(head, s);
                Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(dh);
                for (int j = 0; j <= s; ++j) {
                    if (row[j] != 0.0) {
                        acc += row[j] * vh.row(j);
                    }
                }
                out.row(s) = acc;
            }
        }
        h += concat * wo_[l];

        if (keep_attention) {
            result.attention.push_back(std::move(tensor));
        }
    }

    const Eigen::VectorXd logits = readout_ * h.row(answer_pos).transpose();
    result.logits.assign(logits.data(), logits.data() + logits.size());
    result.answer = 0;
    for (int i = 1; i < static_cast<int>(result.logits.size()); ++i) {
        if (result.logits[i] > result.logits[result.answer]) {
            result.answer = i;
        }
    }
    return result;
}

} // namespace gaseraser
