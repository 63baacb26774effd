#include "gaseraser/benchmark.hpp"

#include "gaseraser/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace gaseraser {

void GenParams::validate() const {
    if (grid_w < 1 || grid_h < 1 || salient_w < 1 || salient_h < 1 ||
        salient_w > grid_w || salient_h > grid_h) {
        fail(ErrorCode::InvalidParams, "salient block must fit inside the image grid");
    }
    if (question_len < 1 || gaslight_len < 1) {
        fail(ErrorCode::InvalidParams, "question and gaslight blocks need at least one token");
    }
    if (option_count < 2 || option_count > channels::max_options) {
        fail(ErrorCode::InvalidParams, "option_count must lie in [2, 8]");
    }
    if (dim < channels::free_begin + 16) {
        fail(ErrorCode::InvalidParams, "dim too small for the embedding layout");
    }
    for (int d : monitored_dims) {
        if (d < 0 || d >= dim) {
            fail(ErrorCode::DimensionOutOfRange, "monitored dim out of range");
        }
    }
    if (!(tau > 0.0) || text_spike_min > text_spike_max ||
        visual_spike_min > visual_spike_max || spike_scale < 0.0 ||
        visual_sink_prob < 0.0 || visual_sink_prob > 1.0 || max_visual_sinks < 0) {
        fail(ErrorCode::InvalidParams, "bad spike parameters");
    }
    if (grid_w * grid_h - salient_w * salient_h < max_visual_sinks) {
        fail(ErrorCode::InvalidParams, "not enough background cells for the visual sinks");
    }
}

namespace {

// Everything random about one sample, drawn once so the two rounds share it.
struct SamplePlan {
    int correct = 0;
    int target  = 0;
    int salient_x = 0, salient_y = 0;
    double content_value = 0.0;
    std::vector<int> bg_category;      // per grid cell; -1 on salient cells
    std::vector<int> visual_sink_cells; // grid-cell indices
    double visual_spike_score = 0.0;
    int gaslight_carrier      = 0; // offset inside the gaslight block
    double text_spike_score   = 0.0;
    std::vector<std::vector<double>> token_noise; // per round-2 slot
};

SamplePlan draw_plan(Rng & rng, const GenParams & gp) {
    SamplePlan plan;
    const int grid = gp.grid_w * gp.grid_h;
    const int s2   = 1 + grid + gp.question_len + gp.option_count + gp.gaslight_len + 1;

    plan.correct = rng.uniform_int(gp.option_count);
    plan.target  = rng.uniform_int(gp.option_count - 1);
    if (plan.target >= plan.correct) {
        plan.target += 1;
    }
    plan.salient_x     = rng.uniform_int(gp.grid_w - gp.salient_w + 1);
    plan.salient_y     = rng.uniform_int(gp.grid_h - gp.salient_h + 1);
    plan.content_value = gp.content_value + rng.uniform(-gp.content_jitter, gp.content_jitter);

    plan.bg_category.resize(grid);
    std::vector<int> background;
    for (int cell = 0; cell < grid; ++cell) {
        const int x = cell % gp.grid_w;
        const int y = cell / gp.grid_w;
        const bool salient = x >= plan.salient_x && x < plan.salient_x + gp.salient_w &&
                             y >= plan.salient_y && y < plan.salient_y + gp.salient_h;
        plan.bg_category[cell] = salient ? -1 : 0;
        if (!salient) {
            background.push_back(cell);
        }
    }
    // background cells carry weak distractor content drawn from the wrong
    // categories only
    for (int cell : background) {
        int cat = rng.uniform_int(gp.option_count - 1);
        if (cat >= plan.correct) {
            cat += 1;
        }
        plan.bg_category[cell] = cat;
    }

    if (gp.max_visual_sinks > 0 && rng.uniform() < gp.visual_sink_prob) {
        // sink patches sit in the trailing grid row, like border artifacts
        std::vector<int> last_row;
        for (int cell : background) {
            if (cell / gp.grid_w == gp.grid_h - 1) {
                last_row.push_back(cell);
            }
        }
        const int count = std::min<int>(1 + rng.uniform_int(gp.max_visual_sinks),
                                        static_cast<int>(last_row.size()));
        for (int i = 0; i < count; ++i) {
            const int pick = rng.uniform_int(static_cast<int>(last_row.size()));
            plan.visual_sink_cells.push_back(last_row[pick]);
            last_row.erase(last_row.begin() + pick);
        }
    }
    plan.visual_spike_score = rng.uniform(gp.visual_spike_min, gp.visual_spike_max);
    plan.gaslight_carrier   = rng.uniform_int(gp.gaslight_len);
    plan.text_spike_score   = rng.uniform(gp.text_spike_min, gp.text_spike_max);

    plan.token_noise.resize(s2);
    for (auto & noise : plan.token_noise) {
        noise.resize(gp.dim);
        for (int c = 0; c < gp.dim; ++c) {
            noise[c] = rng.normal(0.0, gp.embed_noise);
            if (c >= channels::free_begin) {
                noise[c] += rng.normal(0.0, gp.free_noise);
            }
        }
    }
    return plan;
}

TokenContext build_context(const SamplePlan & plan, const GenParams & gp, bool with_gaslight,
                           std::vector<SinkSpike> * spikes_out) {
    const int grid = gp.grid_w * gp.grid_h;
    const int gas  = with_gaslight ? gp.gaslight_len : 0;
    const int seq  = 1 + grid + gp.question_len + gp.option_count + gas + 1;
    const double sqrt_d = std::sqrt(static_cast<double>(gp.dim));

    std::vector<double> emb(static_cast<size_t>(seq) * gp.dim);
    std::vector<TokenRole> roles(seq);

    // slot = index into the round-2 layout, so both rounds share noise draws
    auto token = [&](int pos) { return emb.data() + static_cast<size_t>(pos) * gp.dim; };
    // only reasoning tokens are grounded (their queries seek image content);
    // image cells attend their causal prefix uniformly, gaslight tokens are
    // pushed away from the image entirely
    auto base_init = [&](int pos, int slot, TokenRole role) {
        double * e = token(pos);
        for (int c = 0; c < gp.dim; ++c) {
            e[c] = plan.token_noise[slot][c];
        }
        e[channels::bias] = 1.0;
        if (role == TokenRole::gaslight) {
            e[channels::grounded] = -1.5;
        } else if (role != TokenRole::image) {
            e[channels::grounded] = 1.0;
        }
        roles[pos] = role;
    };

    int pos = 0;
    base_init(pos++, 0, TokenRole::system);

    for (int cell = 0; cell < grid; ++cell, ++pos) {
        base_init(pos, 1 + cell, TokenRole::image);
        double * e               = token(pos);
        e[channels::image_marker] = 1.0;
        const int cat = plan.bg_category[cell];
        const bool is_sink_cell =
            std::find(plan.visual_sink_cells.begin(), plan.visual_sink_cells.end(), cell) !=
            plan.visual_sink_cells.end();
        if (cat < 0) {
            e[channels::content + plan.correct] = plan.content_value;
        } else if (!is_sink_cell) {
            e[channels::content + cat] = gp.bg_content_value;
        }
        if (is_sink_cell) {
            // sink cells are pure high-norm, low-information patches
            for (int c = 0; c < gp.dim; ++c) {
                e[c] = 0.0;
            }
            e[channels::bias]         = 1.0;
            e[channels::image_marker] = 1.0;
            const double value = plan.visual_spike_score * gp.spike_scale * sqrt_d;
            e[channels::sink_visual] = value;
            if (spikes_out) {
                spikes_out->push_back({pos, channels::sink_visual, value});
            }
        }
    }

    for (int i = 0; i < gp.question_len; ++i, ++pos) {
        base_init(pos, 1 + grid + i, TokenRole::question);
        token(pos)[channels::question_marker] = 1.0;
    }
    for (int i = 0; i < gp.option_count; ++i, ++pos) {
        base_init(pos, 1 + grid + gp.question_len + i, TokenRole::option);
        token(pos)[channels::option_marker] = 1.0;
    }
    for (int i = 0; i < gas; ++i, ++pos) {
        base_init(pos, 1 + grid + gp.question_len + gp.option_count + i, TokenRole::gaslight);
        if (i == plan.gaslight_carrier) {
            double * e = token(pos);
            e[channels::assertion + plan.target] = gp.gaslight_value;
            const double value = plan.text_spike_score * gp.spike_scale * sqrt_d;
            e[channels::sink_text] = value;
            if (spikes_out) {
                spikes_out->push_back({pos, channels::sink_text, value});
            }
        }
    }
    // the answer slot sits at the end of the full layout in both rounds
    base_init(pos, 1 + grid + gp.question_len + gp.option_count + gp.gaslight_len,
              TokenRole::answer);
    token(pos)[channels::answer_marker] = 1.0;

    return TokenContext(std::move(emb), seq, gp.dim, Span{1, 1 + grid}, std::move(roles));
}

} // namespace

std::vector<GaslightSample> generate_benchmark(uint64_t seed, int n, const GenParams & gp) {
    gp.validate();
    if (n < 1) {
        fail(ErrorCode::InvalidParams, "n must be at least 1");
    }
    std::vector<GaslightSample> samples;
    samples.reserve(n);
    for (int i = 0; i < n; ++i) {
        Rng rng(Rng::derive(seed, static_cast<uint64_t>(i)));
        const SamplePlan plan = draw_plan(rng, gp);
        std::vector<SinkSpike> spikes;
        TokenContext round2 = build_context(plan, gp, true, &spikes);
        TokenContext round1 = build_context(plan, gp, false, nullptr);
        samples.push_back(GaslightSample{std::move(round1), std::move(round2), plan.correct,
                                         plan.target, std::move(spikes)});
    }
    return samples;
}

EpisodeResult run_episode(const ToyModel & model, const GaslightSample & sample,
                          const InterventionConfig & config) {
    EpisodeResult episode;
    episode.answer_before     = model.forward(sample.round1).answer;
    episode.answer_after_base = model.forward(sample.round2).answer;
    ForwardResult intervened  = model.forward(sample.round2, &config);
    episode.answer_after_eraser = intervened.answer;
    episode.reports             = std::move(intervened.reports);
    return episode;
}

EpisodeOutcome to_outcome(const GaslightSample & sample, const EpisodeResult & episode) {
    return EpisodeOutcome{sample.correct, episode.answer_before, episode.answer_after_base,
                          episode.answer_after_eraser};
}

std::vector<EpisodeResult> run_episodes(const ToyModel & model,
                                        const std::vector<GaslightSample> & samples,
                                        const InterventionConfig & config, int workers) {
    std::vector<EpisodeResult> results(samples.size());
    if (workers < 2 || samples.size() < 2) {
        for (size_t i = 0; i < samples.size(); ++i) {
            results[i] = run_episode(model, samples[i], config);
        }
        return results;
    }
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t i = next.fetch_add(1); i < samples.size(); i = next.fetch_add(1)) {
            results[i] = run_episode(model, samples[i], config);
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min<int>(workers, static_cast<int>(samples.size()));
    pool.reserve(count);
    for (int w = 0; w < count; ++w) {
        pool.emplace_back(worker);
    }
    for (std::thread & t : pool) {
        t.join();
    }
    return results;
}

} // namespace gaseraser
