// gaseraser CLI: benchmark suites, ablations, layer sweeps and offline trace
// analysis. Every command is deterministic under a fixed seed and config; CSV
// outputs are byte-stable.

#include "gaseraser/benchmark.hpp"
#include "gaseraser/metrics.hpp"
#include "gaseraser/pipeline.hpp"
#include "gaseraser/trace_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace gaseraser;

namespace {

struct CommonOpts {
    InterventionConfig cfg;
    GenParams gen;
    int n       = 200;
    int workers = 1;
    std::string out_dir;
    std::string preset;
    std::string config_path;
    std::string delta_dir = "ge";
    std::string xi_dir    = "le";
    std::string score_mode = "monitored_max";
    std::string layers;

    CLI::App * app = nullptr;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string fmt_opt(const std::optional<double> & v) {
    return v ? fmt(*v) : std::string();
}

void add_common_options(CLI::App * cmd, CommonOpts & o, const std::string & default_out) {
    o.app     = cmd;
    o.out_dir = default_out;
    cmd->add_option("--preset", o.preset, "hyperparameter preset: llava15, llava16, internvl2");
    cmd->add_option("--config", o.config_path, "run-config file to load before flag overrides");
    cmd->add_option("--tau", o.cfg.tau, "sink-score threshold");
    cmd->add_option("--rho", o.cfg.rho, "image-relevance threshold");
    cmd->add_option("--alpha", o.cfg.alpha, "sink-likelihood threshold");
    cmd->add_option("--p", o.cfg.p, "text-sink scaling factor");
    cmd->add_option("--epsilon", o.cfg.epsilon, "division guard for the sink-likelihood score");
    cmd->add_option("--dims", o.cfg.monitored_dims, "monitored embedding dimensions")
        ->delimiter(',');
    cmd->add_option("--sink-score", o.score_mode, "monitored_max or full_norm");
    cmd->add_option("--layers", o.layers, "intervened layer range, begin:end");
    cmd->add_option("--delta-dir", o.delta_dir, "delta comparison: ge (default) or le");
    cmd->add_option("--xi-dir", o.xi_dir, "xi comparison: le (default) or ge");
    cmd->add_flag_callback("--literal-inequalities",
                           [&o]() {
                               o.delta_dir = "le";
                               o.xi_dir    = "ge";
                           },
                           "use the literal threshold directions (delta<=rho, xi>=alpha)");
    cmd->add_flag("!--no-text-sinks", o.cfg.use_text_sinks, "disable the text-sink source");
    cmd->add_flag("!--no-image-sinks", o.cfg.use_image_sinks, "disable the image-sink source");
    cmd->add_flag("!--no-head-selection", o.cfg.head_selection,
                  "reallocate every (head, source) pair");
    cmd->add_flag("!--no-token-selection", o.cfg.token_selection,
                  "treat every non-image token as a text sink");
    cmd->add_flag("--renormalize", o.cfg.renormalize_rows, "renormalize modified rows to sum 1");
    cmd->add_option("--seed", o.cfg.seed, "benchmark seed");
    cmd->add_option("-n,--episodes", o.n, "episode count");
    cmd->add_option("--workers", o.workers, "episode-level worker threads");
    cmd->add_option("--out", o.out_dir, "run directory for CSV and config snapshot");
    cmd->add_option("--spike-scale", o.gen.spike_scale,
                    "scales every planted sink spike (0 disables them)");
}

// precedence: defaults, then preset, then config file, then explicit flags
void resolve_config(CommonOpts & o) {
    InterventionConfig resolved;
    if (!o.preset.empty()) {
        resolved = preset_config(o.preset);
    }
    if (!o.config_path.empty()) {
        resolved = InterventionConfig::load(o.config_path);
    }

    auto given = [&](const char * name) { return o.app->count(name) > 0; };
    if (given("--tau")) resolved.tau = o.cfg.tau;
    if (given("--rho")) resolved.rho = o.cfg.rho;
    if (given("--alpha")) resolved.alpha = o.cfg.alpha;
    if (given("--p")) resolved.p = o.cfg.p;
    if (given("--epsilon")) resolved.epsilon = o.cfg.epsilon;
    if (given("--dims")) resolved.monitored_dims = o.cfg.monitored_dims;
    if (given("--seed")) resolved.seed = o.cfg.seed;
    if (given("--no-text-sinks")) resolved.use_text_sinks = o.cfg.use_text_sinks;
    if (given("--no-image-sinks")) resolved.use_image_sinks = o.cfg.use_image_sinks;
    if (given("--no-head-selection")) resolved.head_selection = o.cfg.head_selection;
    if (given("--no-token-selection")) resolved.token_selection = o.cfg.token_selection;
    if (given("--renormalize")) resolved.renormalize_rows = o.cfg.renormalize_rows;

    if (given("--sink-score")) {
        if (o.score_mode == "monitored_max") {
            resolved.sink_score_mode = SinkScoreMode::monitored_max;
        } else if (o.score_mode == "full_norm") {
            resolved.sink_score_mode = SinkScoreMode::full_norm;
        } else {
            fail(ErrorCode::BadConfig, "unknown sink-score mode: " + o.score_mode);
        }
    }
    if (given("--delta-dir") || given("--xi-dir") || given("--literal-inequalities")) {
        if (o.delta_dir != "ge" && o.delta_dir != "le") {
            fail(ErrorCode::BadConfig, "--delta-dir must be ge or le");
        }
        if (o.xi_dir != "ge" && o.xi_dir != "le") {
            fail(ErrorCode::BadConfig, "--xi-dir must be le or ge");
        }
        resolved.directions.delta_select_high = o.delta_dir == "ge";
        resolved.directions.xi_select_low     = o.xi_dir == "le";
    }
    if (!o.layers.empty()) {
        const size_t colon = o.layers.find(':');
        if (colon == std::string::npos) {
            fail(ErrorCode::BadConfig, "--layers expects begin:end");
        }
        try {
            resolved.layer_begin = std::stoi(o.layers.substr(0, colon));
            resolved.layer_end   = std::stoi(o.layers.substr(colon + 1));
        } catch (const std::exception &) {
            fail(ErrorCode::BadConfig, "bad --layers value: " + o.layers);
        }
    }
    resolved.validate();
    o.gen.validate();
    if (o.n < 1) {
        fail(ErrorCode::BadConfig, "episode count must be at least 1");
    }
    if (o.workers < 1) {
        fail(ErrorCode::BadConfig, "worker count must be at least 1");
    }
    o.cfg = resolved;
}

std::ofstream open_out(const std::filesystem::path & p) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) {
        fail(ErrorCode::IoFailure, "cannot write " + p.string());
    }
    return f;
}

void snapshot(const CommonOpts & o) {
    std::filesystem::create_directories(o.out_dir);
    o.cfg.save((std::filesystem::path(o.out_dir) / "config.txt").string());
    auto gen = open_out(std::filesystem::path(o.out_dir) / "gen.txt");
    gen << "episodes = " << o.n << "\n";
    gen << "workers = " << o.workers << "\n";
    gen << "grid = " << o.gen.grid_w << "x" << o.gen.grid_h << "\n";
    gen << "options = " << o.gen.option_count << "\n";
    gen << "spike_scale = " << fmt(o.gen.spike_scale) << "\n";
    gen << "text_spikes = " << fmt(o.gen.text_spike_min) << ":" << fmt(o.gen.text_spike_max)
        << "\n";
    gen << "visual_spikes = " << fmt(o.gen.visual_spike_min) << ":"
        << fmt(o.gen.visual_spike_max) << "\n";
    gen << "visual_sink_prob = " << fmt(o.gen.visual_sink_prob) << "\n";
}

struct SuiteRun {
    std::vector<GaslightSample> samples;
    std::vector<EpisodeResult> results;
    BenchSummary summary;
};

SuiteRun run_suite(const ToyModel & model, const CommonOpts & o,
                   const InterventionConfig & cfg) {
    SuiteRun run;
    run.samples = generate_benchmark(cfg.seed, o.n, o.gen);
    run.results = run_episodes(model, run.samples, cfg, o.workers);
    std::vector<EpisodeOutcome> outs;
    outs.reserve(run.results.size());
    for (size_t i = 0; i < run.samples.size(); ++i) {
        outs.push_back(to_outcome(run.samples[i], run.results[i]));
    }
    run.summary = summarize(outs);
    return run;
}

void print_summary(const BenchSummary & s, const std::string & label) {
    std::printf("%-10s %10s %12s %14s %8s %10s %10s %8s\n", label.c_str(), "before",
                "after-base", "after-eraser", "gain", "mis-base", "mis-erasr", "rel-red");
    std::printf("%-10s %10s %12s %14s %+8.2f %10s %10s %8s\n", "", fmt(s.acc_before).c_str(),
                fmt(s.acc_after_base).c_str(), fmt(s.acc_after_eraser).c_str(), s.gain,
                fmt_opt(s.misguidance_base).c_str(), fmt_opt(s.misguidance_eraser).c_str(),
                fmt_opt(s.relative_misguidance_reduction).c_str());
}

void write_episode_csv(const SuiteRun & run, const std::filesystem::path & path) {
    auto csv = open_out(path);
    csv << "episode,correct,target,before,after_base,after_eraser\n";
    for (size_t i = 0; i < run.samples.size(); ++i) {
        csv << i << ',' << run.samples[i].correct << ',' << run.samples[i].gaslight_target
            << ',' << run.results[i].answer_before << ',' << run.results[i].answer_after_base
            << ',' << run.results[i].answer_after_eraser << '\n';
    }
}

void write_summary_csv(const BenchSummary & s, const std::filesystem::path & path) {
    auto csv = open_out(path);
    csv << "acc_before,acc_after_base,acc_after_eraser,gain,misguidance_base,"
           "misguidance_eraser,relative_misguidance_reduction\n";
    csv << fmt(s.acc_before) << ',' << fmt(s.acc_after_base) << ',' << fmt(s.acc_after_eraser)
        << ',' << fmt(s.gain) << ',' << fmt_opt(s.misguidance_base) << ','
        << fmt_opt(s.misguidance_eraser) << ','
        << fmt_opt(s.relative_misguidance_reduction) << '\n';
}

int cmd_bench(CommonOpts & o) {
    resolve_config(o);
    snapshot(o);
    ToyModel model;
    SuiteRun run = run_suite(model, o, o.cfg);
    print_summary(run.summary, "bench");
    write_episode_csv(run, std::filesystem::path(o.out_dir) / "episodes.csv");
    write_summary_csv(run.summary, std::filesystem::path(o.out_dir) / "summary.csv");
    std::printf("run artifacts in %s\n", o.out_dir.c_str());
    return 0;
}

int cmd_ablate_sources(CommonOpts & o) {
    resolve_config(o);
    snapshot(o);
    ToyModel model;
    auto csv = open_out(std::filesystem::path(o.out_dir) / "ablation.csv");
    csv << "image_tokens,text_tokens,before,after\n";
    std::printf("%-14s %-12s %10s %10s   (directions: delta %s, xi %s)\n", "image tokens",
                "text tokens", "before", "after",
                o.cfg.directions.delta_select_high ? "ge" : "le",
                o.cfg.directions.xi_select_low ? "le" : "ge");
    const std::pair<bool, bool> modes[] = {{false, false}, {true, false}, {false, true},
                                           {true, true}};
    for (const auto & [use_image, use_text] : modes) {
        InterventionConfig cfg = o.cfg;
        cfg.use_image_sinks = use_image;
        cfg.use_text_sinks  = use_text;
        SuiteRun run = run_suite(model, o, cfg);
        csv << (use_image ? "on" : "off") << ',' << (use_text ? "on" : "off") << ','
            << fmt(run.summary.acc_before) << ',' << fmt(run.summary.acc_after_eraser) << '\n';
        std::printf("%-14s %-12s %10s %10s\n", use_image ? "on" : "off",
                    use_text ? "on" : "off", fmt(run.summary.acc_before).c_str(),
                    fmt(run.summary.acc_after_eraser).c_str());
    }
    return 0;
}

int cmd_ablate_components(CommonOpts & o) {
    resolve_config(o);
    snapshot(o);
    ToyModel model;
    auto csv = open_out(std::filesystem::path(o.out_dir) / "ablation.csv");
    csv << "head_selection,token_selection,before,after\n";
    std::printf("%-16s %-17s %10s %10s\n", "head selection", "token selection", "before",
                "after");
    const std::pair<bool, bool> modes[] = {{false, false}, {false, true}, {true, false},
                                           {true, true}};
    for (const auto & [head, token] : modes) {
        InterventionConfig cfg = o.cfg;
        cfg.head_selection  = head;
        cfg.token_selection = token;
        SuiteRun run = run_suite(model, o, cfg);
        csv << (head ? "on" : "off") << ',' << (token ? "on" : "off") << ','
            << fmt(run.summary.acc_before) << ',' << fmt(run.summary.acc_after_eraser) << '\n';
        std::printf("%-16s %-17s %10s %10s\n", head ? "on" : "off", token ? "on" : "off",
                    fmt(run.summary.acc_before).c_str(),
                    fmt(run.summary.acc_after_eraser).c_str());
    }
    return 0;
}

int cmd_layer_sweep(CommonOpts & o, int granularity) {
    resolve_config(o);
    snapshot(o);
    ToyModel model;
    const int layers = model.params().layers;
    const int step   = granularity > 0 ? granularity : layers / 4;
    if (step < 1 || layers % step != 0) {
        fail(ErrorCode::BadConfig, "granularity must divide the layer count");
    }
    auto csv = open_out(std::filesystem::path(o.out_dir) / "sweep.csv");
    csv << "front_layers,before,after\n";
    std::printf("%-14s %10s %10s\n", "front layers", "before", "after");
    for (int k = 0; k <= layers; k += step) {
        InterventionConfig cfg = o.cfg;
        cfg.layer_begin = 0;
        cfg.layer_end   = k;
        SuiteRun run = run_suite(model, o, cfg);
        csv << k << ',' << fmt(run.summary.acc_before) << ','
            << fmt(run.summary.acc_after_eraser) << '\n';
        std::printf("0:%-12d %10s %10s\n", k, fmt(run.summary.acc_before).c_str(),
                    fmt(run.summary.acc_after_eraser).c_str());
    }
    return 0;
}

int cmd_export_trace(CommonOpts & o, const std::string & path, int index, int round) {
    resolve_config(o);
    if (index < 0 || index >= o.n) {
        fail(ErrorCode::BadConfig, "sample index out of range");
    }
    if (round != 1 && round != 2) {
        fail(ErrorCode::BadConfig, "round must be 1 or 2");
    }
    ToyModel model;
    auto samples = generate_benchmark(o.cfg.seed, o.n, o.gen);
    const TokenContext & ctx = round == 1 ? samples[index].round1 : samples[index].round2;
    ForwardResult fwd = model.forward(ctx, nullptr, true);
    write_trace(path, ctx, fwd.attention, TraceMetadata{"toy-lmm", o.gen.monitored_dims});
    std::printf("wrote %s (%d layers, S=%d, d=%d) and sidecar %s.meta\n", path.c_str(),
                static_cast<int>(fwd.attention.size()), ctx.seq(), ctx.dim(), path.c_str());
    return 0;
}

int cmd_analyze_trace(CommonOpts & o, const std::string & path) {
    resolve_config(o);
    Trace trace = read_trace(path);
    InterventionConfig cfg = o.cfg;
    if (!trace.metadata.monitored_dims.empty() && o.app->count("--dims") == 0) {
        cfg.monitored_dims = trace.metadata.monitored_dims;
    }
    if (cfg.layer_end > static_cast<int>(trace.layers.size())) {
        cfg.layer_end = static_cast<int>(trace.layers.size());
    }

    std::filesystem::create_directories(o.out_dir);
    auto report = open_out(std::filesystem::path(o.out_dir) / "report.txt");
    auto emit = [&](const std::string & line) {
        std::printf("%s\n", line.c_str());
        report << line << '\n';
    };

    emit("model: " + trace.metadata.model_name);
    {
        std::string dims = "monitored dims (sidecar):";
        for (int d : cfg.monitored_dims) {
            dims += " " + std::to_string(d);
        }
        emit(dims);
    }
    emit("layers " + std::to_string(trace.layers.size()) + ", S=" +
         std::to_string(trace.context.seq()) + ", d=" + std::to_string(trace.context.dim()));

    SinkPartition sinks = detect_sinks(trace.context, cfg.criterion());
    emit("sink tokens: " + std::to_string(sinks.all_sinks.size()) + " (" +
         std::to_string(sinks.visual_sinks.size()) + " visual, " +
         std::to_string(sinks.text_sinks.size()) + " text)");
    for (int i : sinks.all_sinks.indices()) {
        const double score = token_norm_score(trace.context, i, cfg.criterion());
        emit("  token " + std::to_string(i) + " role=" + role_name(trace.context.roles()[i]) +
             (sinks.visual_sinks.contains(i) ? " visual" : " text") + " score=" + fmt(score));
    }

    for (size_t l = 0; l < trace.layers.size(); ++l) {
        const HeadScores scores =
            score_heads(trace.layers[l], trace.context, sinks, cfg.epsilon);
        std::string line = "layer " + std::to_string(l) + " delta mean/max per head:";
        for (int h = 0; h < scores.heads; ++h) {
            double mean = 0.0, max = 0.0;
            for (int s = 0; s < scores.seq; ++s) {
                mean += scores.delta_at(h, s);
                max = std::max(max, scores.delta_at(h, s));
            }
            line += " " + fmt(mean / scores.seq) + "/" + fmt(max);
        }
        emit(line);
        std::string xi_line = "layer " + std::to_string(l) + " xi max per head:";
        for (int h = 0; h < scores.heads; ++h) {
            double max = 0.0;
            for (int s = 0; s < scores.seq; ++s) {
                max = std::max(max, scores.xi_at(h, s));
            }
            xi_line += " " + fmt(max);
        }
        emit(xi_line);
    }

    auto [edited, reports] =
        apply_to_layer_stack(trace.layers, trace.context, cfg.criterion(), cfg);
    for (const ReallocReport & rep : reports) {
        double delta_mass = 0.0;
        for (const RowRealloc & r : rep.rows) {
            delta_mass += r.post_image_mass - r.pre_image_mass;
        }
        emit("layer " + std::to_string(rep.layer_index) + " counterfactual: " +
             std::to_string(rep.rows.size()) + " selected rows, " +
             std::to_string(rep.modified_row_count) + " modified, budget " +
             fmt(rep.total_budget()) + ", image-mass delta " + fmt(delta_mass));
    }
    std::printf("report written to %s/report.txt\n", o.out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char ** argv) {
    CLI::App app{"training-free attention reallocation against gaslighting, with a toy "
                 "multimodal stack and a planted benchmark"};
    app.require_subcommand(1);

    CommonOpts bench_opts, src_opts, comp_opts, sweep_opts, analyze_opts, export_opts;
    int granularity = 0;
    std::string trace_path;
    std::string export_path = "toy.trace";
    int export_index = 0, export_round = 2;

    add_common_options(app.add_subcommand("bench", "run the planted benchmark"), bench_opts,
                       "runs/bench");
    add_common_options(
        app.add_subcommand("ablate-sources", "toggle image/text sink sources (2x2 table)"),
        src_opts, "runs/ablate-sources");
    add_common_options(
        app.add_subcommand("ablate-components",
                           "toggle head selection and token selection (2x2 table)"),
        comp_opts, "runs/ablate-components");
    CLI::App * sweep =
        app.add_subcommand("layer-sweep", "accuracy across front-k layer ranges");
    add_common_options(sweep, sweep_opts, "runs/layer-sweep");
    sweep->add_option("--granularity", granularity, "front-range step (default layers/4)");

    CLI::App * analyze =
        app.add_subcommand("analyze-trace", "offline analysis of a trace dump");
    add_common_options(analyze, analyze_opts, "runs/analyze-trace");
    analyze->add_option("--trace", trace_path, "trace file")->required();

    CLI::App * exporter =
        app.add_subcommand("export-trace", "dump a toy-model run to a trace file");
    add_common_options(exporter, export_opts, "runs/export-trace");
    exporter->add_option("--trace", export_path, "output trace path");
    exporter->add_option("--index", export_index, "benchmark sample index");
    exporter->add_option("--round", export_round, "1 = without gaslight block, 2 = with");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("bench")) {
            return cmd_bench(bench_opts);
        }
        if (app.got_subcommand("ablate-sources")) {
            return cmd_ablate_sources(src_opts);
        }
        if (app.got_subcommand("ablate-components")) {
            return cmd_ablate_components(comp_opts);
        }
        if (app.got_subcommand("layer-sweep")) {
            return cmd_layer_sweep(sweep_opts, granularity);
        }
        if (app.got_subcommand("analyze-trace")) {
            return cmd_analyze_trace(analyze_opts, trace_path);
        }
        if (app.got_subcommand("export-trace")) {
            return cmd_export_trace(export_opts, export_path, export_index, export_round);
        }
    } catch (const Error & e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception & e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 1;
}
