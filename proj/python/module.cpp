// pybind11 bindings for the core operations: sink detection, head scoring and
// selection, reallocation, the layer-stack pipeline, the toy model, the
// planted benchmark and trace IO. Tensors cross the boundary as numpy arrays.

#include "gaseraser/benchmark.hpp"
#include "gaseraser/metrics.hpp"
#include "gaseraser/pipeline.hpp"
#include "gaseraser/trace_io.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace gaseraser;

namespace {

AttentionTensor tensor_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr,
                                  int layer_index, double row_sum_tol) {
    if (arr.ndim() != 3 || arr.shape(1) != arr.shape(2)) {
        fail(ErrorCode::ShapeMismatch, "expected an array of shape (heads, seq, seq)");
    }
    const int heads = static_cast<int>(arr.shape(0));
    const int seq   = static_cast<int>(arr.shape(1));
    std::vector<double> w(arr.data(), arr.data() + arr.size());
    return AttentionTensor(std::move(w), heads, seq, layer_index, row_sum_tol);
}

py::array_t<double> tensor_to_array(const AttentionTensor & t) {
    py::array_t<double> out({t.heads(), t.seq(), t.seq()});
    std::copy(t.weights().begin(), t.weights().end(), out.mutable_data());
    return out;
}

TokenContext context_from_parts(
    py::array_t<double, py::array::c_style | py::array::forcecast> embeddings, int image_begin,
    int image_end, const std::vector<std::string> & roles) {
    if (embeddings.ndim() != 2) {
        fail(ErrorCode::ShapeMismatch, "expected an embedding matrix of shape (seq, dim)");
    }
    const int seq = static_cast<int>(embeddings.shape(0));
    const int dim = static_cast<int>(embeddings.shape(1));
    std::vector<TokenRole> parsed;
    parsed.reserve(roles.size());
    for (const std::string & r : roles) {
        auto role = role_from_name(r);
        if (!role) {
            fail(ErrorCode::InvalidParams, "unknown token role: " + r);
        }
        parsed.push_back(*role);
    }
    std::vector<double> emb(embeddings.data(), embeddings.data() + embeddings.size());
    return TokenContext(std::move(emb), seq, dim, Span{image_begin, image_end},
                        std::move(parsed));
}

std::vector<std::string> roles_to_names(const TokenContext & ctx) {
    std::vector<std::string> names;
    names.reserve(ctx.roles().size());
    for (TokenRole r : ctx.roles()) {
        names.emplace_back(role_name(r));
    }
    return names;
}

py::array_t<double> embeddings_to_array(const TokenContext & ctx) {
    py::array_t<double> out({ctx.seq(), ctx.dim()});
    std::copy(ctx.embeddings().begin(), ctx.embeddings().end(), out.mutable_data());
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "attention-sink detection and gaslighting-attention reallocation";

    py::register_exception<Error>(m, "GasEraserError");

    py::class_<AttentionTensor>(m, "AttentionTensor")
        .def(py::init(&tensor_from_array), py::arg("weights"), py::arg("layer_index") = 0,
             py::arg("row_sum_tol") = 1e-5)
        .def_property_readonly("heads", &AttentionTensor::heads)
        .def_property_readonly("seq", &AttentionTensor::seq)
        .def_property_readonly("layer_index", &AttentionTensor::layer_index)
        .def("to_numpy", &tensor_to_array);

    py::class_<TokenContext>(m, "TokenContext")
        .def(py::init(&context_from_parts), py::arg("embeddings"), py::arg("image_begin"),
             py::arg("image_end"), py::arg("roles"))
        .def_property_readonly("seq", &TokenContext::seq)
        .def_property_readonly("dim", &TokenContext::dim)
        .def_property_readonly("image_span",
                               [](const TokenContext & c) {
                                   return py::make_tuple(c.image_span().begin,
                                                         c.image_span().end);
                               })
        .def_property_readonly("roles", &roles_to_names)
        .def("embeddings", &embeddings_to_array);

    py::class_<SinkCriterion>(m, "SinkCriterion")
        .def(py::init([](std::vector<int> dims, double tau, const std::string & mode) {
                 SinkScoreMode m = SinkScoreMode::monitored_max;
                 if (mode == "full_norm") {
                     m = SinkScoreMode::full_norm;
                 } else if (mode != "monitored_max") {
                     fail(ErrorCode::InvalidParams, "unknown sink score mode: " + mode);
                 }
                 return SinkCriterion{std::move(dims), tau, m};
             }),
             py::arg("monitored_dims"), py::arg("tau") = 20.0,
             py::arg("mode") = "monitored_max")
        .def_readwrite("monitored_dims", &SinkCriterion::monitored_dims)
        .def_readwrite("tau", &SinkCriterion::tau);

    py::class_<SinkPartition>(m, "SinkPartition")
        .def_property_readonly("all_sinks",
                               [](const SinkPartition & p) { return p.all_sinks.indices(); })
        .def_property_readonly(
            "visual_sinks", [](const SinkPartition & p) { return p.visual_sinks.indices(); })
        .def_property_readonly(
            "text_sinks", [](const SinkPartition & p) { return p.text_sinks.indices(); });

    m.def("token_norm_score", &token_norm_score, py::arg("ctx"), py::arg("token"),
          py::arg("criterion"));
    m.def("detect_sinks", &detect_sinks, py::arg("ctx"), py::arg("criterion"));

    py::class_<HeadScores>(m, "HeadScores")
        .def_property_readonly("delta",
                               [](const HeadScores & s) {
                                   py::array_t<double> out({s.heads, s.seq});
                                   std::copy(s.delta.begin(), s.delta.end(),
                                             out.mutable_data());
                                   return out;
                               })
        .def_property_readonly("xi", [](const HeadScores & s) {
            py::array_t<double> out({s.heads, s.seq});
            std::copy(s.xi.begin(), s.xi.end(), out.mutable_data());
            return out;
        });

    py::class_<HeadSelection>(m, "HeadSelection")
        .def(py::init([](std::vector<std::pair<int, int>> pairs) {
                 HeadSelection sel;
                 sel.pairs = std::move(pairs);
                 return sel;
             }),
             py::arg("pairs"))
        .def_property_readonly("pairs",
                               [](const HeadSelection & s) { return s.pairs; });

    m.def("score_heads", &score_heads, py::arg("tensor"), py::arg("ctx"), py::arg("sinks"),
          py::arg("epsilon") = 1e-6);
    m.def(
        "select_visual_heads",
        [](const HeadScores & scores, double rho, double alpha, bool delta_select_high,
           bool xi_select_low) {
            return select_visual_heads(scores, rho, alpha,
                                       SelectionDirections{delta_select_high, xi_select_low});
        },
        py::arg("scores"), py::arg("rho") = 0.6, py::arg("alpha") = 0.005,
        py::arg("delta_select_high") = true, py::arg("xi_select_low") = true);

    py::class_<RowRealloc>(m, "RowRealloc")
        .def_readonly("head", &RowRealloc::head)
        .def_readonly("source", &RowRealloc::source)
        .def_readonly("budget", &RowRealloc::budget)
        .def_readonly("pre_image_mass", &RowRealloc::pre_image_mass)
        .def_readonly("post_image_mass", &RowRealloc::post_image_mass)
        .def_readonly("zeroed_sink_mass", &RowRealloc::zeroed_sink_mass)
        .def_readonly("modified", &RowRealloc::modified)
        .def_readonly("skipped_zero_image_mass", &RowRealloc::skipped_zero_image_mass);

    py::class_<ReallocReport>(m, "ReallocReport")
        .def_readonly("layer_index", &ReallocReport::layer_index)
        .def_readonly("rows", &ReallocReport::rows)
        .def_readonly("modified_row_count", &ReallocReport::modified_row_count)
        .def("total_budget", &ReallocReport::total_budget);

    m.def(
        "reallocate",
        [](const AttentionTensor & t, const TokenContext & ctx, const SinkPartition & sinks,
           const HeadSelection & sel, double p, bool use_text_sinks, bool use_image_sinks,
           bool renormalize_rows) {
            auto [out, report] = reallocate(
                t, ctx, sinks, sel, ReallocParams{p, use_text_sinks, use_image_sinks,
                                                  renormalize_rows});
            return py::make_tuple(tensor_to_array(out), report);
        },
        py::arg("tensor"), py::arg("ctx"), py::arg("sinks"), py::arg("selection"),
        py::arg("p") = 0.6, py::arg("use_text_sinks") = true, py::arg("use_image_sinks") = true,
        py::arg("renormalize_rows") = false);

    py::class_<InterventionConfig>(m, "InterventionConfig")
        .def(py::init<>())
        .def_readwrite("tau", &InterventionConfig::tau)
        .def_readwrite("monitored_dims", &InterventionConfig::monitored_dims)
        .def_readwrite("rho", &InterventionConfig::rho)
        .def_readwrite("alpha", &InterventionConfig::alpha)
        .def_readwrite("epsilon", &InterventionConfig::epsilon)
        .def_readwrite("p", &InterventionConfig::p)
        .def_readwrite("use_text_sinks", &InterventionConfig::use_text_sinks)
        .def_readwrite("use_image_sinks", &InterventionConfig::use_image_sinks)
        .def_readwrite("renormalize_rows", &InterventionConfig::renormalize_rows)
        .def_readwrite("head_selection", &InterventionConfig::head_selection)
        .def_readwrite("token_selection", &InterventionConfig::token_selection)
        .def_readwrite("layer_begin", &InterventionConfig::layer_begin)
        .def_readwrite("layer_end", &InterventionConfig::layer_end)
        .def_readwrite("seed", &InterventionConfig::seed)
        .def("to_text", &InterventionConfig::to_text)
        .def_static("from_text", &InterventionConfig::from_text)
        .def("save", &InterventionConfig::save)
        .def_static("load", &InterventionConfig::load);

    m.def("preset_config", &preset_config, py::arg("name"));

    m.def(
        "apply_to_layer_stack",
        [](const std::vector<AttentionTensor> & tensors, const TokenContext & ctx,
           const InterventionConfig & cfg) {
            auto [out, reports] = apply_to_layer_stack(tensors, ctx, cfg.criterion(), cfg);
            py::list arrays;
            for (const AttentionTensor & t : out) {
                arrays.append(tensor_to_array(t));
            }
            return py::make_tuple(arrays, reports);
        },
        py::arg("tensors"), py::arg("ctx"), py::arg("config"));

    py::class_<ToyModelParams>(m, "ToyModelParams")
        .def(py::init<>())
        .def_readwrite("layers", &ToyModelParams::layers)
        .def_readwrite("heads", &ToyModelParams::heads)
        .def_readwrite("dim", &ToyModelParams::dim)
        .def_readwrite("num_options", &ToyModelParams::num_options)
        .def_readwrite("seed", &ToyModelParams::seed);

    py::class_<ForwardResult>(m, "ForwardResult")
        .def_readonly("logits", &ForwardResult::logits)
        .def_readonly("answer", &ForwardResult::answer)
        .def_readonly("reports", &ForwardResult::reports)
        .def_property_readonly("attention", [](const ForwardResult & r) {
            py::list arrays;
            for (const AttentionTensor & t : r.attention) {
                arrays.append(tensor_to_array(t));
            }
            return arrays;
        });

    py::class_<ToyModel>(m, "ToyModel")
        .def(py::init<>())
        .def(py::init<ToyModelParams>(), py::arg("params"))
        .def(
            "forward",
            [](const ToyModel & model, const TokenContext & ctx,
               const InterventionConfig * intervention, bool keep_attention) {
                return model.forward(ctx, intervention, keep_attention);
            },
            py::arg("ctx"), py::arg("intervention") = nullptr,
            py::arg("keep_attention") = false);

    py::class_<GenParams>(m, "GenParams")
        .def(py::init<>())
        .def_readwrite("grid_w", &GenParams::grid_w)
        .def_readwrite("grid_h", &GenParams::grid_h)
        .def_readwrite("question_len", &GenParams::question_len)
        .def_readwrite("option_count", &GenParams::option_count)
        .def_readwrite("gaslight_len", &GenParams::gaslight_len)
        .def_readwrite("tau", &GenParams::tau)
        .def_readwrite("monitored_dims", &GenParams::monitored_dims)
        .def_readwrite("spike_scale", &GenParams::spike_scale)
        .def_readwrite("visual_sink_prob", &GenParams::visual_sink_prob);

    py::class_<SinkSpike>(m, "SinkSpike")
        .def_readonly("position", &SinkSpike::position)
        .def_readonly("dim", &SinkSpike::dim)
        .def_readonly("value", &SinkSpike::value);

    py::class_<GaslightSample>(m, "GaslightSample")
        .def_readonly("round1", &GaslightSample::round1)
        .def_readonly("round2", &GaslightSample::round2)
        .def_readonly("correct", &GaslightSample::correct)
        .def_readonly("gaslight_target", &GaslightSample::gaslight_target)
        .def_readonly("spikes", &GaslightSample::spikes);

    py::class_<EpisodeResult>(m, "EpisodeResult")
        .def_readonly("answer_before", &EpisodeResult::answer_before)
        .def_readonly("answer_after_base", &EpisodeResult::answer_after_base)
        .def_readonly("answer_after_eraser", &EpisodeResult::answer_after_eraser)
        .def_readonly("reports", &EpisodeResult::reports);

    m.def("generate_benchmark", &generate_benchmark, py::arg("seed"), py::arg("n"),
          py::arg("params") = GenParams{});
    m.def("run_episode", &run_episode, py::arg("model"), py::arg("sample"), py::arg("config"));
    m.def("run_episodes", &run_episodes, py::arg("model"), py::arg("samples"),
          py::arg("config"), py::arg("workers") = 1);

    py::class_<EpisodeOutcome>(m, "EpisodeOutcome")
        .def(py::init([](int correct, int before, int after_base, int after_eraser) {
                 return EpisodeOutcome{correct, before, after_base, after_eraser};
             }),
             py::arg("correct"), py::arg("answer_before"), py::arg("answer_after_base"),
             py::arg("answer_after_eraser"));

    py::class_<BenchSummary>(m, "BenchSummary")
        .def_readonly("episodes", &BenchSummary::episodes)
        .def_readonly("acc_before", &BenchSummary::acc_before)
        .def_readonly("acc_after_base", &BenchSummary::acc_after_base)
        .def_readonly("acc_after_eraser", &BenchSummary::acc_after_eraser)
        .def_readonly("gain", &BenchSummary::gain)
        .def_readonly("misguidance_base", &BenchSummary::misguidance_base)
        .def_readonly("misguidance_eraser", &BenchSummary::misguidance_eraser)
        .def_readonly("relative_misguidance_reduction",
                      &BenchSummary::relative_misguidance_reduction);

    m.def("to_outcome", &to_outcome, py::arg("sample"), py::arg("episode"));
    m.def("summarize", &summarize, py::arg("outcomes"));
    m.def("summarize_accuracies", &summarize_accuracies, py::arg("acc_before"),
          py::arg("acc_after_base"), py::arg("acc_after_eraser"), py::arg("episodes") = 0);

    py::class_<TraceMetadata>(m, "TraceMetadata")
        .def(py::init([](std::string name, std::vector<int> dims) {
                 return TraceMetadata{std::move(name), std::move(dims)};
             }),
             py::arg("model_name"), py::arg("monitored_dims"))
        .def_readwrite("model_name", &TraceMetadata::model_name)
        .def_readwrite("monitored_dims", &TraceMetadata::monitored_dims);

    py::class_<Trace>(m, "Trace")
        .def_readonly("context", &Trace::context)
        .def_readonly("metadata", &Trace::metadata)
        .def_property_readonly("layers", [](const Trace & t) {
            py::list arrays;
            for (const AttentionTensor & a : t.layers) {
                arrays.append(tensor_to_array(a));
            }
            return arrays;
        });

    m.def("write_trace", &write_trace, py::arg("path"), py::arg("ctx"), py::arg("layers"),
          py::arg("metadata"));
    m.def("read_trace", &read_trace, py::arg("path"));
}
