#include "gaseraser/trace_io.hpp"
#include "gaseraser/benchmark.hpp"
#include "gaseraser/pipeline.hpp"

#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>

using namespace gaseraser;

namespace {

std::string temp_path(const char * name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

struct ToyTrace {
    TokenContext ctx;
    std::vector<AttentionTensor> layers;
    TraceMetadata meta;

    static ToyTrace make() {
        GenParams gp;
        auto samples = generate_benchmark(31, 1, gp);
        ToyModel model;
        ForwardResult fwd = model.forward(samples[0].round2, nullptr, true);
        return ToyTrace{samples[0].round2, std::move(fwd.attention),
                        TraceMetadata{"toy-lmm", gp.monitored_dims}};
    }
};

void corrupt(const std::string & src, const std::string & dst,
             const std::function<void(std::string &)> & edit) {
    std::ifstream in(src, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    edit(data);
    std::ofstream out(dst, std::ios::binary | std::ios::trunc);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.close();
    std::filesystem::copy_file(src + ".meta", dst + ".meta",
                               std::filesystem::copy_options::overwrite_existing);
}

} // namespace

TEST_CASE("write/read round-trips at 32-bit precision") {
    ToyTrace t = ToyTrace::make();
    const std::string path = temp_path("gsr_roundtrip.trace");
    write_trace(path, t.ctx, t.layers, t.meta);
    Trace back = read_trace(path);

    CHECK(back.metadata.model_name == "toy-lmm");
    CHECK(back.metadata.monitored_dims == t.meta.monitored_dims);
    CHECK(back.context.seq() == t.ctx.seq());
    CHECK(back.context.dim() == t.ctx.dim());
    CHECK(back.context.image_span() == t.ctx.image_span());
    CHECK(back.context.roles() == t.ctx.roles());
    REQUIRE(back.layers.size() == t.layers.size());

    for (size_t i = 0; i < t.ctx.embeddings().size(); ++i) {
        CHECK(static_cast<float>(back.context.embeddings()[i]) ==
              static_cast<float>(t.ctx.embeddings()[i]));
    }
    for (size_t l = 0; l < t.layers.size(); ++l) {
        CHECK(back.layers[l].layer_index() == static_cast<int>(l));
        for (size_t i = 0; i < t.layers[l].weights().size(); ++i) {
            CHECK(static_cast<float>(back.layers[l].weights()[i]) ==
                  static_cast<float>(t.layers[l].weights()[i]));
        }
    }
    std::remove(path.c_str());
    std::remove((path + ".meta").c_str());
}

TEST_CASE("corrupted files are rejected") {
    ToyTrace t = ToyTrace::make();
    const std::string path = temp_path("gsr_base.trace");
    write_trace(path, t.ctx, t.layers, t.meta);

    SUBCASE("one missing byte") {
        const std::string bad = temp_path("gsr_trunc.trace");
        corrupt(path, bad, [](std::string & d) { d.pop_back(); });
        CHECK_THROWS_WITH_AS(read_trace(bad), doctest::Contains("TruncatedPayload"), Error);
        std::remove(bad.c_str());
        std::remove((bad + ".meta").c_str());
    }
    SUBCASE("one trailing byte") {
        const std::string bad = temp_path("gsr_trail.trace");
        corrupt(path, bad, [](std::string & d) { d.push_back('\0'); });
        CHECK_THROWS_WITH_AS(read_trace(bad), doctest::Contains("TruncatedPayload"), Error);
        std::remove(bad.c_str());
        std::remove((bad + ".meta").c_str());
    }
    SUBCASE("wrong magic") {
        const std::string bad = temp_path("gsr_magic.trace");
        corrupt(path, bad, [](std::string & d) { d[0] = 'X'; });
        CHECK_THROWS_WITH_AS(read_trace(bad), doctest::Contains("BadMagic"), Error);
        std::remove(bad.c_str());
        std::remove((bad + ".meta").c_str());
    }
    SUBCASE("future version") {
        const std::string bad = temp_path("gsr_version.trace");
        corrupt(path, bad, [](std::string & d) { d[4] = 9; });
        CHECK_THROWS_WITH_AS(read_trace(bad), doctest::Contains("VersionMismatch"), Error);
        std::remove(bad.c_str());
        std::remove((bad + ".meta").c_str());
    }
    SUBCASE("missing sidecar") {
        const std::string bad = temp_path("gsr_nometa.trace");
        std::filesystem::copy_file(path, bad,
                                   std::filesystem::copy_options::overwrite_existing);
        CHECK_THROWS_WITH_AS(read_trace(bad), doctest::Contains("IoFailure"), Error);
        std::remove(bad.c_str());
    }
    SUBCASE("non-stochastic payload row") {
        const std::string bad = temp_path("gsr_row.trace");
        const size_t header = 4 + 8 * 4;
        const size_t hidden_bytes =
            static_cast<size_t>(t.ctx.seq()) * t.ctx.dim() * 4;
        corrupt(path, bad, [&](std::string & d) {
            // first float of the first attention row
            const float v = 0.5f;
            std::memcpy(d.data() + header + hidden_bytes, &v, sizeof(v));
        });
        CHECK_THROWS_WITH_AS(read_trace(bad), doctest::Contains("NonStochasticRow"), Error);
        std::remove(bad.c_str());
        std::remove((bad + ".meta").c_str());
    }

    std::remove(path.c_str());
    std::remove((path + ".meta").c_str());
}

TEST_CASE("imported traces reproduce the in-memory pipeline within float precision") {
    ToyTrace t = ToyTrace::make();
    const std::string path = temp_path("gsr_crosspath.trace");
    write_trace(path, t.ctx, t.layers, t.meta);
    Trace back = read_trace(path);

    InterventionConfig cfg;
    cfg.monitored_dims = back.metadata.monitored_dims;
    auto [mem_out, mem_reports] =
        apply_to_layer_stack(t.layers, t.ctx, cfg.criterion(), cfg);
    auto [file_out, file_reports] =
        apply_to_layer_stack(back.layers, back.context, cfg.criterion(), cfg);

    REQUIRE(mem_out.size() == file_out.size());
    double max_diff = 0.0;
    for (size_t l = 0; l < mem_out.size(); ++l) {
        for (size_t i = 0; i < mem_out[l].weights().size(); ++i) {
            max_diff = std::max(max_diff,
                                std::abs(mem_out[l].weights()[i] - file_out[l].weights()[i]));
        }
    }
    CHECK(max_diff <= 1e-4);
    std::remove(path.c_str());
    std::remove((path + ".meta").c_str());
}
