#include "gaseraser/config.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>

using namespace gaseraser;

TEST_CASE("defaults match the shipped hyperparameter set") {
    InterventionConfig cfg;
    CHECK(cfg.tau == 20.0);
    CHECK(cfg.rho == 0.6);
    CHECK(cfg.alpha == 0.005);
    CHECK(cfg.p == 0.6);
    CHECK(cfg.directions.delta_select_high);
    CHECK(cfg.directions.xi_select_low);
    CHECK(!cfg.renormalize_rows);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("presets differ only in alpha") {
    InterventionConfig base = preset_config("llava15");
    CHECK(base.alpha == 0.005);
    CHECK(preset_config("llava16").alpha == 0.01);
    CHECK(preset_config("internvl2").alpha == 0.1);
    for (const char * name : {"llava15", "llava16", "internvl2"}) {
        InterventionConfig c = preset_config(name);
        CHECK(c.tau == 20.0);
        CHECK(c.rho == 0.6);
        CHECK(c.p == 0.6);
    }
    CHECK_THROWS_AS(preset_config("unknown"), Error);
}

TEST_CASE("config text round-trip preserves every field") {
    InterventionConfig cfg;
    cfg.tau             = 17.25;
    cfg.monitored_dims  = {1415, 2533};
    cfg.sink_score_mode = SinkScoreMode::full_norm;
    cfg.rho             = 0.55;
    cfg.alpha           = 0.012345678901234567;
    cfg.epsilon         = 3e-7;
    cfg.directions      = {false, false};
    cfg.p               = 0.431;
    cfg.use_text_sinks  = false;
    cfg.use_image_sinks = false;
    cfg.renormalize_rows = true;
    cfg.head_selection  = false;
    cfg.token_selection = false;
    cfg.layer_begin     = 2;
    cfg.layer_end       = 7;
    cfg.seed            = 987654321098765ull;

    InterventionConfig back = InterventionConfig::from_text(cfg.to_text());
    CHECK(back == cfg);
}

TEST_CASE("config file round-trip") {
    InterventionConfig cfg;
    cfg.alpha = 0.01;
    cfg.seed  = 99;
    const std::string path = (std::filesystem::temp_directory_path() / "gsr_cfg_test.txt").string();
    cfg.save(path);
    InterventionConfig back = InterventionConfig::load(path);
    CHECK(back == cfg);
    std::remove(path.c_str());
}

TEST_CASE("bad configs are rejected with BadConfig") {
    auto expect_bad = [](const std::string & text) {
        CHECK_THROWS_AS(InterventionConfig::from_text(text), Error);
    };
    expect_bad("p = 0\n");
    expect_bad("p = 1.5\n");
    expect_bad("tau = -1\n");
    expect_bad("rho = 1.5\n");
    expect_bad("layer_range = 4:2\n");
    expect_bad("layer_range = nonsense\n");
    expect_bad("unknown_key = 1\n");
    expect_bad("delta_direction = sideways\n");
    expect_bad("monitored_dims = 1,banana\n");
    expect_bad("p 0.6\n");
    CHECK_THROWS_AS(InterventionConfig::load("/nonexistent/path/cfg.txt"), Error);
}

TEST_CASE("comments and blank lines are ignored") {
    InterventionConfig cfg = InterventionConfig::from_text(
        "# a comment\n\n  tau = 21 \n\n# another\nalpha = 0.01\n");
    CHECK(cfg.tau == 21.0);
    CHECK(cfg.alpha == 0.01);
}
