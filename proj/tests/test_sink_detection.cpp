#include "gaseraser/sink_detection.hpp"
#include "gaseraser/rng.hpp"
#include "support/generators.hpp"

#include <doctest.h>

#include <cmath>

using namespace gaseraser;

namespace {

SinkCriterion criterion(std::vector<int> dims, double tau) {
    return SinkCriterion{std::move(dims), tau, SinkScoreMode::monitored_max};
}

} // namespace

TEST_CASE("zero embedding scores zero") {
    TokenContext ctx(std::vector<double>(4 * 8, 0.0), 4, 8, Span{0, 2},
                     {TokenRole::image, TokenRole::image, TokenRole::question,
                      TokenRole::answer});
    CHECK(token_norm_score(ctx, 2, criterion({1, 5}, 20.0)) == 0.0);
    CHECK(detect_sinks(ctx, criterion({1, 5}, 20.0)).all_sinks.empty());
}

TEST_CASE("monitored-max score is the raw value over sqrt(d)") {
    const int d = 256;
    std::vector<double> emb(3 * d, 0.0);
    emb[1 * d + 7] = 320.0;
    TokenContext ctx(emb, 3, d, Span{0, 1},
                     {TokenRole::image, TokenRole::question, TokenRole::answer});
    // independent evaluation: 320 / sqrt(256)
    const double expected = 320.0 / std::sqrt(256.0);
    CHECK(token_norm_score(ctx, 1, criterion({7}, 20.0)) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == 20.0);
}

TEST_CASE("strict inequality at the threshold") {
    const int d = 256;
    std::vector<double> emb(2 * d, 0.0);
    emb[0 * d + 3] = 20.0 * 16.0; // score exactly tau
    emb[1 * d + 3] = 20.0 * 16.0 + 1.0;
    TokenContext ctx(emb, 2, d, Span{0, 1}, {TokenRole::image, TokenRole::answer});
    SinkPartition p = detect_sinks(ctx, criterion({3}, 20.0));
    CHECK(!p.all_sinks.contains(0));
    CHECK(p.all_sinks.contains(1));
}

TEST_CASE("planted spikes split into visual and text sinks") {
    const int d = 64;
    const int seq = 48;
    Rng rng(5);
    std::vector<testgen::Spike> spikes = {{3, 9, 30.0 * 8.0}, {41, 9, 25.0 * 8.0}};
    TokenContext ctx = testgen::random_context(rng, seq, d, Span{0, 36}, spikes);
    SinkCriterion c = criterion({9}, 20.0);

    // oracle: recompute the score for every token directly
    std::vector<int> expected;
    for (int i = 0; i < seq; ++i) {
        const double score = std::abs(ctx.embedding(i)[9]) / std::sqrt(64.0);
        if (score > 20.0) {
            expected.push_back(i);
        }
    }
    CHECK(expected == std::vector<int>{3, 41});

    SinkPartition p = detect_sinks(ctx, c);
    CHECK(p.all_sinks.indices() == expected);
    CHECK(p.visual_sinks.indices() == std::vector<int>{3});
    CHECK(p.text_sinks.indices() == std::vector<int>{41});
}

TEST_CASE("huge tau yields an empty partition") {
    Rng rng(6);
    TokenContext ctx = testgen::random_context(rng, 10, 32, Span{0, 4},
                                               {{2, 3, 1000.0}, {7, 3, 1000.0}});
    SinkPartition p = detect_sinks(ctx, criterion({3}, 1e308));
    CHECK(p.all_sinks.empty());
    CHECK(p.visual_sinks.empty());
    CHECK(p.text_sinks.empty());
}

TEST_CASE("detection ignores non-monitored dimensions") {
    const int d = 32;
    Rng rng(7);
    TokenContext a = testgen::random_context(rng, 6, d, Span{0, 2}, {{1, 4, 900.0}});
    // same spikes at the monitored dim, arbitrary values elsewhere
    std::vector<double> emb = a.embeddings();
    for (int i = 0; i < 6; ++i) {
        for (int c = 0; c < d; ++c) {
            if (c != 4) {
                emb[static_cast<size_t>(i) * d + c] = 500.0 * (i + 1);
            }
        }
    }
    TokenContext b(emb, 6, d, Span{0, 2}, a.roles());
    SinkCriterion c = criterion({4}, 20.0);
    CHECK(detect_sinks(a, c).all_sinks.indices() == detect_sinks(b, c).all_sinks.indices());
}

TEST_CASE("shrinking sink sets under a growing threshold") {
    Rng rng(8);
    for (int trial = 0; trial < 120; ++trial) {
        const int seq = 4 + rng.uniform_int(12);
        std::vector<testgen::Spike> spikes;
        for (int i = 0; i < seq; ++i) {
            if (rng.uniform() < 0.4) {
                spikes.push_back({i, 2, rng.uniform(50.0, 400.0)});
            }
        }
        TokenContext ctx = testgen::random_context(rng, seq, 16, Span{0, 2}, spikes);
        const double t1 = rng.uniform(5.0, 50.0);
        const double t2 = t1 + rng.uniform(0.1, 60.0);
        SinkPartition p1 = detect_sinks(ctx, criterion({2}, t1));
        SinkPartition p2 = detect_sinks(ctx, criterion({2}, t2));
        for (int i : p2.all_sinks.indices()) {
            CHECK(p1.all_sinks.contains(i));
        }
    }
}

TEST_CASE("detection is deterministic") {
    Rng rng(9);
    TokenContext ctx = testgen::random_context(rng, 20, 64, Span{2, 10}, {{4, 5, 400.0}});
    SinkCriterion c = criterion({5}, 20.0);
    SinkPartition p1 = detect_sinks(ctx, c);
    SinkPartition p2 = detect_sinks(ctx, c);
    CHECK(p1.all_sinks.indices() == p2.all_sinks.indices());
    CHECK(p1.visual_sinks.indices() == p2.visual_sinks.indices());
    CHECK(p1.text_sinks.indices() == p2.text_sinks.indices());
}

TEST_CASE("partition invariants hold by construction") {
    Rng rng(10);
    for (int trial = 0; trial < 60; ++trial) {
        const int seq = 6 + rng.uniform_int(20);
        const int b = rng.uniform_int(seq - 2);
        const Span span{b, b + 1 + rng.uniform_int(seq - b - 1)};
        SinkPartition p = testgen::random_partition(rng, seq, span);
        size_t total = 0;
        for (int i : p.visual_sinks.indices()) {
            CHECK(span.contains(i));
            CHECK(p.all_sinks.contains(i));
            CHECK(!p.text_sinks.contains(i));
            ++total;
        }
        for (int i : p.text_sinks.indices()) {
            CHECK(!span.contains(i));
            CHECK(p.all_sinks.contains(i));
            ++total;
        }
        CHECK(total == p.all_sinks.size());
    }
}

TEST_CASE("full-norm variant") {
    const int d = 4;
    std::vector<double> emb = {1.0, 2.0, 2.0, 4.0,  0.0, 0.0, 0.0, 0.0};
    TokenContext ctx(emb, 2, d, Span{0, 1}, {TokenRole::image, TokenRole::answer});
    SinkCriterion c{{0}, 1.0, SinkScoreMode::full_norm};
    const double expected = std::sqrt(1.0 + 4.0 + 4.0 + 16.0) / 2.0;
    CHECK(token_norm_score(ctx, 0, c) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("high-index monitored dims behave like the small ones") {
    // dimension indices at the scale real-model dumps use
    const int d = 4096;
    std::vector<double> emb(2 * d, 0.0);
    emb[0 * d + 1415] = 21.0 * std::sqrt(4096.0);
    emb[1 * d + 2533] = 19.0 * std::sqrt(4096.0);
    TokenContext ctx(emb, 2, d, Span{0, 1}, {TokenRole::image, TokenRole::answer});
    SinkPartition p = detect_sinks(ctx, criterion({1415, 2533}, 20.0));
    CHECK(p.all_sinks.indices() == std::vector<int>{0});
}

TEST_CASE("criterion validation") {
    TokenContext ctx(std::vector<double>(8, 0.0), 2, 4, Span{0, 1},
                     {TokenRole::image, TokenRole::answer});
    CHECK_THROWS_AS(token_norm_score(ctx, 0, criterion({4}, 20.0)), Error);   // dim out of range
    CHECK_THROWS_AS(token_norm_score(ctx, 0, criterion({}, 20.0)), Error);    // empty dims
    CHECK_THROWS_AS(token_norm_score(ctx, 0, criterion({1}, 0.0)), Error);    // bad tau
    CHECK_THROWS_AS(token_norm_score(ctx, 5, criterion({1}, 20.0)), Error);   // token out of range
}
