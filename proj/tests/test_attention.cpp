#include "gaseraser/attention.hpp"
#include "gaseraser/rng.hpp"
#include "support/generators.hpp"

#include <doctest.h>

using namespace gaseraser;

TEST_CASE("attention tensor accepts stochastic rows") {
    AttentionTensor t({0.5, 0.5, 0.3, 0.7}, 1, 2, 0);
    CHECK(t.heads() == 1);
    CHECK(t.seq() == 2);
    CHECK(t.at(0, 1, 1) == 0.7);
}

TEST_CASE("attention tensor rejects bad rows") {
    CHECK_THROWS_WITH_AS((AttentionTensor{{0.6, 0.6, 0.3, 0.7}, 1, 2, 0}),
                         doctest::Contains("NonStochasticRow"), Error);
    CHECK_THROWS_WITH_AS((AttentionTensor{{-0.1, 1.1, 0.3, 0.7}, 1, 2, 0}),
                         doctest::Contains("NegativeWeight"), Error);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_WITH_AS((AttentionTensor{{inf, 0.5, 0.3, 0.7}, 1, 2, 0}),
                         doctest::Contains("NonFiniteValue"), Error);
    CHECK_THROWS_AS((AttentionTensor{{0.5, 0.5, 0.5}, 1, 2, 0}), Error); // wrong count
    CHECK_THROWS_AS((AttentionTensor{{}, 0, 0, 0}), Error);
}

TEST_CASE("attention tensor singleton") {
    AttentionTensor t({1.0}, 1, 1, 3);
    CHECK(t.layer_index() == 3);
    CHECK(t.at(0, 0, 0) == 1.0);
}

TEST_CASE("row sum tolerance boundary") {
    CHECK_NOTHROW((AttentionTensor{{1.000005}, 1, 1, 0, 1e-5}));
    CHECK_THROWS_AS((AttentionTensor{{1.00002}, 1, 1, 0, 1e-5}), Error);
}

TEST_CASE("row_mass basics") {
    AttentionTensor t({0.5, 0.5, 0.3, 0.7}, 1, 2, 0);
    CHECK(row_mass(t, 0, 0, IndexSet::of({0, 1})) == 1.0);
    CHECK(row_mass(t, 0, 0, IndexSet{}) == 0.0);
    CHECK(row_mass(t, 0, 1, IndexSet::of({1})) == 0.7);
    CHECK(row_mass(t, 0, 0, Span{0, 2}) == 1.0);
    CHECK_THROWS_AS(row_mass(t, 0, 0, IndexSet::of({2})), Error);
    CHECK_THROWS_AS(row_mass(t, 1, 0, IndexSet::of({0})), Error);
    CHECK_THROWS_AS(row_mass(t, 0, 2, Span{0, 1}), Error);
}

TEST_CASE("random softmax tensors always validate, perturbed rows never do") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int heads = 1 + rng.uniform_int(3);
        const int seq   = 2 + rng.uniform_int(7);
        AttentionTensor t = testgen::random_tensor(rng, heads, seq);
        std::vector<double> w = t.weights();
        CHECK_NOTHROW((AttentionTensor{w, heads, seq, 0}));

        const size_t idx = rng.uniform_int(static_cast<int>(w.size()));
        w[idx] += 0.1;
        CHECK_THROWS_AS((AttentionTensor{w, heads, seq, 0}), Error);
    }
}

TEST_CASE("row_mass over a partition reproduces the full row sum") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const int seq = 3 + rng.uniform_int(10);
        AttentionTensor t = testgen::random_tensor(rng, 2, seq);
        std::vector<int> a, b;
        for (int j = 0; j < seq; ++j) {
            (rng.uniform() < 0.5 ? a : b).push_back(j);
        }
        for (int h = 0; h < 2; ++h) {
            for (int s = 0; s < seq; ++s) {
                const double parts = row_mass(t, h, s, IndexSet::of(a)) +
                                     row_mass(t, h, s, IndexSet::of(b));
                const double full = row_mass(t, h, s, Span{0, seq});
                // split accumulators round differently; bound is a few ulps
                CHECK(std::abs(parts - full) <= 1e-12);
            }
        }
    }
}

TEST_CASE("index set semantics") {
    IndexSet s = IndexSet::of({5, 1, 3, 1});
    CHECK(s.indices() == std::vector<int>{1, 3, 5});
    CHECK(s.contains(3));
    CHECK(!s.contains(2));
    CHECK(s.intersect_span(Span{2, 6}).indices() == std::vector<int>{3, 5});
    CHECK(s.difference(IndexSet::of({3})).indices() == std::vector<int>{1, 5});
    CHECK_THROWS_AS(IndexSet::of({-1}), Error);
}

TEST_CASE("token context validation") {
    std::vector<TokenRole> roles = {TokenRole::system, TokenRole::image, TokenRole::image,
                                    TokenRole::answer};
    std::vector<double> emb(4 * 2, 0.0);
    TokenContext ctx(emb, 4, 2, Span{1, 3}, roles);
    CHECK(ctx.image_span().size() == 2);

    // span/role mismatch
    CHECK_THROWS_AS((TokenContext{emb, 4, 2, Span{1, 2}, roles}), Error);
    // bad span bounds
    CHECK_THROWS_AS((TokenContext{emb, 4, 2, Span{3, 3}, roles}), Error);
    CHECK_THROWS_AS((TokenContext{emb, 4, 2, Span{1, 5}, roles}), Error);
    // non-finite embedding
    std::vector<double> bad = emb;
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS((TokenContext{bad, 4, 2, Span{1, 3}, roles}), Error);
}

TEST_CASE("role names round-trip") {
    for (TokenRole r : {TokenRole::system, TokenRole::image, TokenRole::question,
                        TokenRole::option, TokenRole::gaslight, TokenRole::answer}) {
        CHECK(role_from_name(role_name(r)) == r);
    }
    CHECK(!role_from_name("nonsense").has_value());
}
