#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "devrec/review_net.hpp"

using namespace devrec;

namespace {
std::mt19937_64 rng(31);
Matrix random_matrix(std::size_t r, std::size_t c, double scale = 1.0) {
    Matrix m(r, c);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (double& v : m.data) v = dist(rng);
    return m;
}
} // namespace

TEST_CASE("embed_collection") {
    Matrix e = random_matrix(6, 3);
    SUBCASE("repeated token gives identical columns") {
        Matrix m = embed_collection({4, 4}, e);
        REQUIRE(m.cols == 2);
        for (std::size_t p = 0; p < 3; ++p) {
            CHECK(m(p, 0) == e(4, p));
            CHECK(m(p, 1) == m(p, 0));
        }
    }
    SUBCASE("empty collection becomes one padding column") {
        Matrix m = embed_collection({}, e);
        REQUIRE(m.cols == 1);
        for (std::size_t p = 0; p < 3; ++p) CHECK(m(p, 0) == e(0, p));
    }
    SUBCASE("row-gather oracle") {
        std::vector<int> ids = {2, 0, 5};
        Matrix m = embed_collection(ids, e);
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t p = 0; p < 3; ++p)
                CHECK(m(p, i) == e(static_cast<std::size_t>(ids[i]), p));
    }
    SUBCASE("out-of-range id") { CHECK_THROWS(embed_collection({6}, e)); }
}

TEST_CASE("contextual_conv") {
    Matrix embeds = random_matrix(3, 4);
    SUBCASE("zero filters give a zero matrix") {
        Matrix out = contextual_conv(embeds, Matrix(2, 6), 2);
        for (double v : out.data) CHECK(v == 0.0);
    }
    SUBCASE("n=1 single column") {
        Matrix one = random_matrix(3, 1);
        Matrix f = random_matrix(2, 6);
        Matrix out = contextual_conv(one, f, 2);
        CHECK(out.cols == 1);
    }
    SUBCASE("sliding-window + ReLU oracle") {
        Matrix f = random_matrix(2, 6);
        Matrix out = contextual_conv(embeds, f, 2);
        Matrix raw = nn::window_conv(embeds, f, 2);
        for (std::size_t i = 0; i < out.data.size(); ++i)
            CHECK(out.data[i] == doctest::Approx(std::max(0.0, raw.data[i])));
    }
}

TEST_CASE("selective_weights") {
    const std::size_t f = 2;
    SUBCASE("A=0 gives uniform weights") {
        Matrix d = random_matrix(f, 3), s = random_matrix(f, 5);
        SelectiveWeights w = selective_weights(d, s, Matrix(f, f));
        for (double v : w.a_dev) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));
        for (double v : w.a_srv) CHECK(v == doctest::Approx(1.0 / 5).epsilon(1e-12));
    }
    SUBCASE("single-word collections") {
        SelectiveWeights w = selective_weights(random_matrix(f, 1), random_matrix(f, 1),
                                               random_matrix(f, f));
        CHECK(w.a_dev == Vector{1.0});
        CHECK(w.a_srv == Vector{1.0});
    }
    SUBCASE("direct triple-loop oracle, f=2 n=2 m=2") {
        Matrix d = random_matrix(f, 2), s = random_matrix(f, 2), a = random_matrix(f, f);
        SelectiveWeights w = selective_weights(d, s, a);
        Matrix r(2, 2);
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k) {
                double z = 0.0;
                for (std::size_t p = 0; p < f; ++p)
                    for (std::size_t q = 0; q < f; ++q) z += d(p, j) * a(p, q) * s(q, k);
                r(j, k) = std::tanh(z);
            }
        Vector g_dev = {(r(0, 0) + r(0, 1)) / 2, (r(1, 0) + r(1, 1)) / 2};
        Vector g_srv = {(r(0, 0) + r(1, 0)) / 2, (r(0, 1) + r(1, 1)) / 2};
        Vector a_dev = nn::softmax(g_dev), a_srv = nn::softmax(g_srv);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(w.a_dev[i] == doctest::Approx(a_dev[i]).epsilon(1e-12));
            CHECK(w.a_srv[i] == doctest::Approx(a_srv[i]).epsilon(1e-12));
        }
    }
    SUBCASE("weights are a distribution for random inputs") {
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 1 + rng() % 6, m = 1 + rng() % 6;
            SelectiveWeights w = selective_weights(random_matrix(f, n), random_matrix(f, m),
                                                   random_matrix(f, f));
            double sum_d = 0.0, sum_s = 0.0;
            for (double v : w.a_dev) {
                CHECK(v >= 0.0);
                sum_d += v;
            }
            for (double v : w.a_srv) {
                CHECK(v >= 0.0);
                sum_s += v;
            }
            CHECK(sum_d == doctest::Approx(1.0).epsilon(1e-6));
            CHECK(sum_s == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    SUBCASE("duplicating identical service columns leaves weights consistent") {
        Matrix d = random_matrix(f, 3);
        Matrix s(f, 2);
        Matrix one = random_matrix(f, 1);
        for (std::size_t p = 0; p < f; ++p) s(p, 0) = s(p, 1) = one(p, 0);
        SelectiveWeights w = selective_weights(d, s, random_matrix(f, f));
        // the two identical columns must carry identical weight
        CHECK(w.a_srv[0] == doctest::Approx(w.a_srv[1]).epsilon(1e-12));
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS(selective_weights(random_matrix(3, 2), random_matrix(2, 2),
                                       Matrix(2, 2)));
    }
}

TEST_CASE("apply_weights") {
    Matrix c = random_matrix(3, 4);
    SUBCASE("uniform weights scale the matrix") {
        Matrix out = apply_weights(c, Vector(4, 0.25));
        for (std::size_t i = 0; i < c.data.size(); ++i)
            CHECK(out.data[i] == doctest::Approx(c.data[i] * 0.25));
    }
    SUBCASE("one-hot weights keep a single column") {
        Matrix out = apply_weights(c, Vector{0, 0, 1, 0});
        for (std::size_t p = 0; p < 3; ++p) {
            CHECK(out(p, 2) == c(p, 2));
            CHECK(out(p, 0) == 0.0);
        }
    }
    SUBCASE("column-scaling oracle") {
        Vector w = {0.1, 0.7, 0.05, 0.15};
        Matrix out = apply_weights(c, w);
        for (std::size_t p = 0; p < 3; ++p)
            for (std::size_t j = 0; j < 4; ++j)
                CHECK(out(p, j) == doctest::Approx(c(p, j) * w[j]));
    }
    CHECK_THROWS(apply_weights(c, Vector{1.0}));
}

TEST_CASE("abstract_features") {
    const std::size_t f = 3, s_a = 2;
    SUBCASE("zero filters give a zero vector") {
        Vector h = abstract_features(random_matrix(f, 4), Matrix(f, f * s_a), s_a);
        for (double v : h) CHECK(v == 0.0);
    }
    SUBCASE("constant input with s_a=1: every column identical") {
        Matrix cw(f, 5, 0.4);
        Matrix filters = random_matrix(f, f);
        Vector h = abstract_features(cw, filters, 1);
        Vector col(f, 0.4);
        Vector expect = nn::relu(nn::affine(filters, col, Vector(f, 0.0)));
        for (std::size_t i = 0; i < f; ++i)
            CHECK(h[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    }
    SUBCASE("conv + mean oracle") {
        Matrix cw = random_matrix(f, 4);
        Matrix filters = random_matrix(f, f * s_a);
        Vector h = abstract_features(cw, filters, s_a);
        Matrix conv = nn::window_conv(cw, filters, s_a);
        for (std::size_t j = 0; j < f; ++j) {
            double acc = 0.0;
            for (std::size_t c2 = 0; c2 < 4; ++c2) acc += std::max(0.0, conv(j, c2));
            CHECK(h[j] == doctest::Approx(acc / 4.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("transform") {
    const std::size_t f = 3;
    SUBCASE("zero weights and bias give 0.5 everywhere") {
        Vector t = transform(Vector(f, 2.0), Matrix(f, f), Matrix(f, 1));
        for (double v : t) CHECK(v == doctest::Approx(0.5));
    }
    SUBCASE("zero input gives sigmoid of the bias") {
        Matrix b(f, 1);
        b.data = {0.5, -0.5, 2.0};
        Vector t = transform(Vector(f, 0.0), random_matrix(f, f), b);
        for (std::size_t i = 0; i < f; ++i)
            CHECK(t[i] == doctest::Approx(1.0 / (1.0 + std::exp(-b.data[i]))));
    }
    SUBCASE("affine + sigmoid oracle") {
        Matrix w = random_matrix(f, f);
        Matrix b = random_matrix(f, 1);
        Vector h = {0.3, -1.0, 0.8};
        Vector t = transform(h, w, b);
        for (std::size_t i = 0; i < f; ++i) {
            double u = b.data[i];
            for (std::size_t j = 0; j < f; ++j) u += w(i, j) * h[j];
            CHECK(t[i] == doctest::Approx(1.0 / (1.0 + std::exp(-u))).epsilon(1e-12));
        }
    }
}

TEST_CASE("collection_features") {
    Vector ones(4, 1.0), zeros(4, 0.0), t = {0.2, 0.4, 0.6, 0.8};
    SUBCASE("ones") {
        Vector f = collection_features(ones, ones);
        CHECK(f == Vector(12, 1.0));
    }
    SUBCASE("zero device side") {
        Vector f = collection_features(zeros, t);
        for (std::size_t i = 0; i < 8; ++i) CHECK(f[i] == 0.0);
        for (std::size_t i = 0; i < 4; ++i) CHECK(f[8 + i] == t[i]);
    }
    SUBCASE("concat/product oracle") {
        Vector a = {0.1, 0.9, 0.5, 0.3};
        Vector f = collection_features(a, t);
        REQUIRE(f.size() == 12);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(f[i] == doctest::Approx(a[i] * t[i]));
            CHECK(f[4 + i] == a[i]);
            CHECK(f[8 + i] == t[i]);
        }
    }
    CHECK_THROWS(collection_features(ones, Vector{1.0}));
}

TEST_CASE("full review forward: range invariants") {
    ReviewNetParams p{};
    Matrix embed = random_matrix(20, 4, 0.1);
    Matrix conv_dev = random_matrix(3, 12, 0.1), conv_srv = random_matrix(3, 12, 0.1);
    Matrix a = random_matrix(3, 3, 0.1);
    Matrix abs_dev = random_matrix(3, 9, 0.1), abs_srv = random_matrix(3, 9, 0.1);
    Matrix mlp_w = random_matrix(3, 3, 0.1), mlp_b = random_matrix(3, 1, 0.1);
    p.embed = &embed;
    p.conv_dev = &conv_dev;
    p.conv_srv = &conv_srv;
    p.select_A = &a;
    p.abs_dev = &abs_dev;
    p.abs_srv = &abs_srv;
    p.mlp_w = &mlp_w;
    p.mlp_b = &mlp_b;

    for (int trial = 0; trial < 10; ++trial) {
        std::vector<int> ids_dev(1 + rng() % 8), ids_srv(1 + rng() % 8);
        for (int& v : ids_dev) v = static_cast<int>(rng() % 20);
        for (int& v : ids_srv) v = static_cast<int>(rng() % 20);
        ReviewNetCache c = review_forward(ids_dev, ids_srv, p);
        REQUIRE(c.f_collection.size() == 9);
        // thirds two and three in (0,1); first third a product of sigmoids
        for (std::size_t i = 0; i < 9; ++i) {
            CHECK(c.f_collection[i] > 0.0);
            CHECK(c.f_collection[i] < 1.0);
        }
        double sum = 0.0;
        for (double v : c.a_dev) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}
