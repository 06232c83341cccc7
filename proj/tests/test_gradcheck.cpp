#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "devrec/grad_check.hpp"
#include "devrec/model.hpp"

using namespace devrec;

namespace {

struct TinyInstance {
    ModelConfig cfg;
    std::unique_ptr<Model> model;
    std::vector<std::vector<int>> dev_tokens, srv_tokens;
    std::vector<std::size_t> dev_idx, srv_idx;
    std::vector<double> ratings;
    std::vector<double> frozen_betas;
};

// vocab 50, e=8, f=4, v=4, r=2, collections up to 12 tokens
TinyInstance make_tiny(std::uint64_t seed, std::size_t n_pairs, bool dynamic_beta) {
    TinyInstance t;
    t.cfg.embed_dim = 8;
    t.cfg.filters = 4;
    t.cfg.latent_dim = 4;
    t.cfg.fm_rank = 2;
    t.cfg.lambda = 1e-4;
    std::vector<std::string> devs = {"d0", "d1", "d2"};
    std::vector<std::string> srvs = {"s0", "s1", "s2"};
    t.model = std::make_unique<Model>(t.cfg, 50, devs, srvs, seed);
    std::mt19937_64 rng(seed + 1);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        std::vector<int> td(2 + rng() % 11), ts(2 + rng() % 11);
        for (int& v : td) v = static_cast<int>(rng() % 50);
        for (int& v : ts) v = static_cast<int>(rng() % 50);
        t.dev_tokens.push_back(td);
        t.srv_tokens.push_back(ts);
        t.dev_idx.push_back(1 + rng() % 3);
        t.srv_idx.push_back(1 + rng() % 3);
        t.ratings.push_back(1.0 + static_cast<double>(rng() % 5));
    }
    // beta is a stop-gradient coefficient: freeze it at the base-point value
    // so the finite-difference loss matches what the backward pass assumes
    for (std::size_t i = 0; i < n_pairs; ++i) {
        PairForward fwd = t.model->forward_pair(t.dev_tokens[i], t.srv_tokens[i],
                                                t.dev_idx[i], t.srv_idx[i]);
        t.frozen_betas.push_back(dynamic_beta ? fwd.beta : 0.5);
    }
    return t;
}

double tiny_loss(TinyInstance& t) {
    double loss = 0.0;
    for (std::size_t i = 0; i < t.ratings.size(); ++i) {
        PairForward fwd =
            t.model->forward_pair(t.dev_tokens[i], t.srv_tokens[i], t.dev_idx[i],
                                  t.srv_idx[i], BetaPolicy::dynamic(), t.frozen_betas[i]);
        const double r = fwd.r_hat - t.ratings[i];
        loss += r * r;
    }
    return loss + t.cfg.lambda * t.model->params().squared_norm_regularized();
}

void tiny_grads(TinyInstance& t) {
    t.model->params().zero_grads();
    for (std::size_t i = 0; i < t.ratings.size(); ++i) {
        PairForward fwd =
            t.model->forward_pair(t.dev_tokens[i], t.srv_tokens[i], t.dev_idx[i],
                                  t.srv_idx[i], BetaPolicy::dynamic(), t.frozen_betas[i]);
        t.model->backward_pair(fwd, 2.0 * (fwd.r_hat - t.ratings[i]));
    }
    const double lambda = t.cfg.lambda;
    for (auto& e : t.model->params().entries())
        if (e.regularized)
            for (std::size_t k = 0; k < e.grad.data.size(); ++k)
                e.grad.data[k] += 2.0 * lambda * e.value.data[k];
}

} // namespace

TEST_CASE("quadratic loss matches its analytic gradient") {
    ParamStore store(7);
    store.add_weight("theta", 3, 3);
    auto loss = [&] {
        double acc = 0.0;
        for (double v : store.value("theta").data) acc += 0.5 * v * v;
        return acc;
    };
    auto grads = [&] {
        store.zero_grads();
        store.grad("theta").data = store.value("theta").data;
    };
    auto report = grad_check(loss, grads, store, 1e-5);
    CHECK(report.max_rel_error < 1e-7);
}

TEST_CASE("zero-parameter store yields an empty report") {
    ParamStore store(1);
    auto report = grad_check([] { return 0.0; }, [] {}, store, 1e-5);
    CHECK(report.tensors.empty());
    CHECK(report.max_rel_error == 0.0);
}

TEST_CASE("full fused model gradients match finite differences") {
    for (bool dynamic_beta : {false, true}) {
        CAPTURE(dynamic_beta);
        TinyInstance t = make_tiny(2024, 6, dynamic_beta);
        auto report = grad_check([&] { return tiny_loss(t); }, [&] { tiny_grads(t); },
                                 t.model->params(), 1e-5);
        for (const auto& r : report.tensors) {
            CAPTURE(r.name);
            CHECK(r.max_rel_error < 1e-4);
        }
    }
}
