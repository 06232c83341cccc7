#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "devrec/eval.hpp"

using namespace devrec;

namespace {

double mae_oracle(const Vector& p, const Vector& t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - t[i]);
    return acc / p.size();
}

double rmse_oracle(const Vector& p, const Vector& t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += (p[i] - t[i]) * (p[i] - t[i]);
    return std::sqrt(acc / p.size());
}

double ndcg_oracle(const Vector& ranked, Vector pool, std::size_t k) {
    double dcg = 0.0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i)
        dcg += ranked[i] / std::log2(static_cast<double>(i) + 2.0);
    std::sort(pool.begin(), pool.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < pool.size() && i < k; ++i)
        idcg += pool[i] / std::log2(static_cast<double>(i) + 2.0);
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

} // namespace

TEST_CASE("mae and rmse basics") {
    Vector p = {1.0, 2.0, 3.0};
    CHECK(mae(p, p) == 0.0);
    CHECK(rmse(p, p) == 0.0);
    Vector t = {2.0, 2.0, 1.0};
    // hand sums: |e| = 1,0,2 -> 1.0; e^2 = 1,0,4 -> sqrt(5/3)
    CHECK(mae(p, t) == doctest::Approx(1.0));
    CHECK(rmse(p, t) == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK_THROWS(mae(p, Vector{1.0}));
    CHECK_THROWS(mae(Vector{}, Vector{}));
}

TEST_CASE("metrics agree with brute-force oracles on 1000 random cases") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> rating(1.0, 5.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 30;
        Vector p(n), t(n);
        for (double& v : p) v = rating(rng);
        for (double& v : t) v = rating(rng);
        CHECK(std::abs(mae(p, t) - mae_oracle(p, t)) < 1e-9);
        CHECK(std::abs(rmse(p, t) - rmse_oracle(p, t)) < 1e-9);

        const std::size_t pool_n = 1 + rng() % 10;
        const std::size_t k = 1 + rng() % 12;
        Vector pool(pool_n);
        for (double& v : pool) v = static_cast<double>(rng() % 6);
        Vector ranked = pool;
        std::shuffle(ranked.begin(), ranked.end(), rng);
        CHECK(std::abs(ndcg_at_k(ranked, pool, k) - ndcg_oracle(ranked, pool, k)) < 1e-9);
    }
}

TEST_CASE("precision and recall at k") {
    std::set<std::string> rec = {"a", "b", "c", "d", "e"};
    std::set<std::string> rel = {"a", "c", "x"};
    // 2 hits out of k=5 and out of 3 relevant
    CHECK(precision_at_k(rec, rel, 5) == doctest::Approx(0.4));
    CHECK(recall_at_k(rec, rel) == doctest::Approx(2.0 / 3.0));

    CHECK(precision_at_k({}, rel, 5) == 0.0);
    CHECK(recall_at_k({}, rel) == 0.0);
    CHECK(precision_at_k(rec, rec, 5) == 1.0);
    CHECK(recall_at_k(rec, rec) == 1.0);
    CHECK_THROWS(recall_at_k(rec, {}));
    CHECK_THROWS(precision_at_k(rec, rel, 0));
}

TEST_CASE("ndcg worked example") {
    // DCG = 2/log2(2) + 3/log2(3) + 0/log2(4), ideal pool {3,2,0}
    Vector ranked = {2.0, 3.0, 0.0};
    Vector pool = {3.0, 2.0, 0.0};
    const double dcg = 2.0 + 3.0 / std::log2(3.0);
    const double idcg = 3.0 + 2.0 / std::log2(3.0);
    CHECK(ndcg_at_k(ranked, pool, 3) == doctest::Approx(dcg / idcg));

    // perfectly ordered ranking scores 1
    Vector ideal = {3.0, 2.0, 0.0};
    CHECK(ndcg_at_k(ideal, pool, 3) == doctest::Approx(1.0));
    // zero-gain pool
    CHECK(ndcg_at_k(Vector{0.0}, {0.0, 0.0}, 3) == 0.0);
    // k truncates both numerator and denominator
    CHECK(ndcg_at_k(ideal, pool, 1) == doctest::Approx(1.0));
}

TEST_CASE("mae never exceeds rmse") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 20;
        Vector p(n), t(n);
        for (double& v : p) v = dist(rng);
        for (double& v : t) v = dist(rng);
        CHECK(mae(p, t) <= rmse(p, t) + 1e-12);
    }
}

TEST_CASE("rank_candidates") {
    std::vector<ReviewRecord> records = make_synthetic(6, 8, 2, 0.1, 9, 0.9);
    Vocabulary vocab = build_vocab(records, 500);
    auto [dev_cols, srv_cols] = build_collections(records, vocab, 50, {});
    std::vector<std::string> devs, srvs;
    for (const auto& [id, _] : dev_cols) devs.push_back(id);
    for (const auto& [id, _] : srv_cols) srvs.push_back(id);
    ModelConfig cfg;
    cfg.embed_dim = 6;
    cfg.filters = 4;
    cfg.window = 2;
    cfg.abs_window = 2;
    cfg.latent_dim = 4;
    cfg.fm_rank = 2;
    cfg.t_max = 50;
    Model model(cfg, vocab.size(), devs, srvs, 77);

    SUBCASE("sorted descending, truncated to k, ties by service id") {
        RankedList list = rank_candidates(model, dev_cols, srv_cols, devs[0], srvs, 3);
        CHECK(list.entries.size() == 3);
        CHECK(list.k == 3);
        for (std::size_t i = 1; i < list.entries.size(); ++i) {
            CHECK(list.entries[i - 1].second >= list.entries[i].second);
            if (list.entries[i - 1].second == list.entries[i].second)
                CHECK(list.entries[i - 1].first < list.entries[i].first);
        }
        for (const auto& [_, score] : list.entries) {
            CHECK(score >= 1.0);
            CHECK(score <= 5.0);
        }
    }
    SUBCASE("k larger than the candidate pool returns everything") {
        RankedList list = rank_candidates(model, dev_cols, srv_cols, devs[0], srvs, 100);
        CHECK(list.entries.size() == srvs.size());
    }
    SUBCASE("unknown device still produces a full cold-start list") {
        RankedList list = rank_candidates(model, dev_cols, srv_cols, "never-seen", srvs, 4);
        CHECK(list.entries.size() == 4);
    }
    SUBCASE("ranking order only depends on relative scores") {
        // the order from rank_candidates must match an argsort of its own
        // scores after any increasing affine map
        RankedList list = rank_candidates(model, dev_cols, srv_cols, devs[1], srvs, srvs.size());
        std::vector<std::pair<double, std::string>> mapped;
        for (const auto& [id, score] : list.entries) mapped.push_back({2.0 * score + 7.0, id});
        auto sorted = mapped;
        std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        CHECK(mapped == sorted);
    }
}

TEST_CASE("matrix factorization baseline") {
    SUBCASE("constant ratings collapse to the global mean") {
        std::vector<ReviewRecord> flat;
        for (int d = 0; d < 4; ++d)
            for (int s = 0; s < 4; ++s)
                flat.push_back({"d" + std::to_string(d), "s" + std::to_string(s), 3.0, "", 0});
        MFConfig cfg;
        cfg.epochs = 30;
        MFModel mf(cfg, flat);
        mf.fit(flat);
        CHECK(mf.mu() == doctest::Approx(3.0));
        CHECK(mf.predict("d0", "s0") == doctest::Approx(3.0).epsilon(0.05));
        // cold pair falls back to the mean
        CHECK(mf.predict("zz", "yy") == doctest::Approx(3.0).epsilon(0.05));
    }
    SUBCASE("learns planted structure better than the mean") {
        std::vector<ReviewRecord> records = make_synthetic(30, 20, 2, 0.1, 4, 0.6);
        const double ratios[3] = {0.8, 0.1, 0.1};
        DatasetSplit split = split_dataset(records, ratios, 4);
        MFConfig cfg;
        MFModel mf = mf_train(split, cfg);
        double mean = 0.0;
        for (const auto& r : split.train) mean += r.rating;
        mean /= split.train.size();
        Vector preds, base, truth;
        for (const auto& r : split.test) {
            preds.push_back(mf.predict(r.device_id, r.service_id));
            base.push_back(mean);
            truth.push_back(r.rating);
        }
        REQUIRE(!truth.empty());
        CHECK(rmse(preds, truth) < rmse(base, truth));
    }
}

TEST_CASE("make_synthetic") {
    auto a = make_synthetic(10, 8, 3, 0.2, 5);
    auto b = make_synthetic(10, 8, 3, 0.2, 5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].device_id == b[i].device_id);
        CHECK(a[i].rating == b[i].rating);
        CHECK(a[i].review_text == b[i].review_text);
    }
    auto c = make_synthetic(10, 8, 3, 0.2, 6);
    bool differs = c.size() != a.size();
    for (std::size_t i = 0; !differs && i < a.size(); ++i)
        differs = a[i].rating != c[i].rating || a[i].device_id != c[i].device_id;
    CHECK(differs);

    std::set<double> distinct;
    for (const auto& r : a) {
        distinct.insert(r.rating);
        CHECK(r.rating >= 1.0);
        CHECK(r.rating <= 5.0);
        CHECK(!r.review_text.empty());
    }
    CHECK(distinct.size() >= 3);
}

TEST_CASE("evaluate_model and ablation_run produce one report per mode") {
    std::vector<ReviewRecord> records = make_synthetic(10, 8, 2, 0.2, 12, 0.8);
    Vocabulary vocab = build_vocab(records, 500);
    const double ratios[3] = {0.8, 0.1, 0.1};
    DatasetSplit split = split_dataset(records, ratios, 12);
    std::vector<PairKey> exclude;
    for (const auto* part : {&split.validation, &split.test})
        for (const ReviewRecord& r : *part) exclude.push_back({r.device_id, r.service_id});
    auto [dev_cols, srv_cols] = build_collections(records, vocab, 40, exclude);

    ModelConfig mcfg;
    mcfg.embed_dim = 6;
    mcfg.filters = 4;
    mcfg.window = 2;
    mcfg.abs_window = 2;
    mcfg.latent_dim = 4;
    mcfg.fm_rank = 2;
    mcfg.t_max = 40;
    TrainConfig tcfg;
    tcfg.epochs = 1;
    tcfg.batch_size = 8;
    EvalOptions opts;
    opts.k = 5;

    std::vector<TrainMode> modes = {TrainMode::FusedDynamic, TrainMode::FusedStatic,
                                    TrainMode::ReviewOnly, TrainMode::EngagementOnly,
                                    TrainMode::LinearFused};
    auto reports = ablation_run(modes, mcfg, tcfg, vocab, split, dev_cols, srv_cols, opts);
    REQUIRE(reports.size() == 5);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        CHECK(reports[i].label == train_mode_name(modes[i]));
        CHECK(reports[i].n_evaluated == split.test.size());
        CHECK(reports[i].mae >= 0.0);
        CHECK(reports[i].mae <= reports[i].rmse + 1e-12);
        CHECK(!reports[i].to_text().empty());
        CHECK(!reports[i].to_csv_row().empty());
    }
    CHECK(MetricsReport::csv_header().find("mae") != std::string::npos);
}
