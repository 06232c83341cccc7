#pragma once

#include <set>
#include <string>
#include <vector>

#include "devrec/ingest.hpp"
#include "devrec/model.hpp"
#include "devrec/trainer.hpp"

namespace devrec {

double mae(std::span<const double> preds, std::span<const double> truths);
double rmse(std::span<const double> preds, std::span<const double> truths);

double precision_at_k(const std::set<std::string>& recommended,
                      const std::set<std::string>& relevant, std::size_t k);
// relevant must be non-empty
double recall_at_k(const std::set<std::string>& recommended,
                   const std::set<std::string>& relevant);

// DCG of the ranked relevances over IDCG of the pool (descending, truncated
// to k); 0 when the pool has no gain
double ndcg_at_k(std::span<const double> ranked_rels, std::vector<double> ideal_pool,
                 std::size_t k);

struct RankedList {
    std::string device_id;
    std::vector<std::pair<std::string, double>> entries; // service id, clamped score
    std::size_t k = 0;
};

// Scores every candidate with the fused model, sorts descending (ties by
// service id), truncates to k.
RankedList rank_candidates(const Model& model, const CollectionMap& dev_cols,
                           const CollectionMap& srv_cols, const std::string& device_id,
                           const std::vector<std::string>& candidates, std::size_t k,
                           const BetaPolicy& policy = BetaPolicy::dynamic());

struct MetricsReport {
    double mae = 0.0;
    double rmse = 0.0;
    double recall_at_k = 0.0;
    double precision_at_k = 0.0;
    double ndcg_at_k = 0.0;
    std::size_t k = 15;
    std::size_t n_evaluated = 0;         // rating pairs scored
    std::size_t n_ranked_devices = 0;    // devices in the ranking means
    std::size_t n_skipped_no_relevant = 0;
    std::string label;

    std::string to_text() const;
    std::string to_csv_row() const;
    static std::string csv_header();
};

struct EvalOptions {
    std::size_t k = 15;
    double relevance_threshold = 4.0;
    bool ranking = true; // full-catalog ranking is expensive; optional
};

MetricsReport evaluate_model(const Model& model, const DatasetSplit& split,
                             const CollectionMap& dev_cols, const CollectionMap& srv_cols,
                             const BetaPolicy& policy, const EvalOptions& opts);

// Biased matrix factorization baseline: mu + b_u + b_i + p_u . q_i, SGD on
// squared error with L2.
struct MFConfig {
    std::size_t rank = 16;
    double learning_rate = 0.01;
    double lambda = 0.02;
    std::size_t epochs = 50;
    std::uint64_t seed = 42;
};

class MFModel {
  public:
    MFModel(const MFConfig& cfg, const std::vector<ReviewRecord>& train);
    void fit(const std::vector<ReviewRecord>& train);
    double predict(const std::string& device_id, const std::string& service_id) const;
    double mu() const { return mu_; }

  private:
    MFConfig cfg_;
    double mu_ = 0.0;
    std::map<std::string, std::size_t> dev_index_, srv_index_;
    Vector b_dev_, b_srv_;
    Matrix p_, q_;
};

MFModel mf_train(const DatasetSplit& split, const MFConfig& cfg);

// Trains one model per mode with identical seed/config and evaluates each.
std::vector<MetricsReport> ablation_run(const std::vector<TrainMode>& modes,
                                        const ModelConfig& model_cfg,
                                        const TrainConfig& train_cfg,
                                        const Vocabulary& vocab, const DatasetSplit& split,
                                        const CollectionMap& dev_cols,
                                        const CollectionMap& srv_cols,
                                        const EvalOptions& opts, std::ostream* log = nullptr);

// Planted low-rank ratings with template review text naming the service's
// dominant latent aspects; deterministic per seed.
std::vector<ReviewRecord> make_synthetic(std::size_t n_devices, std::size_t n_services,
                                         std::size_t rank, double noise,
                                         std::uint64_t seed, double density = 0.3);

} // namespace devrec
