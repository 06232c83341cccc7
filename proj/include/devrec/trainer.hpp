#pragma once

#include <memory>
#include <string>
#include <vector>

#include "devrec/ingest.hpp"
#include "devrec/model.hpp"

namespace devrec {

enum class TrainMode {
    FusedDynamic,
    FusedStatic,   // beta fixed at 0.5
    ReviewOnly,    // beta = 1
    EngagementOnly, // beta = 0
    LinearFused    // dynamic beta, FM pairwise terms frozen at zero
};

const char* train_mode_name(TrainMode m);
TrainMode train_mode_from_name(const std::string& name);
BetaPolicy beta_policy_for(TrainMode m);

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    std::string optimizer = "adam"; // or "sgd"
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 42;
    std::size_t patience = 3;
    TrainMode mode = TrainMode::FusedDynamic;
    bool parallel = true; // OpenMP batch gradients; false = serial reference
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_mae = 0.0;
    double val_rmse = 0.0;
    double seconds = 0.0;
};

using TrainHistory = std::vector<EpochStats>;

// One training example with its leakage-controlled collection views resolved.
struct TrainExample {
    std::vector<int> tokens_dev;
    std::vector<int> tokens_srv;
    std::size_t device_index = 0;
    std::size_t service_index = 0;
    double rating = 0.0;
};

std::vector<TrainExample> resolve_examples(const Model& model,
                                           const std::vector<ReviewRecord>& records,
                                           const CollectionMap& dev_cols,
                                           const CollectionMap& srv_cols);

// Mean squared-residual gradient over the batch plus the L2 term; returns the
// batch loss. `parallel` selects the OpenMP path; both paths produce the same
// gradients up to floating-point reduction order.
double batch_gradient(Model& model, const std::vector<TrainExample>& examples,
                      const std::vector<std::size_t>& batch, const BetaPolicy& policy,
                      bool parallel);

// Adam/SGD state over the parameter store.
class Optimizer {
  public:
    Optimizer(const TrainConfig& cfg, const ParamStore& params);
    void step(ParamStore& params);

  private:
    TrainConfig cfg_;
    std::vector<Matrix> m_, v_;
    std::size_t t_ = 0;
};

struct TrainResult {
    std::unique_ptr<Model> model;
    TrainHistory history;
};

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const Vocabulary& vocab, const DatasetSplit& split,
                  const CollectionMap& dev_cols, const CollectionMap& srv_cols,
                  std::ostream* log = nullptr);

// Versioned binary checkpoint: magic, version, model config, mode, vocabulary,
// entity index maps, then named tensors as little-endian 64-bit floats.
void save_checkpoint(const Model& model, TrainMode mode, const Vocabulary& vocab,
                     const std::string& path);

struct Checkpoint {
    std::unique_ptr<Model> model;
    TrainMode mode = TrainMode::FusedDynamic;
    Vocabulary vocab;
};

Checkpoint load_checkpoint(const std::string& path);

} // namespace devrec
