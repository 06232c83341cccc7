#pragma once

#include <map>
#include <optional>
#include <string>

#include "devrec/engagement_net.hpp"
#include "devrec/fm.hpp"
#include "devrec/ingest.hpp"
#include "devrec/param_store.hpp"
#include "devrec/review_net.hpp"

namespace devrec {

struct ModelConfig {
    std::size_t embed_dim = 32;   // e
    std::size_t filters = 20;     // f
    std::size_t window = 3;       // s
    std::size_t abs_window = 3;   // s_a
    std::size_t latent_dim = 20;  // v
    std::size_t fm_rank = 8;      // r
    std::size_t t_max = 500;
    std::size_t vocab_cap = 20000;
    double lambda = 1e-5;

    bool operator==(const ModelConfig&) const = default;
};

// How the two head scores are combined.
struct BetaPolicy {
    enum class Kind { Dynamic, Fixed } kind = Kind::Dynamic;
    double fixed_value = 0.5;

    static BetaPolicy dynamic() { return {Kind::Dynamic, 0.5}; }
    static BetaPolicy fixed(double b) { return {Kind::Fixed, b}; }
};

struct PairForward {
    ReviewNetCache review;
    LatentPair latent;
    Vector f_engagement;
    std::size_t device_index = 0;
    std::size_t service_index = 0;
    double r_col = 0.0;
    double r_eng = 0.0;
    double beta = 0.5;
    double r_hat = 0.0;
};

// The full fused predictor: review branch, engagement branch, two FM heads,
// dynamic-beta combination, device/service biases.
class Model {
  public:
    Model(const ModelConfig& cfg, std::size_t vocab_size,
          const std::vector<std::string>& device_ids,
          const std::vector<std::string>& service_ids, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // 0 (the cold-start row) for unknown ids
    std::size_t device_index(const std::string& id) const;
    std::size_t service_index(const std::string& id) const;
    const std::map<std::string, std::size_t>& device_map() const { return dev_index_; }
    const std::map<std::string, std::size_t>& service_map() const { return srv_index_; }

    // fixed_beta, when set, overrides the policy entirely (used for
    // stop-gradient finite-difference checks)
    PairForward forward_pair(const std::vector<int>& tokens_dev,
                             const std::vector<int>& tokens_srv,
                             std::size_t device_index, std::size_t service_index,
                             const BetaPolicy& policy = BetaPolicy::dynamic(),
                             std::optional<double> fixed_beta = std::nullopt) const;

    // accumulates dL/dparams for d_r_hat = dL/d(r_hat); beta is a constant
    void backward_pair(const PairForward& fwd, double d_r_hat);
    // same, but into the grad buffers of `target` (a store with identical
    // layout, e.g. a copy) so batch members can run on separate buffers
    void backward_pair(const PairForward& fwd, double d_r_hat, ParamStore& target) const;

    ReviewNetParams review_params() const;
    ReviewNetGrads review_grads();
    FmParams fm_collection() const;
    FmParams fm_engagement() const;

    double device_bias(std::size_t idx) const { return params_.value("bias_dev")(idx, 0); }
    double service_bias(std::size_t idx) const { return params_.value("bias_srv")(idx, 0); }

  private:
    ModelConfig cfg_;
    ParamStore params_;
    std::map<std::string, std::size_t> dev_index_;
    std::map<std::string, std::size_t> srv_index_;
};

} // namespace devrec
