#include "devrec/model.hpp"

#include <cmath>
#include <stdexcept>

namespace devrec {

Model::Model(const ModelConfig& cfg, std::size_t vocab_size,
             const std::vector<std::string>& device_ids,
             const std::vector<std::string>& service_ids, std::uint64_t seed)
    : cfg_(cfg), params_(seed) {
    const std::size_t e = cfg.embed_dim, f = cfg.filters, v = cfg.latent_dim,
                      r = cfg.fm_rank;
    // index 0 reserved for cold start on both sides
    for (const std::string& id : device_ids) dev_index_.emplace(id, 0);
    for (const std::string& id : service_ids) srv_index_.emplace(id, 0);
    std::size_t next = 1;
    for (auto& [id, idx] : dev_index_) idx = next++;
    next = 1;
    for (auto& [id, idx] : srv_index_) idx = next++;
    const std::size_t n_dev = dev_index_.size() + 1;
    const std::size_t n_srv = srv_index_.size() + 1;

    params_.add_weight("embed", vocab_size, e);
    params_.add_weight("conv_dev", f, e * cfg.window);
    params_.add_weight("conv_srv", f, e * cfg.window);
    params_.add_weight("select_A", f, f);
    params_.add_weight("abs_dev", f, f * cfg.abs_window);
    params_.add_weight("abs_srv", f, f * cfg.abs_window);
    params_.add_weight("mlp_w", f, f);
    params_.add_bias("mlp_b", f, 1);
    params_.add_weight("latent_dev", n_dev, v);
    params_.add_weight("latent_srv", n_srv, v);
    params_.add_bias("fm_col_b0", 1, 1);
    params_.add_weight("fm_col_a", 1, 3 * f);
    params_.add_weight("fm_col_v", 3 * f, r);
    params_.add_bias("fm_eng_b0", 1, 1);
    params_.add_weight("fm_eng_a", 1, 3 * v);
    params_.add_weight("fm_eng_v", 3 * v, r);
    params_.add_bias("bias_dev", n_dev, 1);
    params_.add_bias("bias_srv", n_srv, 1);
}

std::size_t Model::device_index(const std::string& id) const {
    auto it = dev_index_.find(id);
    return it == dev_index_.end() ? 0 : it->second;
}

std::size_t Model::service_index(const std::string& id) const {
    auto it = srv_index_.find(id);
    return it == srv_index_.end() ? 0 : it->second;
}

ReviewNetParams Model::review_params() const {
    return {&params_.value("embed"),  &params_.value("conv_dev"),
            &params_.value("conv_srv"), &params_.value("select_A"),
            &params_.value("abs_dev"), &params_.value("abs_srv"),
            &params_.value("mlp_w"),   &params_.value("mlp_b"),
            cfg_.window,               cfg_.abs_window};
}

ReviewNetGrads Model::review_grads() {
    return {&params_.grad("embed"),  &params_.grad("conv_dev"),
            &params_.grad("conv_srv"), &params_.grad("select_A"),
            &params_.grad("abs_dev"), &params_.grad("abs_srv"),
            &params_.grad("mlp_w"),   &params_.grad("mlp_b")};
}

FmParams Model::fm_collection() const {
    return {&params_.value("fm_col_b0"), &params_.value("fm_col_a"),
            &params_.value("fm_col_v")};
}

FmParams Model::fm_engagement() const {
    return {&params_.value("fm_eng_b0"), &params_.value("fm_eng_a"),
            &params_.value("fm_eng_v")};
}

PairForward Model::forward_pair(const std::vector<int>& tokens_dev,
                                const std::vector<int>& tokens_srv,
                                std::size_t device_index, std::size_t service_index,
                                const BetaPolicy& policy,
                                std::optional<double> fixed_beta) const {
    PairForward out;
    out.device_index = device_index;
    out.service_index = service_index;
    out.review = review_forward(tokens_dev, tokens_srv, review_params());
    out.latent = lookup_latent(device_index, service_index,
                               params_.value("latent_dev"), params_.value("latent_srv"));
    out.f_engagement = engagement_features(out.latent.v_dev, out.latent.v_srv);
    out.r_col = fm_score(out.review.f_collection, fm_collection());
    out.r_eng = fm_score(out.f_engagement, fm_engagement());

    const double b_d = device_bias(device_index);
    const double b_s = service_bias(service_index);
    if (fixed_beta) {
        out.beta = *fixed_beta;
        out.r_hat = out.beta * out.r_col + (1.0 - out.beta) * out.r_eng + b_d + b_s;
    } else if (policy.kind == BetaPolicy::Kind::Fixed) {
        out.beta = policy.fixed_value;
        out.r_hat = out.beta * out.r_col + (1.0 - out.beta) * out.r_eng + b_d + b_s;
    } else {
        const FusedPrediction fp = fuse_predict(out.r_col, out.r_eng, b_d, b_s);
        out.beta = fp.beta;
        out.r_hat = fp.r_hat;
    }
    if (!std::isfinite(out.r_hat)) throw std::runtime_error("forward_pair: non-finite score");
    return out;
}

void Model::backward_pair(const PairForward& fwd, double d_r_hat) {
    backward_pair(fwd, d_r_hat, params_);
}

void Model::backward_pair(const PairForward& fwd, double d_r_hat,
                          ParamStore& target) const {
    target.grad("bias_dev")(fwd.device_index, 0) += d_r_hat;
    target.grad("bias_srv")(fwd.service_index, 0) += d_r_hat;

    const double d_col = d_r_hat * fwd.beta;
    const double d_eng = d_r_hat * (1.0 - fwd.beta);

    Vector d_f_col(fwd.review.f_collection.size(), 0.0);
    FmGrads gc{&target.grad("fm_col_b0"), &target.grad("fm_col_a"),
               &target.grad("fm_col_v")};
    fm_backward(fwd.review.f_collection, fm_collection(), d_col, gc, d_f_col);

    Vector d_f_eng(fwd.f_engagement.size(), 0.0);
    FmGrads ge{&target.grad("fm_eng_b0"), &target.grad("fm_eng_a"),
               &target.grad("fm_eng_v")};
    fm_backward(fwd.f_engagement, fm_engagement(), d_eng, ge, d_f_eng);

    ReviewNetGrads rg{&target.grad("embed"),    &target.grad("conv_dev"),
                      &target.grad("conv_srv"), &target.grad("select_A"),
                      &target.grad("abs_dev"),  &target.grad("abs_srv"),
                      &target.grad("mlp_w"),    &target.grad("mlp_b")};
    review_backward(fwd.review, review_params(), d_f_col, rg);
    engagement_backward(fwd.device_index, fwd.service_index, fwd.latent.v_dev,
                        fwd.latent.v_srv, d_f_eng, target.grad("latent_dev"),
                        target.grad("latent_srv"));
}

} // namespace devrec
