#include "devrec/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "devrec/serialize.hpp"

namespace devrec {

namespace {
constexpr char kMagic[8] = {'D', 'S', 'R', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

const std::vector<int>& tokens_for(const CollectionMap& cols, const std::string& owner,
                                   const std::string& device_id,
                                   const std::string& service_id,
                                   std::vector<int>& scratch) {
    static const std::vector<int> kEmpty;
    auto it = cols.find(owner);
    if (it == cols.end()) return kEmpty;
    scratch = it->second.tokens_excluding(device_id, service_id);
    return scratch;
}
} // namespace

const char* train_mode_name(TrainMode m) {
    switch (m) {
        case TrainMode::FusedDynamic: return "fused-dynamic";
        case TrainMode::FusedStatic: return "fused-static";
        case TrainMode::ReviewOnly: return "review-only";
        case TrainMode::EngagementOnly: return "engagement-only";
        case TrainMode::LinearFused: return "linear-fused";
    }
    return "?";
}

TrainMode train_mode_from_name(const std::string& name) {
    for (TrainMode m : {TrainMode::FusedDynamic, TrainMode::FusedStatic,
                        TrainMode::ReviewOnly, TrainMode::EngagementOnly,
                        TrainMode::LinearFused})
        if (name == train_mode_name(m)) return m;
    throw std::invalid_argument("unknown training mode: " + name);
}

BetaPolicy beta_policy_for(TrainMode m) {
    switch (m) {
        case TrainMode::ReviewOnly: return BetaPolicy::fixed(1.0);
        case TrainMode::EngagementOnly: return BetaPolicy::fixed(0.0);
        case TrainMode::FusedStatic: return BetaPolicy::fixed(0.5);
        default: return BetaPolicy::dynamic();
    }
}

std::vector<TrainExample> resolve_examples(const Model& model,
                                           const std::vector<ReviewRecord>& records,
                                           const CollectionMap& dev_cols,
                                           const CollectionMap& srv_cols) {
    std::vector<TrainExample> out;
    out.reserve(records.size());
    for (const ReviewRecord& r : records) {
        TrainExample ex;
        std::vector<int> scratch;
        ex.tokens_dev = tokens_for(dev_cols, r.device_id, r.device_id, r.service_id, scratch);
        ex.tokens_srv = tokens_for(srv_cols, r.service_id, r.device_id, r.service_id, scratch);
        ex.device_index = model.device_index(r.device_id);
        ex.service_index = model.service_index(r.service_id);
        ex.rating = r.rating;
        out.push_back(std::move(ex));
    }
    return out;
}

double batch_gradient(Model& model, const std::vector<TrainExample>& examples,
                      const std::vector<std::size_t>& batch, const BetaPolicy& policy,
                      bool parallel) {
    if (batch.empty()) throw std::invalid_argument("batch_gradient: empty batch");
    const auto b = static_cast<double>(batch.size());
    model.params().zero_grads();
    std::vector<double> sq_residuals(batch.size(), 0.0);

    if (!parallel) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const TrainExample& ex = examples[batch[i]];
            PairForward fwd = model.forward_pair(ex.tokens_dev, ex.tokens_srv,
                                                 ex.device_index, ex.service_index, policy);
            const double res = fwd.r_hat - ex.rating;
            sq_residuals[i] = res * res;
            model.backward_pair(fwd, 2.0 * res);
        }
    } else {
        int n_threads = 1;
#ifdef _OPENMP
        n_threads = omp_get_max_threads();
#endif
        std::vector<ParamStore> locals;
        locals.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) {
            locals.push_back(model.params());
            locals.back().zero_grads();
        }
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < batch.size(); ++i) {
            int tid = 0;
#ifdef _OPENMP
            tid = omp_get_thread_num();
#endif
            const TrainExample& ex = examples[batch[i]];
            PairForward fwd = model.forward_pair(ex.tokens_dev, ex.tokens_srv,
                                                 ex.device_index, ex.service_index, policy);
            const double res = fwd.r_hat - ex.rating;
            sq_residuals[i] = res * res;
            model.backward_pair(fwd, 2.0 * res, locals[static_cast<std::size_t>(tid)]);
        }
        // reduce in thread order for run-to-run determinism
        auto& entries = model.params().entries();
        for (const ParamStore& local : locals)
            for (std::size_t t = 0; t < entries.size(); ++t)
                for (std::size_t k = 0; k < entries[t].grad.data.size(); ++k)
                    entries[t].grad.data[k] += local.entries()[t].grad.data[k];
    }

    double loss = 0.0;
    for (double s : sq_residuals) loss += s;
    loss /= b;

    const double lambda = model.config().lambda;
    for (auto& entry : model.params().entries()) {
        for (double& g : entry.grad.data) g /= b;
        if (entry.regularized && lambda > 0.0)
            for (std::size_t k = 0; k < entry.grad.data.size(); ++k)
                entry.grad.data[k] += 2.0 * lambda * entry.value.data[k];
    }
    if (lambda > 0.0) loss += lambda * model.params().squared_norm_regularized();
    if (!std::isfinite(loss)) throw std::runtime_error("batch_gradient: non-finite loss");
    return loss;
}

Optimizer::Optimizer(const TrainConfig& cfg, const ParamStore& params) : cfg_(cfg) {
    if (cfg.optimizer != "adam" && cfg.optimizer != "sgd")
        throw std::invalid_argument("Optimizer: unknown optimizer " + cfg.optimizer);
    for (const auto& e : params.entries()) {
        m_.emplace_back(e.value.rows, e.value.cols);
        v_.emplace_back(e.value.rows, e.value.cols);
    }
}

void Optimizer::step(ParamStore& params) {
    auto& entries = params.entries();
    if (entries.size() != m_.size()) throw std::invalid_argument("Optimizer: store mismatch");
    if (cfg_.optimizer == "sgd") {
        for (auto& e : entries)
            for (std::size_t k = 0; k < e.value.data.size(); ++k)
                e.value.data[k] -= cfg_.learning_rate * e.grad.data[k];
        return;
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
    for (std::size_t t = 0; t < entries.size(); ++t) {
        auto& e = entries[t];
        for (std::size_t k = 0; k < e.value.data.size(); ++k) {
            const double g = e.grad.data[k];
            double& m = m_[t].data[k];
            double& v = v_[t].data[k];
            m = cfg_.adam_beta1 * m + (1.0 - cfg_.adam_beta1) * g;
            v = cfg_.adam_beta2 * v + (1.0 - cfg_.adam_beta2) * g * g;
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            e.value.data[k] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
        }
    }
}

namespace {

void eval_split(const Model& model, const std::vector<TrainExample>& examples,
                const BetaPolicy& policy, double& mae, double& rmse) {
    if (examples.empty()) {
        mae = rmse = 0.0;
        return;
    }
    double abs_sum = 0.0, sq_sum = 0.0;
    for (const TrainExample& ex : examples) {
        PairForward fwd = model.forward_pair(ex.tokens_dev, ex.tokens_srv,
                                             ex.device_index, ex.service_index, policy);
        const double res = clamp_output(fwd.r_hat) - ex.rating;
        abs_sum += std::abs(res);
        sq_sum += res * res;
    }
    const auto n = static_cast<double>(examples.size());
    mae = abs_sum / n;
    rmse = std::sqrt(sq_sum / n);
}

} // namespace

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const Vocabulary& vocab, const DatasetSplit& split,
                  const CollectionMap& dev_cols, const CollectionMap& srv_cols,
                  std::ostream* log) {
    if (split.train.empty()) throw std::invalid_argument("train: empty train split");
    std::vector<std::string> dev_ids, srv_ids;
    for (const ReviewRecord& r : split.train) {
        dev_ids.push_back(r.device_id);
        srv_ids.push_back(r.service_id);
    }
    TrainResult result;
    result.model = std::make_unique<Model>(model_cfg, vocab.size(), dev_ids, srv_ids,
                                           cfg.seed);
    Model& model = *result.model;
    if (cfg.mode == TrainMode::LinearFused) {
        model.params().value("fm_col_v").fill(0.0);
        model.params().value("fm_eng_v").fill(0.0);
    }
    const BetaPolicy policy = beta_policy_for(cfg.mode);

    const std::vector<TrainExample> train_ex =
        resolve_examples(model, split.train, dev_cols, srv_cols);
    const std::vector<TrainExample> val_ex =
        resolve_examples(model, split.validation, dev_cols, srv_cols);

    Optimizer opt(cfg, model.params());
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::size_t> order(train_ex.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_mae = std::numeric_limits<double>::infinity();
    std::vector<Matrix> best_values;
    std::size_t bad_epochs = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng() % i]);
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
            double loss;
            try {
                loss = batch_gradient(model, train_ex, batch, policy, cfg.parallel);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("train: epoch " + std::to_string(epoch) +
                                         " batch " + std::to_string(n_batches) + ": " +
                                         e.what());
            }
            if (cfg.mode == TrainMode::LinearFused) {
                model.params().grad("fm_col_v").fill(0.0);
                model.params().grad("fm_eng_v").fill(0.0);
            }
            opt.step(model.params());
            loss_sum += loss;
            ++n_batches;
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(n_batches);
        eval_split(model, val_ex, policy, stats.val_mae, stats.val_rmse);
        stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
        result.history.push_back(stats);
        if (log)
            *log << "epoch=" << epoch << " loss=" << stats.train_loss
                 << " val_mae=" << stats.val_mae << " val_rmse=" << stats.val_rmse
                 << " seconds=" << stats.seconds << "\n";

        const bool has_val = !val_ex.empty();
        if (!has_val) continue;
        if (stats.val_mae < best_mae) {
            best_mae = stats.val_mae;
            best_values.clear();
            for (const auto& e : model.params().entries()) best_values.push_back(e.value);
            bad_epochs = 0;
        } else if (++bad_epochs >= cfg.patience) {
            break;
        }
    }
    if (!best_values.empty())
        for (std::size_t t = 0; t < best_values.size(); ++t)
            model.params().entries()[t].value = best_values[t];
    return result;
}

void save_checkpoint(const Model& model, TrainMode mode, const Vocabulary& vocab,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    io::write_u32(out, kVersion);
    const ModelConfig& c = model.config();
    for (std::size_t v : {c.embed_dim, c.filters, c.window, c.abs_window, c.latent_dim,
                          c.fm_rank, c.t_max, c.vocab_cap})
        io::write_u64(out, v);
    io::write_f64(out, c.lambda);
    io::write_str(out, train_mode_name(mode));
    io::write_u64(out, model.params().seed());
    io::write_u64(out, vocab.size());
    for (const std::string& w : vocab.words()) io::write_str(out, w);
    io::write_u64(out, model.device_map().size());
    for (const auto& [id, idx] : model.device_map()) io::write_str(out, id);
    io::write_u64(out, model.service_map().size());
    for (const auto& [id, idx] : model.service_map()) io::write_str(out, id);
    io::write_u64(out, model.params().entries().size());
    for (const auto& e : model.params().entries()) {
        io::write_str(out, e.name);
        io::write_u64(out, e.value.rows);
        io::write_u64(out, e.value.cols);
        for (double v : e.value.data) io::write_f64(out, v);
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failure on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    const std::uint32_t version = io::read_u32(in);
    if (version != kVersion)
        throw std::runtime_error("load_checkpoint: unsupported version " +
                                 std::to_string(version));
    ModelConfig c;
    c.embed_dim = io::read_u64(in);
    c.filters = io::read_u64(in);
    c.window = io::read_u64(in);
    c.abs_window = io::read_u64(in);
    c.latent_dim = io::read_u64(in);
    c.fm_rank = io::read_u64(in);
    c.t_max = io::read_u64(in);
    c.vocab_cap = io::read_u64(in);
    c.lambda = io::read_f64(in);
    Checkpoint ck;
    ck.mode = train_mode_from_name(io::read_str(in));
    const std::uint64_t seed = io::read_u64(in);
    const std::uint64_t vocab_size = io::read_u64(in);
    Vocabulary vocab;
    for (std::uint64_t i = 0; i < vocab_size; ++i) {
        std::string w = io::read_str(in);
        if (i >= 2) vocab.add(w);
    }
    std::vector<std::string> dev_ids(io::read_u64(in));
    for (std::string& s : dev_ids) s = io::read_str(in);
    std::vector<std::string> srv_ids(io::read_u64(in));
    for (std::string& s : srv_ids) s = io::read_str(in);

    ck.model = std::make_unique<Model>(c, vocab.size(), dev_ids, srv_ids, seed);
    ck.vocab = vocab;
    const std::uint64_t n_tensors = io::read_u64(in);
    if (n_tensors != ck.model->params().entries().size())
        throw std::runtime_error("load_checkpoint: tensor count mismatch");
    for (std::uint64_t t = 0; t < n_tensors; ++t) {
        const std::string name = io::read_str(in);
        const std::uint64_t rows = io::read_u64(in);
        const std::uint64_t cols = io::read_u64(in);
        if (!ck.model->params().has(name))
            throw std::runtime_error("load_checkpoint: unexpected tensor " + name);
        Matrix& m = ck.model->params().value(name);
        if (m.rows != rows || m.cols != cols)
            throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
        for (double& v : m.data) v = io::read_f64(in);
    }
    return ck;
}

} // namespace devrec
