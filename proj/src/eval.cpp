#include "devrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace devrec {

double mae(std::span<const double> preds, std::span<const double> truths) {
    if (preds.size() != truths.size() || preds.empty())
        throw std::invalid_argument("mae: bad input lengths");
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) acc += std::abs(preds[i] - truths[i]);
    return acc / static_cast<double>(preds.size());
}

double rmse(std::span<const double> preds, std::span<const double> truths) {
    if (preds.size() != truths.size() || preds.empty())
        throw std::invalid_argument("rmse: bad input lengths");
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double r = preds[i] - truths[i];
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(preds.size()));
}

namespace {
std::size_t hits(const std::set<std::string>& recommended,
                 const std::set<std::string>& relevant) {
    std::size_t n = 0;
    for (const std::string& s : recommended)
        if (relevant.contains(s)) ++n;
    return n;
}
} // namespace

double precision_at_k(const std::set<std::string>& recommended,
                      const std::set<std::string>& relevant, std::size_t k) {
    if (k == 0) throw std::invalid_argument("precision_at_k: k must be >= 1");
    return static_cast<double>(hits(recommended, relevant)) / static_cast<double>(k);
}

double recall_at_k(const std::set<std::string>& recommended,
                   const std::set<std::string>& relevant) {
    if (relevant.empty()) throw std::invalid_argument("recall_at_k: empty relevant set");
    return static_cast<double>(hits(recommended, relevant)) /
           static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const double> ranked_rels, std::vector<double> ideal_pool,
                 std::size_t k) {
    if (k == 0) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranked_rels.size()); ++i)
        dcg += ranked_rels[i] / std::log2(static_cast<double>(i) + 2.0);
    std::sort(ideal_pool.begin(), ideal_pool.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal_pool.size()); ++i)
        idcg += ideal_pool[i] / std::log2(static_cast<double>(i) + 2.0);
    if (idcg <= 0.0) return 0.0;
    return dcg / idcg;
}

namespace {
std::vector<int> tokens_of(const CollectionMap& cols, const std::string& owner,
                           const std::string& device_id, const std::string& service_id) {
    auto it = cols.find(owner);
    if (it == cols.end()) return {};
    return it->second.tokens_excluding(device_id, service_id);
}
} // namespace

RankedList rank_candidates(const Model& model, const CollectionMap& dev_cols,
                           const CollectionMap& srv_cols, const std::string& device_id,
                           const std::vector<std::string>& candidates, std::size_t k,
                           const BetaPolicy& policy) {
    RankedList out;
    out.device_id = device_id;
    out.k = k;
    if (candidates.empty()) return out;
    out.entries.resize(candidates.size());
    const std::size_t d_idx = model.device_index(device_id);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const std::string& sid = candidates[i];
        const std::vector<int> toks_dev = tokens_of(dev_cols, device_id, device_id, sid);
        const std::vector<int> toks_srv = tokens_of(srv_cols, sid, device_id, sid);
        PairForward fwd = model.forward_pair(toks_dev, toks_srv, d_idx,
                                             model.service_index(sid), policy);
        out.entries[i] = {sid, clamp_output(fwd.r_hat)};
    }
    std::sort(out.entries.begin(), out.entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (out.entries.size() > k) out.entries.resize(k);
    return out;
}

std::string MetricsReport::to_text() const {
    std::ostringstream os;
    os << "label=" << label << " mae=" << mae << " rmse=" << rmse
       << " recall@" << k << "=" << recall_at_k << " precision@" << k << "="
       << precision_at_k << " ndcg@" << k << "=" << ndcg_at_k
       << " n_evaluated=" << n_evaluated << " n_ranked_devices=" << n_ranked_devices
       << " n_skipped_no_relevant=" << n_skipped_no_relevant;
    return os.str();
}

std::string MetricsReport::csv_header() {
    return "label,mae,rmse,recall_at_k,precision_at_k,ndcg_at_k,k,n_evaluated,"
           "n_ranked_devices,n_skipped_no_relevant";
}

std::string MetricsReport::to_csv_row() const {
    std::ostringstream os;
    os << label << ',' << mae << ',' << rmse << ',' << recall_at_k << ','
       << precision_at_k << ',' << ndcg_at_k << ',' << k << ',' << n_evaluated << ','
       << n_ranked_devices << ',' << n_skipped_no_relevant;
    return os.str();
}

MetricsReport evaluate_model(const Model& model, const DatasetSplit& split,
                             const CollectionMap& dev_cols, const CollectionMap& srv_cols,
                             const BetaPolicy& policy, const EvalOptions& opts) {
    MetricsReport rep;
    rep.k = opts.k;
    if (!split.test.empty()) {
        std::vector<double> preds, truths;
        preds.reserve(split.test.size());
        for (const ReviewRecord& r : split.test) {
            const std::vector<int> toks_dev =
                tokens_of(dev_cols, r.device_id, r.device_id, r.service_id);
            const std::vector<int> toks_srv =
                tokens_of(srv_cols, r.service_id, r.device_id, r.service_id);
            PairForward fwd =
                model.forward_pair(toks_dev, toks_srv, model.device_index(r.device_id),
                                   model.service_index(r.service_id), policy);
            preds.push_back(clamp_output(fwd.r_hat));
            truths.push_back(r.rating);
        }
        rep.mae = mae(preds, truths);
        rep.rmse = rmse(preds, truths);
        rep.n_evaluated = preds.size();
    }
    if (!opts.ranking || split.test.empty()) return rep;

    // candidate catalog: every known service minus the device's train history
    std::vector<std::string> catalog;
    for (const auto& [id, idx] : model.service_map()) catalog.push_back(id);
    std::map<std::string, std::set<std::string>> train_seen;
    for (const ReviewRecord& r : split.train) train_seen[r.device_id].insert(r.service_id);
    std::map<std::string, std::map<std::string, double>> test_ratings;
    for (const ReviewRecord& r : split.test)
        test_ratings[r.device_id][r.service_id] = r.rating;

    double recall_sum = 0.0, precision_sum = 0.0, ndcg_sum = 0.0;
    for (const auto& [device_id, ratings] : test_ratings) {
        std::set<std::string> relevant;
        for (const auto& [sid, rating] : ratings)
            if (rating >= opts.relevance_threshold) relevant.insert(sid);
        if (relevant.empty()) {
            ++rep.n_skipped_no_relevant;
            continue;
        }
        std::vector<std::string> candidates;
        const auto seen = train_seen.find(device_id);
        for (const std::string& sid : catalog)
            if (seen == train_seen.end() || !seen->second.contains(sid))
                candidates.push_back(sid);
        const RankedList ranked =
            rank_candidates(model, dev_cols, srv_cols, device_id, candidates, opts.k, policy);
        std::set<std::string> recommended;
        std::vector<double> rels;
        for (const auto& [sid, score] : ranked.entries) {
            recommended.insert(sid);
            const auto it = ratings.find(sid);
            rels.push_back(it == ratings.end() ? 0.0 : it->second);
        }
        std::vector<double> pool;
        for (const auto& [sid, rating] : ratings) pool.push_back(rating);
        recall_sum += recall_at_k(recommended, relevant);
        precision_sum += precision_at_k(recommended, relevant, opts.k);
        ndcg_sum += ndcg_at_k(rels, pool, opts.k);
        ++rep.n_ranked_devices;
    }
    if (rep.n_ranked_devices > 0) {
        const auto n = static_cast<double>(rep.n_ranked_devices);
        rep.recall_at_k = recall_sum / n;
        rep.precision_at_k = precision_sum / n;
        rep.ndcg_at_k = ndcg_sum / n;
    }
    return rep;
}

MFModel::MFModel(const MFConfig& cfg, const std::vector<ReviewRecord>& train) : cfg_(cfg) {
    for (const ReviewRecord& r : train) {
        dev_index_.emplace(r.device_id, 0);
        srv_index_.emplace(r.service_id, 0);
    }
    std::size_t next = 0;
    for (auto& [id, idx] : dev_index_) idx = next++;
    next = 0;
    for (auto& [id, idx] : srv_index_) idx = next++;
    b_dev_.assign(dev_index_.size(), 0.0);
    b_srv_.assign(srv_index_.size(), 0.0);
    p_ = Matrix(dev_index_.size(), cfg.rank);
    q_ = Matrix(srv_index_.size(), cfg.rank);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for (double& v : p_.data) v = dist(rng);
    for (double& v : q_.data) v = dist(rng);
    double sum = 0.0;
    for (const ReviewRecord& r : train) sum += r.rating;
    mu_ = train.empty() ? 0.0 : sum / static_cast<double>(train.size());
}

void MFModel::fit(const std::vector<ReviewRecord>& train) {
    std::mt19937_64 rng(cfg_.seed ^ 0xa5a5a5a5ull);
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t rank = cfg_.rank;
    for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng() % i]);
        for (std::size_t idx : order) {
            const ReviewRecord& r = train[idx];
            const std::size_t u = dev_index_.at(r.device_id);
            const std::size_t s = srv_index_.at(r.service_id);
            double pred = mu_ + b_dev_[u] + b_srv_[s];
            for (std::size_t l = 0; l < rank; ++l) pred += p_(u, l) * q_(s, l);
            const double err = pred - r.rating;
            b_dev_[u] -= cfg_.learning_rate * (err + cfg_.lambda * b_dev_[u]);
            b_srv_[s] -= cfg_.learning_rate * (err + cfg_.lambda * b_srv_[s]);
            for (std::size_t l = 0; l < rank; ++l) {
                const double pu = p_(u, l), qs = q_(s, l);
                p_(u, l) -= cfg_.learning_rate * (err * qs + cfg_.lambda * pu);
                q_(s, l) -= cfg_.learning_rate * (err * pu + cfg_.lambda * qs);
            }
        }
    }
}

double MFModel::predict(const std::string& device_id, const std::string& service_id) const {
    const auto u = dev_index_.find(device_id);
    const auto s = srv_index_.find(service_id);
    double pred = mu_;
    if (u != dev_index_.end()) pred += b_dev_[u->second];
    if (s != srv_index_.end()) pred += b_srv_[s->second];
    if (u != dev_index_.end() && s != srv_index_.end())
        for (std::size_t l = 0; l < cfg_.rank; ++l)
            pred += p_(u->second, l) * q_(s->second, l);
    return pred;
}

MFModel mf_train(const DatasetSplit& split, const MFConfig& cfg) {
    MFModel model(cfg, split.train);
    model.fit(split.train);
    return model;
}

std::vector<MetricsReport> ablation_run(const std::vector<TrainMode>& modes,
                                        const ModelConfig& model_cfg,
                                        const TrainConfig& train_cfg,
                                        const Vocabulary& vocab, const DatasetSplit& split,
                                        const CollectionMap& dev_cols,
                                        const CollectionMap& srv_cols,
                                        const EvalOptions& opts, std::ostream* log) {
    std::vector<MetricsReport> reports;
    for (TrainMode mode : modes) {
        TrainConfig cfg = train_cfg;
        cfg.mode = mode;
        TrainResult res = train(model_cfg, cfg, vocab, split, dev_cols, srv_cols, log);
        MetricsReport rep = evaluate_model(*res.model, split, dev_cols, srv_cols,
                                           beta_policy_for(mode), opts);
        rep.label = train_mode_name(mode);
        reports.push_back(std::move(rep));
    }
    return reports;
}

std::vector<ReviewRecord> make_synthetic(std::size_t n_devices, std::size_t n_services,
                                         std::size_t rank, double noise,
                                         std::uint64_t seed, double density) {
    if (rank > std::min(n_devices, n_services))
        throw std::invalid_argument("make_synthetic: rank too large");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> latent(0.0, 0.9);
    std::normal_distribution<double> eps(0.0, noise);
    Matrix u(n_devices, rank), w(n_services, rank);
    for (double& v : u.data) v = latent(rng);
    for (double& v : w.data) v = latent(rng);

    // dominant latent aspect per service, for the review templates
    std::vector<std::size_t> top_aspect(n_services, 0);
    for (std::size_t s = 0; s < n_services; ++s) {
        double best = -1.0;
        for (std::size_t l = 0; l < rank; ++l)
            if (std::abs(w(s, l)) > best) {
                best = std::abs(w(s, l));
                top_aspect[s] = l;
            }
    }

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<ReviewRecord> records;
    std::int64_t t = 1'000'000;
    for (std::size_t d = 0; d < n_devices; ++d) {
        for (std::size_t s = 0; s < n_services; ++s) {
            if (coin(rng) > density) continue;
            double raw = 3.0 + eps(rng);
            for (std::size_t l = 0; l < rank; ++l) raw += u(d, l) * w(s, l);
            double rating = std::clamp(std::round(raw), 1.0, 5.0);
            const std::size_t a = top_aspect[s];
            const double contrib = u(d, a) * w(s, a);
            std::ostringstream text;
            text << (rating >= 4.0 ? "excellent service" : rating <= 2.0 ? "poor service"
                                                                         : "average service");
            text << " aspect" << a << (contrib >= 0.0 ? " strong" : " weak");
            ReviewRecord rec;
            rec.device_id = "dev" + std::to_string(d);
            rec.service_id = "srv" + std::to_string(s);
            rec.rating = rating;
            rec.review_text = text.str();
            rec.timestamp = t++;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

} // namespace devrec
