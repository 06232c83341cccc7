#include "devrec/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace devrec {

Vocabulary::Vocabulary() {
    add("<pad>");
    add("<oov>");
}

void Vocabulary::add(const std::string& word) {
    ids_.emplace(word, static_cast<int>(words_.size()));
    words_.push_back(word);
}

int Vocabulary::id_of(const std::string& word) const {
    auto it = ids_.find(word);
    return it == ids_.end() ? kOovId : it->second;
}

const std::string& Vocabulary::word_of(int id) const {
    return words_.at(static_cast<std::size_t>(id));
}

std::vector<int> ReviewCollection::tokens_excluding(const std::string& device_id,
                                                    const std::string& service_id) const {
    for (const ReviewSegment& seg : segments) {
        if (seg.device_id == device_id && seg.service_id == service_id) {
            std::vector<int> out;
            out.reserve(token_ids.size() - (seg.end - seg.begin));
            out.insert(out.end(), token_ids.begin(), token_ids.begin() + seg.begin);
            out.insert(out.end(), token_ids.begin() + seg.end, token_ids.end());
            return out;
        }
    }
    return token_ids;
}

namespace {

bool parse_line(const std::string& line, ReviewRecord& rec) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return false;
    if (!j.contains("reviewerID") || !j["reviewerID"].is_string()) return false;
    if (!j.contains("asin") || !j["asin"].is_string()) return false;
    if (!j.contains("overall") || !j["overall"].is_number()) return false;
    rec.device_id = j["reviewerID"].get<std::string>();
    rec.service_id = j["asin"].get<std::string>();
    rec.rating = j["overall"].get<double>();
    if (rec.device_id.empty() || rec.service_id.empty()) return false;
    if (rec.rating < 1.0 || rec.rating > 5.0) return false;
    rec.review_text.clear();
    if (j.contains("reviewText") && j["reviewText"].is_string())
        rec.review_text = j["reviewText"].get<std::string>();
    rec.timestamp = 0;
    if (j.contains("unixReviewTime") && j["unixReviewTime"].is_number_integer())
        rec.timestamp = j["unixReviewTime"].get<std::int64_t>();
    return true;
}

} // namespace

ParseResult parse_reviews(std::istream& in) {
    if (!in) throw std::runtime_error("parse_reviews: unreadable input stream");
    ParseResult res;
    std::string line;
    std::size_t seen = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++seen;
        ReviewRecord rec;
        if (parse_line(line, rec))
            res.records.push_back(std::move(rec));
        else
            ++res.skipped;
    }
    if (seen > 0 && res.skipped * 2 > seen)
        throw std::runtime_error("parse_reviews: more than half the lines are malformed (" +
                                 std::to_string(res.skipped) + "/" + std::to_string(seen) + ")");
    return res;
}

ParseResult parse_reviews_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_reviews: cannot open " + path);
    return parse_reviews(in);
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char ch : text) {
        if (std::isalnum(ch)) {
            cur.push_back(static_cast<char>(std::tolower(ch)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Vocabulary build_vocab(const std::vector<ReviewRecord>& records, std::size_t max_size) {
    if (max_size < 3) throw std::invalid_argument("build_vocab: max_size must be >= 3");
    std::unordered_map<std::string, std::size_t> freq;
    for (const ReviewRecord& r : records)
        for (const std::string& w : split_words(r.review_text)) ++freq[w];
    std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary v;
    const std::size_t keep = std::min(items.size(), max_size - 2);
    for (std::size_t i = 0; i < keep; ++i) v.add(items[i].first);
    return v;
}

std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab) {
    std::vector<int> ids;
    for (const std::string& w : split_words(text)) ids.push_back(vocab.id_of(w));
    return ids;
}

namespace {

// owner -> indices of its records, each sorted by (timestamp, counterpart id)
CollectionMap collect_side(const std::vector<ReviewRecord>& records,
                           const Vocabulary& vocab, std::size_t t_max,
                           const std::set<std::pair<std::string, std::string>>& excl,
                           bool device_side) {
    std::map<std::string, std::vector<std::size_t>> by_owner;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (excl.contains({records[i].device_id, records[i].service_id})) continue;
        const std::string& owner = device_side ? records[i].device_id : records[i].service_id;
        by_owner[owner].push_back(i);
    }
    CollectionMap out;
    for (auto& [owner, idxs] : by_owner) {
        std::sort(idxs.begin(), idxs.end(), [&](std::size_t a, std::size_t b) {
            const ReviewRecord& ra = records[a];
            const ReviewRecord& rb = records[b];
            if (ra.timestamp != rb.timestamp) return ra.timestamp < rb.timestamp;
            const std::string& ca = device_side ? ra.service_id : ra.device_id;
            const std::string& cb = device_side ? rb.service_id : rb.device_id;
            return ca < cb;
        });
        ReviewCollection col;
        col.owner_id = owner;
        for (std::size_t i : idxs) {
            if (col.token_ids.size() >= t_max) break;
            std::vector<int> toks = tokenize(records[i].review_text, vocab);
            ReviewSegment seg;
            seg.device_id = records[i].device_id;
            seg.service_id = records[i].service_id;
            seg.begin = col.token_ids.size();
            const std::size_t room = t_max - col.token_ids.size();
            const std::size_t take = std::min(room, toks.size());
            col.token_ids.insert(col.token_ids.end(), toks.begin(), toks.begin() + take);
            seg.end = col.token_ids.size();
            col.segments.push_back(std::move(seg));
        }
        out.emplace(owner, std::move(col));
    }
    return out;
}

} // namespace

std::pair<CollectionMap, CollectionMap>
build_collections(const std::vector<ReviewRecord>& records, const Vocabulary& vocab,
                  std::size_t t_max, const std::vector<PairKey>& exclude) {
    if (t_max < 1) throw std::invalid_argument("build_collections: t_max must be >= 1");
    std::set<std::pair<std::string, std::string>> excl;
    for (const PairKey& p : exclude) excl.insert({p.device_id, p.service_id});
    return {collect_side(records, vocab, t_max, excl, true),
            collect_side(records, vocab, t_max, excl, false)};
}

DatasetSplit split_dataset(const std::vector<ReviewRecord>& records,
                           const double ratios[3], std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0 || std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split_dataset: ratios must be positive and sum to 1");
    DatasetSplit split;
    split.seed = seed;
    for (int i = 0; i < 3; ++i) split.ratios[i] = ratios[i];
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // explicit Fisher-Yates so the partition is stable across standard
    // library implementations
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    const std::size_t n = records.size();
    if (n < 3) {
        for (std::size_t i : order) split.train.push_back(records[i]);
        return split;
    }
    const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
        const ReviewRecord& r = records[order[i]];
        if (i < n_train)
            split.train.push_back(r);
        else if (i < n_train + n_val)
            split.validation.push_back(r);
        else
            split.test.push_back(r);
    }
    return split;
}

StatsReport dataset_stats(const std::vector<ReviewRecord>& records) {
    std::set<std::string> users, items;
    for (const ReviewRecord& r : records) {
        users.insert(r.device_id);
        items.insert(r.service_id);
    }
    StatsReport s;
    s.users = users.size();
    s.items = items.size();
    s.ratings = records.size();
    if (!users.empty() && !items.empty())
        s.density = static_cast<double>(s.ratings) /
                    (static_cast<double>(s.users) * static_cast<double>(s.items));
    return s;
}

} // namespace devrec
