#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "devrec/matrix.hpp"

namespace devrec {

struct ReviewRecord {
    std::string device_id;  // reviewerID
    std::string service_id; // asin
    double rating = 0.0;    // overall, in [1,5]
    std::string review_text;
    std::int64_t timestamp = 0; // unixReviewTime
};

struct ParseResult {
    std::vector<ReviewRecord> records;
    std::size_t skipped = 0;
};

// Reserved ids: 0 = padding, 1 = out-of-vocabulary.
class Vocabulary {
  public:
    static constexpr int kPadId = 0;
    static constexpr int kOovId = 1;

    Vocabulary();
    int id_of(const std::string& word) const; // kOovId if unknown
    const std::string& word_of(int id) const;
    std::size_t size() const { return words_.size(); }
    void add(const std::string& word); // appends with the next id
    const std::vector<std::string>& words() const { return words_; }

  private:
    std::map<std::string, int> ids_;
    std::vector<std::string> words_;
};

struct ReviewSegment {
    std::string device_id;
    std::string service_id;
    std::size_t begin = 0; // [begin, end) into token_ids
    std::size_t end = 0;
};

struct ReviewCollection {
    std::string owner_id;
    std::vector<int> token_ids;
    std::vector<ReviewSegment> segments; // source reviews in concatenation order

    // tokens with the segment for (device,service) removed, for leakage-free
    // scoring of that pair
    std::vector<int> tokens_excluding(const std::string& device_id,
                                      const std::string& service_id) const;
};

using CollectionMap = std::map<std::string, ReviewCollection>;

struct DatasetSplit {
    std::vector<ReviewRecord> train;
    std::vector<ReviewRecord> validation;
    std::vector<ReviewRecord> test;
    std::uint64_t seed = 0;
    double ratios[3] = {0.8, 0.1, 0.1};
};

struct StatsReport {
    std::size_t users = 0;
    std::size_t items = 0;
    std::size_t ratings = 0;
    double density = 0.0;
};

// Line-delimited JSON in the Amazon review format (reviewerID, asin, overall,
// reviewText, unixReviewTime). Malformed lines are skipped and counted.
// Throws std::runtime_error if more than half the non-empty lines are bad.
ParseResult parse_reviews(std::istream& in);
ParseResult parse_reviews_file(const std::string& path);

// pad + oov + the (max_size-2) most frequent lowercased tokens, ties
// lexicographic
Vocabulary build_vocab(const std::vector<ReviewRecord>& records, std::size_t max_size);

// lowercase, split on runs of non-alphanumeric characters
std::vector<std::string> split_words(const std::string& text);
std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab);

struct PairKey {
    std::string device_id;
    std::string service_id;
    auto operator<=>(const PairKey&) const = default;
};

// Per-owner concatenation in ascending timestamp order (ties by counterpart
// id), tokenized and truncated from the tail to t_max. Reviews whose pair is
// in `exclude` contribute nothing to either side.
std::pair<CollectionMap, CollectionMap>
build_collections(const std::vector<ReviewRecord>& records, const Vocabulary& vocab,
                  std::size_t t_max, const std::vector<PairKey>& exclude);

// seeded uniform shuffle then contiguous cut; deterministic per seed
DatasetSplit split_dataset(const std::vector<ReviewRecord>& records,
                           const double ratios[3], std::uint64_t seed);

StatsReport dataset_stats(const std::vector<ReviewRecord>& records);

} // namespace devrec
