#pragma once

#include <string>

#include "devrec/ingest.hpp"

namespace devrec {

// Output of the ingest step: vocabulary plus the seeded split, persisted so
// that train/evaluate/recommend all see the same data.
struct DataBundle {
    Vocabulary vocab;
    DatasetSplit split;
    std::uint64_t seed = 0;
};

void save_bundle(const DataBundle& bundle, const std::string& path);
DataBundle load_bundle(const std::string& path);

// Collections over the whole dataset with validation and test pairs excluded,
// so held-out reviews never leak into the text features.
std::pair<CollectionMap, CollectionMap> build_leakage_collections(const DataBundle& bundle,
                                                                  std::size_t t_max);

} // namespace devrec
