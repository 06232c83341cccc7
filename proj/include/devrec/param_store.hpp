#pragma once

#include <random>
#include <string>
#include <vector>

#include "devrec/matrix.hpp"

namespace devrec {

// Named learnable tensors plus matching gradient buffers. Insertion order is
// preserved so that iteration (and therefore serialization and reduction) is
// deterministic.
class ParamStore {
  public:
    struct Entry {
        std::string name;
        Matrix value;
        Matrix grad;
        bool regularized = true; // participates in the L2 term
    };

    explicit ParamStore(std::uint64_t seed = 0) : rng_(seed), seed_(seed) {}

    // uniform(-0.1, 0.1) init from the store's seeded RNG
    Matrix& add_weight(const std::string& name, std::size_t rows, std::size_t cols);
    // zero init, excluded from L2
    Matrix& add_bias(const std::string& name, std::size_t rows, std::size_t cols);
    Matrix& add_zero(const std::string& name, std::size_t rows, std::size_t cols,
                     bool regularized);

    bool has(const std::string& name) const;
    Matrix& value(const std::string& name);
    const Matrix& value(const std::string& name) const;
    Matrix& grad(const std::string& name);
    const Matrix& grad(const std::string& name) const;

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    void zero_grads();
    // sum of squared entries over regularized tensors
    double squared_norm_regularized() const;
    std::uint64_t seed() const { return seed_; }
    std::mt19937_64& rng() { return rng_; }

  private:
    Entry& insert(const std::string& name, std::size_t rows, std::size_t cols,
                  bool regularized);
    std::size_t index_of(const std::string& name) const;

    std::vector<Entry> entries_;
    std::mt19937_64 rng_;
    std::uint64_t seed_;
};

} // namespace devrec
