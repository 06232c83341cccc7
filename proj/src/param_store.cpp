#include "devrec/param_store.hpp"

#include <stdexcept>

namespace devrec {

ParamStore::Entry& ParamStore::insert(const std::string& name, std::size_t rows,
                                      std::size_t cols, bool regularized) {
    if (has(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
    entries_.push_back(Entry{name, Matrix(rows, cols), Matrix(rows, cols), regularized});
    return entries_.back();
}

Matrix& ParamStore::add_weight(const std::string& name, std::size_t rows,
                               std::size_t cols) {
    Entry& e = insert(name, rows, cols, true);
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for (double& v : e.value.data) v = dist(rng_);
    return e.value;
}

Matrix& ParamStore::add_bias(const std::string& name, std::size_t rows,
                             std::size_t cols) {
    return insert(name, rows, cols, false).value;
}

Matrix& ParamStore::add_zero(const std::string& name, std::size_t rows,
                             std::size_t cols, bool regularized) {
    return insert(name, rows, cols, regularized).value;
}

std::size_t ParamStore::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return i;
    throw std::out_of_range("ParamStore: unknown name " + name);
}

bool ParamStore::has(const std::string& name) const {
    for (const Entry& e : entries_)
        if (e.name == name) return true;
    return false;
}

Matrix& ParamStore::value(const std::string& name) { return entries_[index_of(name)].value; }
const Matrix& ParamStore::value(const std::string& name) const {
    return entries_[index_of(name)].value;
}
Matrix& ParamStore::grad(const std::string& name) { return entries_[index_of(name)].grad; }
const Matrix& ParamStore::grad(const std::string& name) const {
    return entries_[index_of(name)].grad;
}

void ParamStore::zero_grads() {
    for (Entry& e : entries_) e.grad.fill(0.0);
}

double ParamStore::squared_norm_regularized() const {
    double acc = 0.0;
    for (const Entry& e : entries_) {
        if (!e.regularized) continue;
        for (double v : e.value.data) acc += v * v;
    }
    return acc;
}

} // namespace devrec
