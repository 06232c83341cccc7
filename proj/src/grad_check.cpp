#include "devrec/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace devrec {

GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<void()>& compute_grads,
                           ParamStore& params, double eps,
                           std::size_t min_coords, std::uint64_t sample_seed) {
    if (eps < 1e-6 || eps > 1e-3)
        throw std::invalid_argument("grad_check: eps outside [1e-6, 1e-3]");
    compute_grads();
    // snapshot analytic gradients before perturbing anything
    std::vector<Matrix> analytic;
    analytic.reserve(params.entries().size());
    for (const auto& e : params.entries()) analytic.push_back(e.grad);

    std::mt19937_64 rng(sample_seed);
    GradCheckReport report;
    for (std::size_t t = 0; t < params.entries().size(); ++t) {
        auto& entry = params.entries()[t];
        const std::size_t total = entry.value.size();
        std::vector<std::size_t> coords;
        if (total <= min_coords) {
            coords.resize(total);
            for (std::size_t i = 0; i < total; ++i) coords[i] = i;
        } else {
            std::vector<std::size_t> all(total);
            for (std::size_t i = 0; i < total; ++i) all[i] = i;
            for (std::size_t i = 0; i < min_coords; ++i) {
                const std::size_t j = i + rng() % (total - i);
                std::swap(all[i], all[j]);
            }
            coords.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(min_coords));
        }
        GradCheckReport::TensorResult res;
        res.name = entry.name;
        res.coords_checked = coords.size();
        for (std::size_t idx : coords) {
            const double saved = entry.value.data[idx];
            entry.value.data[idx] = saved + eps;
            const double lp = loss();
            entry.value.data[idx] = saved - eps;
            const double lm = loss();
            entry.value.data[idx] = saved;
            if (!std::isfinite(lp) || !std::isfinite(lm))
                throw std::runtime_error("grad_check: non-finite loss at " + entry.name);
            const double numeric = (lp - lm) / (2.0 * eps);
            const double a = analytic[t].data[idx];
            const double rel = std::abs(a - numeric) /
                               std::max({1.0, std::abs(a), std::abs(numeric)});
            res.max_rel_error = std::max(res.max_rel_error, rel);
        }
        report.max_rel_error = std::max(report.max_rel_error, res.max_rel_error);
        report.tensors.push_back(std::move(res));
    }
    return report;
}

} // namespace devrec
