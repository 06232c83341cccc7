#pragma once

#include <functional>
#include <string>
#include <vector>

#include "devrec/param_store.hpp"

namespace devrec {

struct GradCheckReport {
    struct TensorResult {
        std::string name;
        double max_rel_error = 0.0;
        std::size_t coords_checked = 0;
    };
    std::vector<TensorResult> tensors;
    double max_rel_error = 0.0;
};

// Central differences (L(th+eps)-L(th-eps))/(2 eps) against the analytic
// gradient left in the store by compute_grads, on a seeded sample of at
// least min_coords coordinates per tensor (all coordinates when fewer).
// Relative error is |a-n| / max(1, |a|, |n|).
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<void()>& compute_grads,
                           ParamStore& params, double eps,
                           std::size_t min_coords = 32, std::uint64_t sample_seed = 1234);

} // namespace devrec
