#pragma once

#include <span>

#include "devrec/matrix.hpp"
#include "devrec/param_store.hpp"

namespace devrec {

// Factorization Machine head: global bias, linear weights, and factorized
// pairwise interactions w_{jk} = v_j . v_k with zero diagonal.
struct FmParams {
    const Matrix* b0; // 1x1
    const Matrix* a;  // 1 x dim
    const Matrix* V;  // dim x rank
};

struct FmGrads {
    Matrix* b0;
    Matrix* a;
    Matrix* V;
};

// b0 + a.F + sum_{j<k} (v_j.v_k) F_j F_k via the O(dim*rank) identity
double fm_score(std::span<const double> f, const FmParams& p);

// Accumulates d(score)/d(params) scaled by d_score into grads and adds the
// feature gradient into d_f.
void fm_backward(std::span<const double> f, const FmParams& p, double d_score,
                 const FmGrads& g, std::span<double> d_f);

struct FusedPrediction {
    double r_hat = 0.0;
    double beta = 0.5;
};

// beta = r_col / (r_col + r_eng) when the denominator is safe and the ratio
// lands in [0,1], else 0.5; r_hat = beta*r_col + (1-beta)*r_eng + b_d + b_s.
FusedPrediction fuse_predict(double r_col, double r_eng, double b_d, double b_s);

struct LossConfig {
    double lambda = 1e-5;
    double rating_min = 1.0;
    double rating_max = 5.0;
};

// sum of squared residuals + lambda * ||theta||^2 over regularized tensors
double batch_loss(std::span<const std::pair<double, double>> pairs,
                  const ParamStore& params, const LossConfig& cfg);

double clamp_output(double r_hat, const LossConfig& cfg = {});

} // namespace devrec
