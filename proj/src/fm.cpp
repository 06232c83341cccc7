#include "devrec/fm.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace devrec {

double fm_score(std::span<const double> f, const FmParams& p) {
    const std::size_t dim = f.size();
    if (p.a->size() != dim || p.V->rows != dim)
        throw std::invalid_argument("fm_score: dimension mismatch");
    const std::size_t rank = p.V->cols;
    double score = p.b0->data[0];
    for (std::size_t j = 0; j < dim; ++j) score += p.a->data[j] * f[j];
    for (std::size_t l = 0; l < rank; ++l) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double vf = (*p.V)(j, l) * f[j];
            s += vf;
            s2 += vf * vf;
        }
        score += 0.5 * (s * s - s2);
    }
    return score;
}

void fm_backward(std::span<const double> f, const FmParams& p, double d_score,
                 const FmGrads& g, std::span<double> d_f) {
    const std::size_t dim = f.size();
    const std::size_t rank = p.V->cols;
    if (d_f.size() != dim) throw std::invalid_argument("fm_backward: dimension mismatch");
    g.b0->data[0] += d_score;
    for (std::size_t j = 0; j < dim; ++j) {
        g.a->data[j] += d_score * f[j];
        d_f[j] += d_score * p.a->data[j];
    }
    for (std::size_t l = 0; l < rank; ++l) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) s += (*p.V)(j, l) * f[j];
        for (std::size_t j = 0; j < dim; ++j) {
            const double v = (*p.V)(j, l);
            (*g.V)(j, l) += d_score * (s * f[j] - v * f[j] * f[j]);
            d_f[j] += d_score * (v * (s - v * f[j]));
        }
    }
}

FusedPrediction fuse_predict(double r_col, double r_eng, double b_d, double b_s) {
    if (!std::isfinite(r_col) || !std::isfinite(r_eng) || !std::isfinite(b_d) ||
        !std::isfinite(b_s))
        throw std::runtime_error("fuse_predict: non-finite input");
    FusedPrediction out;
    const double denom = r_col + r_eng;
    if (std::abs(denom) > 1e-8) {
        const double ratio = r_col / denom;
        if (ratio >= 0.0 && ratio <= 1.0) out.beta = ratio;
    }
    out.r_hat = out.beta * r_col + (1.0 - out.beta) * r_eng + b_d + b_s;
    return out;
}

double batch_loss(std::span<const std::pair<double, double>> pairs,
                  const ParamStore& params, const LossConfig& cfg) {
    if (pairs.empty()) throw std::invalid_argument("batch_loss: empty batch");
    double loss = 0.0;
    for (const auto& [pred, truth] : pairs) {
        const double r = pred - truth;
        loss += r * r;
    }
    return loss + cfg.lambda * params.squared_norm_regularized();
}

double clamp_output(double r_hat, const LossConfig& cfg) {
    if (r_hat < cfg.rating_min) return cfg.rating_min;
    if (r_hat > cfg.rating_max) return cfg.rating_max;
    return r_hat;
}

} // namespace devrec
