#pragma once

#include "devrec/matrix.hpp"

namespace devrec {

// Row index 0 in both latent matrices is the cold-start entity.
struct LatentPair {
    Vector v_dev;
    Vector v_srv;
};

LatentPair lookup_latent(std::size_t device_index, std::size_t service_index,
                         const Matrix& latent_dev, const Matrix& latent_srv);

// concat(v_d . v_s elementwise, v_d, v_s), length 3v
Vector engagement_features(const Vector& v_dev, const Vector& v_srv);

// d_f is dL/dF_engagement; accumulates into the touched latent rows only
void engagement_backward(std::size_t device_index, std::size_t service_index,
                         const Vector& v_dev, const Vector& v_srv, const Vector& d_f,
                         Matrix& g_latent_dev, Matrix& g_latent_srv);

} // namespace devrec
