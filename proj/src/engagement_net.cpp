#include "devrec/engagement_net.hpp"

#include <stdexcept>

namespace devrec {

LatentPair lookup_latent(std::size_t device_index, std::size_t service_index,
                         const Matrix& latent_dev, const Matrix& latent_srv) {
    if (device_index >= latent_dev.rows || service_index >= latent_srv.rows)
        throw std::out_of_range("lookup_latent: index out of range");
    LatentPair out;
    out.v_dev.assign(latent_dev.data.begin() + device_index * latent_dev.cols,
                     latent_dev.data.begin() + (device_index + 1) * latent_dev.cols);
    out.v_srv.assign(latent_srv.data.begin() + service_index * latent_srv.cols,
                     latent_srv.data.begin() + (service_index + 1) * latent_srv.cols);
    return out;
}

Vector engagement_features(const Vector& v_dev, const Vector& v_srv) {
    if (v_dev.size() != v_srv.size())
        throw std::invalid_argument("engagement_features: length mismatch");
    const std::size_t v = v_dev.size();
    Vector out(3 * v);
    for (std::size_t i = 0; i < v; ++i) {
        out[i] = v_dev[i] * v_srv[i];
        out[v + i] = v_dev[i];
        out[2 * v + i] = v_srv[i];
    }
    return out;
}

void engagement_backward(std::size_t device_index, std::size_t service_index,
                         const Vector& v_dev, const Vector& v_srv, const Vector& d_f,
                         Matrix& g_latent_dev, Matrix& g_latent_srv) {
    const std::size_t v = v_dev.size();
    if (d_f.size() != 3 * v)
        throw std::invalid_argument("engagement_backward: bad d_f length");
    for (std::size_t i = 0; i < v; ++i) {
        g_latent_dev(device_index, i) += d_f[i] * v_srv[i] + d_f[v + i];
        g_latent_srv(service_index, i) += d_f[i] * v_dev[i] + d_f[2 * v + i];
    }
}

} // namespace devrec
