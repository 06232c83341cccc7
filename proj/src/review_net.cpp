#include "devrec/review_net.hpp"

#include <cmath>
#include <stdexcept>

#include "devrec/ingest.hpp"

namespace devrec {

namespace {

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double av = a(i, k);
            if (av == 0.0) continue;
            const double* br = &b.data[k * b.cols];
            double* cr = &c.data[i * c.cols];
            for (std::size_t j = 0; j < b.cols; ++j) cr[j] += av * br[j];
        }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

void add_into(Matrix& dst, const Matrix& src) {
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

} // namespace

Matrix embed_collection(const std::vector<int>& token_ids, const Matrix& embed) {
    const std::size_t e = embed.cols;
    std::vector<int> ids = token_ids;
    if (ids.empty()) ids.push_back(Vocabulary::kPadId);
    Matrix out(e, ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= embed.rows)
            throw std::out_of_range("embed_collection: token id out of range");
        const auto id = static_cast<std::size_t>(ids[i]);
        for (std::size_t p = 0; p < e; ++p) out(p, i) = embed(id, p);
    }
    return out;
}

Matrix contextual_conv(const Matrix& embeds, const Matrix& filters, std::size_t s) {
    Matrix pre = nn::window_conv(embeds, filters, s);
    for (double& v : pre.data) v = v > 0.0 ? v : 0.0;
    return pre;
}

SelectiveWeights selective_weights(const Matrix& d, const Matrix& s, const Matrix& a) {
    if (d.rows != a.rows || s.rows != a.cols)
        throw std::invalid_argument("selective_weights: shape mismatch");
    const std::size_t n = d.cols, m = s.cols;
    if (n == 0 || m == 0) throw std::invalid_argument("selective_weights: empty collection");
    const Matrix p = matmul(a, s); // f x m
    Matrix r(n, m);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < m; ++k) {
            double z = 0.0;
            for (std::size_t q = 0; q < d.rows; ++q) z += d(q, j) * p(q, k);
            r(j, k) = std::tanh(z);
        }
    const Vector g_dev = nn::mean_pool(r, nn::Axis::Cols); // length n
    const Vector g_srv = nn::mean_pool(r, nn::Axis::Rows); // length m
    return {nn::softmax(g_dev), nn::softmax(g_srv)};
}

Matrix apply_weights(const Matrix& c, const Vector& weights) {
    if (c.cols != weights.size())
        throw std::invalid_argument("apply_weights: shape mismatch");
    Matrix out(c.rows, c.cols);
    for (std::size_t r = 0; r < c.rows; ++r)
        for (std::size_t j = 0; j < c.cols; ++j) out(r, j) = c(r, j) * weights[j];
    return out;
}

Vector abstract_features(const Matrix& cw, const Matrix& filters, std::size_t s_a) {
    Matrix hc = contextual_conv(cw, filters, s_a);
    return nn::mean_pool(hc, nn::Axis::Cols);
}

Vector transform(const Vector& h, const Matrix& w, const Matrix& b) {
    return nn::sigmoid(nn::affine(w, h, b.data));
}

Vector collection_features(const Vector& t_dev, const Vector& t_srv) {
    if (t_dev.size() != t_srv.size())
        throw std::invalid_argument("collection_features: length mismatch");
    const std::size_t f = t_dev.size();
    Vector out(3 * f);
    for (std::size_t i = 0; i < f; ++i) {
        out[i] = t_dev[i] * t_srv[i];
        out[f + i] = t_dev[i];
        out[2 * f + i] = t_srv[i];
    }
    return out;
}

ReviewNetCache review_forward(const std::vector<int>& ids_dev,
                              const std::vector<int>& ids_srv,
                              const ReviewNetParams& p) {
    ReviewNetCache c;
    c.ids_dev = ids_dev.empty() ? std::vector<int>{Vocabulary::kPadId} : ids_dev;
    c.ids_srv = ids_srv.empty() ? std::vector<int>{Vocabulary::kPadId} : ids_srv;
    c.x_dev = embed_collection(c.ids_dev, *p.embed);
    c.x_srv = embed_collection(c.ids_srv, *p.embed);
    c.pre_dev = nn::window_conv(c.x_dev, *p.conv_dev, p.window);
    c.pre_srv = nn::window_conv(c.x_srv, *p.conv_srv, p.window);
    c.d = c.pre_dev;
    for (double& v : c.d.data) v = v > 0.0 ? v : 0.0;
    c.s = c.pre_srv;
    for (double& v : c.s.data) v = v > 0.0 ? v : 0.0;

    const std::size_t n = c.d.cols, m = c.s.cols;
    const Matrix proj = matmul(*p.select_A, c.s); // f x m
    c.r = Matrix(n, m);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < m; ++k) {
            double z = 0.0;
            for (std::size_t q = 0; q < c.d.rows; ++q) z += c.d(q, j) * proj(q, k);
            c.r(j, k) = std::tanh(z);
        }
    c.a_dev = nn::softmax(nn::mean_pool(c.r, nn::Axis::Cols));
    c.a_srv = nn::softmax(nn::mean_pool(c.r, nn::Axis::Rows));

    c.dw = apply_weights(c.d, c.a_dev);
    c.sw = apply_weights(c.s, c.a_srv);
    c.preh_dev = nn::window_conv(c.dw, *p.abs_dev, p.abs_window);
    c.preh_srv = nn::window_conv(c.sw, *p.abs_srv, p.abs_window);
    Matrix hc_dev = c.preh_dev;
    for (double& v : hc_dev.data) v = v > 0.0 ? v : 0.0;
    Matrix hc_srv = c.preh_srv;
    for (double& v : hc_srv.data) v = v > 0.0 ? v : 0.0;
    c.h_dev = nn::mean_pool(hc_dev, nn::Axis::Cols);
    c.h_srv = nn::mean_pool(hc_srv, nn::Axis::Cols);
    c.t_dev = transform(c.h_dev, *p.mlp_w, *p.mlp_b);
    c.t_srv = transform(c.h_srv, *p.mlp_w, *p.mlp_b);
    c.f_collection = collection_features(c.t_dev, c.t_srv);
    return c;
}

void review_backward(const ReviewNetCache& c, const ReviewNetParams& p,
                     const Vector& d_f, const ReviewNetGrads& g) {
    const std::size_t f = c.t_dev.size();
    if (d_f.size() != 3 * f) throw std::invalid_argument("review_backward: bad d_f length");
    const std::size_t n = c.d.cols, m = c.s.cols;

    // F = [t_d.t_s, t_d, t_s]
    Vector dt_dev(f), dt_srv(f);
    for (std::size_t i = 0; i < f; ++i) {
        dt_dev[i] = d_f[i] * c.t_srv[i] + d_f[f + i];
        dt_srv[i] = d_f[i] * c.t_dev[i] + d_f[2 * f + i];
    }

    // shared sigmoid MLP
    Vector du_dev(f), du_srv(f);
    for (std::size_t i = 0; i < f; ++i) {
        du_dev[i] = dt_dev[i] * c.t_dev[i] * (1.0 - c.t_dev[i]);
        du_srv[i] = dt_srv[i] * c.t_srv[i] * (1.0 - c.t_srv[i]);
    }
    Vector dh_dev(f, 0.0), dh_srv(f, 0.0);
    for (std::size_t i = 0; i < f; ++i) {
        for (std::size_t j = 0; j < f; ++j) {
            (*g.mlp_w)(i, j) += du_dev[i] * c.h_dev[j] + du_srv[i] * c.h_srv[j];
            dh_dev[j] += (*p.mlp_w)(i, j) * du_dev[i];
            dh_srv[j] += (*p.mlp_w)(i, j) * du_srv[i];
        }
        g.mlp_b->data[i] += du_dev[i] + du_srv[i];
    }

    // abstraction conv + mean pooling
    Matrix dpreh_dev(f, n), dpreh_srv(f, m);
    for (std::size_t j = 0; j < f; ++j) {
        const double gd = dh_dev[j] / static_cast<double>(n);
        const double gs = dh_srv[j] / static_cast<double>(m);
        for (std::size_t h = 0; h < n; ++h)
            dpreh_dev(j, h) = c.preh_dev(j, h) > 0.0 ? gd : 0.0;
        for (std::size_t h = 0; h < m; ++h)
            dpreh_srv(j, h) = c.preh_srv(j, h) > 0.0 ? gs : 0.0;
    }
    Matrix d_dw(c.dw.rows, c.dw.cols), d_sw(c.sw.rows, c.sw.cols);
    nn::window_conv_backward(c.dw, *p.abs_dev, p.abs_window, dpreh_dev, *g.abs_dev, d_dw);
    nn::window_conv_backward(c.sw, *p.abs_srv, p.abs_window, dpreh_srv, *g.abs_srv, d_sw);

    // weighting: Dw[:,j] = a_dev[j] * D[:,j]
    Matrix d_d(f, n), d_s(f, m);
    Vector da_dev(n, 0.0), da_srv(m, 0.0);
    for (std::size_t q = 0; q < f; ++q) {
        for (std::size_t j = 0; j < n; ++j) {
            d_d(q, j) = c.a_dev[j] * d_dw(q, j);
            da_dev[j] += c.d(q, j) * d_dw(q, j);
        }
        for (std::size_t k = 0; k < m; ++k) {
            d_s(q, k) = c.a_srv[k] * d_sw(q, k);
            da_srv[k] += c.s(q, k) * d_sw(q, k);
        }
    }

    // softmax then mean pooling of the similarity matrix
    const Vector dg_dev = nn::softmax_backward(c.a_dev, da_dev);
    const Vector dg_srv = nn::softmax_backward(c.a_srv, da_srv);
    Matrix dz(n, m);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < m; ++k) {
            const double dr = dg_dev[j] / static_cast<double>(m) +
                              dg_srv[k] / static_cast<double>(n);
            dz(j, k) = dr * (1.0 - c.r(j, k) * c.r(j, k));
        }

    // bilinear form z_{jk} = d_j^T A s_k
    const Matrix proj = matmul(*p.select_A, c.s);            // f x m
    const Matrix projT = matmul(transpose(*p.select_A), c.d); // f x n
    add_into(d_d, matmul(proj, transpose(dz)));  // f x n
    add_into(d_s, matmul(projT, dz));            // f x m
    add_into(*g.select_A, matmul(matmul(c.d, dz), transpose(c.s)));

    // contextual conv
    Matrix dpre_dev(f, n), dpre_srv(f, m);
    for (std::size_t i = 0; i < dpre_dev.data.size(); ++i)
        dpre_dev.data[i] = c.pre_dev.data[i] > 0.0 ? d_d.data[i] : 0.0;
    for (std::size_t i = 0; i < dpre_srv.data.size(); ++i)
        dpre_srv.data[i] = c.pre_srv.data[i] > 0.0 ? d_s.data[i] : 0.0;
    Matrix dx_dev(c.x_dev.rows, c.x_dev.cols), dx_srv(c.x_srv.rows, c.x_srv.cols);
    nn::window_conv_backward(c.x_dev, *p.conv_dev, p.window, dpre_dev, *g.conv_dev, dx_dev);
    nn::window_conv_backward(c.x_srv, *p.conv_srv, p.window, dpre_srv, *g.conv_srv, dx_srv);

    // embedding rows
    const std::size_t e = c.x_dev.rows;
    for (std::size_t i = 0; i < c.ids_dev.size(); ++i) {
        const auto row = static_cast<std::size_t>(c.ids_dev[i]);
        for (std::size_t q = 0; q < e; ++q) (*g.embed)(row, q) += dx_dev(q, i);
    }
    for (std::size_t i = 0; i < c.ids_srv.size(); ++i) {
        const auto row = static_cast<std::size_t>(c.ids_srv[i]);
        for (std::size_t q = 0; q < e; ++q) (*g.embed)(row, q) += dx_srv(q, i);
    }
}

} // namespace devrec
