#include "devrec/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace devrec::nn {

Vector affine(const Matrix& W, std::span<const double> x, std::span<const double> b) {
    if (W.cols != x.size() || W.rows != b.size())
        throw std::invalid_argument("affine: shape mismatch");
    Vector y(W.rows);
    for (std::size_t r = 0; r < W.rows; ++r) {
        double acc = b[r];
        const double* wr = &W.data[r * W.cols];
        for (std::size_t c = 0; c < W.cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
    return y;
}

Vector relu(std::span<const double> x) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Vector relu_grad_mask(std::span<const double> x) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? 1.0 : 0.0;
    return y;
}

Vector sigmoid(std::span<const double> x) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        // evaluate via exp of a non-positive argument so large |v| cannot overflow
        if (v >= 0.0) {
            const double e = std::exp(-v);
            y[i] = 1.0 / (1.0 + e);
        } else {
            const double e = std::exp(v);
            y[i] = e / (1.0 + e);
        }
    }
    return y;
}

Vector tanh_act(std::span<const double> x) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    return y;
}

Vector softmax(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("softmax: empty input");
    const double m = *std::max_element(x.begin(), x.end());
    Vector y(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = std::exp(x[i] - m);
        sum += y[i];
    }
    for (double& v : y) v /= sum;
    return y;
}

Vector softmax_backward(std::span<const double> y, std::span<const double> dy) {
    if (y.size() != dy.size())
        throw std::invalid_argument("softmax_backward: shape mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * dy[i];
    Vector dx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = y[i] * (dy[i] - dot);
    return dx;
}

Vector mean_pool(const Matrix& m, Axis axis) {
    if (m.rows == 0 || m.cols == 0)
        throw std::invalid_argument("mean_pool: empty matrix");
    if (axis == Axis::Rows) {
        Vector out(m.cols, 0.0);
        for (std::size_t r = 0; r < m.rows; ++r)
            for (std::size_t c = 0; c < m.cols; ++c) out[c] += m(r, c);
        for (double& v : out) v /= static_cast<double>(m.rows);
        return out;
    }
    Vector out(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += m(r, c);
        out[r] = acc / static_cast<double>(m.cols);
    }
    return out;
}

Matrix window_conv(const Matrix& m, const Matrix& filters, std::size_t s) {
    const std::size_t e = m.rows, n = m.cols, f = filters.rows;
    if (s < 1) throw std::invalid_argument("window_conv: window size must be >= 1");
    if (f == 0 || n == 0) throw std::invalid_argument("window_conv: empty operand");
    if (filters.cols != e * s)
        throw std::invalid_argument("window_conv: filter width != e*s");
    Matrix out(f, n);
    for (std::size_t j = 0; j < f; ++j) {
        const double* fj = &filters.data[j * filters.cols];
        for (std::size_t h = 0; h < n; ++h) {
            double acc = 0.0;
            const std::size_t qmax = std::min(s, n - h);
            for (std::size_t q = 0; q < qmax; ++q) {
                const double* col = &m.data[h + q]; // stride m.cols over rows
                const double* fq = fj + q * e;
                for (std::size_t p = 0; p < e; ++p) acc += fq[p] * col[p * n];
            }
            out(j, h) = acc;
        }
    }
    return out;
}

void window_conv_backward(const Matrix& m, const Matrix& filters, std::size_t s,
                          const Matrix& d_out, Matrix& d_filters, Matrix& d_m) {
    const std::size_t e = m.rows, n = m.cols, f = filters.rows;
    if (d_out.rows != f || d_out.cols != n || !d_filters.same_shape(filters) ||
        !d_m.same_shape(m))
        throw std::invalid_argument("window_conv_backward: shape mismatch");
    for (std::size_t j = 0; j < f; ++j) {
        const double* fj = &filters.data[j * filters.cols];
        double* dfj = &d_filters.data[j * filters.cols];
        for (std::size_t h = 0; h < n; ++h) {
            const double g = d_out(j, h);
            if (g == 0.0) continue;
            const std::size_t qmax = std::min(s, n - h);
            for (std::size_t q = 0; q < qmax; ++q) {
                const double* col = &m.data[h + q];
                double* dcol = &d_m.data[h + q];
                const double* fq = fj + q * e;
                double* dfq = dfj + q * e;
                for (std::size_t p = 0; p < e; ++p) {
                    dfq[p] += g * col[p * n];
                    dcol[p * n] += g * fq[p];
                }
            }
        }
    }
}

} // namespace devrec::nn
