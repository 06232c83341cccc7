#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace devrec {

// Dense row-major matrix of doubles. Vectors are 1 x n or n x 1 as convenient.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows && c < cols);
        return data[r * cols + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows && c < cols);
        return data[r * cols + c];
    }

    std::size_t size() const { return data.size(); }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const Matrix& o) const {
        return rows == o.rows && cols == o.cols;
    }
    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
    }
};

using Vector = std::vector<double>;

namespace nn {

// y = W x + b
Vector affine(const Matrix& W, std::span<const double> x, std::span<const double> b);

Vector relu(std::span<const double> x);
// elementwise derivative mask: 1 where x > 0
Vector relu_grad_mask(std::span<const double> x);

Vector sigmoid(std::span<const double> x);
Vector tanh_act(std::span<const double> x);

// max-subtracted softmax; x must be non-empty
Vector softmax(std::span<const double> x);
// given y = softmax(x) and dL/dy, returns dL/dx
Vector softmax_backward(std::span<const double> y, std::span<const double> dy);

enum class Axis { Rows, Cols };
// Axis::Rows -> mean over rows (result length cols); Axis::Cols -> mean over
// columns (result length rows).
Vector mean_pool(const Matrix& m, Axis axis);

// Sliding-window convolution over the columns of M (e x n), window size s,
// filters given as f x (e*s) with window slices flattened column-major
// (q*e + p for column offset q, row p). M is implicitly right-padded with
// s-1 zero columns so the output is exactly f x n.
Matrix window_conv(const Matrix& m, const Matrix& filters, std::size_t s);

// Accumulates gradients of window_conv: given dL/dout (f x n), adds the
// filter gradient into d_filters and the input gradient into d_m.
void window_conv_backward(const Matrix& m, const Matrix& filters, std::size_t s,
                          const Matrix& d_out, Matrix& d_filters, Matrix& d_m);

} // namespace nn
} // namespace devrec
