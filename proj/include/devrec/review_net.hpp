#pragma once

#include <vector>

#include "devrec/matrix.hpp"

namespace devrec {

// Learnable tensors of the review branch, borrowed from a ParamStore.
struct ReviewNetParams {
    const Matrix* embed;      // |vocab| x e
    const Matrix* conv_dev;   // f x (e*s)
    const Matrix* conv_srv;   // f x (e*s)
    const Matrix* select_A;   // f x f
    const Matrix* abs_dev;    // f x (f*s_a)
    const Matrix* abs_srv;    // f x (f*s_a)
    const Matrix* mlp_w;      // f x f, shared
    const Matrix* mlp_b;      // f x 1, shared
    std::size_t window = 3;   // s
    std::size_t abs_window = 3; // s_a
};

struct ReviewNetGrads {
    Matrix* embed;
    Matrix* conv_dev;
    Matrix* conv_srv;
    Matrix* select_A;
    Matrix* abs_dev;
    Matrix* abs_srv;
    Matrix* mlp_w;
    Matrix* mlp_b;
};

// column i = embedding of token i; an empty sequence becomes one padding column
Matrix embed_collection(const std::vector<int>& token_ids, const Matrix& embed);

// ReLU(window_conv)
Matrix contextual_conv(const Matrix& embeds, const Matrix& filters, std::size_t s);

// R[j][k] = tanh(d_j . A s_k); row/column means; softmax on each side
struct SelectiveWeights {
    Vector a_dev; // length n
    Vector a_srv; // length m
};
SelectiveWeights selective_weights(const Matrix& d, const Matrix& s, const Matrix& a);

// column j scaled by weights[j]
Matrix apply_weights(const Matrix& c, const Vector& weights);

// ReLU(window_conv) then mean over positions -> length-f vector
Vector abstract_features(const Matrix& cw, const Matrix& filters, std::size_t s_a);

// sigmoid(W h + b)
Vector transform(const Vector& h, const Matrix& w, const Matrix& b);

// concat(t_dev . t_srv elementwise, t_dev, t_srv), length 3f
Vector collection_features(const Vector& t_dev, const Vector& t_srv);

// All intermediates needed by the backward pass.
struct ReviewNetCache {
    std::vector<int> ids_dev, ids_srv;
    Matrix x_dev, x_srv;       // embeddings e x n / e x m
    Matrix pre_dev, pre_srv;   // conv pre-activations f x n / f x m
    Matrix d, s;               // contextual features (post ReLU)
    Matrix r;                  // tanh similarity, n x m
    Vector a_dev, a_srv;       // selective weights
    Matrix dw, sw;             // weighted contextual features
    Matrix preh_dev, preh_srv; // abstraction pre-activations f x n / f x m
    Vector h_dev, h_srv;       // mean-pooled abstraction features
    Vector t_dev, t_srv;       // transformed features (sigmoid outputs)
    Vector f_collection;       // length 3f
};

ReviewNetCache review_forward(const std::vector<int>& ids_dev,
                              const std::vector<int>& ids_srv,
                              const ReviewNetParams& p);

// d_f is dL/dF_collection (length 3f); gradients accumulate into g.
void review_backward(const ReviewNetCache& c, const ReviewNetParams& p,
                     const Vector& d_f, const ReviewNetGrads& g);

} // namespace devrec
