#pragma once

#include <cstddef>
#include <vector>

#include "advl/core/tensor.hpp"

// Forward and backward kernels for the layer vocabulary. All kernels are
// pure functions over their arguments.
namespace advl::ops {

std::size_t conv_output_dim(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding);

// input CxHxW, weights OxCxKhxKw, bias O. Out-of-bounds input reads as 0.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      std::size_t stride, std::size_t padding);

struct Conv2dGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weights, std::size_t stride,
                            std::size_t padding, const Tensor& grad_output,
                            bool need_input_grad = true);

Tensor relu_forward(const Tensor& input);
// Gradient passes where the forward input was strictly positive.
Tensor relu_backward(const Tensor& input, const Tensor& grad_output);

struct MaxPoolResult {
    Tensor output;
    // Flat input index of each output cell's maximum.
    std::vector<std::size_t> argmax;
};

// 2x2 window, stride 2. The last row/column window shrinks on odd sizes.
// Ties resolve to the first cell in row-major order.
MaxPoolResult maxpool2_forward(const Tensor& input);
Tensor maxpool2_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                         const Tensor& grad_output);

// input N, weights MxN, bias M.
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output);

struct SoftmaxXent {
    double loss = 0.0;
    Tensor probs;
};

// Natural-log cross-entropy of softmax(logits) against `true_class`.
SoftmaxXent softmax_xent(const Tensor& logits, std::size_t true_class);
// d loss / d logits = probs - onehot(true_class).
Tensor softmax_xent_backward(const Tensor& probs, std::size_t true_class);

}  // namespace advl::ops
