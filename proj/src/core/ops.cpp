#include "advl/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "advl/core/error.hpp"

namespace advl::ops {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank)
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_to_string(t.shape()));
}

// Output indices [lo, hi) whose tap `v` lands inside [0, extent).
struct TapRange {
    std::size_t lo;
    std::size_t hi;
};

TapRange tap_range(std::size_t extent, std::size_t out, std::size_t tap, std::size_t stride,
                   std::size_t padding) {
    std::size_t lo = 0;
    if (padding > tap) lo = (padding - tap + stride - 1) / stride;
    // j * stride + tap - padding <= extent - 1
    if (extent + padding < tap + 1) return {0, 0};
    std::size_t hi = (extent - 1 + padding - tap) / stride + 1;
    hi = std::min(hi, out);
    if (lo > hi) lo = hi;
    return {lo, hi};
}

}  // namespace

std::size_t conv_output_dim(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding) {
    if (stride == 0) throw ShapeError("conv2d: stride must be positive");
    if (in + 2 * padding < kernel)
        throw ShapeError("conv2d: padded input " + std::to_string(in + 2 * padding) +
                         " smaller than kernel " + std::to_string(kernel));
    return (in + 2 * padding - kernel) / stride + 1;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      std::size_t stride, std::size_t padding) {
    require_rank(input, 3, "conv2d input");
    require_rank(weights, 4, "conv2d weights");
    const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
    const std::size_t O = weights.dim(0), Kh = weights.dim(2), Kw = weights.dim(3);
    if (weights.dim(1) != C)
        throw ShapeError("conv2d: input has " + std::to_string(C) + " channels but weights expect " +
                         std::to_string(weights.dim(1)));
    if (bias.rank() != 1 || bias.dim(0) != O)
        throw ShapeError("conv2d: bias shape " + shape_to_string(bias.shape()) + " does not match " +
                         std::to_string(O) + " output channels");
    const std::size_t Ho = conv_output_dim(H, Kh, stride, padding);
    const std::size_t Wo = conv_output_dim(W, Kw, stride, padding);

    Tensor out({O, Ho, Wo});
    const double* x = input.data().data();
    const double* w = weights.data().data();
    double* y = out.data().data();
    for (std::size_t o = 0; o < O; ++o) {
        double* yo = y + o * Ho * Wo;
        std::fill(yo, yo + Ho * Wo, bias[o]);
        for (std::size_t c = 0; c < C; ++c) {
            const double* xc = x + c * H * W;
            for (std::size_t u = 0; u < Kh; ++u) {
                for (std::size_t v = 0; v < Kw; ++v) {
                    const double wv = w[((o * C + c) * Kh + u) * Kw + v];
                    const TapRange rows = tap_range(H, Ho, u, stride, padding);
                    const TapRange cols = tap_range(W, Wo, v, stride, padding);
                    for (std::size_t i = rows.lo; i < rows.hi; ++i) {
                        const std::size_t r = i * stride + u - padding;
                        const double* xr = xc + r * W;
                        double* yr = yo + i * Wo;
                        for (std::size_t j = cols.lo; j < cols.hi; ++j)
                            yr[j] += wv * xr[j * stride + v - padding];
                    }
                }
            }
        }
    }
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weights, std::size_t stride,
                            std::size_t padding, const Tensor& grad_output, bool need_input_grad) {
    require_rank(input, 3, "conv2d input");
    require_rank(weights, 4, "conv2d weights");
    const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
    const std::size_t O = weights.dim(0), Kh = weights.dim(2), Kw = weights.dim(3);
    const std::size_t Ho = conv_output_dim(H, Kh, stride, padding);
    const std::size_t Wo = conv_output_dim(W, Kw, stride, padding);
    if (grad_output.shape() != Shape{O, Ho, Wo})
        throw ShapeError("conv2d backward: upstream gradient shape " +
                         shape_to_string(grad_output.shape()) + " does not match output");

    Conv2dGrads g{need_input_grad ? Tensor(input.shape()) : Tensor(), Tensor(weights.shape()),
                  Tensor({O})};
    const double* x = input.data().data();
    const double* w = weights.data().data();
    const double* gy = grad_output.data().data();
    double* gw = g.weights.data().data();
    double* gx = need_input_grad ? g.input.data().data() : nullptr;

    for (std::size_t o = 0; o < O; ++o) {
        const double* gyo = gy + o * Ho * Wo;
        double bsum = 0.0;
        for (std::size_t k = 0; k < Ho * Wo; ++k) bsum += gyo[k];
        g.bias[o] = bsum;
        for (std::size_t c = 0; c < C; ++c) {
            const double* xc = x + c * H * W;
            double* gxc = gx ? gx + c * H * W : nullptr;
            for (std::size_t u = 0; u < Kh; ++u) {
                for (std::size_t v = 0; v < Kw; ++v) {
                    const std::size_t widx = ((o * C + c) * Kh + u) * Kw + v;
                    const double wv = w[widx];
                    double acc = 0.0;
                    const TapRange rows = tap_range(H, Ho, u, stride, padding);
                    const TapRange cols = tap_range(W, Wo, v, stride, padding);
                    for (std::size_t i = rows.lo; i < rows.hi; ++i) {
                        const std::size_t r = i * stride + u - padding;
                        const double* xr = xc + r * W;
                        const double* gyr = gyo + i * Wo;
                        for (std::size_t j = cols.lo; j < cols.hi; ++j)
                            acc += gyr[j] * xr[j * stride + v - padding];
                        if (gxc) {
                            double* gxr = gxc + r * W;
                            for (std::size_t j = cols.lo; j < cols.hi; ++j)
                                gxr[j * stride + v - padding] += wv * gyr[j];
                        }
                    }
                    gw[widx] = acc;
                }
            }
        }
    }
    return g;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out = input;
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_output) {
    require_same_shape(input, grad_output, "relu backward");
    Tensor g(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) g[i] = input[i] > 0.0 ? grad_output[i] : 0.0;
    return g;
}

MaxPoolResult maxpool2_forward(const Tensor& input) {
    require_rank(input, 3, "maxpool2 input");
    const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
    const std::size_t Ho = (H + 1) / 2, Wo = (W + 1) / 2;
    MaxPoolResult res{Tensor({C, Ho, Wo}), std::vector<std::size_t>(C * Ho * Wo)};
    std::size_t k = 0;
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < Ho; ++i) {
            for (std::size_t j = 0; j < Wo; ++j, ++k) {
                std::size_t best = (c * H + 2 * i) * W + 2 * j;
                for (std::size_t r = 2 * i; r < std::min(2 * i + 2, H); ++r)
                    for (std::size_t q = 2 * j; q < std::min(2 * j + 2, W); ++q) {
                        const std::size_t idx = (c * H + r) * W + q;
                        if (input[idx] > input[best]) best = idx;
                    }
                res.output[k] = input[best];
                res.argmax[k] = best;
            }
        }
    }
    return res;
}

Tensor maxpool2_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                         const Tensor& grad_output) {
    if (argmax.size() != grad_output.size())
        throw ShapeError("maxpool2 backward: argmax count does not match upstream gradient");
    Tensor g(input_shape);
    for (std::size_t k = 0; k < argmax.size(); ++k) g[argmax[k]] += grad_output[k];
    return g;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require_rank(weights, 2, "dense weights");
    const std::size_t M = weights.dim(0), N = weights.dim(1);
    if (input.size() != N)
        throw ShapeError("dense: input length " + std::to_string(input.size()) +
                         " does not match weight columns " + std::to_string(N));
    if (bias.size() != M)
        throw ShapeError("dense: bias length " + std::to_string(bias.size()) +
                         " does not match weight rows " + std::to_string(M));
    Tensor out({M});
    const double* x = input.data().data();
    for (std::size_t m = 0; m < M; ++m) {
        const double* wr = weights.data().data() + m * N;
        double acc = bias[m];
        for (std::size_t n = 0; n < N; ++n) acc += wr[n] * x[n];
        out[m] = acc;
    }
    return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output) {
    const std::size_t M = weights.dim(0), N = weights.dim(1);
    if (grad_output.size() != M || input.size() != N)
        throw ShapeError("dense backward: shape mismatch");
    DenseGrads g{Tensor(input.shape()), Tensor(weights.shape()), Tensor({M})};
    for (std::size_t m = 0; m < M; ++m) {
        const double gm = grad_output[m];
        g.bias[m] = gm;
        const double* wr = weights.data().data() + m * N;
        double* gwr = g.weights.data().data() + m * N;
        for (std::size_t n = 0; n < N; ++n) {
            gwr[n] = gm * input[n];
            g.input[n] += wr[n] * gm;
        }
    }
    return g;
}

SoftmaxXent softmax_xent(const Tensor& logits, std::size_t true_class) {
    const std::size_t K = logits.size();
    if (true_class >= K)
        throw UsageError("softmax_xent: class " + std::to_string(true_class) + " out of range for " +
                         std::to_string(K) + " logits");
    const double mx = *std::max_element(logits.data().begin(), logits.data().end());
    Tensor probs({K});
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        probs[k] = std::exp(logits[k] - mx);
        sum += probs[k];
    }
    for (std::size_t k = 0; k < K; ++k) probs[k] /= sum;
    // log-sum-exp form keeps the loss accurate when probs[true_class] rounds to 1.
    const double loss = std::log(sum) - (logits[true_class] - mx);
    return {loss, std::move(probs)};
}

Tensor softmax_xent_backward(const Tensor& probs, std::size_t true_class) {
    if (true_class >= probs.size()) throw UsageError("softmax_xent backward: class out of range");
    Tensor g = probs;
    g[true_class] -= 1.0;
    return g;
}

}  // namespace advl::ops
