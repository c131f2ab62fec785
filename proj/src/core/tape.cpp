#include "advl/core/tape.hpp"

#include "advl/core/error.hpp"
#include "advl/core/ops.hpp"

namespace advl {

namespace {

void check_params(const Network& net) {
    if (net.params.size() != net.spec.layers.size())
        throw UsageError("network has " + std::to_string(net.params.size()) + " parameter slots for " +
                         std::to_string(net.spec.layers.size()) + " layers");
}

// One layer forward; `argmax` is filled for MaxPool2.
Tensor run_layer(const LayerSpec& layer, const LayerParams& p, const Tensor& in,
                 std::vector<std::size_t>* argmax) {
    switch (kind_of(layer)) {
        case LayerKind::Conv2D: {
            const auto& c = std::get<Conv2D>(layer);
            return ops::conv2d_forward(in, p.weights, p.bias, c.stride, c.padding);
        }
        case LayerKind::ReLU:
            return ops::relu_forward(in);
        case LayerKind::MaxPool2: {
            auto r = ops::maxpool2_forward(in);
            if (argmax) *argmax = std::move(r.argmax);
            return std::move(r.output);
        }
        case LayerKind::Flatten:
            return in.reshaped({in.size()});
        case LayerKind::Dense:
            if (in.rank() != 1) throw ShapeError("dense layer expects a flat input");
            return ops::dense_forward(in, p.weights, p.bias);
    }
    throw UsageError("unknown layer kind");
}

}  // namespace

Tape forward(const Network& net, const Tensor& input) {
    check_params(net);
    if (input.shape() != net.spec.input_shape)
        throw ShapeError("input shape " + shape_to_string(input.shape()) + " does not match network input " +
                         shape_to_string(net.spec.input_shape));
    Tape tape;
    tape.activations_.reserve(net.spec.layers.size() + 1);
    tape.entries_.reserve(net.spec.layers.size());
    tape.activations_.push_back(input);
    for (std::size_t i = 0; i < net.spec.layers.size(); ++i) {
        TapeEntry entry{kind_of(net.spec.layers[i]), i, {}};
        Tensor out = run_layer(net.spec.layers[i], net.params[i], tape.activations_[i], &entry.argmax);
        tape.activations_.push_back(std::move(out));
        tape.entries_.push_back(std::move(entry));
    }
    tape.complete_ = true;
    return tape;
}

Tensor forward_from(const Network& net, std::size_t start, const Tensor& activation) {
    check_params(net);
    if (start > net.spec.layers.size()) throw UsageError("forward_from: start layer out of range");
    Tensor cur = activation;
    for (std::size_t i = start; i < net.spec.layers.size(); ++i)
        cur = run_layer(net.spec.layers[i], net.params[i], cur, nullptr);
    return cur;
}

Tensor predict_logits(const Network& net, const Tensor& input) {
    if (input.shape() != net.spec.input_shape)
        throw ShapeError("input shape " + shape_to_string(input.shape()) + " does not match network input " +
                         shape_to_string(net.spec.input_shape));
    return forward_from(net, 0, input);
}

GradientBundle backward(const Network& net, const Tape& tape, const Tensor& logit_grad) {
    if (!tape.complete()) throw UsageError("backward called without a recorded forward pass");
    check_params(net);
    const std::size_t L = net.spec.layers.size();
    if (tape.entries().size() != L) throw UsageError("tape does not belong to this network");
    if (logit_grad.shape() != tape.logits().shape())
        throw ShapeError("logit gradient shape " + shape_to_string(logit_grad.shape()) +
                         " does not match logits " + shape_to_string(tape.logits().shape()));

    GradientBundle g;
    g.params.resize(L);
    g.activations.resize(L);
    g.activations[L - 1] = logit_grad;
    Tensor upstream = logit_grad;
    for (std::size_t k = L; k-- > 0;) {
        const TapeEntry& e = tape.entries()[k];
        const Tensor& in = tape.activations()[e.input_ref];
        Tensor down;
        switch (e.kind) {
            case LayerKind::Conv2D: {
                const auto& c = std::get<Conv2D>(net.spec.layers[k]);
                auto cg = ops::conv2d_backward(in, net.params[k].weights, c.stride, c.padding, upstream);
                g.params[k] = {std::move(cg.weights), std::move(cg.bias)};
                down = std::move(cg.input);
                break;
            }
            case LayerKind::ReLU:
                down = ops::relu_backward(in, upstream);
                break;
            case LayerKind::MaxPool2:
                down = ops::maxpool2_backward(in.shape(), e.argmax, upstream);
                break;
            case LayerKind::Flatten:
                down = upstream.reshaped(in.shape());
                break;
            case LayerKind::Dense: {
                auto dg = ops::dense_backward(in, net.params[k].weights, upstream);
                g.params[k] = {std::move(dg.weights), std::move(dg.bias)};
                down = std::move(dg.input);
                break;
            }
        }
        if (k > 0) g.activations[k - 1] = down;
        upstream = std::move(down);
    }
    g.input = std::move(upstream);
    return g;
}

LossGradient backward_xent(const Network& net, const Tape& tape, std::size_t true_class, double seed) {
    if (!tape.complete()) throw UsageError("backward called without a recorded forward pass");
    auto sx = ops::softmax_xent(tape.logits(), true_class);
    Tensor logit_grad = ops::softmax_xent_backward(sx.probs, true_class);
    if (seed != 1.0) logit_grad *= seed;
    return {sx.loss, std::move(sx.probs), backward(net, tape, logit_grad)};
}

std::size_t argmax_class(const Tensor& logits) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k)
        if (logits[k] > logits[best]) best = k;
    return best;
}

}  // namespace advl
