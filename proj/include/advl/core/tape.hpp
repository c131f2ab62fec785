#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "advl/core/network.hpp"
#include "advl/core/tensor.hpp"

namespace advl {

struct TapeEntry {
    LayerKind kind;
    std::size_t input_ref;  // index into Tape::activations()
    // MaxPool2 only: argmax cell per output element.
    std::vector<std::size_t> argmax;
};

/// Record of one forward pass. activations()[0] is the input and
/// activations()[i + 1] is the output of layer i.
class Tape {
public:
    Tape() = default;

    bool complete() const noexcept { return complete_; }
    const std::vector<Tensor>& activations() const noexcept { return activations_; }
    const std::vector<TapeEntry>& entries() const noexcept { return entries_; }
    const Tensor& input() const { return activations_.front(); }
    const Tensor& logits() const { return activations_.back(); }
    // Output of layer `layer`.
    const Tensor& output_of(std::size_t layer) const { return activations_.at(layer + 1); }

private:
    friend Tape forward(const Network& net, const Tensor& input);

    std::vector<Tensor> activations_;
    std::vector<TapeEntry> entries_;
    bool complete_ = false;
};

struct GradientBundle {
    Tensor input;
    std::vector<LayerParams> params;  // same layout as Network::params
    std::vector<Tensor> activations;  // d objective / d output of layer i
};

Tape forward(const Network& net, const Tensor& input);

// Runs layers [start, end) on `activation`, the output of layer start - 1.
Tensor forward_from(const Network& net, std::size_t start, const Tensor& activation);

Tensor predict_logits(const Network& net, const Tensor& input);

// Reverse pass for an objective whose gradient w.r.t. the logits is
// `logit_grad`. Entries are consumed in exact reverse order.
GradientBundle backward(const Network& net, const Tape& tape, const Tensor& logit_grad);

struct LossGradient {
    double loss = 0.0;
    Tensor probs;
    GradientBundle grads;
};

// Gradient of seed * cross-entropy(softmax(logits), true_class).
LossGradient backward_xent(const Network& net, const Tape& tape, std::size_t true_class,
                           double seed = 1.0);

// Largest logit, lowest index on ties.
std::size_t argmax_class(const Tensor& logits);

}  // namespace advl
