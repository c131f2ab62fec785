#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "advl/core/tensor.hpp"

namespace advl {

struct Conv2D {
    std::size_t out_channels = 1;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t padding = 0;
    friend bool operator==(const Conv2D&, const Conv2D&) = default;
};
struct ReLU {
    friend bool operator==(const ReLU&, const ReLU&) = default;
};
struct MaxPool2 {
    friend bool operator==(const MaxPool2&, const MaxPool2&) = default;
};
struct Flatten {
    friend bool operator==(const Flatten&, const Flatten&) = default;
};
struct Dense {
    std::size_t units = 1;
    friend bool operator==(const Dense&, const Dense&) = default;
};

using LayerSpec = std::variant<Conv2D, ReLU, MaxPool2, Flatten, Dense>;

enum class LayerKind : unsigned char { Conv2D = 0, ReLU = 1, MaxPool2 = 2, Flatten = 3, Dense = 4 };

LayerKind kind_of(const LayerSpec& layer);
const char* kind_name(LayerKind kind);

struct NetworkSpec {
    std::string name;
    Shape input_shape;  // CxHxW
    std::vector<LayerSpec> layers;
    std::size_t num_classes = 0;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Output shape of every layer, in order. Throws ShapeError when the chain is
// invalid or the last layer is not Dense(num_classes).
std::vector<Shape> infer_shapes(const NetworkSpec& spec);
void validate(const NetworkSpec& spec);

// Indices of the Conv2D layers in `spec.layers`.
std::vector<std::size_t> conv_layer_ids(const NetworkSpec& spec);

struct LayerParams {
    Tensor weights;  // empty for parameter-free layers
    Tensor bias;

    bool empty() const noexcept { return weights.empty(); }
    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

// Parameter shapes for each layer; {} for layers without parameters.
std::vector<std::pair<Shape, Shape>> parameter_shapes(const NetworkSpec& spec);
std::size_t parameter_count(const NetworkSpec& spec);

/// A validated layer chain plus one LayerParams per layer.
struct Network {
    NetworkSpec spec;
    std::vector<LayerParams> params;

    // Zero-initialized parameters of the right shapes.
    static Network zeros(NetworkSpec spec);

    std::size_t parameter_count() const;
    friend bool operator==(const Network&, const Network&) = default;
};

}  // namespace advl
