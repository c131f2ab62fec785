#include "advl/nets/toy_nets.hpp"

#include <algorithm>
#include <cmath>

#include "advl/core/error.hpp"
#include "advl/core/random.hpp"

namespace advl::nets {

namespace {

void check_input(const Shape& input_shape, std::size_t num_classes) {
    if (input_shape.size() != 3) throw ShapeError("toy nets expect a CxHxW input shape");
    if (input_shape[1] < 16 || input_shape[2] < 16)
        throw ShapeError("toy nets need H, W >= 16 to survive two pools, got " + shape_to_string(input_shape));
    if (num_classes < 1) throw ShapeError("toy nets need at least one class");
}

std::size_t pooled(std::size_t d) { return (d + 1) / 2; }

}  // namespace

NetworkSpec build_wide_toy(const Shape& input_shape, std::size_t num_classes) {
    check_input(input_shape, num_classes);
    NetworkSpec spec{"wide", input_shape, {}, num_classes};
    spec.layers = {Conv2D{32, 3, 1, 1}, ReLU{}, MaxPool2{}, Conv2D{64, 3, 1, 1}, ReLU{}, MaxPool2{},
                   Flatten{},           Dense{64},          ReLU{},           Dense{num_classes}};
    validate(spec);
    return spec;
}

NetworkSpec build_deep_toy(const Shape& input_shape, std::size_t num_classes) {
    check_input(input_shape, num_classes);
    NetworkSpec spec{"deep", input_shape, {}, num_classes};
    auto conv_relu = [&](std::size_t channels) {
        spec.layers.emplace_back(Conv2D{channels, 3, 1, 1});
        spec.layers.emplace_back(ReLU{});
    };
    conv_relu(8);
    conv_relu(8);
    spec.layers.emplace_back(MaxPool2{});
    conv_relu(16);
    conv_relu(16);
    spec.layers.emplace_back(MaxPool2{});
    conv_relu(16);
    conv_relu(16);
    spec.layers.emplace_back(Flatten{});

    // params(h) = conv_params + h * (flat + 1 + classes) + classes
    const std::size_t C = input_shape[0];
    const std::size_t conv_params =
        (8 * C * 9 + 8) + (8 * 8 * 9 + 8) + (16 * 8 * 9 + 16) + 3 * (16 * 16 * 9 + 16);
    const std::size_t flat = 16 * pooled(pooled(input_shape[1])) * pooled(pooled(input_shape[2]));
    const std::size_t target = parameter_count(build_wide_toy(input_shape, num_classes));
    const double per_unit = static_cast<double>(flat + 1 + num_classes);
    const double rest = static_cast<double>(target) - static_cast<double>(conv_params + num_classes);
    const auto hidden = static_cast<std::size_t>(std::max(1.0, std::round(rest / per_unit)));

    spec.layers.emplace_back(Dense{hidden});
    spec.layers.emplace_back(ReLU{});
    spec.layers.emplace_back(Dense{num_classes});
    validate(spec);
    return spec;
}

NetworkSpec build_toy(const std::string& name, const Shape& input_shape, std::size_t num_classes) {
    if (name == "deep") return build_deep_toy(input_shape, num_classes);
    if (name == "wide") return build_wide_toy(input_shape, num_classes);
    throw ConfigError("unknown model '" + name + "' (expected deep or wide)");
}

Network init_params(const NetworkSpec& spec, std::uint64_t seed) {
    Network net = Network::zeros(spec);
    Rng rng(seed);
    for (auto& p : net.params) {
        if (p.empty()) continue;
        const std::size_t fan_in = p.weights.size() / p.weights.dim(0);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (auto& w : p.weights.data()) w = rng.uniform(-bound, bound);
    }
    return net;
}

}  // namespace advl::nets
