#pragma once

#include <cstddef>
#include <cstdint>

#include "advl/core/network.hpp"

namespace advl::nets {

// Six narrow 3x3 conv layers in three stages, two of them pooled, then a
// Dense head whose width is sized so the total parameter count lands as
// close as possible to build_wide_toy for the same input and classes.
// Requires H, W >= 16.
NetworkSpec build_deep_toy(const Shape& input_shape, std::size_t num_classes);

// Two wide conv layers (32 and 64 channels), each followed by a pool, then a
// Dense(64) head.
NetworkSpec build_wide_toy(const Shape& input_shape, std::size_t num_classes);

// Looks up "deep" or "wide".
NetworkSpec build_toy(const std::string& name, const Shape& input_shape, std::size_t num_classes);

// Weights ~ U(-b, b), b = sqrt(6 / fan_in); biases 0. Deterministic in seed.
Network init_params(const NetworkSpec& spec, std::uint64_t seed);

}  // namespace advl::nets
