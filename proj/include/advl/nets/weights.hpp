#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "advl/core/network.hpp"

namespace advl::nets {

// Binary weight file, little-endian throughout:
//   "ADVL" | u32 version=1 | spec | f64 params
// spec = u32 name_len, name bytes, u32 C, H, W, u32 num_classes,
//        u32 layer_count, then per layer a u8 kind followed by
//        Conv2D: u32 out_channels, kernel, stride, padding
//        Dense:  u32 units
// params = for each parameterized layer, weights row-major then biases.
inline constexpr std::uint32_t kWeightFormatVersion = 1;

std::vector<unsigned char> serialize_weights(const Network& net);
Network deserialize_weights(const std::vector<unsigned char>& bytes);

void save_weights(const Network& net, const std::filesystem::path& path);
Network load_weights(const std::filesystem::path& path);

// Byte length of the header (magic, version, spec) for `spec`.
std::size_t weight_header_size(const NetworkSpec& spec);

}  // namespace advl::nets
