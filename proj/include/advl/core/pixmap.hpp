#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "advl/core/tensor.hpp"

// Binary netpbm images: P5 (gray) and P6 (RGB).
namespace advl::pixmap {

struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;  // 1 for P5, 3 for P6
    unsigned maxval = 255;
    std::vector<std::uint16_t> samples;  // row-major, interleaved channels
};

Image read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Image& image);

// Quantizes a HxW tensor in [0,1] to gray samples: round(maxval * v).
Image from_gray(const Tensor& values, unsigned maxval = 255);
// Gray image to a 1xHxW tensor in [0,1].
Tensor to_tensor(const Image& image);

}  // namespace advl::pixmap
