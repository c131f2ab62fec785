#pragma once

#include <cstddef>
#include <vector>

#include "advl/core/tensor.hpp"

namespace advl::metrics {

struct SsimParams {
    std::size_t gaussian_side = 11;
    double gaussian_sigma = 1.5;
    // Uniform window side cap used when an image is smaller than the
    // Gaussian window in either dimension.
    std::size_t fallback_side = 7;
    double dynamic_range = 1.0;
    double k1 = 0.01;
    double k2 = 0.03;

    double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

/// Square window of weights summing to 1.
struct SsimWindow {
    std::size_t side = 0;
    std::vector<double> weights;  // side x side, row-major
    // Separable factor: weights[u * side + v] == taps[u] * taps[v].
    std::vector<double> taps;
};

SsimWindow ssim_window(const SsimParams& params, std::size_t height, std::size_t width);

// Mean SSIM over every valid window placement (stride 1). Inputs are HxW
// maps with values in [0, dynamic_range].
double ssim(const Tensor& a, const Tensor& b, const SsimParams& params = {});

// (1 - ssim) / 2, in [0, 1] with 0 for identical maps.
double nissim_from_ssim(double ssim_value);
double nissim(const Tensor& a, const Tensor& b, const SsimParams& params = {});

}  // namespace advl::metrics
