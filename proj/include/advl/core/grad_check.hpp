#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "advl/core/network.hpp"
#include "advl/core/tensor.hpp"

namespace advl {

struct GradCheckOptions {
    // When set, at most this many coordinates are drawn per tensor (input and
    // each weight/bias), uniformly with the given seed. Otherwise all.
    std::optional<std::size_t> max_coords_per_tensor;
    std::uint64_t seed = 0;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    // Coordinates whose +-h stencil crosses a ReLU kink or flips a pool argmax.
    std::size_t skipped_nonsmooth = 0;
};

// Compares backward_xent against central differences of the loss.
// Per-coordinate error is |analytic - fd| / max(1e-12, |fd|).
GradCheckReport grad_check_report(const Network& net, const Tensor& input, std::size_t true_class,
                                  double h, const GradCheckOptions& options = {});

double grad_check(const Network& net, const Tensor& input, std::size_t true_class, double h,
                  const GradCheckOptions& options = {});

}  // namespace advl
