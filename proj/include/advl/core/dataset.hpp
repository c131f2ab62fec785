#pragma once

#include <cstddef>
#include <vector>

#include "advl/core/tensor.hpp"

namespace advl {

/// Images (CxHxW, values in [0,1]) with class labels.
struct Dataset {
    std::vector<Tensor> images;
    std::vector<std::size_t> labels;

    std::size_t size() const noexcept { return images.size(); }
    bool empty() const noexcept { return images.empty(); }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace advl
