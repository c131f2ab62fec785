#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "advl/core/dataset.hpp"

namespace advl::harness {

struct SplitDataset {
    Dataset train;
    Dataset val;
    Dataset test;
};

// IDX pair: images magic 0x00000803 (u32 count, rows, cols, u8 pixels) and
// labels magic 0x00000801 (u32 count, u8 labels), big-endian headers.
// Pixels are divided by 255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
Dataset parse_idx(const std::vector<unsigned char>& image_bytes, const std::vector<unsigned char>& label_bytes);

// <dir>/<label>/<name>.pgm, gray P5 images of equal size. Labels are the
// integer directory names; files are taken in sorted path order.
Dataset load_pixmap_dir(const std::filesystem::path& dir);

// Class c draws an oriented bar (angle pi * c / classes) through the centre
// and a Gaussian blob on a ring at angle 2 pi * c / classes, then adds
// uniform noise in [-noise, noise] and clips to [0,1].
Dataset synth_dataset(std::size_t classes, std::size_t per_class, std::size_t height, std::size_t width,
                      std::uint64_t seed, double noise = 0.1);

// Seeded shuffle then contiguous split. Train and val sizes are
// floor(fraction * n); test takes the remainder. Empty splits are rejected.
SplitDataset split(const Dataset& data, const std::array<double, 3>& fractions, std::uint64_t seed);

}  // namespace advl::harness
