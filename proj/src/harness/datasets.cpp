#include "advl/harness/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include "advl/core/error.hpp"
#include "advl/core/pixmap.hpp"
#include "advl/core/random.hpp"

namespace advl::harness {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

// Pattern intensities of the synthetic generator.
constexpr double kBackground = 0.2;
constexpr double kBarAmplitude = 0.2;
constexpr double kBlobAmplitude = 0.2;

std::vector<unsigned char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at, const char* file, const char* what) {
    if (b.size() < at + 4)
        throw FormatError(std::string("idx ") + file + ": truncated header reading " + what, b.size());
    return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
           std::uint32_t{b[at + 3]};
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

}  // namespace

Dataset parse_idx(const std::vector<unsigned char>& ib, const std::vector<unsigned char>& lb) {
    const std::uint32_t im = be32(ib, 0, "images", "magic");
    if (im != kImageMagic)
        throw FormatError("idx images: bad magic " + hex32(im) + " (expected " + hex32(kImageMagic) + ")", 0);
    const std::uint32_t lm = be32(lb, 0, "labels", "magic");
    if (lm != kLabelMagic)
        throw FormatError("idx labels: bad magic " + hex32(lm) + " (expected " + hex32(kLabelMagic) + ")", 0);
    const std::uint32_t n = be32(ib, 4, "images", "count");
    const std::uint32_t rows = be32(ib, 8, "images", "rows");
    const std::uint32_t cols = be32(ib, 12, "images", "cols");
    const std::uint32_t nl = be32(lb, 4, "labels", "count");
    if (rows == 0 || cols == 0) throw FormatError("idx images: zero image dimension", 8);
    if (n != nl)
        throw FormatError("idx: image count " + std::to_string(n) + " does not match label count " +
                              std::to_string(nl),
                          4);
    const std::size_t plane = std::size_t{rows} * cols;
    const std::size_t need_images = 16 + std::size_t{n} * plane;
    if (ib.size() < need_images)
        throw FormatError("idx images: truncated pixel data, expected " + std::to_string(need_images) + " bytes",
                          ib.size());
    if (ib.size() > need_images) throw FormatError("idx images: trailing bytes", need_images);
    if (lb.size() < 8 + std::size_t{n}) throw FormatError("idx labels: truncated label data", lb.size());
    if (lb.size() > 8 + std::size_t{n}) throw FormatError("idx labels: trailing bytes", 8 + std::size_t{n});

    Dataset d;
    d.images.reserve(n);
    d.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Tensor t({1, rows, cols});
        for (std::size_t k = 0; k < plane; ++k) t[k] = static_cast<double>(ib[16 + i * plane + k]) / 255.0;
        d.images.push_back(std::move(t));
        d.labels.push_back(lb[8 + i]);
    }
    return d;
}

Dataset load_idx(const fs::path& images, const fs::path& labels) {
    return parse_idx(read_bytes(images), read_bytes(labels));
}

Dataset load_pixmap_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("pixmap dataset directory not found: " + dir.string());
    std::vector<std::pair<fs::path, std::size_t>> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (name.empty() || name.find_first_not_of("0123456789") != std::string::npos)
            throw FormatError("pixmap dataset: class directory '" + name + "' is not an integer label", 0);
        for (const auto& f : fs::directory_iterator(entry.path()))
            if (f.is_regular_file() && f.path().extension() == ".pgm") files.emplace_back(f.path(), std::stoul(name));
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw FormatError("pixmap dataset: no .pgm files under " + dir.string(), 0);
    Dataset d;
    for (const auto& [path, label] : files) {
        Tensor t = pixmap::to_tensor(pixmap::read(path));
        if (!d.images.empty() && t.shape() != d.images.front().shape())
            throw FormatError("pixmap dataset: " + path.string() + " differs in size from the first image", 0);
        d.images.push_back(std::move(t));
        d.labels.push_back(label);
    }
    return d;
}

Dataset synth_dataset(std::size_t classes, std::size_t per_class, std::size_t height, std::size_t width,
                      std::uint64_t seed, double noise) {
    if (classes < 2) throw UsageError("synth_dataset: need at least two classes");
    if (height < 16 || width < 16) throw UsageError("synth_dataset: images must be at least 16x16");
    if (!(noise >= 0.0)) throw UsageError("synth_dataset: noise must be non-negative");

    const double cy = (static_cast<double>(height) - 1.0) / 2.0;
    const double cx = (static_cast<double>(width) - 1.0) / 2.0;
    const double r = static_cast<double>(std::min(height, width));
    const double half_len = 0.3 * r;
    const double ring = 0.3 * r;
    const double sigma = r / 14.0;

    std::vector<Tensor> patterns;
    for (std::size_t c = 0; c < classes; ++c) {
        const double theta = std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
        const double dy = std::sin(theta), dx = std::cos(theta);
        const double by = cy + ring * std::sin(phi), bx = cx + ring * std::cos(phi);
        Tensor p({1, height, width}, kBackground);
        for (std::size_t i = 0; i < height; ++i) {
            for (std::size_t j = 0; j < width; ++j) {
                const double y = static_cast<double>(i) - cy, x = static_cast<double>(j) - cx;
                const double along = y * dy + x * dx;
                const double across = std::abs(-y * dx + x * dy);
                // Anti-aliased bar about 2 px thick.
                const double bar = std::abs(along) <= half_len ? std::clamp(1.5 - across, 0.0, 1.0) : 0.0;
                const double qy = static_cast<double>(i) - by, qx = static_cast<double>(j) - bx;
                const double blob = std::exp(-(qy * qy + qx * qx) / (2.0 * sigma * sigma));
                p.at(0, i, j) += kBarAmplitude * bar + kBlobAmplitude * blob;
            }
        }
        patterns.push_back(std::move(p));
    }

    Rng rng(seed);
    Dataset d;
    d.images.reserve(classes * per_class);
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t k = 0; k < per_class; ++k) {
            Tensor img = patterns[c];
            for (auto& v : img.data()) v = std::clamp(v + rng.uniform(-noise, noise), 0.0, 1.0);
            d.images.push_back(std::move(img));
            d.labels.push_back(c);
        }
    }
    return d;
}

SplitDataset split(const Dataset& data, const std::array<double, 3>& f, std::uint64_t seed) {
    if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
    for (double x : f)
        if (!(x >= 0.0)) throw ConfigError("split fractions must be non-negative");
    const std::size_t n = data.size();
    // The small slack keeps products like 0.29 * 100 from flooring to 28.
    const auto n_train = static_cast<std::size_t>(std::floor(f[0] * static_cast<double>(n) + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(f[1] * static_cast<double>(n) + 1e-9));
    if (n_train + n_val > n) throw ConfigError("split fractions exceed the dataset");
    const std::size_t n_test = n - n_train - n_val;
    if (n_train == 0 || n_val == 0 || n_test == 0)
        throw ConfigError("split of " + std::to_string(n) + " samples leaves an empty partition (" +
                          std::to_string(n_train) + "/" + std::to_string(n_val) + "/" + std::to_string(n_test) + ")");
    Rng rng(seed);
    const auto order = shuffled_indices(n, rng);
    SplitDataset s;
    for (std::size_t k = 0; k < n; ++k) {
        Dataset& dst = k < n_train ? s.train : (k < n_train + n_val ? s.val : s.test);
        dst.images.push_back(data.images[order[k]]);
        dst.labels.push_back(data.labels[order[k]]);
    }
    return s;
}

}  // namespace advl::harness
