#include "advl/core/pixmap.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "advl/core/error.hpp"

namespace advl::pixmap {

namespace {

class HeaderReader {
public:
    HeaderReader(const std::vector<unsigned char>& bytes, std::size_t start) : b_(bytes), pos_(start) {}

    std::size_t pos() const { return pos_; }

    void skip_space_and_comments() {
        while (pos_ < b_.size()) {
            if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else if (std::isspace(b_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::size_t number(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        std::size_t v = 0;
        while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
            v = v * 10 + static_cast<std::size_t>(b_[pos_] - '0');
            if (v > 1u << 24) throw FormatError(std::string("pixmap ") + what + " too large", start);
            ++pos_;
        }
        if (pos_ == start) throw FormatError(std::string("pixmap: expected ") + what, start);
        return v;
    }

    // Exactly one whitespace byte separates the header from the raster.
    void single_space() {
        if (pos_ >= b_.size() || !std::isspace(b_[pos_]))
            throw FormatError("pixmap: expected whitespace before raster", pos_);
        ++pos_;
    }

private:
    const std::vector<unsigned char>& b_;
    std::size_t pos_ = 0;
};

}  // namespace

Image read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw FormatError("pixmap: bad magic in " + path.string() + " (expected P5 or P6)", 0);
    Image img;
    img.channels = bytes[1] == '5' ? 1 : 3;
    HeaderReader hr(bytes, 2);
    img.width = hr.number("width");
    img.height = hr.number("height");
    const std::size_t maxval = hr.number("maxval");
    if (img.width == 0 || img.height == 0) throw FormatError("pixmap: zero dimension", hr.pos());
    if (maxval == 0 || maxval > 65535) throw FormatError("pixmap: maxval out of range", hr.pos());
    img.maxval = static_cast<unsigned>(maxval);
    hr.single_space();

    const std::size_t bps = img.maxval > 255 ? 2 : 1;
    const std::size_t count = img.width * img.height * img.channels;
    const std::size_t start = hr.pos();
    if (bytes.size() - start < count * bps)
        throw FormatError("pixmap: truncated raster in " + path.string(), bytes.size());
    img.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t o = start + i * bps;
        img.samples[i] = bps == 1 ? bytes[o] : static_cast<std::uint16_t>((bytes[o] << 8) | bytes[o + 1]);
        if (img.samples[i] > img.maxval) throw FormatError("pixmap: sample exceeds maxval", o);
    }
    return img;
}

void write(const std::filesystem::path& path, const Image& image) {
    if (image.samples.size() != image.width * image.height * image.channels)
        throw UsageError("pixmap: sample count does not match dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << (image.channels == 1 ? "P5" : "P6") << '\n'
        << image.width << ' ' << image.height << '\n'
        << image.maxval << '\n';
    std::string raster;
    const bool wide = image.maxval > 255;
    raster.reserve(image.samples.size() * (wide ? 2 : 1));
    for (auto s : image.samples) {
        if (wide) raster.push_back(static_cast<char>(s >> 8));
        raster.push_back(static_cast<char>(s & 0xff));
    }
    out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

Image from_gray(const Tensor& values, unsigned maxval) {
    if (values.rank() != 2) throw ShapeError("pixmap: gray export expects a HxW tensor");
    Image img{values.dim(1), values.dim(0), 1, maxval, {}};
    img.samples.reserve(values.size());
    for (double v : values.data()) {
        const double c = std::min(1.0, std::max(0.0, v));
        img.samples.push_back(static_cast<std::uint16_t>(std::lround(c * maxval)));
    }
    return img;
}

Tensor to_tensor(const Image& image) {
    if (image.channels != 1) throw FormatError("pixmap: expected a gray (P5) image", 0);
    Tensor t({1, image.height, image.width});
    for (std::size_t i = 0; i < image.samples.size(); ++i)
        t[i] = static_cast<double>(image.samples[i]) / image.maxval;
    return t;
}

}  // namespace advl::pixmap
