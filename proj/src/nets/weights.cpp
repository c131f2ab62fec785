#include "advl/nets/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "advl/core/error.hpp"

namespace advl::nets {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'V', 'L'};

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint64_t v) {
        if (v > 0xffffffffULL) throw UsageError("weight file: value does not fit in u32");
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void f64(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<unsigned char>(bits >> (8 * i)));
    }
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    std::vector<unsigned char> take() { return std::move(out_); }

private:
    std::vector<unsigned char> out_;
};

class Reader {
public:
    explicit Reader(const std::vector<unsigned char>& b) : b_(b) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return b_.size() - pos_; }

    void need(std::size_t n, const char* what) {
        if (remaining() < n) throw FormatError(std::string("weight file truncated while reading ") + what, pos_);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return b_[pos_++];
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
        return std::bit_cast<double>(v);
    }
    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }

private:
    const std::vector<unsigned char>& b_;
    std::size_t pos_ = 0;
};

void write_spec(Writer& w, const NetworkSpec& spec) {
    w.u32(spec.name.size());
    w.bytes(spec.name.data(), spec.name.size());
    for (auto d : spec.input_shape) w.u32(d);
    w.u32(spec.num_classes);
    w.u32(spec.layers.size());
    for (const auto& layer : spec.layers) {
        w.u8(static_cast<std::uint8_t>(kind_of(layer)));
        if (const auto* c = std::get_if<Conv2D>(&layer)) {
            w.u32(c->out_channels);
            w.u32(c->kernel);
            w.u32(c->stride);
            w.u32(c->padding);
        } else if (const auto* d = std::get_if<Dense>(&layer)) {
            w.u32(d->units);
        }
    }
}

NetworkSpec read_spec(Reader& r) {
    NetworkSpec spec;
    const std::uint32_t name_len = r.u32("name length");
    if (name_len > 4096) throw FormatError("weight file: implausible name length", r.pos() - 4);
    spec.name = r.str(name_len, "name");
    spec.input_shape = {r.u32("input channels"), r.u32("input height"), r.u32("input width")};
    spec.num_classes = r.u32("class count");
    const std::uint32_t count = r.u32("layer count");
    if (count > 4096) throw FormatError("weight file: implausible layer count", r.pos() - 4);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t at = r.pos();
        switch (static_cast<LayerKind>(r.u8("layer kind"))) {
            case LayerKind::Conv2D: {
                Conv2D c;
                c.out_channels = r.u32("conv channels");
                c.kernel = r.u32("conv kernel");
                c.stride = r.u32("conv stride");
                c.padding = r.u32("conv padding");
                spec.layers.emplace_back(c);
                break;
            }
            case LayerKind::ReLU: spec.layers.emplace_back(ReLU{}); break;
            case LayerKind::MaxPool2: spec.layers.emplace_back(MaxPool2{}); break;
            case LayerKind::Flatten: spec.layers.emplace_back(Flatten{}); break;
            case LayerKind::Dense: spec.layers.emplace_back(Dense{r.u32("dense units")}); break;
            default: throw FormatError("weight file: unknown layer kind", at);
        }
    }
    return spec;
}

}  // namespace

std::size_t weight_header_size(const NetworkSpec& spec) {
    Writer w;
    w.bytes(kMagic, 4);
    w.u32(kWeightFormatVersion);
    write_spec(w, spec);
    return w.take().size();
}

std::vector<unsigned char> serialize_weights(const Network& net) {
    validate(net.spec);
    Writer w;
    w.bytes(kMagic, 4);
    w.u32(kWeightFormatVersion);
    write_spec(w, net.spec);
    const auto shapes = parameter_shapes(net.spec);
    if (net.params.size() != shapes.size()) throw UsageError("network parameter slots do not match its spec");
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        if (shapes[l].first.empty()) continue;
        if (net.params[l].weights.shape() != shapes[l].first || net.params[l].bias.shape() != shapes[l].second)
            throw UsageError("layer " + std::to_string(l) + " parameters do not match its spec");
        for (double v : net.params[l].weights.data()) w.f64(v);
        for (double v : net.params[l].bias.data()) w.f64(v);
    }
    return w.take();
}

Network deserialize_weights(const std::vector<unsigned char>& bytes) {
    Reader r(bytes);
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("weight file: bad magic", 0);
    r.str(4, "magic");
    const std::uint32_t version = r.u32("version");
    if (version != kWeightFormatVersion)
        throw FormatError("weight file: unsupported version " + std::to_string(version), 4);
    const std::size_t spec_at = r.pos();
    NetworkSpec spec = read_spec(r);
    try {
        validate(spec);
    } catch (const ShapeError& e) {
        throw FormatError(std::string("weight file: invalid network spec: ") + e.what(), spec_at);
    }
    const std::size_t header = r.pos();
    const std::size_t expected = header + 8 * parameter_count(spec);
    if (bytes.size() < expected)
        throw FormatError("weight file truncated: expected " + std::to_string(expected) + " bytes, found " +
                              std::to_string(bytes.size()),
                          bytes.size());
    if (bytes.size() > expected)
        throw FormatError("weight file has " + std::to_string(bytes.size() - expected) + " trailing bytes", expected);

    Network net = Network::zeros(std::move(spec));
    for (auto& p : net.params) {
        if (p.empty()) continue;
        for (auto& v : p.weights.data()) v = r.f64("weights");
        for (auto& v : p.bias.data()) v = r.f64("biases");
    }
    return net;
}

void save_weights(const Network& net, const std::filesystem::path& path) {
    const auto bytes = serialize_weights(net);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write weights to " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

Network load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open weights " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_weights(bytes);
}

}  // namespace advl::nets
