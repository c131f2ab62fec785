#include "advl/explain/gradcam.hpp"

#include <algorithm>
#include <cmath>

#include "advl/core/error.hpp"
#include "advl/core/pixmap.hpp"

namespace advl::explain {

std::size_t feature_layer(const NetworkSpec& spec, std::size_t conv_layer) {
    if (conv_layer >= spec.layers.size() || !std::holds_alternative<Conv2D>(spec.layers[conv_layer]))
        throw UsageError("layer " + std::to_string(conv_layer) + " is not a Conv2D layer of '" + spec.name + "'");
    if (conv_layer + 1 < spec.layers.size() && std::holds_alternative<ReLU>(spec.layers[conv_layer + 1]))
        return conv_layer + 1;
    return conv_layer;
}

std::size_t canonical_layer(const NetworkSpec& spec) {
    const auto ids = conv_layer_ids(spec);
    if (ids.empty()) throw UsageError("network '" + spec.name + "' has no convolutional layer");
    return ids.back();
}

CamTerms cam_terms(const Network& net, const Tape& tape, const GradientBundle& grads, std::size_t conv_layer) {
    const std::size_t f = feature_layer(net.spec, conv_layer);
    const Tensor& A = tape.output_of(f);
    const Tensor& dA = grads.activations.at(f);
    const std::size_t K = A.dim(0), H = A.dim(1), W = A.dim(2);
    const std::size_t plane = H * W;

    CamTerms t{A, std::vector<double>(K), Tensor({H, W})};
    for (std::size_t k = 0; k < K; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += dA[k * plane + i];
        t.alpha[k] = s / static_cast<double>(plane);
    }
    for (std::size_t i = 0; i < plane; ++i) {
        double v = 0.0;
        for (std::size_t k = 0; k < K; ++k) v += t.alpha[k] * A[k * plane + i];
        t.raw[i] = v > 0.0 ? v : 0.0;
    }
    return t;
}

Tensor upsample_bilinear(const Tensor& map, std::size_t out_h, std::size_t out_w) {
    if (map.rank() != 2) throw ShapeError("upsample_bilinear expects a HxW map");
    if (out_h == 0 || out_w == 0) throw ShapeError("upsample_bilinear: output size must be positive");
    const std::size_t H = map.dim(0), W = map.dim(1);
    if (H == out_h && W == out_w) return map;
    Tensor out({out_h, out_w});
    auto coord = [](std::size_t i, std::size_t in, std::size_t out) {
        if (in == 1 || out == 1) return 0.0;
        return static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
    };
    for (std::size_t i = 0; i < out_h; ++i) {
        const double y = coord(i, H, out_h);
        const auto y0 = std::min(static_cast<std::size_t>(y), H - 1);
        const std::size_t y1 = std::min(y0 + 1, H - 1);
        const double fy = y - static_cast<double>(y0);
        for (std::size_t j = 0; j < out_w; ++j) {
            const double x = coord(j, W, out_w);
            const auto x0 = std::min(static_cast<std::size_t>(x), W - 1);
            const std::size_t x1 = std::min(x0 + 1, W - 1);
            const double fx = x - static_cast<double>(x0);
            const double top = map.at(y0, x0) * (1.0 - fx) + map.at(y0, x1) * fx;
            const double bot = map.at(y1, x0) * (1.0 - fx) + map.at(y1, x1) * fx;
            out.at(i, j) = top * (1.0 - fy) + bot * fy;
        }
    }
    return out;
}

Tensor normalize_unit(const Tensor& map) {
    const auto [lo, hi] = std::minmax_element(map.data().begin(), map.data().end());
    Tensor out(map.shape());
    if (!(*hi > *lo)) return out;
    const double mn = *lo, range = *hi - *lo;
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = std::clamp((map[i] - mn) / range, 0.0, 1.0);
    return out;
}

namespace {

struct Explained {
    Tape tape;
    GradientBundle grads;
};

Explained explain_pass(const Network& net, const Tensor& x, std::size_t target_class, double seed_scale) {
    if (target_class >= net.spec.num_classes)
        throw UsageError("gradcam: target class " + std::to_string(target_class) + " out of range");
    Tape tape = forward(net, x);
    Tensor seed(tape.logits().shape());
    seed[target_class] = seed_scale;
    GradientBundle grads = backward(net, tape, seed);
    return {std::move(tape), std::move(grads)};
}

Heatmap finish(const Network& net, const Explained& e, std::size_t target_class, std::size_t layer_id) {
    const CamTerms t = cam_terms(net, e.tape, e.grads, layer_id);
    const Shape& in = net.spec.input_shape;
    Heatmap h;
    h.values = normalize_unit(upsample_bilinear(t.raw, in[1], in[2]));
    h.layer_id = layer_id;
    h.model = net.spec.name;
    h.target_class = target_class;
    return h;
}

}  // namespace

Heatmap gradcam(const Network& net, const Tensor& x, std::size_t target_class, std::size_t layer_id,
                double seed_scale) {
    (void)feature_layer(net.spec, layer_id);
    return finish(net, explain_pass(net, x, target_class, seed_scale), target_class, layer_id);
}

HeatmapStack gradcam_stack(const Network& net, const Tensor& x, std::size_t target_class) {
    const auto ids = conv_layer_ids(net.spec);
    if (ids.empty()) throw UsageError("network '" + net.spec.name + "' has no convolutional layer");
    const Explained e = explain_pass(net, x, target_class, 1.0);
    HeatmapStack stack;
    for (auto id : ids) stack.push_back(finish(net, e, target_class, id));
    return stack;
}

void export_heatmap(const Heatmap& heatmap, const std::filesystem::path& path, ExportMode mode) {
    const Tensor& v = heatmap.values;
    if (v.rank() != 2) throw ShapeError("export_heatmap expects a HxW map");
    if (mode == ExportMode::Gray) {
        pixmap::write(path, pixmap::from_gray(v, 255));
        return;
    }
    pixmap::Image img{v.dim(1), v.dim(0), 3, 255, {}};
    img.samples.reserve(v.size() * 3);
    for (double x : v.data()) {
        const double c = std::clamp(x, 0.0, 1.0);
        img.samples.push_back(static_cast<std::uint16_t>(std::lround(255.0 * c)));
        img.samples.push_back(0);
        img.samples.push_back(static_cast<std::uint16_t>(std::lround(255.0 * (1.0 - c))));
    }
    pixmap::write(path, img);
}

Tensor read_gray_heatmap(const std::filesystem::path& path) {
    const Tensor t = pixmap::to_tensor(pixmap::read(path));
    return t.reshaped({t.dim(1), t.dim(2)});
}

}  // namespace advl::explain
