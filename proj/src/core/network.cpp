#include "advl/core/network.hpp"

#include "advl/core/error.hpp"
#include "advl/core/ops.hpp"

namespace advl {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

std::string layer_context(std::size_t index, LayerKind kind) {
    return "layer " + std::to_string(index) + " (" + kind_name(kind) + ")";
}

}  // namespace

LayerKind kind_of(const LayerSpec& layer) { return static_cast<LayerKind>(layer.index()); }

const char* kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv2D: return "Conv2D";
        case LayerKind::ReLU: return "ReLU";
        case LayerKind::MaxPool2: return "MaxPool2";
        case LayerKind::Flatten: return "Flatten";
        case LayerKind::Dense: return "Dense";
    }
    return "?";
}

std::vector<Shape> infer_shapes(const NetworkSpec& spec) {
    if (spec.input_shape.size() != 3)
        throw ShapeError("network input shape must be CxHxW, got " + shape_to_string(spec.input_shape));
    for (auto d : spec.input_shape)
        if (d == 0) throw ShapeError("network input dimensions must be positive");
    if (spec.num_classes == 0) throw ShapeError("network must have at least one class");
    if (spec.layers.empty()) throw ShapeError("network has no layers");

    std::vector<Shape> shapes;
    Shape cur = spec.input_shape;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto ctx = layer_context(i, kind_of(spec.layers[i]));
        cur = std::visit(
            Overloaded{
                [&](const Conv2D& c) -> Shape {
                    if (cur.size() != 3) throw ShapeError(ctx + ": expects CxHxW input, got " + shape_to_string(cur));
                    if (c.out_channels == 0 || c.kernel == 0 || c.stride == 0)
                        throw ShapeError(ctx + ": sizes must be positive");
                    try {
                        return {c.out_channels, ops::conv_output_dim(cur[1], c.kernel, c.stride, c.padding),
                                ops::conv_output_dim(cur[2], c.kernel, c.stride, c.padding)};
                    } catch (const ShapeError& e) {
                        throw ShapeError(ctx + ": " + e.what());
                    }
                },
                [&](const ReLU&) -> Shape { return cur; },
                [&](const MaxPool2&) -> Shape {
                    if (cur.size() != 3) throw ShapeError(ctx + ": expects CxHxW input, got " + shape_to_string(cur));
                    return {cur[0], (cur[1] + 1) / 2, (cur[2] + 1) / 2};
                },
                [&](const Flatten&) -> Shape { return {shape_size(cur)}; },
                [&](const Dense& d) -> Shape {
                    if (cur.size() != 1) throw ShapeError(ctx + ": expects a flat input, got " + shape_to_string(cur));
                    if (d.units == 0) throw ShapeError(ctx + ": units must be positive");
                    return {d.units};
                },
            },
            spec.layers[i]);
        shapes.push_back(cur);
    }
    const auto* last = std::get_if<Dense>(&spec.layers.back());
    if (!last || last->units != spec.num_classes)
        throw ShapeError("final layer must be Dense(" + std::to_string(spec.num_classes) + ")");
    return shapes;
}

void validate(const NetworkSpec& spec) { (void)infer_shapes(spec); }

std::vector<std::size_t> conv_layer_ids(const NetworkSpec& spec) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (std::holds_alternative<Conv2D>(spec.layers[i])) ids.push_back(i);
    return ids;
}

std::vector<std::pair<Shape, Shape>> parameter_shapes(const NetworkSpec& spec) {
    const auto shapes = infer_shapes(spec);
    std::vector<std::pair<Shape, Shape>> out;
    Shape in = spec.input_shape;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (const auto* c = std::get_if<Conv2D>(&spec.layers[i]))
            out.push_back({{c->out_channels, in[0], c->kernel, c->kernel}, {c->out_channels}});
        else if (const auto* d = std::get_if<Dense>(&spec.layers[i]))
            out.push_back({{d->units, in[0]}, {d->units}});
        else
            out.push_back({});
        in = shapes[i];
    }
    return out;
}

std::size_t parameter_count(const NetworkSpec& spec) {
    std::size_t n = 0;
    for (const auto& [w, b] : parameter_shapes(spec))
        if (!w.empty()) n += shape_size(w) + shape_size(b);
    return n;
}

Network Network::zeros(NetworkSpec spec) {
    Network net;
    for (const auto& [w, b] : parameter_shapes(spec)) {
        if (w.empty())
            net.params.emplace_back();
        else
            net.params.push_back({Tensor(w), Tensor(b)});
    }
    net.spec = std::move(spec);
    return net;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.weights.size() + p.bias.size();
    return n;
}

}  // namespace advl
