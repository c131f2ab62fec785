#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "advl/core/network.hpp"
#include "advl/core/tape.hpp"
#include "advl/core/tensor.hpp"

namespace advl::explain {

/// Normalized participation map at input resolution. 0 is no participation,
/// 1 the strongest.
struct Heatmap {
    Tensor values;  // HxW, each in [0,1]
    std::size_t layer_id = 0;
    std::size_t sample_id = 0;
    double epsilon = 0.0;
    std::string model;
    std::size_t target_class = 0;
};

using HeatmapStack = std::vector<Heatmap>;

// Layer whose output is the explained feature map for conv layer
// `conv_layer`: the ReLU directly after it when present, else the conv itself.
std::size_t feature_layer(const NetworkSpec& spec, std::size_t conv_layer);

// Last Conv2D layer.
std::size_t canonical_layer(const NetworkSpec& spec);

/// Intermediate Grad-CAM quantities for one conv layer.
struct CamTerms {
    Tensor feature_map;          // A, KxhxW'
    std::vector<double> alpha;   // spatial mean of d y_c / d A_k
    Tensor raw;                  // ReLU(sum_k alpha_k A_k), hxw
};

// Uses a recorded forward pass and the gradients of the logit seed.
CamTerms cam_terms(const Network& net, const Tape& tape, const GradientBundle& grads, std::size_t conv_layer);

// Align-corners bilinear resize of a HxW map.
Tensor upsample_bilinear(const Tensor& map, std::size_t out_h, std::size_t out_w);

// (v - min) / (max - min); all zeros when max == min.
Tensor normalize_unit(const Tensor& map);

// Grad-CAM of logit `target_class` at conv layer `layer_id`. `seed_scale`
// multiplies the one-hot logit seed.
Heatmap gradcam(const Network& net, const Tensor& x, std::size_t target_class, std::size_t layer_id,
                double seed_scale = 1.0);

// One heatmap per conv layer, in layer order, from a single forward/backward.
HeatmapStack gradcam_stack(const Network& net, const Tensor& x, std::size_t target_class);

enum class ExportMode { Gray, Pseudocolor };

// Gray: 8-bit P5, round(255 v). Pseudocolor: 8-bit P6 on a blue-to-red ramp,
// (round(255 v), 0, round(255 (1 - v))).
void export_heatmap(const Heatmap& heatmap, const std::filesystem::path& path, ExportMode mode);

// Reads a P5 heatmap back as HxW values in [0,1].
Tensor read_gray_heatmap(const std::filesystem::path& path);

}  // namespace advl::explain
