#include "advl/metrics/ssim.hpp"

#include <algorithm>
#include <cmath>

#include "advl/core/error.hpp"

namespace advl::metrics {

SsimWindow ssim_window(const SsimParams& params, std::size_t height, std::size_t width) {
    SsimWindow w;
    if (height >= params.gaussian_side && width >= params.gaussian_side) {
        w.side = params.gaussian_side;
        const double c = static_cast<double>(w.side - 1) / 2.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < w.side; ++i) {
            const double d = static_cast<double>(i) - c;
            w.taps.push_back(std::exp(-d * d / (2.0 * params.gaussian_sigma * params.gaussian_sigma)));
            sum += w.taps.back();
        }
        for (auto& t : w.taps) t /= sum;
    } else {
        w.side = std::min({params.fallback_side, height, width});
        w.taps.assign(w.side, 1.0 / static_cast<double>(w.side));
    }
    w.weights.resize(w.side * w.side);
    for (std::size_t u = 0; u < w.side; ++u)
        for (std::size_t v = 0; v < w.side; ++v) w.weights[u * w.side + v] = w.taps[u] * w.taps[v];
    return w;
}

namespace {

// Valid-placement separable filter of a HxW plane.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t H, std::size_t W,
                                 const std::vector<double>& taps) {
    const std::size_t s = taps.size();
    const std::size_t Ho = H - s + 1, Wo = W - s + 1;
    std::vector<double> rows(H * Wo, 0.0);
    for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < Wo; ++j) {
            double acc = 0.0;
            for (std::size_t v = 0; v < s; ++v) acc += taps[v] * img[i * W + j + v];
            rows[i * Wo + j] = acc;
        }
    std::vector<double> out(Ho * Wo, 0.0);
    for (std::size_t i = 0; i < Ho; ++i)
        for (std::size_t j = 0; j < Wo; ++j) {
            double acc = 0.0;
            for (std::size_t u = 0; u < s; ++u) acc += taps[u] * rows[(i + u) * Wo + j];
            out[i * Wo + j] = acc;
        }
    return out;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b, const SsimParams& params) {
    require_same_shape(a, b, "ssim");
    if (a.rank() != 2) throw ShapeError("ssim expects HxW maps, got " + shape_to_string(a.shape()));
    const std::size_t H = a.dim(0), W = a.dim(1);
    const SsimWindow win = ssim_window(params, H, W);
    const double C1 = params.c1(), C2 = params.c2();

    const std::size_t n = a.size();
    std::vector<double> va(a.values()), vb(b.values()), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = va[i] * va[i];
        bb[i] = vb[i] * vb[i];
        ab[i] = va[i] * vb[i];
    }
    const auto mu_a = filter_valid(va, H, W, win.taps);
    const auto mu_b = filter_valid(vb, H, W, win.taps);
    const auto e_aa = filter_valid(aa, H, W, win.taps);
    const auto e_bb = filter_valid(bb, H, W, win.taps);
    const auto e_ab = filter_valid(ab, H, W, win.taps);

    double total = 0.0;
    for (std::size_t k = 0; k < mu_a.size(); ++k) {
        const double ma = mu_a[k], mb = mu_b[k];
        const double var_a = e_aa[k] - ma * ma;
        const double var_b = e_bb[k] - mb * mb;
        const double cov = e_ab[k] - ma * mb;
        const double num = (2.0 * ma * mb + C1) * (2.0 * cov + C2);
        const double den = (ma * ma + mb * mb + C1) * (var_a + var_b + C2);
        total += num / den;
    }
    return total / static_cast<double>(mu_a.size());
}

double nissim_from_ssim(double ssim_value) { return std::clamp((1.0 - ssim_value) / 2.0, 0.0, 1.0); }

double nissim(const Tensor& a, const Tensor& b, const SsimParams& params) {
    return nissim_from_ssim(ssim(a, b, params));
}

}  // namespace advl::metrics
