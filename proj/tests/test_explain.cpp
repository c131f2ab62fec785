#include <doctest.h>

#include <cmath>

#include "advl/core/error.hpp"
#include "advl/core/pixmap.hpp"
#include "advl/core/tape.hpp"
#include "advl/explain/gradcam.hpp"
#include "advl/nets/toy_nets.hpp"
#include "oracles.hpp"

using namespace advl;

namespace {

// Conv(2) -> ReLU -> Flatten -> Dense(4) -> ReLU -> Dense(3). No pool, so the
// logits are differentiable in the feature map away from the dense kinks.
Network two_channel_net(std::uint64_t seed) {
    NetworkSpec s{"two", {1, 6, 6}, {Conv2D{2, 3, 1, 1}, ReLU{}, Flatten{}, Dense{4}, ReLU{}, Dense{3}}, 3};
    Network net = Network::zeros(s);
    Rng rng(seed);
    for (auto& p : net.params) {
        for (auto& w : p.weights.data()) w = rng.uniform(-1, 1);
        for (auto& b : p.bias.data()) b = rng.uniform(0.05, 0.2);
    }
    return net;
}

// Single conv channel followed by a dense layer whose class-0 row is `g`.
Network uniform_grad_net(double g) {
    NetworkSpec s{"uni", {1, 5, 5}, {Conv2D{1, 3, 1, 1}, ReLU{}, Flatten{}, Dense{2}}, 2};
    Network net = Network::zeros(s);
    Rng rng(3);
    for (auto& w : net.params[0].weights.data()) w = rng.uniform(0.1, 1.0);
    net.params[3].weights = Tensor({2, 25}, 0.0);
    for (std::size_t i = 0; i < 25; ++i) net.params[3].weights.at(0, i) = g;
    return net;
}

explain::Heatmap heat(Tensor values) {
    explain::Heatmap h;
    h.values = std::move(values);
    return h;
}

Tensor plane(const Tensor& t, std::size_t k) {
    const std::size_t H = t.dim(1), W = t.dim(2);
    Tensor out({H, W});
    for (std::size_t i = 0; i < H * W; ++i) out[i] = t[k * H * W + i];
    return out;
}

}  // namespace

TEST_CASE("alpha weights match finite-difference logit derivatives") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const Network net = two_channel_net(seed);
        Rng rng(seed);
        const Tensor x = oracle::random_tensor({1, 6, 6}, rng, 0, 1);
        for (std::size_t c = 0; c < 3; ++c) {
            const Tape tape = forward(net, x);
            Tensor seed_vec({3});
            seed_vec[c] = 1.0;
            const auto grads = backward(net, tape, seed_vec);
            const auto terms = explain::cam_terms(net, tape, grads, 0);

            // Perturb the feature map (ReLU output, layer 1) and re-run the tail.
            const Tensor A = tape.output_of(1);
            const double h = 1e-5;
            std::vector<double> alpha_fd(2, 0.0);
            Tensor Ap = A;
            for (std::size_t i = 0; i < A.size(); ++i) {
                Ap[i] = A[i] + h;
                const double up = forward_from(net, 2, Ap)[c];
                Ap[i] = A[i] - h;
                const double down = forward_from(net, 2, Ap)[c];
                Ap[i] = A[i];
                alpha_fd[i / 36] += (up - down) / (2 * h) / 36.0;
            }
            for (std::size_t k = 0; k < 2; ++k)
                CHECK(std::abs(terms.alpha[k] - alpha_fd[k]) <= 1e-6 * std::max(1e-12, std::abs(alpha_fd[k])) + 1e-12);

            // Hand-composed map from the finite-difference weights.
            Tensor raw({6, 6});
            for (std::size_t i = 0; i < 36; ++i)
                raw[i] = std::max(0.0, alpha_fd[0] * plane(A, 0)[i] + alpha_fd[1] * plane(A, 1)[i]);
            double lo = raw[0], hi = raw[0];
            for (double v : raw.data()) lo = std::min(lo, v), hi = std::max(hi, v);
            const auto hm = explain::gradcam(net, x, c, 0);
            for (std::size_t i = 0; i < 36; ++i) {
                const double want = hi > lo ? (raw[i] - lo) / (hi - lo) : 0.0;
                CHECK(std::abs(hm.values[i] - want) <= 1e-6);
            }
        }
    }
}

TEST_CASE("uniform positive gradient gives the normalized feature map") {
    const Network net = uniform_grad_net(0.7);
    Rng rng(4);
    const Tensor x = oracle::random_tensor({1, 5, 5}, rng, 0, 1);
    const auto hm = explain::gradcam(net, x, 0, 0);
    const Tensor A = forward(net, x).output_of(1).reshaped({5, 5});
    const Tensor want = explain::normalize_unit(A);
    CHECK(max_abs_diff(hm.values, want) <= 1e-12);
}

TEST_CASE("negative gradients give the all-zero heatmap") {
    const Network net = uniform_grad_net(-0.7);
    Rng rng(5);
    const auto hm = explain::gradcam(net, oracle::random_tensor({1, 5, 5}, rng, 0, 1), 0, 0);
    CHECK(hm.values == Tensor({5, 5}, 0.0));
}

TEST_CASE("heatmaps lie in [0,1] and reach both ends") {
    for (const std::string name : {"deep", "wide"}) {
        const Network net = nets::init_params(nets::build_toy(name, {1, 16, 16}, 4), 6);
        Rng rng(6);
        for (int trial = 0; trial < 5; ++trial) {
            const Tensor x = oracle::random_tensor({1, 16, 16}, rng, 0, 1);
            for (const auto& h : explain::gradcam_stack(net, x, argmax_class(predict_logits(net, x)))) {
                REQUIRE(h.values.shape() == Shape{16, 16});
                double lo = 1, hi = 0;
                for (double v : h.values.data()) {
                    CHECK(v >= 0.0);
                    CHECK(v <= 1.0);
                    lo = std::min(lo, v), hi = std::max(hi, v);
                }
                if (hi > 0) {
                    CHECK(lo == 0.0);
                    CHECK(hi == 1.0);
                }
            }
        }
    }
}

TEST_CASE("stacks have one map per conv layer and equal single calls") {
    const Network deep = nets::init_params(nets::build_deep_toy({1, 16, 16}, 3), 7);
    const Network wide = nets::init_params(nets::build_wide_toy({1, 16, 16}, 3), 7);
    Rng rng(7);
    const Tensor x = oracle::random_tensor({1, 16, 16}, rng, 0, 1);
    const auto ds = explain::gradcam_stack(deep, x, 1);
    const auto ws = explain::gradcam_stack(wide, x, 1);
    REQUIRE(ds.size() == 6);
    REQUIRE(ws.size() == 2);
    const auto ids = conv_layer_ids(deep.spec);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds[i].layer_id == ids[i]);
        CHECK(ds[i].values == explain::gradcam(deep, x, 1, ids[i]).values);
    }
    CHECK(explain::canonical_layer(deep.spec) == ids.back());
}

TEST_CASE("heatmaps ignore a positive seed scale") {
    const Network net = nets::init_params(nets::build_wide_toy({1, 16, 16}, 3), 8);
    Rng rng(8);
    const Tensor x = oracle::random_tensor({1, 16, 16}, rng, 0, 1);
    const auto a = explain::gradcam(net, x, 2, 3);
    const auto b = explain::gradcam(net, x, 2, 3, 4.25);
    CHECK(max_abs_diff(a.values, b.values) <= 1e-12);
    CHECK(explain::gradcam(net, x, 2, 3).values == a.values);
}

TEST_CASE("gradcam rejects non-conv layers and bad classes") {
    const Network net = nets::init_params(nets::build_wide_toy({1, 16, 16}, 3), 9);
    const Tensor x({1, 16, 16}, 0.5);
    CHECK_THROWS_AS(explain::gradcam(net, x, 0, 1), UsageError);
    CHECK_THROWS_AS(explain::gradcam(net, x, 0, 99), UsageError);
    CHECK_THROWS_AS(explain::gradcam(net, x, 3, 0), UsageError);
}

TEST_CASE("bilinear upsampling with aligned corners") {
    CHECK(explain::upsample_bilinear(Tensor({1, 1}, 0.3), 4, 5) == Tensor({4, 5}, 0.3));
    const Tensor m({2, 2}, std::vector<double>{0, 1, 0, 1});
    const Tensor up = explain::upsample_bilinear(m, 2, 4);
    const double want[4] = {0, 1.0 / 3, 2.0 / 3, 1};
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 4; ++c) CHECK(up.at(r, c) == doctest::Approx(want[c]).epsilon(1e-15));
    Rng rng(10);
    const Tensor any = oracle::random_tensor({3, 7}, rng);
    CHECK(explain::upsample_bilinear(any, 3, 7) == any);
    // Corners are preserved.
    const Tensor big = explain::upsample_bilinear(any, 12, 19);
    CHECK(big.at(0, 0) == any.at(0, 0));
    CHECK(big.at(11, 18) == doctest::Approx(any.at(2, 6)).epsilon(1e-14));
}

TEST_CASE("normalize_unit") {
    const Tensor n = explain::normalize_unit(Tensor({3}, std::vector<double>{2, 4, 3}));
    CHECK(n == Tensor({3}, std::vector<double>{0, 1, 0.5}));
    CHECK(explain::normalize_unit(Tensor({2, 2}, 5.0)) == Tensor({2, 2}, 0.0));
}

TEST_CASE("heatmap export") {
    oracle::TempDir dir("heat");
    const explain::Heatmap zero = heat(Tensor({3, 4}, 0.0));
    explain::export_heatmap(zero, dir / "z.ppm", explain::ExportMode::Pseudocolor);
    const auto z = pixmap::read(dir / "z.ppm");
    REQUIRE(z.channels == 3);
    for (std::size_t i = 0; i < z.samples.size(); i += 3) {
        CHECK(z.samples[i] == 0);
        CHECK(z.samples[i + 1] == 0);
        CHECK(z.samples[i + 2] == 255);
    }
    const explain::Heatmap one = heat(Tensor({2, 2}, 1.0));
    explain::export_heatmap(one, dir / "o.ppm", explain::ExportMode::Pseudocolor);
    const auto o = pixmap::read(dir / "o.ppm");
    CHECK(o.samples[0] == 255);
    CHECK(o.samples[1] == 0);
    CHECK(o.samples[2] == 0);

    Rng rng(11);
    const explain::Heatmap h = heat(oracle::random_tensor({9, 13}, rng, 0, 1));
    explain::export_heatmap(h, dir / "h.pgm", explain::ExportMode::Gray);
    const Tensor back = explain::read_gray_heatmap(dir / "h.pgm");
    CHECK(back.shape() == Shape{9, 13});
    CHECK(max_abs_diff(back, h.values) <= 1.0 / 255.0);
    CHECK_THROWS_AS(explain::export_heatmap(h, "/nonexistent/dir/h.pgm", explain::ExportMode::Gray), IoError);
}
