#include <doctest.h>

#include <cmath>

#include "advl/core/error.hpp"
#include "advl/core/grad_check.hpp"
#include "advl/core/network.hpp"
#include "advl/core/tape.hpp"
#include "advl/nets/toy_nets.hpp"
#include "oracles.hpp"

using namespace advl;

namespace {

NetworkSpec small_spec() {
    return {"small", {2, 6, 5}, {Conv2D{3, 3, 1, 1}, ReLU{}, MaxPool2{}, Flatten{}, Dense{4}}, 4};
}

Network random_net(const NetworkSpec& spec, std::uint64_t seed, double scale = 0.5) {
    Network net = Network::zeros(spec);
    Rng rng(seed);
    for (auto& p : net.params) {
        for (auto& w : p.weights.data()) w = rng.uniform(-scale, scale);
        for (auto& b : p.bias.data()) b = rng.uniform(-0.1, 0.1);
    }
    return net;
}

double loss_at(const Network& net, const Tensor& x, std::size_t cls) {
    return oracle::softmax_xent(predict_logits(net, x), cls).loss;
}

}  // namespace

TEST_CASE("shape inference follows the closed forms") {
    const auto shapes = infer_shapes(small_spec());
    REQUIRE(shapes.size() == 5);
    CHECK(shapes[0] == Shape{3, 6, 5});
    CHECK(shapes[2] == Shape{3, 3, 3});
    CHECK(shapes[3] == Shape{27});
    CHECK(shapes[4] == Shape{4});
    CHECK(parameter_count(small_spec()) == (3 * 2 * 9 + 3) + (4 * 27 + 4));

    const Network net = random_net(small_spec(), 1);
    const Tape t = forward(net, Tensor({2, 6, 5}, 0.3));
    for (std::size_t l = 0; l < shapes.size(); ++l) CHECK(t.output_of(l).shape() == shapes[l]);
}

TEST_CASE("invalid chains are rejected") {
    NetworkSpec s = small_spec();
    s.layers.back() = Dense{3};
    CHECK_THROWS_AS(validate(s), ShapeError);
    s = small_spec();
    s.layers.erase(s.layers.begin() + 3);  // Dense on a rank-3 input
    CHECK_THROWS_AS(validate(s), ShapeError);
    s = small_spec();
    s.layers.insert(s.layers.begin(), Conv2D{2, 9, 1, 0});
    CHECK_THROWS_AS(validate(s), ShapeError);
}

TEST_CASE("backward without a forward tape is a usage error") {
    const Network net = random_net(small_spec(), 2);
    Tape empty;
    CHECK_THROWS_AS(backward(net, empty, Tensor({4})), UsageError);
}

TEST_CASE("gradient shapes mirror their primals") {
    const Network net = random_net(small_spec(), 3);
    Rng rng(3);
    const Tensor x = oracle::random_tensor({2, 6, 5}, rng, 0, 1);
    const Tape t = forward(net, x);
    const auto g = backward_xent(net, t, 1);
    CHECK(g.grads.input.shape() == x.shape());
    for (std::size_t l = 0; l < net.params.size(); ++l) {
        CHECK(g.grads.params[l].weights.shape() == net.params[l].weights.shape());
        CHECK(g.grads.params[l].bias.shape() == net.params[l].bias.shape());
        CHECK(g.grads.activations[l].shape() == t.output_of(l).shape());
    }
}

TEST_CASE("analytic gradients match central differences on a small net") {
    const Network net = random_net(small_spec(), 5);
    Rng rng(5);
    const Tensor x = oracle::random_tensor({2, 6, 5}, rng, 0, 1);
    const auto g = backward_xent(net, forward(net, x), 2).grads;
    const double h = 1e-5;
    Tensor xp = x;
    double worst = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        const double up = loss_at(net, xp, 2);
        xp[i] = x[i] - h;
        const double down = loss_at(net, xp, 2);
        xp[i] = x[i];
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - g.input[i]) / std::max(1e-8, std::abs(fd)));
    }
    CHECK(worst <= 1e-6);
    CHECK(grad_check(net, x, 2, 1e-5) <= 1e-6);
}

TEST_CASE("grad_check on a linear net is exact up to rounding") {
    NetworkSpec s{"lin", {1, 2, 3}, {Flatten{}, Dense{3}}, 3};
    const Network net = random_net(s, 9);
    Rng rng(9);
    const auto rep = grad_check_report(net, oracle::random_tensor({1, 2, 3}, rng), 0, 1e-5);
    CHECK(rep.skipped_nonsmooth == 0);
    CHECK(rep.checked == 6 + 18 + 3);
    CHECK(rep.max_relative_error <= 1e-9);
}

TEST_CASE("grad_check skips coordinates at an exact ReLU zero") {
    // One pre-activation is exactly 0, so perturbing its weight crosses the kink.
    NetworkSpec s{"kink", {1, 1, 2}, {Flatten{}, Dense{2}, ReLU{}, Dense{2}}, 2};
    Network net = Network::zeros(s);
    net.params[1].weights = Tensor({2, 2}, std::vector<double>{1, -1, 0.5, 0.25});
    net.params[3].weights = Tensor({2, 2}, std::vector<double>{1, 2, -1, 0.5});
    const Tensor x({1, 1, 2}, std::vector<double>{0.4, 0.4});
    const auto rep = grad_check_report(net, x, 0, 1e-5);
    CHECK(rep.skipped_nonsmooth > 0);
    CHECK(rep.max_relative_error <= 1e-6);
}

TEST_CASE("backward is linear in the seed") {
    const Network net = random_net(small_spec(), 12);
    Rng rng(12);
    const Tensor x = oracle::random_tensor({2, 6, 5}, rng, 0, 1);
    const Tape t = forward(net, x);
    const auto one = backward_xent(net, t, 1, 1.0).grads;
    const auto three = backward_xent(net, t, 1, 3.0).grads;
    Tensor scaled = one.input;
    scaled *= 3.0;
    CHECK(max_abs_diff(scaled, three.input) <= 1e-14 * (1 + std::abs(scaled[0])));
    for (std::size_t l = 0; l < net.params.size(); ++l) {
        if (net.params[l].empty()) continue;
        Tensor w = one.params[l].weights;
        w *= 3.0;
        CHECK(max_abs_diff(w, three.params[l].weights) <= 1e-13);
    }
}

TEST_CASE("forward and backward are deterministic") {
    const Network net = nets::init_params(nets::build_wide_toy({1, 16, 16}, 3), 4);
    Rng rng(4);
    const Tensor x = oracle::random_tensor({1, 16, 16}, rng, 0, 1);
    const Tape a = forward(net, x), b = forward(net, x);
    CHECK(a.logits() == b.logits());
    CHECK(backward_xent(net, a, 2).grads.input == backward_xent(net, b, 2).grads.input);
    CHECK(forward_from(net, 3, a.output_of(2)) == a.logits());
}

TEST_CASE("argmax picks the lowest index on ties") {
    CHECK(argmax_class(Tensor({4}, std::vector<double>{1, 3, 3, 0})) == 1);
    CHECK(argmax_class(Tensor({3}, 0.0)) == 0);
}
