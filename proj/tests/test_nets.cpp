#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "advl/core/error.hpp"
#include "advl/core/tape.hpp"
#include "advl/harness/datasets.hpp"
#include "advl/nets/toy_nets.hpp"
#include "advl/nets/training.hpp"
#include "advl/nets/weights.hpp"
#include "oracles.hpp"

using namespace advl;

namespace {

std::size_t count_convs(const NetworkSpec& s) { return conv_layer_ids(s).size(); }

std::size_t max_channels(const NetworkSpec& s) {
    std::size_t m = 0;
    for (const auto& l : s.layers)
        if (const auto* c = std::get_if<Conv2D>(&l)) m = std::max(m, c->out_channels);
    return m;
}

std::size_t dense_input(const NetworkSpec& s) {
    const auto shapes = infer_shapes(s);
    for (std::size_t l = 0; l < s.layers.size(); ++l)
        if (std::holds_alternative<Flatten>(s.layers[l])) return shapes[l][0];
    return 0;
}

// Parameters by hand from the layer lists.
std::size_t analytic_wide(std::size_t C, std::size_t flat, std::size_t K) {
    return (32 * C * 9 + 32) + (64 * 32 * 9 + 64) + (64 * flat + 64) + (K * 64 + K);
}

std::size_t analytic_deep(std::size_t C, std::size_t flat, std::size_t hidden, std::size_t K) {
    return (8 * C * 9 + 8) + (8 * 8 * 9 + 8) + (16 * 8 * 9 + 16) + 3 * (16 * 16 * 9 + 16) + (hidden * flat + hidden) +
           (K * hidden + K);
}

Dataset tiny_set(std::size_t n, std::uint64_t seed) { return harness::synth_dataset(n, 1, 16, 16, seed, 0.1); }

}  // namespace

TEST_CASE("toy architectures at 1x28x28 with 10 classes") {
    const auto deep = nets::build_deep_toy({1, 28, 28}, 10);
    const auto wide = nets::build_wide_toy({1, 28, 28}, 10);
    CHECK_NOTHROW(validate(deep));
    CHECK_NOTHROW(validate(wide));
    CHECK(dense_input(deep) == 16 * 7 * 7);
    CHECK(dense_input(wide) == 64 * 7 * 7);
    CHECK(count_convs(deep) == 6);
    CHECK(count_convs(wide) == 2);
    CHECK(max_channels(deep) == 16);
    CHECK(max_channels(wide) == 64);

    CHECK(parameter_count(wide) == analytic_wide(1, 3136, 10));
    const std::size_t hidden = std::get<Dense>(deep.layers[deep.layers.size() - 3]).units;
    CHECK(parameter_count(deep) == analytic_deep(1, 784, hidden, 10));
    const double pd = static_cast<double>(parameter_count(deep)), pw = static_cast<double>(parameter_count(wide));
    CHECK(std::abs(pd - pw) / pd <= 0.20);
}

TEST_CASE("parameter matching holds across input sizes") {
    for (auto [h, w, k] : {std::tuple{16, 16, 2}, {28, 28, 10}, {32, 20, 5}, {17, 31, 3}}) {
        const double pd = static_cast<double>(parameter_count(nets::build_deep_toy({1, std::size_t(h), std::size_t(w)}, k)));
        const double pw = static_cast<double>(parameter_count(nets::build_wide_toy({1, std::size_t(h), std::size_t(w)}, k)));
        CHECK(std::abs(pd - pw) / pd <= 0.20);
    }
}

TEST_CASE("toy nets reject inputs too small for two pools") {
    CHECK_THROWS_AS(nets::build_deep_toy({1, 15, 28}, 10), ShapeError);
    CHECK_THROWS_AS(nets::build_wide_toy({1, 28, 8}, 10), ShapeError);
    CHECK_THROWS_AS(nets::build_toy("resnet", {1, 28, 28}, 10), ConfigError);
}

TEST_CASE("He-uniform initialization") {
    const auto spec = nets::build_deep_toy({1, 28, 28}, 10);
    const Network a = nets::init_params(spec, 7), b = nets::init_params(spec, 7);
    CHECK(a == b);
    CHECK(!(a == nets::init_params(spec, 8)));
    for (const auto& p : a.params) {
        if (p.empty()) continue;
        for (double v : p.bias.data()) CHECK(v == 0.0);
        const std::size_t fan_in = p.weights.size() / p.weights.dim(0);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        double sum = 0, lo = 0, hi = 0;
        for (double v : p.weights.data()) {
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(lo >= -bound);
        CHECK(hi <= bound);
        // U(-b, b) has sigma = b / sqrt(3).
        const double n = static_cast<double>(p.weights.size());
        CHECK(std::abs(sum / n) <= 3.0 * (bound / std::sqrt(3.0)) / std::sqrt(n));
    }
}

TEST_CASE("learning rate 0 leaves parameters unchanged") {
    const Dataset d = tiny_set(4, 3);
    const Network net = nets::init_params(nets::build_wide_toy({1, 16, 16}, 4), 3);
    nets::TrainConfig cfg;
    cfg.epochs = 3;
    cfg.learning_rate = 0.0;
    cfg.batch_size = 2;
    const auto r = nets::train(net, d, d, cfg);
    CHECK(r.network == net);
    REQUIRE(r.history.size() == 4);
    for (const auto& h : r.history) {
        CHECK(h.train_loss == r.history[0].train_loss);
        CHECK(h.val_accuracy == r.history[0].val_accuracy);
    }
    CHECK(r.best_epoch == 0);
}

TEST_CASE("deep toy overfits eight samples") {
    const Dataset d = tiny_set(8, 5);
    nets::TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.01;
    cfg.seed = 5;
    auto net = nets::init_params(nets::build_deep_toy({1, 16, 16}, 8), 5);
    const auto r = nets::train(net, d, d, cfg);
    CHECK(nets::evaluate(r.network, d) == 1.0);
    CHECK(r.history.back().train_loss < r.history.front().train_loss);
}

TEST_CASE("training is identical at any worker count") {
    const Dataset d = tiny_set(6, 9);
    nets::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    const auto net = nets::init_params(nets::build_wide_toy({1, 16, 16}, 6), 9);
    cfg.workers = 1;
    const auto a = nets::train(net, d, d, cfg);
    cfg.workers = 3;
    const auto b = nets::train(net, d, d, cfg);
    CHECK(a.network == b.network);
    CHECK(a.history.back().train_loss == b.history.back().train_loss);
}

TEST_CASE("best epoch is the earliest maximum of validation accuracy") {
    using nets::EpochStats;
    CHECK(nets::best_epoch_index({{0, 1, 0.2}, {1, 1, 0.6}, {2, 1, 0.6}, {3, 1, 0.5}}) == 1);
    CHECK(nets::best_epoch_index({{0, 1, 0.9}}) == 0);
    CHECK_THROWS_AS(nets::best_epoch_index({}), UsageError);
}

TEST_CASE("evaluate") {
    const Dataset d = tiny_set(3, 1);
    const auto net = nets::init_params(nets::build_wide_toy({1, 16, 16}, 3), 1);
    const auto pred = nets::predict(net, d);
    Dataset right{d.images, pred};
    CHECK(nets::evaluate(net, right) == 1.0);
    Dataset wrong{{d.images[0]}, {(pred[0] + 1) % 3}};
    CHECK(nets::evaluate(net, wrong) == 0.0);
    CHECK_THROWS_AS(nets::evaluate(net, Dataset{}), UsageError);
}

TEST_CASE("an untrained 10-class net scores near chance on a balanced set") {
    const Dataset d = harness::synth_dataset(10, 20, 16, 16, 2, 0.1);
    const auto net = nets::init_params(nets::build_deep_toy({1, 16, 16}, 10), 2);
    const double acc = nets::evaluate(net, d);
    // Binomial(200, 0.1): 3 sigma is about 0.064.
    CHECK(std::abs(acc - 0.1) <= 3.0 * std::sqrt(0.1 * 0.9 / 200.0));
}

TEST_CASE("weights round-trip bitwise") {
    oracle::TempDir dir("weights");
    const auto net = nets::init_params(nets::build_deep_toy({1, 20, 18}, 4), 3);
    nets::save_weights(net, dir / "a.advl");
    const Network back = nets::load_weights(dir / "a.advl");
    CHECK(back == net);
    nets::save_weights(back, dir / "b.advl");
    const auto bytes = nets::serialize_weights(net);
    CHECK(bytes == nets::serialize_weights(back));
    CHECK(std::filesystem::file_size(dir / "a.advl") == std::filesystem::file_size(dir / "b.advl"));
    CHECK(bytes.size() == nets::weight_header_size(net.spec) + 8 * net.parameter_count());
}

TEST_CASE("weight file layout") {
    NetworkSpec s{"ab", {1, 2, 2}, {Flatten{}, Dense{2}}, 2};
    Network net = Network::zeros(s);
    net.params[1].weights = Tensor({2, 4}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
    net.params[1].bias = Tensor({2}, std::vector<double>{-1, 0.5});
    const auto bytes = nets::serialize_weights(net);
    // magic 4 + version 4 + name 4+2 + CHW 12 + classes 4 + count 4
    // + Flatten 1 + Dense 1+4
    const std::size_t header = 4 + 4 + 6 + 12 + 4 + 4 + 1 + 5;
    CHECK(nets::weight_header_size(s) == header);
    REQUIRE(bytes.size() == header + 8 * 10);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "ADVL");
    CHECK(bytes[4] == 1);
    CHECK(bytes[8] == 2);
    CHECK(bytes[12] == 'a');
    double first = 0, last = 0;
    std::memcpy(&first, bytes.data() + header, 8);
    std::memcpy(&last, bytes.data() + header + 72, 8);
    CHECK(first == 1.0);
    CHECK(last == 0.5);
}

TEST_CASE("corrupt weight files are rejected with offsets") {
    const auto net = nets::init_params(nets::build_wide_toy({1, 16, 16}, 2), 1);
    const auto good = nets::serialize_weights(net);

    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH_AS(nets::deserialize_weights(bad_magic), doctest::Contains("bad magic"), FormatError);

    auto bad_version = good;
    bad_version[4] = 2;
    CHECK_THROWS_WITH_AS(nets::deserialize_weights(bad_version), doctest::Contains("version"), FormatError);

    auto short_by_one = good;
    short_by_one.pop_back();
    CHECK_THROWS_WITH_AS(nets::deserialize_weights(short_by_one), doctest::Contains("truncated"), FormatError);

    auto long_by_one = good;
    long_by_one.push_back(0);
    CHECK_THROWS_WITH_AS(nets::deserialize_weights(long_by_one), doctest::Contains("trailing"), FormatError);

    try {
        nets::deserialize_weights(long_by_one);
    } catch (const FormatError& e) {
        CHECK(e.offset() == good.size());
    }
    CHECK_THROWS_AS(nets::load_weights("/nonexistent/dir/w.advl"), IoError);
}
