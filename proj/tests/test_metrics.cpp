#include <doctest.h>

#include <cmath>
#include <numeric>

#include "advl/core/error.hpp"
#include "advl/metrics/dissimilarity.hpp"
#include "advl/metrics/ssim.hpp"
#include "oracles.hpp"

using namespace advl;
using metrics::DissimilarityRecord;

namespace {

Tensor random_map(std::size_t h, std::size_t w, Rng& rng) {
    Tensor t({h, w});
    for (auto& v : t.data()) v = rng.uniform();
    return t;
}

// b = a blended with noise, so pairs span a range of similarity.
Tensor related_map(const Tensor& a, double mix, Rng& rng) {
    Tensor b = a;
    for (auto& v : b.data()) v = (1 - mix) * v + mix * rng.uniform();
    return b;
}

std::vector<DissimilarityRecord> grid(const std::string& model, const std::vector<double>& eps,
                                      const std::vector<std::vector<double>>& by_sample) {
    std::vector<DissimilarityRecord> out;
    for (std::size_t i = 0; i < by_sample.size(); ++i)
        for (std::size_t e = 0; e < eps.size(); ++e) out.push_back({model, i, eps[e], 0, by_sample[i][e]});
    return out;
}

}  // namespace

TEST_CASE("ssim window") {
    const metrics::SsimParams p;
    const auto g = metrics::ssim_window(p, 28, 28);
    CHECK(g.side == 11);
    CHECK(std::accumulate(g.weights.begin(), g.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g.weights[5 * 11 + 5] > g.weights[0]);
    for (std::size_t u = 0; u < 11; ++u)
        for (std::size_t v = 0; v < 11; ++v) CHECK(g.weights[u * 11 + v] == doctest::Approx(g.taps[u] * g.taps[v]));
    const auto f = metrics::ssim_window(p, 9, 20);
    CHECK(f.side == 7);
    CHECK(f.weights[0] == doctest::Approx(1.0 / 49));
    CHECK(metrics::ssim_window(p, 4, 30).side == 4);
    CHECK(p.c1() == doctest::Approx(1e-4));
    CHECK(p.c2() == doctest::Approx(9e-4));
}

TEST_CASE("ssim matches direct summation") {
    Rng rng(17);
    for (auto [h, w] : {std::pair{16, 16}, {28, 28}, {11, 13}, {8, 10}, {5, 5}}) {
        for (double mix : {0.0, 0.2, 0.7, 1.0}) {
            const Tensor a = random_map(h, w, rng);
            const Tensor b = related_map(a, mix, rng);
            CHECK(std::abs(metrics::ssim(a, b) - oracle::ssim(a, b)) <= 1e-9);
        }
    }
}

TEST_CASE("ssim identities") {
    Rng rng(2);
    const Tensor a = random_map(16, 16, rng);
    const Tensor b = random_map(16, 16, rng);
    CHECK(std::abs(metrics::ssim(a, a) - 1.0) <= 1e-12);
    CHECK(metrics::ssim(a, b) == doctest::Approx(metrics::ssim(b, a)).epsilon(1e-14));
    const double c1 = 1e-4;
    CHECK(std::abs(metrics::ssim(Tensor({16, 16}, 0.0), Tensor({16, 16}, 1.0)) - c1 / (1 + c1)) <= 1e-12);
    CHECK_THROWS_AS(metrics::ssim(a, Tensor({16, 15})), ShapeError);
    CHECK_THROWS_AS(metrics::ssim(Tensor({1, 16, 16}), Tensor({1, 16, 16})), ShapeError);
}

TEST_CASE("nissim") {
    Rng rng(3);
    const Tensor a = random_map(28, 28, rng);
    CHECK(metrics::nissim(a, a) == 0.0);
    CHECK(metrics::nissim_from_ssim(-1.0) == 1.0);
    CHECK(metrics::nissim_from_ssim(0.5) == 0.25);
    CHECK(metrics::nissim_from_ssim(1.0) == 0.0);
    for (int i = 0; i < 20; ++i) {
        const Tensor b = random_map(28, 28, rng);
        const double n = metrics::nissim(a, b);
        CHECK(n >= 0.0);
        CHECK(n <= 1.0);
        CHECK(n == metrics::nissim(b, a));
    }
    // Anti-correlated maps push SSIM towards -1.
    Tensor inv = a;
    for (auto& v : inv.data()) v = 1.0 - v;
    CHECK(metrics::nissim(a, inv) > 0.5);
}

TEST_CASE("mod") {
    const std::vector<DissimilarityRecord> two{{"m", 0, 0.1, 3, 0.1}, {"m", 1, 0.1, 3, 0.3}};
    CHECK(metrics::mod(two) == doctest::Approx(0.2));
    const std::vector<DissimilarityRecord> one{{"m", 0, 0.1, 3, 0.7}};
    CHECK(metrics::mod(one) == 0.7);
    const std::vector<DissimilarityRecord> zeros{{"m", 0, 0.0, 3, 0.0}, {"m", 1, 0.0, 3, 0.0}};
    CHECK(metrics::mod(zeros) == 0.0);
    CHECK_THROWS_AS(metrics::mod(std::vector<DissimilarityRecord>{}), UsageError);
    const std::vector<DissimilarityRecord> mixed{{"m", 0, 0.1, 3, 0.1}, {"m", 1, 0.05, 3, 0.3}};
    CHECK_THROWS_AS(metrics::mod(mixed), UsageError);
}

TEST_CASE("mod table and mean shift") {
    auto recs = grid("a", {0, 0.1}, {{0, 0.1}, {0, 0.3}});
    const auto b = grid("b", {0, 0.1}, {{0, 0.3}, {0, 0.5}});
    recs.insert(recs.end(), b.begin(), b.end());
    const auto t = metrics::build_mod_table(recs);
    CHECK(t.models == std::vector<std::string>{"a", "b"});
    CHECK(t.epsilons == std::vector<double>{0, 0.1});
    CHECK(t.samples == 2);
    CHECK(t.at(0, 0) == 0.0);
    CHECK(t.at(0, 1) == doctest::Approx(0.2));
    CHECK(t.at(1, 1) == doctest::Approx(0.4));
    const auto shift = metrics::mean_shift_row(t);
    CHECK(shift[0] == 0.0);
    CHECK(shift[1] == doctest::Approx(0.3));

    const auto single = metrics::build_mod_table(grid("a", {0, 0.1}, {{0, 0.1}, {0, 0.3}}));
    CHECK(metrics::mean_shift_row(single) == single.values[0]);

    auto uneven = recs;
    uneven.pop_back();
    CHECK_THROWS_AS(metrics::build_mod_table(uneven), UsageError);
}

TEST_CASE("vid") {
    const std::vector<double> eps{0, 0.01, 0.05};
    SUBCASE("constant per-sample dissimilarity gives zero") {
        const auto v = metrics::vid(grid("m", eps, {{0, 0.4, 0.4}, {0, 0.1, 0.1}}));
        CHECK(v.vid == 0.0);
        CHECK(v.levels == std::vector<double>{0.01, 0.05});
    }
    SUBCASE("two-point example") {
        const auto v = metrics::vid(grid("m", eps, {{0, 0.1, 0.3}}));
        CHECK(v.per_sample_mean[0] == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(v.vid == doctest::Approx(0.1).epsilon(1e-15));
    }
    SUBCASE("model vid is the mean over samples") {
        const auto v = metrics::vid(grid("m", eps, {{0, 0.1, 0.3}, {0, 0.1, 0.7}}));
        CHECK(v.per_sample_vid[0] == doctest::Approx(0.1));
        CHECK(v.per_sample_vid[1] == doctest::Approx(0.3));
        CHECK(v.vid == doctest::Approx(0.2));
    }
    SUBCASE("including zero widens the spread") {
        const auto v = metrics::vid(grid("m", eps, {{0, 0.3, 0.3}}), {true, 0.02});
        CHECK(v.levels.size() == 3);
        CHECK(v.vid == doctest::Approx(std::sqrt(0.02)));
    }
    SUBCASE("per-set variant is the spread of the mod row") {
        const auto v = metrics::vid(grid("m", eps, {{0, 0.1, 0.3}, {0, 0.3, 0.5}}));
        CHECK(v.per_set_vid == doctest::Approx(0.1));
    }
    SUBCASE("histograms cover every epsilon and sum to the sample count") {
        const auto v = metrics::vid(grid("m", eps, {{0, 0.1, 0.3}, {0, 0.11, 1.0}, {0, 0.5, 0.02}}));
        REQUIRE(v.histograms.size() == 3);
        for (const auto& h : v.histograms) {
            CHECK(h.counts.size() == 50);
            CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}) == 3);
        }
        CHECK(v.histograms[0].counts[0] == 3);
        CHECK(v.histograms[1].counts[5] == 2);
        CHECK(v.histograms[2].counts[49] == 1);
        CHECK(v.histograms[2].counts[1] == 1);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(metrics::vid(grid("m", {0}, {{0}})), UsageError);
        auto missing = grid("m", eps, {{0, 0.1, 0.3}, {0, 0.2, 0.2}});
        missing.pop_back();
        CHECK_THROWS_AS(metrics::vid(missing), UsageError);
    }
}

TEST_CASE("population statistics") {
    const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(metrics::level_mean(v) == 5.0);
    CHECK(metrics::level_stdev(v) == 2.0);
}
