#include "advl/core/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advl/core/error.hpp"
#include "advl/core/ops.hpp"
#include "advl/core/random.hpp"
#include "advl/core/tape.hpp"

namespace advl {

namespace {

// ReLU masks and pool argmaxes of one forward pass. Two passes with equal
// patterns lie in the same smooth piece of the network function.
struct Pattern {
    std::vector<std::vector<bool>> relu;
    std::vector<std::vector<std::size_t>> pools;
    friend bool operator==(const Pattern&, const Pattern&) = default;
};

Pattern pattern_of(const Tape& tape) {
    Pattern p;
    for (const auto& e : tape.entries()) {
        if (e.kind == LayerKind::ReLU) {
            const Tensor& in = tape.activations()[e.input_ref];
            std::vector<bool> mask(in.size());
            for (std::size_t i = 0; i < in.size(); ++i) mask[i] = in[i] > 0.0;
            p.relu.push_back(std::move(mask));
        } else if (e.kind == LayerKind::MaxPool2) {
            p.pools.push_back(e.argmax);
        }
    }
    return p;
}

struct Probe {
    double loss;
    Pattern pattern;
};

Probe probe(const Network& net, const Tensor& x, std::size_t cls) {
    Tape t = forward(net, x);
    return {ops::softmax_xent(t.logits(), cls).loss, pattern_of(t)};
}

std::vector<std::size_t> pick_coords(std::size_t n, const GradCheckOptions& opt, Rng& rng) {
    if (!opt.max_coords_per_tensor || *opt.max_coords_per_tensor >= n) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        return all;
    }
    auto perm = shuffled_indices(n, rng);
    perm.resize(*opt.max_coords_per_tensor);
    std::sort(perm.begin(), perm.end());
    return perm;
}

}  // namespace

GradCheckReport grad_check_report(const Network& net, const Tensor& input, std::size_t true_class,
                                  double h, const GradCheckOptions& options) {
    if (!(h > 0.0)) throw UsageError("grad_check: step must be positive");
    const Tape base_tape = forward(net, input);
    const Pattern base = pattern_of(base_tape);
    const GradientBundle g = backward_xent(net, base_tape, true_class).grads;

    GradCheckReport report;
    Rng rng(options.seed);
    auto check = [&](double analytic, const Probe& plus, const Probe& minus) {
        if (!(plus.pattern == base) || !(minus.pattern == base)) {
            ++report.skipped_nonsmooth;
            return;
        }
        const double fd = (plus.loss - minus.loss) / (2.0 * h);
        const double err = std::abs(analytic - fd) / std::max(1e-12, std::abs(fd));
        report.max_relative_error = std::max(report.max_relative_error, err);
        ++report.checked;
    };

    Tensor x = input;
    for (std::size_t i : pick_coords(x.size(), options, rng)) {
        const double orig = x[i];
        x[i] = orig + h;
        const Probe plus = probe(net, x, true_class);
        x[i] = orig - h;
        const Probe minus = probe(net, x, true_class);
        x[i] = orig;
        check(g.input[i], plus, minus);
    }

    Network work = net;
    for (std::size_t l = 0; l < work.params.size(); ++l) {
        if (work.params[l].empty()) continue;
        for (int which = 0; which < 2; ++which) {
            Tensor& target = which == 0 ? work.params[l].weights : work.params[l].bias;
            const Tensor& analytic = which == 0 ? g.params[l].weights : g.params[l].bias;
            for (std::size_t i : pick_coords(target.size(), options, rng)) {
                const double orig = target[i];
                target[i] = orig + h;
                const Probe plus = probe(work, input, true_class);
                target[i] = orig - h;
                const Probe minus = probe(work, input, true_class);
                target[i] = orig;
                check(analytic[i], plus, minus);
            }
        }
    }
    return report;
}

double grad_check(const Network& net, const Tensor& input, std::size_t true_class, double h,
                  const GradCheckOptions& options) {
    return grad_check_report(net, input, true_class, h, options).max_relative_error;
}

}  // namespace advl
