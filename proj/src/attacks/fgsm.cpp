#include "advl/attacks/fgsm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "advl/core/error.hpp"
#include "advl/core/parallel.hpp"
#include "advl/core/tape.hpp"

namespace advl::attacks {

const char* mode_name(AttackMode mode) { return mode == AttackMode::White ? "white" : "black"; }

AttackMode parse_mode(const std::string& text) {
    if (text == "white") return AttackMode::White;
    if (text == "black") return AttackMode::Black;
    throw ConfigError("unknown attack mode '" + text + "' (expected white or black)");
}

Tensor input_gradient(const Network& net, const Tensor& x, std::size_t true_class) {
    if (x.shape() != net.spec.input_shape)
        throw ShapeError("input_gradient: input shape " + shape_to_string(x.shape()) + " does not match network " +
                         shape_to_string(net.spec.input_shape));
    return backward_xent(net, forward(net, x), true_class).grads.input;
}

Tensor fgsm_sign(const Tensor& grad) {
    Tensor s(grad.shape());
    for (std::size_t i = 0; i < grad.size(); ++i) s[i] = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
    return s;
}

Tensor apply_attack(const Tensor& x, const Tensor& signs, double eps) {
    if (!(eps >= 0.0)) throw UsageError("apply_attack: epsilon must be non-negative");
    require_same_shape(x, signs, "apply_attack");
    Tensor adv(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double a = x[i] + eps * signs[i];
        // Rounding can overshoot the budget by an ulp; pull back toward x.
        while (std::abs(a - x[i]) > eps) a = std::nextafter(a, x[i]);
        adv[i] = std::clamp(a, 0.0, 1.0);
    }
    return adv;
}

void validate_eps_schedule(const std::vector<double>& eps) {
    if (eps.empty()) throw ConfigError("epsilon list is empty");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] >= 0.0) || !std::isfinite(eps[i])) throw ConfigError("epsilon values must be finite and >= 0");
        if (i > 0 && !(eps[i] > eps[i - 1]))
            throw ConfigError("epsilon list must be strictly increasing without duplicates");
    }
}

PerturbationSet compute_perturbations(const Network& surrogate, const Dataset& clean, std::size_t workers) {
    PerturbationSet p{surrogate.spec.name, std::vector<std::size_t>(clean.size()), std::vector<Tensor>(clean.size())};
    parallel_for(clean.size(), workers, [&](std::size_t i) {
        p.sample_ids[i] = i;
        p.signs[i] = fgsm_sign(input_gradient(surrogate, clean.images[i], clean.labels[i]));
    });
    return p;
}

std::vector<AdversarialSet> build_adversarial_sets(const PerturbationSet& perturbations, const Dataset& clean,
                                                   const std::vector<double>& eps, AttackMode mode) {
    validate_eps_schedule(eps);
    if (perturbations.signs.size() != clean.size())
        throw UsageError("perturbation count does not match the clean set");
    std::vector<AdversarialSet> sets;
    for (double e : eps) {
        AdversarialSet s{e, {}, perturbations.sample_ids, perturbations.surrogate, mode};
        s.data.labels = clean.labels;
        s.data.images.reserve(clean.size());
        for (std::size_t i = 0; i < clean.size(); ++i)
            s.data.images.push_back(apply_attack(clean.images[i], perturbations.signs[i], e));
        sets.push_back(std::move(s));
    }
    return sets;
}

std::vector<AdversarialSet> generate_adversarial_sets(const Network& surrogate, const Dataset& clean,
                                                      const std::vector<double>& eps, AttackMode mode,
                                                      std::size_t workers) {
    validate_eps_schedule(eps);
    return build_adversarial_sets(compute_perturbations(surrogate, clean, workers), clean, eps, mode);
}

double psnr(const Tensor& clean, const Tensor& adv) {
    require_same_shape(clean, adv, "psnr");
    double se = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double d = clean[i] - adv[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(clean.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double mean_psnr(const Dataset& clean, const Dataset& adv) {
    if (clean.size() != adv.size() || clean.empty()) throw UsageError("mean_psnr: sets differ in size or are empty");
    double sum = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) sum += psnr(clean.images[i], adv.images[i]);
    return sum / static_cast<double>(clean.size());
}

}  // namespace advl::attacks
