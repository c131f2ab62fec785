#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "advl/core/dataset.hpp"
#include "advl/core/network.hpp"
#include "advl/core/tensor.hpp"

namespace advl::attacks {

enum class AttackMode { White, Black };

const char* mode_name(AttackMode mode);
AttackMode parse_mode(const std::string& text);

/// Gradient signs computed once on a surrogate, one tensor per test sample.
struct PerturbationSet {
    std::string surrogate;
    std::vector<std::size_t> sample_ids;
    std::vector<Tensor> signs;  // values in {-1, 0, +1}

    friend bool operator==(const PerturbationSet&, const PerturbationSet&) = default;
};

/// Clipped adversarial images for one epsilon.
struct AdversarialSet {
    double epsilon = 0.0;
    Dataset data;
    std::vector<std::size_t> sample_ids;
    std::string surrogate;
    AttackMode mode = AttackMode::White;
};

// d cross-entropy(x, true_class) / dx.
Tensor input_gradient(const Network& net, const Tensor& x, std::size_t true_class);

// Elementwise sign with sign(0) = 0.
Tensor fgsm_sign(const Tensor& grad);

// clip(x + eps * signs, 0, 1).
Tensor apply_attack(const Tensor& x, const Tensor& signs, double eps);

// Non-empty, non-negative, strictly increasing.
void validate_eps_schedule(const std::vector<double>& eps);

// True-label (untargeted) signs for every sample; sample ids are positions.
PerturbationSet compute_perturbations(const Network& surrogate, const Dataset& clean, std::size_t workers = 1);

std::vector<AdversarialSet> build_adversarial_sets(const PerturbationSet& perturbations, const Dataset& clean,
                                                   const std::vector<double>& eps, AttackMode mode);

std::vector<AdversarialSet> generate_adversarial_sets(const Network& surrogate, const Dataset& clean,
                                                      const std::vector<double>& eps,
                                                      AttackMode mode = AttackMode::White,
                                                      std::size_t workers = 1);

// 10 log10(1 / MSE) for images in [0,1]; +infinity when identical.
double psnr(const Tensor& clean, const Tensor& adv);

// Mean of per-sample PSNR; +infinity if any pair is identical.
double mean_psnr(const Dataset& clean, const Dataset& adv);

}  // namespace advl::attacks
