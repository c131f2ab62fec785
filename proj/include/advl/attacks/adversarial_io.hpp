#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "advl/attacks/fgsm.hpp"

namespace advl::attacks {

// Perturbation file, little-endian:
//   "ADVP" | u32 version=1 | u32 name_len | name | u32 count | u32 rank |
//   u32 dims[rank] | count x (u32 sample_id, i8 signs[prod(dims)])
void save_perturbations(const PerturbationSet& set, const std::filesystem::path& path);
PerturbationSet load_perturbations(const std::filesystem::path& path);

struct AdversarialManifest {
    std::string surrogate;
    AttackMode mode = AttackMode::White;
    double epsilon = 0.0;
    std::size_t samples = 0;
};

// Writes <dir>/manifest.txt, <dir>/labels.csv and one 16-bit PGM per sample
// under <dir>/images/. Images are for inspection; exact pixels are rebuilt
// from the perturbation file.
void write_adversarial_set(const AdversarialSet& set, const std::filesystem::path& dir);
AdversarialManifest read_manifest(const std::filesystem::path& dir);

// Rebuilds the set named by the manifest in `dir` from the clean data and
// the stored signs, after checking that all three agree.
AdversarialSet load_adversarial_set(const std::filesystem::path& dir, const Dataset& clean,
                                    const PerturbationSet& perturbations);

}  // namespace advl::attacks
