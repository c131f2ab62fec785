#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "advl/attacks/fgsm.hpp"
#include "advl/nets/training.hpp"

namespace advl::harness {

enum class DatasetSource { Synthetic, Idx, PixmapDir };

struct SynthConfig {
    std::size_t classes = 10;
    std::size_t per_class = 60;
    std::size_t height = 28;
    std::size_t width = 28;
    double noise = 0.1;
};

enum class HeatmapTarget { Predicted, True };

struct RunConfig {
    std::uint64_t seed = 2023;
    DatasetSource source = DatasetSource::Synthetic;
    SynthConfig synth;
    std::filesystem::path idx_images;
    std::filesystem::path idx_labels;
    std::filesystem::path pixmap_dir;
    std::array<double, 3> split{0.8, 0.1, 0.1};  // train, val, test

    std::vector<std::string> models{"deep", "wide"};
    std::map<std::string, nets::TrainConfig> train;  // one entry per model

    std::vector<double> eps{0.0, 0.01, 0.05, 0.075, 0.1};
    std::vector<attacks::AttackMode> modes{attacks::AttackMode::White, attacks::AttackMode::Black};
    std::string surrogate = "deep";

    std::filesystem::path out = "advl_out";
    std::optional<std::size_t> layer;  // overrides the last-conv canonical layer
    std::size_t showcase = 3;
    HeatmapTarget target = HeatmapTarget::Predicted;
    bool per_layer_metrics = false;
    bool vid_include_zero = false;
    bool vid_per_set = false;
    std::size_t workers = 0;  // 0: one per hardware thread
};

RunConfig default_config();

// Line-based `key = value` text; `#` starts a comment. Unknown keys and bad
// values raise ConfigError naming the line.
RunConfig parse_config(const std::string& text, RunConfig base = default_config());
RunConfig load_config(const std::filesystem::path& path, RunConfig base = default_config());

// Applies one key; shared by the file parser and CLI overrides.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

std::vector<double> parse_eps_list(const std::string& text);

// Cross-field checks: eps strictly increasing from 0, split sums to 1,
// surrogate among the models, and so on.
void validate(const RunConfig& config);

}  // namespace advl::harness
