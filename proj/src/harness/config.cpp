#include "advl/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "advl/core/error.hpp"

namespace advl::harness {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto z = s.find_last_not_of(" \t\r");
    return s.substr(a, z - a + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' is out of range: '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

void apply_train(nets::TrainConfig& t, const std::string& field, const std::string& key, const std::string& v) {
    if (field == "epochs") t.epochs = to_uint(key, v);
    else if (field == "learning_rate") t.learning_rate = to_real(key, v);
    else if (field == "momentum") t.momentum = to_real(key, v);
    else if (field == "batch_size") t.batch_size = to_uint(key, v);
    else if (field == "seed") t.seed = to_uint(key, v);
    else throw ConfigError("unknown key '" + key + "'");
}

bool is_train_field(const std::string& f) {
    return f == "epochs" || f == "learning_rate" || f == "momentum" || f == "batch_size";
}

}  // namespace

RunConfig default_config() {
    RunConfig c;
    for (const auto& m : c.models) {
        nets::TrainConfig t;
        t.epochs = 6;
        t.learning_rate = 0.01;
        t.momentum = 0.9;
        t.batch_size = 16;
        c.train[m] = t;
    }
    c.train["deep"].seed = 11;
    c.train["wide"].seed = 12;
    return c;
}

std::vector<double> parse_eps_list(const std::string& text) {
    std::vector<double> eps;
    for (const auto& item : split_list(text)) eps.push_back(to_real("eps", item));
    if (eps.empty()) throw ConfigError("'eps' expects a comma-separated list");
    return eps;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& v) {
    if (key == "seed") c.seed = to_uint(key, v);
    else if (key == "dataset") {
        if (v == "synthetic") c.source = DatasetSource::Synthetic;
        else if (v == "idx") c.source = DatasetSource::Idx;
        else if (v == "pixmap") c.source = DatasetSource::PixmapDir;
        else throw ConfigError("'dataset' expects synthetic, idx or pixmap, got '" + v + "'");
    }
    else if (key == "synth.classes") c.synth.classes = to_uint(key, v);
    else if (key == "synth.per_class") c.synth.per_class = to_uint(key, v);
    else if (key == "synth.height") c.synth.height = to_uint(key, v);
    else if (key == "synth.width") c.synth.width = to_uint(key, v);
    else if (key == "synth.noise") c.synth.noise = to_real(key, v);
    else if (key == "idx.images") c.idx_images = v;
    else if (key == "idx.labels") c.idx_labels = v;
    else if (key == "pixmap.dir") c.pixmap_dir = v;
    else if (key == "split") {
        const auto parts = split_list(v);
        if (parts.size() != 3) throw ConfigError("'split' expects three fractions: train, val, test");
        for (std::size_t i = 0; i < 3; ++i) c.split[i] = to_real(key, parts[i]);
    }
    else if (is_train_field(key)) {
        for (auto& [name, t] : c.train) apply_train(t, key, key, v);
    }
    else if (key.rfind("deep.", 0) == 0 || key.rfind("wide.", 0) == 0) {
        const auto dot = key.find('.');
        apply_train(c.train[key.substr(0, dot)], key.substr(dot + 1), key, v);
    }
    else if (key == "models") {
        c.models = split_list(v);
        for (const auto& m : c.models)
            if (m != "deep" && m != "wide") throw ConfigError("unknown model '" + m + "' (expected deep or wide)");
        if (c.models.empty()) throw ConfigError("'models' needs at least one model");
        for (std::size_t i = 0; i < c.models.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (c.models[i] == c.models[j]) throw ConfigError("model '" + c.models[i] + "' listed twice");
    }
    else if (key == "eps") c.eps = parse_eps_list(v);
    else if (key == "mode") {
        if (v == "both") c.modes = {attacks::AttackMode::White, attacks::AttackMode::Black};
        else {
            try {
                c.modes = {attacks::parse_mode(v)};
            } catch (const ConfigError&) {
                throw ConfigError("'mode' expects white, black or both, got '" + v + "'");
            }
        }
    }
    else if (key == "surrogate") c.surrogate = v;
    else if (key == "out") c.out = v;
    else if (key == "layer") {
        if (v == "last" || v.empty()) c.layer.reset();
        else c.layer = to_uint(key, v);
    }
    else if (key == "showcase") c.showcase = to_uint(key, v);
    else if (key == "heatmap_target") {
        if (v == "predicted") c.target = HeatmapTarget::Predicted;
        else if (v == "true") c.target = HeatmapTarget::True;
        else throw ConfigError("'heatmap_target' expects predicted or true, got '" + v + "'");
    }
    else if (key == "per_layer_metrics") c.per_layer_metrics = to_bool(key, v);
    else if (key == "vid_include_zero") c.vid_include_zero = to_bool(key, v);
    else if (key == "vid_per_set") c.vid_per_set = to_bool(key, v);
    else if (key == "workers") c.workers = to_uint(key, v);
    else throw ConfigError("unknown key '" + key + "'");
}

RunConfig parse_config(const std::string& text, RunConfig base) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            apply_setting(base, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

void validate(const RunConfig& c) {
    attacks::validate_eps_schedule(c.eps);
    if (c.eps.front() != 0.0) throw ConfigError("eps list must start at 0");
    const double total = c.split[0] + c.split[1] + c.split[2];
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
    for (double f : c.split)
        if (!(f >= 0.0)) throw ConfigError("split fractions must be non-negative");
    if (c.modes.empty()) throw ConfigError("no attack mode selected");
    if (std::find(c.models.begin(), c.models.end(), c.surrogate) == c.models.end())
        throw ConfigError("surrogate '" + c.surrogate + "' is not one of the models");
    for (const auto& m : c.models) {
        const auto it = c.train.find(m);
        if (it == c.train.end()) throw ConfigError("no training settings for model '" + m + "'");
        nets::validate(it->second);
    }
    if (c.source == DatasetSource::Synthetic) {
        if (c.synth.classes < 2) throw ConfigError("synth.classes must be at least 2");
        if (c.synth.height < 16 || c.synth.width < 16) throw ConfigError("synthetic images must be at least 16x16");
        if (c.synth.per_class == 0) throw ConfigError("synth.per_class must be positive");
        if (!(c.synth.noise >= 0.0)) throw ConfigError("synth.noise must be non-negative");
    }
    if (c.source == DatasetSource::Idx && (c.idx_images.empty() || c.idx_labels.empty()))
        throw ConfigError("dataset = idx needs idx.images and idx.labels");
    if (c.source == DatasetSource::PixmapDir && c.pixmap_dir.empty())
        throw ConfigError("dataset = pixmap needs pixmap.dir");
    if (c.out.empty()) throw ConfigError("output directory is empty");
}

}  // namespace advl::harness
