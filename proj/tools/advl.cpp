// advl: train toy CNNs, attack them with FGSM, explain with Grad-CAM and
// measure how the explanations drift.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "advl/harness/pipeline.hpp"

namespace {

using namespace advl::harness;
namespace fs = std::filesystem;

struct Overrides {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> settings;
};

void add_common(CLI::App* cmd, Overrides& o) {
    auto setter = [&o](const char* key) {
        return [&o, key](const std::string& v) { o.settings.emplace_back(key, v); };
    };
    cmd->add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option_function<std::string>("--out", setter("out"), "output directory");
    cmd->add_option_function<std::string>("--eps", setter("eps"), "comma-separated epsilon list starting at 0");
    cmd->add_option_function<std::string>("--mode", setter("mode"), "white, black or both");
    cmd->add_option_function<std::string>("--surrogate", setter("surrogate"), "model that crafts black-box attacks");
    cmd->add_option_function<std::string>("--layer", setter("layer"), "conv layer id for metrics, or 'last'");
    cmd->add_option_function<std::string>("--seed", setter("seed"), "run seed");
    cmd->add_option_function<std::string>("--workers", setter("workers"), "worker threads, 0 for all cores");
}

RunConfig resolve(const Overrides& o) {
    RunConfig cfg = o.config_path.empty() ? default_config() : load_config(o.config_path);
    for (const auto& [k, v] : o.settings) apply_setting(cfg, k, v);
    validate(cfg);
    return cfg;
}

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, exit_code_for(e), e.what());
    }
}

void cmd_train(const RunConfig& cfg) {
    const auto data = stage("data", [&] { return prepare_data(cfg); });
    stage("train", [&] { write_models(train_models(cfg, data, &std::cout), cfg.out); });
}

void cmd_attack(const RunConfig& cfg) {
    const auto data = stage("data", [&] { return prepare_data(cfg); });
    const auto models = stage("load", [&] { return load_models(cfg, cfg.out); });
    stage("attack", [&] {
        const auto attack = run_attacks(cfg, models, data.test);
        write_attack_outputs(cfg, attack, cfg.out);
        for (const auto& r : attack.accuracy)
            std::cout << r.model << " " << advl::attacks::mode_name(r.mode) << " eps " << eps_label(r.epsilon)
                      << " accuracy " << r.accuracy << "\n";
    });
}

void cmd_explain(const RunConfig& cfg) {
    const auto data = stage("data", [&] { return prepare_data(cfg); });
    const auto models = stage("load", [&] { return load_models(cfg, cfg.out); });
    const auto attack = stage("load", [&] { return load_attack_outputs(cfg, models, data.test, cfg.out); });
    stage("explain", [&] { write_showcase(cfg, models, attack, data.test, cfg.out); });
}

void cmd_analyze(const RunConfig& cfg) {
    const auto data = stage("data", [&] { return prepare_data(cfg); });
    const auto models = stage("load", [&] { return load_models(cfg, cfg.out); });
    const auto attack = stage("load", [&] { return load_attack_outputs(cfg, models, data.test, cfg.out); });
    stage("analyze", [&] {
        const auto modes = analyze(cfg, models, attack, data.test);
        write_analysis(cfg, modes, cfg.out);
        for (const auto& m : modes)
            if (!m.vid_note.empty()) std::cout << m.vid_note << "\n";
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial attacks against Grad-CAM explanations on toy CNNs"};
    app.require_subcommand(1);

    Overrides o;
    struct Sub {
        const char* name;
        const char* help;
        void (*run)(const RunConfig&);
    };
    const Sub subs[] = {
        {"train", "train the toy models and save weights", cmd_train},
        {"attack", "craft FGSM sets and evaluate accuracy", cmd_attack},
        {"explain", "export Grad-CAM heatmaps for showcase samples", cmd_explain},
        {"analyze", "NISSIM, MOD and VID reports", cmd_analyze},
        {"pipeline", "run every stage", [](const RunConfig& cfg) { run_pipeline(cfg, &std::cout); }},
    };
    std::vector<std::pair<CLI::App*, const Sub*>> cmds;
    for (const auto& s : subs) {
        auto* c = app.add_subcommand(s.name, s.help);
        add_common(c, o);
        cmds.emplace_back(c, &s);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        const RunConfig cfg = resolve(o);
        for (const auto& [c, s] : cmds)
            if (c->parsed()) s->run(cfg);
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "advl: " << e.what() << "\n";
        return exit_code_for(e);
    }
}
