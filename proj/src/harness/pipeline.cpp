#include "advl/harness/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>
#include <tuple>

#include "advl/attacks/adversarial_io.hpp"
#include "advl/core/parallel.hpp"
#include "advl/core/random.hpp"
#include "advl/core/tape.hpp"
#include "advl/explain/gradcam.hpp"
#include "advl/harness/report.hpp"
#include "advl/metrics/ssim.hpp"
#include "advl/nets/toy_nets.hpp"
#include "advl/nets/weights.hpp"

namespace advl::harness {

namespace fs = std::filesystem;
using attacks::AttackMode;

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kDataTag = 0x5d;
constexpr std::uint64_t kSplitTag = 0x5e;
constexpr std::uint64_t kInitTag = 0x100;

void say(std::ostream* log, const std::string& msg) {
    if (log) *log << msg << std::endl;
}

template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, exit_code_for(e), e.what());
    }
}

void make_dirs(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

const TrainedModel& model_named(const std::vector<TrainedModel>& models, const std::string& name) {
    for (const auto& m : models)
        if (m.name() == name) return m;
    throw UsageError("no trained model named '" + name + "'");
}

std::string surrogate_for(const RunConfig& config, AttackMode mode, const std::string& victim) {
    return mode == AttackMode::White ? victim : config.surrogate;
}

std::size_t target_for(const RunConfig& config, const Network& net, const Tensor& x, std::size_t label) {
    return config.target == HeatmapTarget::True ? label : argmax_class(predict_logits(net, x));
}

fs::path set_dir(const fs::path& out, AttackMode mode, const std::string& surrogate, double eps) {
    return out / "adv" / attacks::mode_name(mode) / surrogate / ("eps_" + eps_label(eps));
}

std::vector<std::string> sorted_model_names(const RunConfig& config) {
    auto names = config.models;
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const UsageError*>(&e)) return kExitUsage;
    if (dynamic_cast<const FormatError*>(&e)) return kExitFormat;
    return kExitRuntime;
}

std::string eps_label(double epsilon) { return format_real(epsilon); }

const VictimSets& AttackOutputs::find(AttackMode mode, const std::string& model) const {
    for (const auto& v : victims)
        if (v.mode == mode && v.model == model) return v;
    throw UsageError(std::string("no adversarial sets for ") + attacks::mode_name(mode) + "/" + model);
}

const ModeMetrics& MetricsReport::find(AttackMode mode) const {
    for (const auto& m : modes)
        if (m.mode == mode) return m;
    throw UsageError(std::string("no metrics for mode ") + attacks::mode_name(mode));
}

double MetricsReport::accuracy_of(const std::string& model, double epsilon, AttackMode mode) const {
    for (const auto& r : accuracy)
        if (r.model == model && r.epsilon == epsilon && r.mode == mode) return r.accuracy;
    throw UsageError("no accuracy row for " + model + " at epsilon " + eps_label(epsilon));
}

SplitDataset prepare_data(const RunConfig& config) {
    Dataset all;
    switch (config.source) {
        case DatasetSource::Synthetic:
            all = synth_dataset(config.synth.classes, config.synth.per_class, config.synth.height,
                                config.synth.width, derive_seed(config.seed, kDataTag), config.synth.noise);
            break;
        case DatasetSource::Idx:
            all = load_idx(config.idx_images, config.idx_labels);
            break;
        case DatasetSource::PixmapDir:
            all = load_pixmap_dir(config.pixmap_dir);
            break;
    }
    return split(all, config.split, derive_seed(config.seed, kSplitTag));
}

static std::size_t num_classes_of(const SplitDataset& data) {
    std::size_t k = 0;
    for (const Dataset* d : {&data.train, &data.val, &data.test})
        for (auto l : d->labels) k = std::max(k, l + 1);
    return std::max<std::size_t>(k, 2);
}

std::vector<TrainedModel> train_models(const RunConfig& config, const SplitDataset& data, std::ostream* log) {
    const Shape input = data.train.images.front().shape();
    const std::size_t classes = num_classes_of(data);
    std::vector<TrainedModel> out;
    for (std::size_t i = 0; i < config.models.size(); ++i) {
        const std::string& name = config.models[i];
        const NetworkSpec spec = nets::build_toy(name, input, classes);
        Network net = nets::init_params(spec, derive_seed(config.seed, kInitTag + i));
        nets::TrainConfig tc = config.train.at(name);
        tc.seed = derive_seed(tc.seed, config.seed);
        tc.workers = config.workers;
        say(log, "training " + name + " (" + std::to_string(net.parameter_count()) + " parameters, " +
                     std::to_string(tc.epochs) + " epochs)");
        auto r = nets::train(std::move(net), data.train, data.val, tc);
        for (const auto& h : r.history)
            say(log, "  epoch " + std::to_string(h.epoch) + "  loss " + format_real(h.train_loss) + "  val_acc " +
                         format_real(h.val_accuracy));
        out.push_back({std::move(r.network), std::move(r.history), r.best_epoch});
    }
    return out;
}

std::size_t metric_layer(const RunConfig& config, const NetworkSpec& spec) {
    if (!config.layer) return explain::canonical_layer(spec);
    const auto ids = conv_layer_ids(spec);
    if (std::find(ids.begin(), ids.end(), *config.layer) == ids.end())
        throw ConfigError("layer " + std::to_string(*config.layer) + " is not a Conv2D layer of model '" + spec.name +
                          "'");
    return *config.layer;
}

AttackOutputs run_attacks(const RunConfig& config, const std::vector<TrainedModel>& models, const Dataset& test) {
    AttackOutputs out;
    for (AttackMode mode : config.modes)
        for (const auto& name : config.models) {
            const std::string s = surrogate_for(config, mode, name);
            if (!out.perturbations.count(s))
                out.perturbations[s] = attacks::compute_perturbations(model_named(models, s).network, test, config.workers);
        }
    for (AttackMode mode : config.modes)
        for (const auto& name : config.models) {
            const std::string s = surrogate_for(config, mode, name);
            out.victims.push_back({mode, name, attacks::build_adversarial_sets(out.perturbations.at(s), test, config.eps, mode)});
        }

    for (const auto& v : out.victims) {
        const Network& net = model_named(models, v.model).network;
        for (const auto& set : v.sets)
            out.accuracy.push_back({v.model, set.epsilon, v.mode, nets::evaluate(net, set.data, config.workers)});
    }
    std::sort(out.accuracy.begin(), out.accuracy.end(), [](const AccuracyRow& a, const AccuracyRow& b) {
        return std::tuple(a.model, a.epsilon, static_cast<int>(a.mode)) <
               std::tuple(b.model, b.epsilon, static_cast<int>(b.mode));
    });

    for (const auto& [surrogate, p] : out.perturbations) {
        const auto sets = attacks::build_adversarial_sets(p, test, config.eps, AttackMode::White);
        for (const auto& set : sets) out.psnr.push_back({surrogate, set.epsilon, attacks::mean_psnr(test, set.data)});
    }
    return out;
}

std::vector<ModeMetrics> analyze(const RunConfig& config, const std::vector<TrainedModel>& models,
                                 const AttackOutputs& attack, const Dataset& test) {
    std::vector<ModeMetrics> result;
    const std::size_t n = test.size();
    for (AttackMode mode : config.modes) {
        ModeMetrics mm;
        mm.mode = mode;
        for (const auto& name : sorted_model_names(config)) {
            const Network& net = model_named(models, name).network;
            const auto& victim = attack.find(mode, name);
            const std::size_t layer = metric_layer(config, net.spec);
            const auto conv_ids = conv_layer_ids(net.spec);
            const std::size_t E = victim.sets.size();

            // [sample][eps] -> nissim, canonical and per conv layer.
            std::vector<std::vector<double>> canon(n, std::vector<double>(E));
            std::vector<std::vector<std::vector<double>>> per_layer(
                n, std::vector<std::vector<double>>(E, std::vector<double>(conv_ids.size())));
            parallel_for(n, config.workers, [&](std::size_t i) {
                const Tensor& x = test.images[i];
                const std::size_t t0 = target_for(config, net, x, test.labels[i]);
                const auto clean = explain::gradcam(net, x, t0, layer);
                explain::HeatmapStack clean_stack;
                if (config.per_layer_metrics) clean_stack = explain::gradcam_stack(net, x, t0);
                for (std::size_t e = 0; e < E; ++e) {
                    const Tensor& adv = victim.sets[e].data.images[i];
                    const std::size_t t = target_for(config, net, adv, test.labels[i]);
                    canon[i][e] = metrics::nissim(clean.values, explain::gradcam(net, adv, t, layer).values);
                    if (config.per_layer_metrics) {
                        const auto stack = explain::gradcam_stack(net, adv, t);
                        for (std::size_t l = 0; l < conv_ids.size(); ++l)
                            per_layer[i][e][l] = metrics::nissim(clean_stack[l].values, stack[l].values);
                    }
                }
            });
            for (std::size_t e = 0; e < E; ++e)
                for (std::size_t i = 0; i < n; ++i) {
                    mm.records.push_back({name, i, victim.sets[e].epsilon, layer, canon[i][e]});
                    if (config.per_layer_metrics)
                        for (std::size_t l = 0; l < conv_ids.size(); ++l)
                            mm.layer_records.push_back({name, i, victim.sets[e].epsilon, conv_ids[l], per_layer[i][e][l]});
                }
        }
        mm.mod = metrics::build_mod_table(mm.records);
        mm.mean_shift = metrics::mean_shift_row(mm.mod);

        const bool has_levels = config.vid_include_zero ||
                                std::any_of(config.eps.begin(), config.eps.end(), [](double e) { return e != 0.0; });
        if (!has_levels) {
            mm.vid_note = "no nonzero epsilon: VID skipped";
        } else {
            for (const auto& name : mm.mod.models) {
                std::vector<metrics::DissimilarityRecord> mine;
                for (const auto& r : mm.records)
                    if (r.model == name) mine.push_back(r);
                mm.vid.push_back(metrics::vid(mine, {config.vid_include_zero, 0.02}));
            }
        }
        result.push_back(std::move(mm));
    }
    return result;
}

void write_models(const std::vector<TrainedModel>& models, const fs::path& out) {
    make_dirs(out / "models");
    for (const auto& m : models) {
        nets::save_weights(m.network, out / "models" / (m.name() + ".advl"));
        CsvTable t{{"epoch", "train_loss", "val_accuracy", "best"}, {}};
        for (const auto& h : m.history)
            t.add({std::to_string(h.epoch), format_real(h.train_loss), format_real(h.val_accuracy),
                   h.epoch == m.best_epoch ? "1" : "0"});
        t.write(out / ("history_" + m.name() + ".csv"));
    }
}

std::vector<TrainedModel> load_models(const RunConfig& config, const fs::path& out) {
    std::vector<TrainedModel> models;
    for (const auto& name : config.models) {
        Network net = nets::load_weights(out / "models" / (name + ".advl"));
        if (net.spec.name != name)
            throw FormatError("weights in models/" + name + ".advl belong to model '" + net.spec.name + "'", 0);
        models.push_back({std::move(net), {}, 0});
    }
    return models;
}

void write_attack_outputs(const RunConfig&, const AttackOutputs& attack, const fs::path& out) {
    make_dirs(out / "adv");
    for (const auto& [surrogate, p] : attack.perturbations)
        attacks::save_perturbations(p, out / "adv" / (surrogate + ".advp"));
    std::set<fs::path> written;  // black-box victims share one surrogate's sets
    for (const auto& v : attack.victims)
        for (const auto& set : v.sets) {
            const fs::path dir = set_dir(out, v.mode, set.surrogate, set.epsilon);
            if (written.insert(dir).second) attacks::write_adversarial_set(set, dir);
        }

    CsvTable acc{{"model", "epsilon", "mode", "accuracy"}, {}};
    for (const auto& r : attack.accuracy)
        acc.add({r.model, format_real(r.epsilon), attacks::mode_name(r.mode), format_real(r.accuracy)});
    acc.write(out / "accuracy.csv");

    CsvTable ps{{"surrogate", "epsilon", "mean_psnr_db"}, {}};
    for (const auto& r : attack.psnr) ps.add({r.surrogate, format_real(r.epsilon), format_real(r.mean_psnr)});
    ps.write(out / "psnr.csv");
}

AttackOutputs load_attack_outputs(const RunConfig& config, const std::vector<TrainedModel>& models,
                                  const Dataset& test, const fs::path& out) {
    AttackOutputs a;
    for (AttackMode mode : config.modes)
        for (const auto& name : config.models) {
            const std::string s = surrogate_for(config, mode, name);
            if (!a.perturbations.count(s)) {
                auto p = attacks::load_perturbations(out / "adv" / (s + ".advp"));
                if (p.signs.size() != test.size())
                    throw FormatError("perturbations for '" + s + "' cover " + std::to_string(p.signs.size()) +
                                          " samples, test set has " + std::to_string(test.size()),
                                      0);
                a.perturbations[s] = std::move(p);
            }
            VictimSets v{mode, name, {}};
            for (double e : config.eps)
                v.sets.push_back(attacks::load_adversarial_set(set_dir(out, mode, s, e), test, a.perturbations.at(s)));
            for (const auto& set : v.sets)
                a.accuracy.push_back({name, set.epsilon, mode, nets::evaluate(model_named(models, name).network, set.data, config.workers)});
            a.victims.push_back(std::move(v));
        }
    std::sort(a.accuracy.begin(), a.accuracy.end(), [](const AccuracyRow& x, const AccuracyRow& y) {
        return std::tuple(x.model, x.epsilon, static_cast<int>(x.mode)) <
               std::tuple(y.model, y.epsilon, static_cast<int>(y.mode));
    });
    return a;
}

void write_showcase(const RunConfig& config, const std::vector<TrainedModel>& models, const AttackOutputs& attack,
                    const Dataset& test, const fs::path& out) {
    const std::size_t count = std::min(config.showcase, test.size());
    for (const auto& v : attack.victims) {
        const Network& net = model_named(models, v.model).network;
        for (std::size_t i = 0; i < count; ++i) {
            char sample[32];
            std::snprintf(sample, sizeof sample, "sample_%06zu", i);
            const fs::path dir = out / "heatmaps" / attacks::mode_name(v.mode) / v.model / sample;
            make_dirs(dir);
            for (const auto& set : v.sets) {
                const Tensor& x = set.data.images[i];
                const std::size_t t = target_for(config, net, x, test.labels[i]);
                for (auto& h : explain::gradcam_stack(net, x, t)) {
                    const std::string stem = "eps_" + eps_label(set.epsilon) + "_layer_" + std::to_string(h.layer_id);
                    explain::export_heatmap(h, dir / (stem + ".pgm"), explain::ExportMode::Gray);
                    explain::export_heatmap(h, dir / (stem + ".ppm"), explain::ExportMode::Pseudocolor);
                }
            }
        }
    }
}

void write_analysis(const RunConfig& config, const std::vector<ModeMetrics>& modes, const fs::path& out) {
    auto record_rows = [&](const std::vector<metrics::DissimilarityRecord>& rs, AttackMode mode,
                           std::vector<std::tuple<std::string, double, int, std::size_t, std::size_t, double>>& rows) {
        for (const auto& r : rs) rows.emplace_back(r.model, r.epsilon, static_cast<int>(mode), r.sample_id, r.layer_id, r.nissim);
    };
    auto write_records = [&](bool layers, const fs::path& path) {
        std::vector<std::tuple<std::string, double, int, std::size_t, std::size_t, double>> rows;
        for (const auto& m : modes) record_rows(layers ? m.layer_records : m.records, m.mode, rows);
        std::sort(rows.begin(), rows.end());
        CsvTable t{{"model", "epsilon", "mode", "sample_id", "layer", "nissim"}, {}};
        for (const auto& [model, eps, mode, id, layer, value] : rows)
            t.add({model, format_real(eps), attacks::mode_name(static_cast<AttackMode>(mode)), std::to_string(id),
                   std::to_string(layer), format_real(value)});
        t.write(path);
    };
    write_records(false, out / "nissim.csv");

    // MOD rows sorted by (model, epsilon, mode); the mean-shift rows follow.
    std::vector<std::tuple<std::string, double, int, double, std::size_t>> mod_rows;
    std::vector<std::tuple<double, int, double>> shift_rows;
    for (const auto& m : modes) {
        for (std::size_t i = 0; i < m.mod.models.size(); ++i)
            for (std::size_t e = 0; e < m.mod.epsilons.size(); ++e)
                mod_rows.emplace_back(m.mod.models[i], m.mod.epsilons[e], static_cast<int>(m.mode), m.mod.at(i, e), m.mod.samples);
        for (std::size_t e = 0; e < m.mod.epsilons.size(); ++e)
            shift_rows.emplace_back(m.mod.epsilons[e], static_cast<int>(m.mode), m.mean_shift[e]);
    }
    std::sort(mod_rows.begin(), mod_rows.end());
    std::sort(shift_rows.begin(), shift_rows.end());
    CsvTable mod{{"model", "epsilon", "mode", "mod", "samples"}, {}};
    for (const auto& [model, eps, mode, value, n] : mod_rows)
        mod.add({model, format_real(eps), attacks::mode_name(static_cast<AttackMode>(mode)), format_real(value), std::to_string(n)});
    const std::size_t n_models = modes.empty() ? 0 : modes.front().mod.models.size();
    for (const auto& [eps, mode, value] : shift_rows)
        mod.add({"mean_shift", format_real(eps), attacks::mode_name(static_cast<AttackMode>(mode)), format_real(value),
                 std::to_string(n_models)});
    mod.write(out / "mod.csv");

    if (config.per_layer_metrics) {
        write_records(true, out / "nissim_layers.csv");
        CsvTable ml{{"model", "epsilon", "mode", "layer", "mod"}, {}};
        std::vector<std::tuple<std::string, double, int, std::size_t, double>> rows;
        for (const auto& m : modes) {
            std::map<std::tuple<std::string, double, std::size_t>, std::pair<double, std::size_t>> acc;
            for (const auto& r : m.layer_records) {
                auto& [sum, count] = acc[{r.model, r.epsilon, r.layer_id}];
                sum += r.nissim;
                ++count;
            }
            for (const auto& [key, v] : acc)
                rows.emplace_back(std::get<0>(key), std::get<1>(key), static_cast<int>(m.mode), std::get<2>(key),
                                  v.first / static_cast<double>(v.second));
        }
        std::sort(rows.begin(), rows.end());
        for (const auto& [model, eps, mode, layer, value] : rows)
            ml.add({model, format_real(eps), attacks::mode_name(static_cast<AttackMode>(mode)), std::to_string(layer), format_real(value)});
        ml.write(out / "mod_layers.csv");
    }

    bool any_vid = false;
    for (const auto& m : modes) any_vid = any_vid || !m.vid.empty();
    if (!any_vid) return;
    std::vector<std::string> header{"model", "mode", "vid", "levels"};
    if (config.vid_per_set) header.insert(header.begin() + 3, "vid_per_set");
    CsvTable vid{header, {}};
    std::vector<std::tuple<std::string, int, const metrics::VidSummary*>> vrows;
    for (const auto& m : modes)
        for (const auto& v : m.vid) vrows.emplace_back(v.model, static_cast<int>(m.mode), &v);
    std::sort(vrows.begin(), vrows.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    for (const auto& [model, mode, v] : vrows) {
        std::vector<std::string> row{model, attacks::mode_name(static_cast<AttackMode>(mode)), format_real(v->vid),
                                     std::to_string(v->levels.size())};
        if (config.vid_per_set) row.insert(row.begin() + 3, format_real(v->per_set_vid));
        vid.add(std::move(row));
        const fs::path hdir = out / "hist" / attacks::mode_name(static_cast<AttackMode>(mode)) / model;
        make_dirs(hdir);
        for (const auto& h : v->histograms) {
            CsvTable ht{{"bin_lo", "bin_hi", "count"}, {}};
            for (std::size_t b = 0; b < h.counts.size(); ++b)
                ht.add({format_real(static_cast<double>(b) * h.bin_width),
                        format_real(std::min(1.0, static_cast<double>(b + 1) * h.bin_width)), std::to_string(h.counts[b])});
            ht.write(hdir / ("eps_" + eps_label(h.epsilon) + ".csv"));
        }
    }
    vid.write(out / "vid.csv");
}

PipelineResult run_pipeline(const RunConfig& config, std::ostream* log) {
    in_stage("config", [&] { validate(config); });
    const fs::path out = config.out;
    const fs::path staging = out / ".staging";
    in_stage("setup", [&] {
        make_dirs(out);
        std::error_code ec;
        fs::remove_all(staging, ec);
        make_dirs(staging);
    });

    PipelineResult r;
    try {
        r.data = in_stage("data", [&] { return prepare_data(config); });
        say(log, "data: " + std::to_string(r.data.train.size()) + " train / " + std::to_string(r.data.val.size()) +
                     " val / " + std::to_string(r.data.test.size()) + " test");
        r.models = in_stage("train", [&] {
            auto m = train_models(config, r.data, log);
            write_models(m, staging);
            return m;
        });
        r.attack = in_stage("attack", [&] {
            auto a = run_attacks(config, r.models, r.data.test);
            write_attack_outputs(config, a, staging);
            return a;
        });
        r.report.accuracy = r.attack.accuracy;
        r.report.psnr = r.attack.psnr;
        for (const auto& row : r.report.accuracy)
            say(log, "accuracy " + row.model + " " + attacks::mode_name(row.mode) + " eps " + eps_label(row.epsilon) +
                         " = " + format_real(row.accuracy));
        in_stage("explain", [&] { write_showcase(config, r.models, r.attack, r.data.test, staging); });
        r.report.modes = in_stage("analyze", [&] {
            auto modes = analyze(config, r.models, r.attack, r.data.test);
            write_analysis(config, modes, staging);
            return modes;
        });
        for (const auto& m : r.report.modes)
            if (!m.vid_note.empty()) say(log, m.vid_note);

        in_stage("publish", [&] {
            for (const auto& entry : fs::directory_iterator(staging)) {
                const fs::path target = out / entry.path().filename();
                fs::remove_all(target);
                fs::rename(entry.path(), target);
            }
            fs::remove_all(staging);
        });
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
    return r;
}

}  // namespace advl::harness
