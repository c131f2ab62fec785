#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "advl/attacks/fgsm.hpp"
#include "advl/core/error.hpp"
#include "advl/core/network.hpp"
#include "advl/harness/config.hpp"
#include "advl/harness/datasets.hpp"
#include "advl/metrics/dissimilarity.hpp"
#include "advl/nets/training.hpp"

namespace advl::harness {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFormat = 2;
inline constexpr int kExitRuntime = 3;

int exit_code_for(const std::exception& e);

/// A failure inside one pipeline stage, labeled with that stage.
class StageError : public Error {
public:
    StageError(std::string stage, int exit_code, const std::string& what)
        : Error("stage '" + stage + "': " + what), stage_(std::move(stage)), exit_code_(exit_code) {}

    const std::string& stage() const noexcept { return stage_; }
    int exit_code() const noexcept { return exit_code_; }

private:
    std::string stage_;
    int exit_code_;
};

struct TrainedModel {
    Network network;
    std::vector<nets::EpochStats> history;
    std::size_t best_epoch = 0;

    const std::string& name() const { return network.spec.name; }
};

struct AccuracyRow {
    std::string model;
    double epsilon = 0.0;
    attacks::AttackMode mode = attacks::AttackMode::White;
    double accuracy = 0.0;
};

struct PsnrRow {
    std::string surrogate;
    double epsilon = 0.0;
    double mean_psnr = 0.0;
};

/// Adversarial sets one victim model is evaluated on in one mode.
struct VictimSets {
    attacks::AttackMode mode = attacks::AttackMode::White;
    std::string model;
    std::vector<attacks::AdversarialSet> sets;  // one per epsilon, ascending
};

struct AttackOutputs {
    std::map<std::string, attacks::PerturbationSet> perturbations;  // by surrogate
    std::vector<VictimSets> victims;
    std::vector<AccuracyRow> accuracy;
    std::vector<PsnrRow> psnr;

    const VictimSets& find(attacks::AttackMode mode, const std::string& model) const;
};

struct ModeMetrics {
    attacks::AttackMode mode = attacks::AttackMode::White;
    std::vector<metrics::DissimilarityRecord> records;        // canonical layer
    std::vector<metrics::DissimilarityRecord> layer_records;  // every conv layer, when enabled
    metrics::ModTable mod;
    std::vector<double> mean_shift;
    std::vector<metrics::VidSummary> vid;  // empty when skipped
    std::string vid_note;
};

struct MetricsReport {
    std::vector<AccuracyRow> accuracy;
    std::vector<PsnrRow> psnr;
    std::vector<ModeMetrics> modes;

    const ModeMetrics& find(attacks::AttackMode mode) const;
    double accuracy_of(const std::string& model, double epsilon, attacks::AttackMode mode) const;
};

struct PipelineResult {
    SplitDataset data;
    std::vector<TrainedModel> models;
    AttackOutputs attack;
    MetricsReport report;
};

// Stages. Each is deterministic in the config and independent of `workers`.
SplitDataset prepare_data(const RunConfig& config);
std::vector<TrainedModel> train_models(const RunConfig& config, const SplitDataset& data, std::ostream* log = nullptr);
AttackOutputs run_attacks(const RunConfig& config, const std::vector<TrainedModel>& models, const Dataset& test);
std::vector<ModeMetrics> analyze(const RunConfig& config, const std::vector<TrainedModel>& models,
                                 const AttackOutputs& attack, const Dataset& test);

// Conv layer used for metrics: the configured override or the last conv.
std::size_t metric_layer(const RunConfig& config, const NetworkSpec& spec);

// Writers and readers for the on-disk layout under an output directory.
void write_models(const std::vector<TrainedModel>& models, const std::filesystem::path& out);
std::vector<TrainedModel> load_models(const RunConfig& config, const std::filesystem::path& out);
void write_attack_outputs(const RunConfig& config, const AttackOutputs& attack, const std::filesystem::path& out);
AttackOutputs load_attack_outputs(const RunConfig& config, const std::vector<TrainedModel>& models,
                                  const Dataset& test, const std::filesystem::path& out);
void write_showcase(const RunConfig& config, const std::vector<TrainedModel>& models, const AttackOutputs& attack,
                    const Dataset& test, const std::filesystem::path& out);
void write_analysis(const RunConfig& config, const std::vector<ModeMetrics>& modes, const std::filesystem::path& out);

// Whole run into config.out. Outputs are staged and moved into place only
// when every stage succeeds; a failure removes the staged files and throws
// StageError.
PipelineResult run_pipeline(const RunConfig& config, std::ostream* log = nullptr);

std::string eps_label(double epsilon);

}  // namespace advl::harness
