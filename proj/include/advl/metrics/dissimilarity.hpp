#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace advl::metrics {

struct DissimilarityRecord {
    std::string model;
    std::size_t sample_id = 0;
    double epsilon = 0.0;
    std::size_t layer_id = 0;
    double nissim = 0.0;
};

// Mean observed dissimilarity: mean NISSIM over one (model, epsilon, layer)
// group. Throws on an empty or mixed group.
double mod(std::span<const DissimilarityRecord> records);

struct ModTable {
    std::vector<std::string> models;
    std::vector<double> epsilons;
    std::vector<std::vector<double>> values;  // [model][epsilon]
    std::size_t samples = 0;

    double at(std::size_t model, std::size_t eps) const { return values.at(model).at(eps); }
};

// Groups records by (model, epsilon) in first-appearance order of models and
// ascending epsilon. Every group must have the same sample count.
ModTable build_mod_table(std::span<const DissimilarityRecord> records);

// Mean of MOD across models at each epsilon.
std::vector<double> mean_shift_row(const ModTable& table);

struct Histogram {
    double epsilon = 0.0;
    double bin_width = 0.02;
    std::vector<std::size_t> counts;  // bins over [0,1]; 1.0 lands in the last
};

Histogram histogram(double epsilon, std::span<const double> values, double bin_width = 0.02);

struct VidOptions {
    // Include epsilon == 0 among the levels the spread is taken over.
    bool include_zero = false;
    double bin_width = 0.02;
};

struct VidSummary {
    std::string model;
    std::vector<double> levels;              // epsilon levels in E
    std::vector<std::size_t> sample_ids;
    std::vector<double> per_sample_mean;     // m_h per sample
    std::vector<double> per_sample_vid;      // population stdev per sample
    double vid = 0.0;                        // mean of per_sample_vid
    double per_set_vid = 0.0;                // population stdev of the MOD row over E
    std::vector<Histogram> histograms;       // every epsilon present, ascending
};

// Variation in dissimilarity for one model's records. Every sample needs a
// record at every level of E.
VidSummary vid(std::span<const DissimilarityRecord> records, const VidOptions& options = {});

// Population mean and standard deviation of one sample's values.
double level_mean(std::span<const double> values);
double level_stdev(std::span<const double> values);

}  // namespace advl::metrics
