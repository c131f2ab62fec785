#include "advl/metrics/dissimilarity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "advl/core/error.hpp"

namespace advl::metrics {

double mod(std::span<const DissimilarityRecord> records) {
    if (records.empty()) throw UsageError("mod: empty record set");
    const auto& first = records.front();
    double sum = 0.0;
    for (const auto& r : records) {
        if (r.model != first.model || r.epsilon != first.epsilon || r.layer_id != first.layer_id)
            throw UsageError("mod: records mix models, epsilons or layers");
        sum += r.nissim;
    }
    return sum / static_cast<double>(records.size());
}

ModTable build_mod_table(std::span<const DissimilarityRecord> records) {
    ModTable table;
    std::set<double> eps;
    for (const auto& r : records) {
        if (std::find(table.models.begin(), table.models.end(), r.model) == table.models.end())
            table.models.push_back(r.model);
        eps.insert(r.epsilon);
    }
    table.epsilons.assign(eps.begin(), eps.end());
    for (const auto& model : table.models) {
        std::vector<double> row;
        for (double e : table.epsilons) {
            std::vector<DissimilarityRecord> group;
            for (const auto& r : records)
                if (r.model == model && r.epsilon == e) group.push_back(r);
            if (group.empty())
                throw UsageError("mod table: model '" + model + "' has no records at epsilon " + std::to_string(e));
            if (table.samples == 0) table.samples = group.size();
            if (group.size() != table.samples)
                throw UsageError("mod table: model '" + model + "' has an uneven sample count");
            row.push_back(mod(group));
        }
        table.values.push_back(std::move(row));
    }
    return table;
}

std::vector<double> mean_shift_row(const ModTable& table) {
    if (table.models.empty()) throw UsageError("mean_shift_row: table has no models");
    std::vector<double> row(table.epsilons.size(), 0.0);
    for (std::size_t e = 0; e < row.size(); ++e) {
        for (std::size_t m = 0; m < table.models.size(); ++m) row[e] += table.at(m, e);
        row[e] /= static_cast<double>(table.models.size());
    }
    return row;
}

Histogram histogram(double epsilon, std::span<const double> values, double bin_width) {
    if (!(bin_width > 0.0 && bin_width <= 1.0)) throw UsageError("histogram: bin width must be in (0, 1]");
    const auto bins = static_cast<std::size_t>(std::llround(std::ceil(1.0 / bin_width - 1e-9)));
    Histogram h{epsilon, bin_width, std::vector<std::size_t>(bins, 0)};
    for (double v : values) {
        const double c = std::clamp(v, 0.0, 1.0);
        const auto b = std::min(static_cast<std::size_t>(c / bin_width), bins - 1);
        ++h.counts[b];
    }
    return h;
}

double level_mean(std::span<const double> values) {
    if (values.empty()) throw UsageError("level_mean: no values");
    // Offsetting by the first value makes the mean of equal values exact.
    const double v0 = values.front();
    double s = 0.0;
    for (double v : values) s += v - v0;
    return v0 + s / static_cast<double>(values.size());
}

double level_stdev(std::span<const double> values) {
    const double m = level_mean(values);
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size()));
}

VidSummary vid(std::span<const DissimilarityRecord> records, const VidOptions& options) {
    if (records.empty()) throw UsageError("vid: empty record set");
    VidSummary out;
    out.model = records.front().model;

    std::set<double> all_eps;
    std::set<std::size_t> ids;
    // (sample, epsilon) -> nissim
    std::map<std::pair<std::size_t, double>, double> table;
    for (const auto& r : records) {
        if (r.model != out.model) throw UsageError("vid: records mix models");
        if (!table.emplace(std::make_pair(r.sample_id, r.epsilon), r.nissim).second)
            throw UsageError("vid: duplicate record for sample " + std::to_string(r.sample_id));
        all_eps.insert(r.epsilon);
        ids.insert(r.sample_id);
    }
    for (double e : all_eps)
        if (options.include_zero || e != 0.0) out.levels.push_back(e);
    if (out.levels.empty()) throw UsageError("vid: no nonzero epsilon levels");
    out.sample_ids.assign(ids.begin(), ids.end());

    std::vector<double> mod_row(out.levels.size(), 0.0);
    for (auto id : out.sample_ids) {
        std::vector<double> vals;
        for (std::size_t k = 0; k < out.levels.size(); ++k) {
            const auto it = table.find({id, out.levels[k]});
            if (it == table.end())
                throw UsageError("vid: sample " + std::to_string(id) + " is missing epsilon " +
                                 std::to_string(out.levels[k]));
            vals.push_back(it->second);
            mod_row[k] += it->second;
        }
        out.per_sample_mean.push_back(level_mean(vals));
        out.per_sample_vid.push_back(level_stdev(vals));
    }
    out.vid = level_mean(out.per_sample_vid);
    for (auto& m : mod_row) m /= static_cast<double>(out.sample_ids.size());
    out.per_set_vid = level_stdev(mod_row);

    for (double e : all_eps) {
        std::vector<double> vals;
        for (auto id : out.sample_ids) {
            const auto it = table.find({id, e});
            if (it == table.end())
                throw UsageError("vid: sample " + std::to_string(id) + " is missing epsilon " + std::to_string(e));
            vals.push_back(it->second);
        }
        out.histograms.push_back(histogram(e, vals, options.bin_width));
    }
    return out;
}

}  // namespace advl::metrics
