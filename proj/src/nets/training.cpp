#include "advl/nets/training.hpp"

#include <algorithm>

#include "advl/core/error.hpp"
#include "advl/core/ops.hpp"
#include "advl/core/parallel.hpp"
#include "advl/core/random.hpp"
#include "advl/core/tape.hpp"

namespace advl::nets {

namespace {

void require_nonempty(const Dataset& d, const char* what) {
    if (d.empty()) throw UsageError(std::string(what) + ": dataset is empty");
    if (d.images.size() != d.labels.size()) throw UsageError(std::string(what) + ": image/label count mismatch");
}

void check_labels(const Dataset& d, std::size_t num_classes, const char* what) {
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.labels[i] >= num_classes)
            throw UsageError(std::string(what) + ": label " + std::to_string(d.labels[i]) + " of sample " +
                             std::to_string(i) + " exceeds class count " + std::to_string(num_classes));
}

}  // namespace

void validate(const TrainConfig& c) {
    if (c.epochs == 0) throw ConfigError("epochs must be positive");
    if (!(c.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
    if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
    if (c.batch_size == 0) throw ConfigError("batch size must be positive");
}

std::vector<std::size_t> predict(const Network& net, const Dataset& data, std::size_t workers) {
    std::vector<std::size_t> out(data.size());
    parallel_for(data.size(), workers, [&](std::size_t i) { out[i] = argmax_class(predict_logits(net, data.images[i])); });
    return out;
}

double evaluate(const Network& net, const Dataset& data, std::size_t workers) {
    require_nonempty(data, "evaluate");
    const auto pred = predict(net, data, workers);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) correct += pred[i] == data.labels[i];
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

double mean_loss(const Network& net, const Dataset& data, std::size_t workers) {
    require_nonempty(data, "mean_loss");
    std::vector<double> losses(data.size());
    parallel_for(data.size(), workers, [&](std::size_t i) {
        losses[i] = ops::softmax_xent(predict_logits(net, data.images[i]), data.labels[i]).loss;
    });
    double sum = 0.0;
    for (double l : losses) sum += l;
    return sum / static_cast<double>(data.size());
}

std::size_t best_epoch_index(const std::vector<EpochStats>& history) {
    if (history.empty()) throw UsageError("best_epoch_index: empty history");
    std::size_t best = 0;
    for (std::size_t i = 1; i < history.size(); ++i)
        if (history[i].val_accuracy > history[best].val_accuracy) best = i;
    return best;
}

TrainResult train(Network net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config) {
    validate(config);
    require_nonempty(train_set, "train");
    require_nonempty(val_set, "train (validation)");
    check_labels(train_set, net.spec.num_classes, "train");
    check_labels(val_set, net.spec.num_classes, "train (validation)");

    const std::size_t n = train_set.size();
    TrainResult result;
    result.history.push_back({0, mean_loss(net, train_set, config.workers), evaluate(net, val_set, config.workers)});
    Network best = net;

    std::vector<LayerParams> velocity;
    for (const auto& p : net.params)
        velocity.push_back(p.empty() ? LayerParams{} : LayerParams{Tensor(p.weights.shape()), Tensor(p.bias.shape())});

    Rng rng(config.seed);
    std::vector<double> sample_loss(n);
    std::vector<std::vector<LayerParams>> slot_grads(config.batch_size);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto order = shuffled_indices(n, rng);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t bsz = std::min(config.batch_size, n - start);
            parallel_for(bsz, config.workers, [&](std::size_t k) {
                const std::size_t idx = order[start + k];
                const Tape tape = forward(net, train_set.images[idx]);
                auto lg = backward_xent(net, tape, train_set.labels[idx]);
                sample_loss[idx] = lg.loss;
                slot_grads[k] = std::move(lg.grads.params);
            });
            const double scale = 1.0 / static_cast<double>(bsz);
            for (std::size_t l = 0; l < net.params.size(); ++l) {
                if (net.params[l].empty()) continue;
                for (int which = 0; which < 2; ++which) {
                    Tensor& theta = which == 0 ? net.params[l].weights : net.params[l].bias;
                    Tensor& vel = which == 0 ? velocity[l].weights : velocity[l].bias;
                    for (std::size_t i = 0; i < theta.size(); ++i) {
                        double g = 0.0;
                        for (std::size_t k = 0; k < bsz; ++k) {
                            const auto& gp = slot_grads[k][l];
                            g += which == 0 ? gp.weights[i] : gp.bias[i];
                        }
                        g *= scale;
                        vel[i] = config.momentum * vel[i] + g;
                        theta[i] -= config.learning_rate * vel[i];
                    }
                }
            }
        }
        double sum = 0.0;
        for (double l : sample_loss) sum += l;
        result.history.push_back({epoch, sum / static_cast<double>(n), evaluate(net, val_set, config.workers)});
        if (best_epoch_index(result.history) == epoch) best = net;
    }
    result.best_epoch = best_epoch_index(result.history);
    result.network = std::move(best);
    return result;
}

}  // namespace advl::nets
