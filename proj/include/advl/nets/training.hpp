#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "advl/core/dataset.hpp"
#include "advl/core/network.hpp"

namespace advl::nets {

struct TrainConfig {
    std::size_t epochs = 10;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t batch_size = 16;
    std::uint64_t seed = 1;
    // Parallelism only; results are identical for every value.
    std::size_t workers = 1;
};

void validate(const TrainConfig& config);

struct EpochStats {
    std::size_t epoch = 0;  // 0 is the untrained network
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    Network network;  // snapshot with the best validation accuracy
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;
};

// Minibatch SGD with momentum on softmax cross-entropy:
//   v <- momentum * v + grad;  theta <- theta - lr * v
// Epoch order comes from the seeded generator. Ties in validation accuracy
// keep the earliest epoch.
TrainResult train(Network net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config);

// Index of the best validation accuracy, earliest on ties.
std::size_t best_epoch_index(const std::vector<EpochStats>& history);

std::vector<std::size_t> predict(const Network& net, const Dataset& data, std::size_t workers = 1);

// Fraction of samples whose argmax logit equals the label.
double evaluate(const Network& net, const Dataset& data, std::size_t workers = 1);

// Mean cross-entropy over the dataset, summed in sample order.
double mean_loss(const Network& net, const Dataset& data, std::size_t workers = 1);

}  // namespace advl::nets
