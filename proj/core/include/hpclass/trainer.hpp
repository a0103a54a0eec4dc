#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hpclass/cnn.hpp"
#include "hpclass/dataset_io.hpp"

namespace hpc {

/// Training parameters {epochs, batch size, learning rate, filters, stride}
/// plus pooling geometry and the seed that fixes every random draw.
struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double learning_rate = 0.01;
    std::size_t num_filters = 16;
    std::size_t filter_side = 3;
    std::size_t stride = 1;
    std::size_t pool_size = 2;
    std::size_t pool_stride = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainReport {
    std::vector<double> epoch_loss;      // mean sample loss per epoch
    std::vector<double> epoch_accuracy;  // train accuracy per epoch
    std::vector<double> epoch_seconds;   // wall clock per epoch
};

struct TrainResult {
    CnnModel model;
    TrainReport report;
};

/// Cross-entropy -sum y_i ln(max(pred_i, 1e-12)).
double cross_entropy(const std::vector<double>& prediction,
                     const std::vector<double>& target);

/// Mini-batch SGD over cross-entropy loss. Each epoch shuffles the sample
/// order with a seed-derived permutation and walks batches of batch_size
/// (the final short batch is kept); gradients are averaged over the batch
/// and parameters stepped by -learning_rate * gradient. Deterministic for
/// fixed (data, config). Progress lines go to `progress` when non-null:
/// `epoch <n> loss <x> acc <y> secs <t>`.
TrainResult train(const EncodedDataset& train_set, const TrainConfig& config,
                  std::ostream* progress = nullptr);

}  // namespace hpc
