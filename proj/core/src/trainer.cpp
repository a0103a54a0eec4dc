#include "hpclass/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "hpclass/rng.hpp"

namespace hpc {

namespace {
constexpr double kLogClamp = 1e-12;

std::size_t argmax(const Tensor& t) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t.data[i] > t.data[best]) best = i;
    return best;
}
}  // namespace

void TrainConfig::validate() const {
    if (epochs == 0 || batch_size == 0 || num_filters == 0 || filter_side == 0 ||
        stride == 0 || pool_size == 0 || pool_stride == 0)
        throw Error("train config sizes must be positive");
    if (!(learning_rate >= 0.0))
        throw Error("learning rate must be non-negative");
}

double cross_entropy(const std::vector<double>& prediction,
                     const std::vector<double>& target) {
    if (prediction.size() != target.size())
        throw LengthMismatch("prediction and target lengths differ");
    double loss = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i)
        loss -= target[i] * std::log(std::max(prediction[i], kLogClamp));
    return loss;
}

TrainResult train(const EncodedDataset& train_set, const TrainConfig& config,
                  std::ostream* progress) {
    config.validate();
    if (train_set.empty()) throw EmptyDataset("training set is empty");
    const std::size_t cells = train_set.side * train_set.side;
    for (const auto& m : train_set.matrices)
        if (m.size() != cells)
            throw InconsistentShapes("training records disagree on matrix side");

    TrainResult result;
    result.model = CnnModel::initialized(
        train_set.side, config.num_filters, config.filter_side, config.stride,
        config.pool_size, config.pool_stride, train_set.class_names, config.seed);
    CnnModel& model = result.model;

    const std::size_t n = train_set.size();
    const std::size_t n_classes = model.num_classes();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    Gradients batch_grad;
    std::vector<double> one_hot(n_classes, 0.0);
    ByteMatrix input(train_set.side);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng shuffle_rng(mix_seed(config.seed, 0x5u + epoch));
        fisher_yates(order, shuffle_rng);

        double loss_sum = 0.0;
        std::size_t correct = 0;

        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t batch_end = std::min(start + config.batch_size, n);
            const auto batch_n = static_cast<double>(batch_end - start);

            batch_grad.conv_filters.assign(model.conv.filters.size(), 0.0);
            batch_grad.conv_biases.assign(model.conv.biases.size(), 0.0);
            batch_grad.dense_weights.assign(model.dense.weights.size(), 0.0);
            batch_grad.dense_biases.assign(model.dense.biases.size(), 0.0);

            for (std::size_t b = start; b < batch_end; ++b) {
                const std::size_t rec = order[b];
                const auto& src = train_set.matrices[rec];
                for (std::size_t i = 0; i < cells; ++i)
                    input.values[i] = static_cast<double>(src[i]);

                ForwardResult fwd = forward(model, input);
                const std::uint32_t label = train_set.labels[rec];
                std::fill(one_hot.begin(), one_hot.end(), 0.0);
                one_hot[label] = 1.0;

                loss_sum += cross_entropy(fwd.probs.data, one_hot);
                if (argmax(fwd.probs) == label) ++correct;

                Gradients g = backward(model, fwd.cache, one_hot);
                for (std::size_t i = 0; i < g.conv_filters.size(); ++i)
                    batch_grad.conv_filters[i] += g.conv_filters[i];
                for (std::size_t i = 0; i < g.conv_biases.size(); ++i)
                    batch_grad.conv_biases[i] += g.conv_biases[i];
                for (std::size_t i = 0; i < g.dense_weights.size(); ++i)
                    batch_grad.dense_weights[i] += g.dense_weights[i];
                for (std::size_t i = 0; i < g.dense_biases.size(); ++i)
                    batch_grad.dense_biases[i] += g.dense_biases[i];
            }

            // averaged gradient keeps the learning rate batch-size independent
            const double step = config.learning_rate / batch_n;
            for (std::size_t i = 0; i < model.conv.filters.size(); ++i)
                model.conv.filters[i] -= step * batch_grad.conv_filters[i];
            for (std::size_t i = 0; i < model.conv.biases.size(); ++i)
                model.conv.biases[i] -= step * batch_grad.conv_biases[i];
            for (std::size_t i = 0; i < model.dense.weights.size(); ++i)
                model.dense.weights[i] -= step * batch_grad.dense_weights[i];
            for (std::size_t i = 0; i < model.dense.biases.size(); ++i)
                model.dense.biases[i] -= step * batch_grad.dense_biases[i];
        }

        const auto t1 = std::chrono::steady_clock::now();
        const double secs = std::chrono::duration<double>(t1 - t0).count();
        result.report.epoch_loss.push_back(loss_sum / static_cast<double>(n));
        result.report.epoch_accuracy.push_back(static_cast<double>(correct) /
                                               static_cast<double>(n));
        result.report.epoch_seconds.push_back(secs);
        if (progress) {
            (*progress) << "epoch " << (epoch + 1) << " loss "
                        << result.report.epoch_loss.back() << " acc "
                        << result.report.epoch_accuracy.back() << " secs " << secs
                        << "\n";
            progress->flush();
        }
    }
    return result;
}

}  // namespace hpc
