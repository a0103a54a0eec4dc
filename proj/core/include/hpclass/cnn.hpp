#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hpclass/encoder.hpp"
#include "hpclass/tensor.hpp"

namespace hpc {

/// K square filters of side F plus one bias per filter, applied as valid
/// (no padding) cross-correlation with the given stride.
struct ConvLayer {
    std::size_t num_filters = 16;
    std::size_t filter_side = 3;
    std::size_t stride = 1;
    std::vector<double> filters;  // [k][fi][fj] row-major, K*F*F
    std::vector<double> biases;   // K

    double filter_at(std::size_t k, std::size_t fi, std::size_t fj) const {
        return filters[(k * filter_side + fi) * filter_side + fj];
    }
};

struct DenseLayer {
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    std::vector<double> weights;  // [out][in] row-major, n_out*n_in
    std::vector<double> biases;   // n_out
};

/// The fixed architecture: one conv layer, ReLU, one overlapping max-pool,
/// one dense layer with softmax.
struct CnnModel {
    ConvLayer conv;
    std::size_t pool_size = 2;
    std::size_t pool_stride = 1;
    DenseLayer dense;
    std::size_t input_side = 0;
    std::vector<std::string> class_names;

    std::size_t conv_out_side() const {
        return (input_side - conv.filter_side) / conv.stride + 1;
    }
    std::size_t pooled_side() const {
        return (conv_out_side() - pool_size) / pool_stride + 1;
    }
    std::size_t flattened_len() const {
        return conv.num_filters * pooled_side() * pooled_side();
    }
    std::size_t num_classes() const { return dense.n_out; }

    /// Throws ShapeMismatch unless every derived size is consistent.
    void validate() const;

    /// Glorot-uniform weights (half-width sqrt(6/(fan_in+fan_out))),
    /// zero biases; draws fully determined by the seed.
    static CnnModel initialized(std::size_t input_side, std::size_t num_filters,
                             std::size_t filter_side, std::size_t stride,
                             std::size_t pool_size, std::size_t pool_stride,
                             std::vector<std::string> class_names, std::uint64_t seed);
};

/// Intermediates retained by forward() for the backward pass.
struct ForwardCache {
    Tensor input;                      // {S, S}
    Tensor conv_out;                   // {K, C, C}, pre-activation
    Tensor pooled;                     // {K, P, P}, post ReLU+pool
    std::vector<std::uint32_t> argmax; // flat index into conv_out per pooled cell
    Tensor probs;                      // {N}
};

struct ForwardResult {
    Tensor probs;
    ForwardCache cache;
};

/// Parameter gradients, same shapes as the corresponding model fields.
struct Gradients {
    std::vector<double> conv_filters;
    std::vector<double> conv_biases;
    std::vector<double> dense_weights;
    std::vector<double> dense_biases;
};

struct PoolResult {
    Tensor out;
    std::vector<std::uint32_t> argmax;
};

/// Valid cross-correlation of a {S,S} input: output {K, O, O} with
/// O = (S - F)/stride + 1, each cell bias_k plus the windowed dot product.
Tensor conv_forward(const Tensor& input, const ConvLayer& layer);

/// Elementwise max(0, x).
Tensor relu(const Tensor& t);

/// Per-map max over pool_size^2 windows; ties resolved to the first index
/// in row-major window order, recorded for the backward pass.
PoolResult maxpool_forward(const Tensor& maps, std::size_t pool_size, std::size_t pool_stride);

/// z_j = sum_i w_ji x_i + b_j over the flattened features.
Tensor dense_forward(const Tensor& features, const DenseLayer& layer);

/// Max-shifted softmax; entries positive and summing to 1.
Tensor softmax(const Tensor& z);

/// conv -> ReLU -> max pool -> flatten -> dense -> softmax.
ForwardResult forward(const CnnModel& model, const ByteMatrix& input);

/// Backpropagation from the fused softmax/cross-entropy gradient
/// (probs - one_hot_target) down to every parameter. Input gradients are
/// not produced; the conv layer is the first layer.
Gradients backward(const CnnModel& model, const ForwardCache& cache,
                   const std::vector<double>& one_hot_target);

}  // namespace hpc
