#include "hpclass/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hpclass/rng.hpp"

namespace hpc {

void CnnModel::validate() const {
    if (conv.num_filters < 1 || conv.filter_side < 1 || conv.stride < 1)
        throw ShapeMismatch("conv layer sizes must be positive");
    if (conv.filters.size() != conv.num_filters * conv.filter_side * conv.filter_side)
        throw ShapeMismatch("conv filter storage does not match K*F*F");
    if (conv.biases.size() != conv.num_filters)
        throw ShapeMismatch("conv bias storage does not match K");
    if (input_side < conv.filter_side)
        throw ShapeMismatch("input side smaller than filter side");
    if (conv_out_side() < pool_size)
        throw ShapeMismatch("conv output smaller than pool window");
    if (dense.n_in != flattened_len()) {
        std::ostringstream os;
        os << "dense n_in " << dense.n_in << " != flattened pooled length "
           << flattened_len();
        throw ShapeMismatch(os.str());
    }
    if (dense.weights.size() != dense.n_out * dense.n_in)
        throw ShapeMismatch("dense weight storage does not match n_out*n_in");
    if (dense.biases.size() != dense.n_out)
        throw ShapeMismatch("dense bias storage does not match n_out");
    if (class_names.size() != dense.n_out)
        throw ShapeMismatch("class_names length does not match dense n_out");
}

CnnModel CnnModel::initialized(std::size_t input_side, std::size_t num_filters,
                         std::size_t filter_side, std::size_t stride,
                         std::size_t pool_size, std::size_t pool_stride,
                         std::vector<std::string> class_names, std::uint64_t seed) {
    CnnModel m;
    m.input_side = input_side;
    m.pool_size = pool_size;
    m.pool_stride = pool_stride;
    m.conv.num_filters = num_filters;
    m.conv.filter_side = filter_side;
    m.conv.stride = stride;
    m.class_names = std::move(class_names);
    m.dense.n_out = m.class_names.size();
    m.dense.n_in = m.flattened_len();

    Rng rng(mix_seed(seed, 0x1));
    const double ff = static_cast<double>(filter_side * filter_side);
    const double conv_half =
        std::sqrt(6.0 / (ff + ff * static_cast<double>(num_filters)));
    m.conv.filters.resize(num_filters * filter_side * filter_side);
    for (double& w : m.conv.filters) w = rng.symmetric(conv_half);
    m.conv.biases.assign(num_filters, 0.0);

    const double dense_half =
        std::sqrt(6.0 / static_cast<double>(m.dense.n_in + m.dense.n_out));
    m.dense.weights.resize(m.dense.n_out * m.dense.n_in);
    for (double& w : m.dense.weights) w = rng.symmetric(dense_half);
    m.dense.biases.assign(m.dense.n_out, 0.0);

    m.validate();
    return m;
}

Tensor conv_forward(const Tensor& input, const ConvLayer& layer) {
    if (input.dims.size() != 2 || input.dims[0] != input.dims[1])
        throw ShapeMismatch("conv input must be a square rank-2 tensor");
    const std::size_t side = input.dims[0];
    const std::size_t f = layer.filter_side;
    if (side < f) throw ShapeMismatch("conv input side smaller than filter");

    const std::size_t out_side = (side - f) / layer.stride + 1;
    const std::size_t k_count = layer.num_filters;
    Tensor out({k_count, out_side, out_side});

    const double* in = input.data.data();
    for (std::size_t k = 0; k < k_count; ++k) {
        const double* filt = layer.filters.data() + k * f * f;
        const double bias = layer.biases[k];
        double* dst = out.data.data() + k * out_side * out_side;
        for (std::size_t i = 0; i < out_side; ++i) {
            const std::size_t base_row = i * layer.stride;
            for (std::size_t j = 0; j < out_side; ++j) {
                const std::size_t base_col = j * layer.stride;
                double acc = bias;
                for (std::size_t fi = 0; fi < f; ++fi) {
                    const double* row = in + (base_row + fi) * side + base_col;
                    const double* fr = filt + fi * f;
                    for (std::size_t fj = 0; fj < f; ++fj) acc += row[fj] * fr[fj];
                }
                dst[i * out_side + j] = acc;
            }
        }
    }
    return out;
}

Tensor relu(const Tensor& t) {
    Tensor out = t;
    for (double& v : out.data) v = std::max(0.0, v);
    return out;
}

PoolResult maxpool_forward(const Tensor& maps, std::size_t pool_size,
                           std::size_t pool_stride) {
    if (maps.dims.size() != 3 || maps.dims[1] != maps.dims[2])
        throw ShapeMismatch("pool input must be {K, side, side}");
    const std::size_t k_count = maps.dims[0];
    const std::size_t side = maps.dims[1];
    if (side < pool_size) throw ShapeMismatch("map side smaller than pool window");

    const std::size_t out_side = (side - pool_size) / pool_stride + 1;
    PoolResult result{Tensor({k_count, out_side, out_side}), {}};
    result.argmax.resize(k_count * out_side * out_side);

    for (std::size_t k = 0; k < k_count; ++k) {
        const double* src = maps.data.data() + k * side * side;
        double* dst = result.out.data.data() + k * out_side * out_side;
        std::uint32_t* arg = result.argmax.data() + k * out_side * out_side;
        for (std::size_t i = 0; i < out_side; ++i) {
            for (std::size_t j = 0; j < out_side; ++j) {
                const std::size_t r0 = i * pool_stride;
                const std::size_t c0 = j * pool_stride;
                double best = src[r0 * side + c0];
                std::size_t best_idx = r0 * side + c0;
                for (std::size_t wi = 0; wi < pool_size; ++wi) {
                    for (std::size_t wj = 0; wj < pool_size; ++wj) {
                        const std::size_t idx = (r0 + wi) * side + (c0 + wj);
                        if (src[idx] > best) {  // strict: ties keep the first
                            best = src[idx];
                            best_idx = idx;
                        }
                    }
                }
                dst[i * out_side + j] = best;
                arg[i * out_side + j] =
                    static_cast<std::uint32_t>(k * side * side + best_idx);
            }
        }
    }
    return result;
}

Tensor dense_forward(const Tensor& features, const DenseLayer& layer) {
    if (features.size() != layer.n_in)
        throw ShapeMismatch("dense input length does not match n_in");
    Tensor out({layer.n_out});
    const double* x = features.data.data();
    for (std::size_t o = 0; o < layer.n_out; ++o) {
        const double* w = layer.weights.data() + o * layer.n_in;
        double acc = layer.biases[o];
        for (std::size_t i = 0; i < layer.n_in; ++i) acc += w[i] * x[i];
        out.data[o] = acc;
    }
    return out;
}

Tensor softmax(const Tensor& z) {
    if (z.size() == 0) throw ShapeMismatch("softmax of empty vector");
    for (double v : z.data)
        if (!std::isfinite(v)) throw NumericalError("non-finite logit");
    const double zmax = *std::max_element(z.data.begin(), z.data.end());
    Tensor out({z.size()});
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out.data[i] = std::exp(z.data[i] - zmax);
        sum += out.data[i];
    }
    for (double& v : out.data) v /= sum;
    return out;
}

ForwardResult forward(const CnnModel& model, const ByteMatrix& input) {
    if (input.side != model.input_side)
        throw ShapeMismatch("input side does not match model input_side");

    ForwardResult r;
    r.cache.input = Tensor({input.side, input.side}, input.values);
    r.cache.conv_out = conv_forward(r.cache.input, model.conv);
    Tensor activated = relu(r.cache.conv_out);
    PoolResult pooled = maxpool_forward(activated, model.pool_size, model.pool_stride);
    r.cache.pooled = std::move(pooled.out);
    r.cache.argmax = std::move(pooled.argmax);
    Tensor logits = dense_forward(r.cache.pooled, model.dense);
    r.probs = softmax(logits);
    r.cache.probs = r.probs;
    return r;
}

Gradients backward(const CnnModel& model, const ForwardCache& cache,
                   const std::vector<double>& one_hot_target) {
    const std::size_t n = model.dense.n_out;
    if (one_hot_target.size() != n)
        throw CacheMismatch("target length does not match model classes");
    if (cache.probs.size() != n || cache.pooled.size() != model.dense.n_in ||
        cache.conv_out.size() !=
            model.conv.num_filters * model.conv_out_side() * model.conv_out_side() ||
        cache.input.size() != model.input_side * model.input_side ||
        cache.argmax.size() != cache.pooled.size())
        throw CacheMismatch("cache shapes do not match model");

    Gradients g;
    g.conv_filters.assign(model.conv.filters.size(), 0.0);
    g.conv_biases.assign(model.conv.biases.size(), 0.0);
    g.dense_weights.assign(model.dense.weights.size(), 0.0);
    g.dense_biases.assign(model.dense.biases.size(), 0.0);

    // fused softmax + cross-entropy: dL/dz = probs - y
    std::vector<double> dlogits(n);
    for (std::size_t j = 0; j < n; ++j)
        dlogits[j] = cache.probs.data[j] - one_hot_target[j];

    // dense layer
    const std::size_t n_in = model.dense.n_in;
    std::vector<double> dfeat(n_in, 0.0);
    for (std::size_t o = 0; o < n; ++o) {
        const double d = dlogits[o];
        g.dense_biases[o] = d;
        const double* x = cache.pooled.data.data();
        double* gw = g.dense_weights.data() + o * n_in;
        const double* w = model.dense.weights.data() + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) {
            gw[i] = d * x[i];
            dfeat[i] += w[i] * d;
        }
    }

    // max pool: route each pooled-cell gradient to its argmax position
    std::vector<double> dconv(cache.conv_out.size(), 0.0);
    for (std::size_t i = 0; i < dfeat.size(); ++i)
        dconv[cache.argmax[i]] += dfeat[i];

    // ReLU: zero where the pre-activation was <= 0
    const double* pre = cache.conv_out.data.data();
    for (std::size_t i = 0; i < dconv.size(); ++i)
        if (pre[i] <= 0.0) dconv[i] = 0.0;

    // conv filters and biases (no input gradient: conv is the first layer)
    const std::size_t f = model.conv.filter_side;
    const std::size_t side = model.input_side;
    const std::size_t out_side = model.conv_out_side();
    const double* in = cache.input.data.data();
    for (std::size_t k = 0; k < model.conv.num_filters; ++k) {
        const double* dk = dconv.data() + k * out_side * out_side;
        double* gf = g.conv_filters.data() + k * f * f;
        double bias_acc = 0.0;
        for (std::size_t i = 0; i < out_side; ++i) {
            const std::size_t base_row = i * model.conv.stride;
            for (std::size_t j = 0; j < out_side; ++j) {
                const double d = dk[i * out_side + j];
                if (d == 0.0) continue;
                bias_acc += d;
                const std::size_t base_col = j * model.conv.stride;
                for (std::size_t fi = 0; fi < f; ++fi) {
                    const double* row = in + (base_row + fi) * side + base_col;
                    double* gr = gf + fi * f;
                    for (std::size_t fj = 0; fj < f; ++fj) gr[fj] += d * row[fj];
                }
            }
        }
        g.conv_biases[k] = bias_acc;
    }
    return g;
}

}  // namespace hpc
