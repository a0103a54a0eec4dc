#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <numeric>

#include "helpers.hpp"
#include "hpclass/cnn.hpp"

using namespace hpc;

namespace {

Tensor tensor_from(const ByteMatrix& m) { return Tensor({m.side, m.side}, m.values); }

ConvLayer random_conv(std::size_t k, std::size_t f, std::uint64_t seed) {
    ConvLayer layer;
    layer.num_filters = k;
    layer.filter_side = f;
    layer.stride = 1;
    Rng rng(seed);
    layer.filters.resize(k * f * f);
    layer.biases.resize(k);
    for (auto& w : layer.filters) w = rng.symmetric(1.0);
    for (auto& b : layer.biases) b = rng.symmetric(1.0);
    return layer;
}

}  // namespace

TEST_CASE("conv output shapes follow (side - F)/stride + 1") {
    auto layer = random_conv(16, 3, 1);
    auto full = conv_forward(tensor_from(testutil::random_matrix(39, 2)), layer);
    CHECK(full.dims == std::vector<std::size_t>{16, 37, 37});
    auto reduced = conv_forward(tensor_from(testutil::random_matrix(20, 3)), layer);
    CHECK(reduced.dims == std::vector<std::size_t>{16, 18, 18});
}

TEST_CASE("zero input leaves only the filter bias") {
    auto layer = random_conv(4, 3, 7);
    Tensor zero({10, 10});
    auto out = conv_forward(zero, layer);
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j)
                CHECK(out.at(k, i, j) == doctest::Approx(layer.biases[k]).epsilon(1e-15));
}

TEST_CASE("input smaller than the filter is rejected") {
    auto layer = random_conv(2, 5, 1);
    Tensor tiny({3, 3});
    CHECK_THROWS_AS(conv_forward(tiny, layer), ShapeMismatch);
}

TEST_CASE("production convolution matches the naive oracle on random inputs") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto layer = random_conv(5, 3, 100 + seed);
        auto input = tensor_from(testutil::random_matrix(10, 200 + seed));
        auto fast = conv_forward(input, layer);
        auto slow = testutil::naive_conv(input, layer);
        REQUIRE(fast.dims == slow.dims);
        for (std::size_t i = 0; i < fast.size(); ++i)
            CHECK(std::abs(fast.data[i] - slow.data[i]) < 1e-6);
    }
}

TEST_CASE("convolution is linear when biases are zero") {
    auto layer = random_conv(3, 3, 5);
    std::fill(layer.biases.begin(), layer.biases.end(), 0.0);
    auto x = tensor_from(testutil::random_matrix(12, 6));
    auto y = tensor_from(testutil::random_matrix(12, 7));
    const double a = 0.7, b = -1.3;
    Tensor combo({12, 12});
    for (std::size_t i = 0; i < combo.size(); ++i)
        combo.data[i] = a * x.data[i] + b * y.data[i];
    auto conv_combo = conv_forward(combo, layer);
    auto conv_x = conv_forward(x, layer);
    auto conv_y = conv_forward(y, layer);
    for (std::size_t i = 0; i < conv_combo.size(); ++i)
        CHECK(std::abs(conv_combo.data[i] - (a * conv_x.data[i] + b * conv_y.data[i])) <
              1e-6);
}

TEST_CASE("relu clamps negatives and keeps positives") {
    Tensor t({3}, {{-3.0, 5.0, 0.0}});
    auto out = relu(t);
    CHECK(out.data == std::vector<double>{0.0, 5.0, 0.0});
}

TEST_CASE("max pooling picks the window maximum") {
    Tensor maps({1, 2, 2});
    maps.data = {1, 2, 3, 4};
    auto pooled = maxpool_forward(maps, 2, 1);
    REQUIRE(pooled.out.dims == std::vector<std::size_t>{1, 1, 1});
    CHECK(pooled.out.data[0] == 4.0);
    CHECK(pooled.argmax[0] == 3);
}

TEST_CASE("overlapping pool with stride 1 shrinks the side by one") {
    Tensor maps({16, 37, 37});
    auto pooled = maxpool_forward(maps, 2, 1);
    CHECK(pooled.out.dims == std::vector<std::size_t>{16, 36, 36});
}

TEST_CASE("constant map pools to a constant map") {
    Tensor maps({2, 5, 5});
    std::fill(maps.data.begin(), maps.data.end(), 0.25);
    auto pooled = maxpool_forward(maps, 2, 1);
    CHECK(pooled.out.dims == std::vector<std::size_t>{2, 4, 4});
    for (double v : pooled.out.data) CHECK(v == 0.25);
}

TEST_CASE("pooling ties resolve to the first index in row-major order") {
    Tensor maps({1, 2, 2});
    maps.data = {7, 7, 7, 7};
    auto pooled = maxpool_forward(maps, 2, 1);
    CHECK(pooled.argmax[0] == 0);
}

TEST_CASE("pool window larger than the map is rejected") {
    Tensor maps({1, 3, 3});
    CHECK_THROWS_AS(maxpool_forward(maps, 4, 1), ShapeMismatch);
}

TEST_CASE("dense forward computes w.x + b") {
    DenseLayer layer;
    layer.n_in = 2;
    layer.n_out = 2;
    layer.weights = {0, 0, 0, 0};
    layer.biases = {1, -1};
    Tensor x({2}, {{0.5, 0.5}});
    auto z = dense_forward(x, layer);
    CHECK(z.data == std::vector<double>{1.0, -1.0});

    DenseLayer scalar;
    scalar.n_in = 1;
    scalar.n_out = 1;
    scalar.weights = {2.0};
    scalar.biases = {0.0};
    Tensor v({1}, {{3.0}});
    CHECK(dense_forward(v, scalar).data[0] == 6.0);
}

TEST_CASE("dense input length mismatch raises ShapeMismatch") {
    DenseLayer layer;
    layer.n_in = 3;
    layer.n_out = 1;
    layer.weights = {1, 1, 1};
    layer.biases = {0};
    Tensor x({2}, {{1.0, 2.0}});
    CHECK_THROWS_AS(dense_forward(x, layer), ShapeMismatch);
}

TEST_CASE("softmax basics") {
    CHECK(softmax(Tensor({2}, {{0.0, 0.0}})).data ==
          std::vector<double>{0.5, 0.5});

    auto big = softmax(Tensor({2}, {{1000.0, 0.0}}));
    CHECK(big.data[0] == doctest::Approx(1.0));
    CHECK(big.data[1] == doctest::Approx(0.0));
    CHECK(std::isfinite(big.data[0]));

    auto z = Tensor({3}, {{0.3, -1.2, 2.0}});
    auto p = softmax(z);
    Tensor shifted({3}, {{0.3 + 5.0, -1.2 + 5.0, 2.0 + 5.0}});
    auto p2 = softmax(shifted);
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(p.data[i] - p2.data[i]) < 1e-6);
        sum += p.data[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-6);
}

TEST_CASE("softmax argmax equals logit argmax") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        Tensor z({5});
        for (auto& v : z.data) v = rng.symmetric(4.0);
        auto p = softmax(z);
        std::size_t zi = 0, pi = 0;
        for (std::size_t i = 1; i < 5; ++i) {
            if (z.data[i] > z.data[zi]) zi = i;
            if (p.data[i] > p.data[pi]) pi = i;
        }
        CHECK(zi == pi);
    }
}

TEST_CASE("softmax rejects non-finite logits") {
    Tensor z({2}, {{std::nan(""), 0.0}});
    CHECK_THROWS_AS(softmax(z), NumericalError);
}

TEST_CASE("forward through an all-zero two-class model is uniform") {
    auto model = CnnModel::initialized(39, 16, 3, 1, 2, 1, {"a", "b"}, 0);
    std::fill(model.conv.filters.begin(), model.conv.filters.end(), 0.0);
    std::fill(model.dense.weights.begin(), model.dense.weights.end(), 0.0);
    ByteMatrix zero(39);
    auto fwd = forward(model, zero);
    CHECK(fwd.probs.data[0] == doctest::Approx(0.5));
    CHECK(fwd.probs.data[1] == doctest::Approx(0.5));
}

TEST_CASE("forward probabilities sum to one") {
    auto model = testutil::random_model(20, 16, 3, 4, 77);
    auto input = testutil::random_matrix(20, 5);
    auto fwd = forward(model, input);
    const double sum =
        std::accumulate(fwd.probs.data.begin(), fwd.probs.data.end(), 0.0);
    CHECK(std::abs(sum - 1.0) < 1e-6);
}

TEST_CASE("forward is bit-identical across runs") {
    auto model = testutil::random_model(20, 8, 3, 3, 11);
    auto input = testutil::random_matrix(20, 13);
    auto a = forward(model, input);
    auto b = forward(model, input);
    CHECK(std::memcmp(a.probs.data.data(), b.probs.data.data(),
                      a.probs.size() * sizeof(double)) == 0);
}

TEST_CASE("wrong input side raises ShapeMismatch") {
    auto model = testutil::random_model(20, 4, 3, 2, 3);
    CHECK_THROWS_AS(forward(model, ByteMatrix(19)), ShapeMismatch);
}

TEST_CASE("model construction validates the dense fan-in") {
    auto model = testutil::random_model(20, 4, 3, 2, 3);
    model.dense.n_in -= 1;
    model.dense.weights.resize(model.dense.n_out * model.dense.n_in);
    CHECK_THROWS_AS(model.validate(), ShapeMismatch);
}

TEST_CASE("logit gradient is probs minus target") {
    auto model = testutil::random_model(9, 2, 3, 2, 21);
    auto input = testutil::random_matrix(9, 22);
    auto fwd = forward(model, input);

    // dL/db_dense is exactly probs - y
    std::vector<double> one_hot = {1.0, 0.0};
    auto grads = backward(model, fwd.cache, one_hot);
    CHECK(grads.dense_biases[0] ==
          doctest::Approx(fwd.probs.data[0] - 1.0).epsilon(1e-12));
    CHECK(grads.dense_biases[1] == doctest::Approx(fwd.probs.data[1]).epsilon(1e-12));

    // a perfectly confident correct prediction has zero logit gradient
    ForwardCache cooked = fwd.cache;
    cooked.probs.data = {1.0, 0.0};
    auto zero_grads = backward(model, cooked, one_hot);
    CHECK(zero_grads.dense_biases[0] == 0.0);
    CHECK(zero_grads.dense_biases[1] == 0.0);
}

TEST_CASE("uniform prediction against one-hot target gives [-0.5, 0.5]") {
    auto model = testutil::random_model(9, 2, 3, 2, 31);
    auto input = testutil::random_matrix(9, 32);
    auto fwd = forward(model, input);
    fwd.cache.probs.data = {0.5, 0.5};
    auto grads = backward(model, fwd.cache, {1.0, 0.0});
    CHECK(grads.dense_biases == std::vector<double>{-0.5, 0.5});
}

TEST_CASE("analytic gradients match central finite differences") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto c = testutil::make_smooth_case(300 + seed * 64, 7, 4, 3);
        auto result = testutil::gradient_check(c.model, c.input, c.one_hot);
        CHECK(result.params_checked ==
              4 * 9 + 4 + 3 * (4 * 4 * 4) + 3);
        CHECK(result.max_rel_error < 1e-4);
    }
}

TEST_CASE("pool routing conserves the gradient mass") {
    auto model = testutil::random_model(10, 3, 3, 2, 51);
    auto input = testutil::random_matrix(10, 52);
    auto fwd = forward(model, input);
    auto grads = backward(model, fwd.cache, {0.0, 1.0});

    // the conv bias gradient is the total routed-and-masked gradient per
    // map; recompute it independently from the dense layer gradient
    const std::size_t n_in = model.dense.n_in;
    std::vector<double> dfeat(n_in, 0.0);
    for (std::size_t o = 0; o < model.dense.n_out; ++o) {
        const double d = fwd.cache.probs.data[o] - (o == 1 ? 1.0 : 0.0);
        for (std::size_t i = 0; i < n_in; ++i)
            dfeat[i] += model.dense.weights[o * n_in + i] * d;
    }
    std::vector<double> routed(fwd.cache.conv_out.size(), 0.0);
    for (std::size_t i = 0; i < dfeat.size(); ++i)
        routed[fwd.cache.argmax[i]] += dfeat[i];
    const std::size_t map_cells =
        model.conv_out_side() * model.conv_out_side();
    for (std::size_t k = 0; k < model.conv.num_filters; ++k) {
        double expected = 0.0;
        for (std::size_t c = 0; c < map_cells; ++c) {
            const std::size_t idx = k * map_cells + c;
            if (fwd.cache.conv_out.data[idx] > 0.0) expected += routed[idx];
        }
        CHECK(grads.conv_biases[k] == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("backward rejects a cache from a different model") {
    auto model = testutil::random_model(10, 3, 3, 2, 61);
    auto other = testutil::random_model(12, 3, 3, 2, 62);
    auto fwd = forward(other, testutil::random_matrix(12, 63));
    CHECK_THROWS_AS(backward(model, fwd.cache, {1.0, 0.0}), CacheMismatch);
    auto fwd2 = forward(model, testutil::random_matrix(10, 64));
    CHECK_THROWS_AS(backward(model, fwd2.cache, {1.0, 0.0, 0.0}), CacheMismatch);
}
