#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "hpclass/error.hpp"

namespace hpc {

/// Dense row-major tensor of doubles, rank 1-3 in practice.
struct Tensor {
    std::vector<std::size_t> dims;
    std::vector<double> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> d) : dims(std::move(d)) {
        data.assign(element_count(dims), 0.0);
    }

    Tensor(std::initializer_list<std::size_t> d, std::vector<double> values)
        : dims(d), data(std::move(values)) {
        if (data.size() != element_count(dims))
            throw ShapeMismatch("tensor data length does not match dims");
    }

    static std::size_t element_count(const std::vector<std::size_t>& d) {
        std::size_t n = 1;
        for (std::size_t x : d) n *= x;
        return d.empty() ? 0 : n;
    }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Tensor& other) const { return dims == other.dims; }

    // rank-2 access
    double& at(std::size_t i, std::size_t j) { return data[i * dims[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * dims[1] + j]; }

    // rank-3 access: [map][row][col]
    double& at(std::size_t k, std::size_t i, std::size_t j) {
        return data[(k * dims[1] + i) * dims[2] + j];
    }
    double at(std::size_t k, std::size_t i, std::size_t j) const {
        return data[(k * dims[1] + i) * dims[2] + j];
    }
};

}  // namespace hpc
