#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace mmal {

// Dense row-major tensor. Everything in the library is rank 1 or 2; shape is
// kept general so container payloads (N x H x W x C byte images) reuse it.
template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(count(shape), T{0});
    }

    Tensor(std::vector<std::size_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (count(shape) != data.size())
            throw std::invalid_argument("tensor: shape/data size mismatch");
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    static Tensor zeros(std::initializer_list<std::size_t> s) {
        return Tensor(std::vector<std::size_t>(s));
    }

    std::size_t size() const { return data.size(); }
    bool is_scalar() const { return data.size() == 1; }

    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 1 : 1) : shape[1]; }

    T& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
    const T& at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (const T& v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

} // namespace mmal
