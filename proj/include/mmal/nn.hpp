#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmal/rng.hpp"
#include "mmal/tensor.hpp"

namespace mmal {

enum class Augmentation { None, Basic };

struct TrainRecipe {
    int epochs = 60;
    int batch_size = 128;
    double base_lr = 0.1;
    double weight_decay = 5e-4;
    int warmup_epochs = 10;
    Augmentation augmentation = Augmentation::Basic;

    void validate() const {
        if (epochs <= 0 || batch_size <= 0) throw std::invalid_argument("recipe: bad counts");
        if (warmup_epochs >= epochs)
            throw std::invalid_argument("recipe: warmup_epochs must be < epochs");
        if (base_lr <= 0.0 || weight_decay < 0.0) throw std::invalid_argument("recipe: bad lr/wd");
    }
};

// Default hyperparameter grid searched at the start of every run.
struct HyperGrid {
    std::vector<double> lrs = {0.1, 0.01, 0.001};
    std::vector<double> wds = {5e-3, 5e-4};
    std::vector<Augmentation> augs = {Augmentation::Basic};
};

// Linear warm-up to base_lr, then cosine annealing to ~0 at the last epoch.
// Continuous at epoch == warmup_epochs.
inline double lr_at(int epoch, const TrainRecipe& recipe) {
    if (epoch < 0 || epoch >= recipe.epochs) throw std::out_of_range("lr_at: epoch out of range");
    const int w = recipe.warmup_epochs;
    if (epoch < w) return recipe.base_lr * static_cast<double>(epoch) / static_cast<double>(w);
    const double t = static_cast<double>(epoch - w) / static_cast<double>(recipe.epochs - w);
    return recipe.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

// p <- p - lr * (g + wd * p)
template <typename T>
void sgd_step(Tensor<T>& param, const Tensor<T>& grad, double lr, double weight_decay) {
    if (!param.same_shape(grad)) throw std::invalid_argument("sgd_step: shape mismatch");
    const T lr_t = static_cast<T>(lr);
    const T wd_t = static_cast<T>(weight_decay);
    for (std::size_t i = 0; i < param.size(); ++i)
        param.data[i] -= lr_t * (grad.data[i] + wd_t * param.data[i]);
}

template <typename T>
void sgd_step(std::vector<Tensor<T>>& params, const std::map<int, Tensor<T>>& grads, double lr,
              double weight_decay) {
    for (const auto& [pid, g] : grads) sgd_step(params[pid], g, lr, weight_decay);
}

// Glorot uniform for weight matrices, zeros for biases.
template <typename T>
Tensor<T> glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    Tensor<T> w({fan_in, fan_out});
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (T& v : w.data) v = static_cast<T>(rng.uniform(-bound, bound));
    return w;
}

// He uniform, used for layers feeding a relu: Glorot's variance is halved by
// the rectifier and the depth of the fusion stack starves the gradient.
template <typename T>
Tensor<T> he_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    Tensor<T> w({fan_in, fan_out});
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (T& v : w.data) v = static_cast<T>(rng.uniform(-bound, bound));
    return w;
}

} // namespace mmal
