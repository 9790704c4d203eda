#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmal/tensor.hpp"

namespace mmal {

// Mean per-class recall over the classes that appear in `labels`.
inline double balanced_accuracy(const std::vector<int>& preds, const std::vector<int>& labels,
                                int n_classes) {
    if (preds.size() != labels.size() || labels.empty())
        throw std::invalid_argument("balanced_accuracy: empty or mismatched input");
    std::vector<std::size_t> hits(n_classes, 0), totals(n_classes, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= n_classes)
            throw std::out_of_range("balanced_accuracy: label out of range");
        ++totals[y];
        if (preds[i] == y) ++hits[y];
    }
    double acc = 0.0;
    int present = 0;
    for (int k = 0; k < n_classes; ++k) {
        if (totals[k] == 0) continue;
        acc += static_cast<double>(hits[k]) / static_cast<double>(totals[k]);
        ++present;
    }
    return acc / present;
}

// Shannon entropy of a probability row (natural log).
inline double row_entropy(const double* p, std::size_t k) {
    double h = 0.0;
    for (std::size_t j = 0; j < k; ++j)
        if (p[j] > 0.0) h -= p[j] * std::log(p[j]);
    return h;
}

// Row-wise stable softmax of a [B x K] tensor, in double.
template <typename T>
Tensor<double> softmax_rows(const Tensor<T>& logits) {
    const std::size_t B = logits.rows(), K = logits.cols();
    Tensor<double> probs({B, K});
    for (std::size_t i = 0; i < B; ++i) {
        const T* row = logits.data.data() + i * K;
        double mx = static_cast<double>(row[0]);
        for (std::size_t j = 1; j < K; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double z = 0.0;
        for (std::size_t j = 0; j < K; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
        for (std::size_t j = 0; j < K; ++j)
            probs.data[i * K + j] = std::exp(static_cast<double>(row[j]) - mx) / z;
    }
    return probs;
}

template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& m) {
    const std::size_t B = m.rows(), K = m.cols();
    std::vector<int> out(B);
    for (std::size_t i = 0; i < B; ++i) {
        const T* row = m.data.data() + i * K;
        int best = 0;
        for (std::size_t j = 1; j < K; ++j)
            if (row[j] > row[best]) best = static_cast<int>(j);
        out[i] = best;
    }
    return out;
}

} // namespace mmal
