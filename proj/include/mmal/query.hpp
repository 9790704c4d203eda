#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmal/rng.hpp"
#include "mmal/tensor.hpp"

namespace mmal {

// Labeled/unlabeled bookkeeping for the acquisition loop. Both index lists
// are kept sorted ascending; an index moves from unlabeled to labeled exactly
// once.
struct PoolState {
    std::vector<std::uint32_t> labeled;
    std::vector<std::uint32_t> unlabeled;
    std::vector<std::vector<std::uint32_t>> history;

    void acquire(const std::vector<std::uint32_t>& indices);
    void validate() const;
};

struct Acquisition {
    std::vector<std::uint32_t> indices; // distinct, subset of the pool, size min(B, pool)
    std::string strategy;
    std::vector<double> scores; // diagnostics aligned with `indices` (may be empty)
    bool bmmal_fallback = false;
    std::vector<double> bmmal_weights;

    void validate(const std::vector<std::uint32_t>& pool, std::size_t requested) const;
};

// Uniform sample without replacement.
Acquisition select_random(const std::vector<std::uint32_t>& pool, std::size_t budget, Rng& rng);

// Top budget by Shannon entropy of probs rows (aligned with pool); ties break
// toward the smaller sample index. Rows must sum to 1 within 1e-4.
Acquisition select_entropy(const Tensor<double>& probs, const std::vector<std::uint32_t>& pool,
                           std::size_t budget);

// BALD mutual information H(mean_t p_t) - mean_t H(p_t) over mc_probs of
// shape [T x N x K], T >= 2.
Acquisition select_bald(const Tensor<double>& mc_probs, const std::vector<std::uint32_t>& pool,
                        std::size_t budget);

// Greedy k-center (farthest-first) in feature space, covering relative to
// the labeled set's features. Euclidean metric; ties toward smaller index.
Acquisition select_kcg(const Tensor<float>& labeled_feats, const Tensor<float>& pool_feats,
                       const std::vector<std::uint32_t>& pool, std::size_t budget);

// k-means++ seeding: first center uniform, then D^2 sampling. Zero-distance
// points carry no mass unless every remaining point does, in which case the
// draw is uniform over the remaining candidates. Returns row positions in
// selection order.
template <typename T>
std::vector<std::size_t> kmeanspp_seed(const Tensor<T>& points, std::size_t budget, Rng& rng);

// k-means++ over the full-length head-gradient embeddings.
Acquisition select_badge(const Tensor<float>& embeddings, const std::vector<std::uint32_t>& pool,
                         std::size_t budget, Rng& rng);

// Modality-balanced variant ("bmmal-interp"): per-modality contribution
// c_m = mean block norm over the labeled set, balance weight
// w_m = sum_j c_j / (M * c_m) clipped to [0.1, 10]; k-means++ then runs on
// the block-concatenated embeddings with block m scaled by w_m. Neutral
// weights (all exactly 1) and the all-zero-contribution fallback degenerate
// to plain BADGE on the head embeddings.
Acquisition select_bmmal(const std::vector<Tensor<float>>& pool_blocks,
                         const std::vector<Tensor<float>>& labeled_blocks,
                         const Tensor<float>& pool_head, const std::vector<std::uint32_t>& pool,
                         std::size_t budget, Rng& rng);

extern template std::vector<std::size_t> kmeanspp_seed<float>(const Tensor<float>&, std::size_t,
                                                              Rng&);
extern template std::vector<std::size_t> kmeanspp_seed<double>(const Tensor<double>&, std::size_t,
                                                               Rng&);

} // namespace mmal
