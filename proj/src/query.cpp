#include "mmal/query.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mmal/kernels.hpp"
#include "mmal/metrics.hpp"

namespace mmal {

void PoolState::validate() const {
    for (std::size_t i = 1; i < labeled.size(); ++i)
        if (labeled[i - 1] >= labeled[i]) throw std::logic_error("pool: labeled not sorted/unique");
    for (std::size_t i = 1; i < unlabeled.size(); ++i)
        if (unlabeled[i - 1] >= unlabeled[i])
            throw std::logic_error("pool: unlabeled not sorted/unique");
    std::vector<std::uint32_t> inter;
    std::set_intersection(labeled.begin(), labeled.end(), unlabeled.begin(), unlabeled.end(),
                          std::back_inserter(inter));
    if (!inter.empty()) throw std::logic_error("pool: labeled and unlabeled overlap");
}

void PoolState::acquire(const std::vector<std::uint32_t>& indices) {
    for (std::uint32_t idx : indices) {
        auto it = std::lower_bound(unlabeled.begin(), unlabeled.end(), idx);
        if (it == unlabeled.end() || *it != idx)
            throw std::invalid_argument("pool: acquired index not in unlabeled set");
        unlabeled.erase(it);
        auto lit = std::lower_bound(labeled.begin(), labeled.end(), idx);
        if (lit != labeled.end() && *lit == idx)
            throw std::invalid_argument("pool: acquired index already labeled");
        labeled.insert(lit, idx);
    }
    history.push_back(indices);
}

void Acquisition::validate(const std::vector<std::uint32_t>& pool, std::size_t requested) const {
    const std::size_t expect = std::min(requested, pool.size());
    if (indices.size() != expect) throw std::logic_error("acquisition: wrong size");
    std::vector<std::uint32_t> sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::logic_error("acquisition: duplicate indices");
    for (std::uint32_t idx : sorted)
        if (!std::binary_search(pool.begin(), pool.end(), idx))
            throw std::logic_error("acquisition: index outside the pool");
}

namespace {

// Top-B positions by score, ties toward the smaller pool position (and hence
// the smaller sample index, as pools are kept sorted).
std::vector<std::size_t> top_by_score(const std::vector<double>& scores, std::size_t budget) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    order.resize(std::min(budget, order.size()));
    return order;
}

Acquisition from_positions(const std::vector<std::size_t>& positions,
                           const std::vector<std::uint32_t>& pool,
                           const std::vector<double>* scores, std::string strategy) {
    Acquisition acq;
    acq.strategy = std::move(strategy);
    for (std::size_t pos : positions) {
        acq.indices.push_back(pool[pos]);
        if (scores) acq.scores.push_back((*scores)[pos]);
    }
    return acq;
}

} // namespace

Acquisition select_random(const std::vector<std::uint32_t>& pool, std::size_t budget, Rng& rng) {
    if (pool.empty()) throw std::invalid_argument("select_random: empty pool");
    if (budget < 1) throw std::invalid_argument("select_random: budget must be >= 1");
    std::vector<std::uint32_t> ids = pool;
    const std::size_t take = std::min(budget, ids.size());
    Acquisition acq;
    acq.strategy = "random";
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng.index(ids.size() - i);
        std::swap(ids[i], ids[j]);
        acq.indices.push_back(ids[i]);
    }
    return acq;
}

Acquisition select_entropy(const Tensor<double>& probs, const std::vector<std::uint32_t>& pool,
                           std::size_t budget) {
    const std::size_t n = probs.rows(), k = probs.cols();
    if (n != pool.size()) throw std::invalid_argument("select_entropy: probs/pool mismatch");
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = probs.data.data() + i * k;
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += row[j];
        if (std::fabs(sum - 1.0) > 1e-4)
            throw std::invalid_argument("select_entropy: unnormalized probability row");
        scores[i] = row_entropy(row, k);
    }
    return from_positions(top_by_score(scores, budget), pool, &scores, "entropy");
}

Acquisition select_bald(const Tensor<double>& mc_probs, const std::vector<std::uint32_t>& pool,
                        std::size_t budget) {
    if (mc_probs.shape.size() != 3) throw std::invalid_argument("select_bald: expect [T x N x K]");
    const std::size_t passes = mc_probs.shape[0], n = mc_probs.shape[1], k = mc_probs.shape[2];
    if (passes < 2) throw std::invalid_argument("select_bald: needs at least 2 MC passes");
    if (n != pool.size()) throw std::invalid_argument("select_bald: probs/pool mismatch");

    std::vector<double> scores(n);
    std::vector<double> mean(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(mean.begin(), mean.end(), 0.0);
        double h_cond = 0.0;
        for (std::size_t t = 0; t < passes; ++t) {
            const double* row = mc_probs.data.data() + (t * n + i) * k;
            for (std::size_t j = 0; j < k; ++j) mean[j] += row[j];
            h_cond += row_entropy(row, k);
        }
        for (std::size_t j = 0; j < k; ++j) mean[j] /= static_cast<double>(passes);
        scores[i] = row_entropy(mean.data(), k) - h_cond / static_cast<double>(passes);
    }
    return from_positions(top_by_score(scores, budget), pool, &scores, "bald");
}

Acquisition select_kcg(const Tensor<float>& labeled_feats, const Tensor<float>& pool_feats,
                       const std::vector<std::uint32_t>& pool, std::size_t budget) {
    const std::size_t n = pool_feats.rows(), dim = pool_feats.cols();
    if (n == 0) throw std::invalid_argument("select_kcg: empty unlabeled set");
    if (n != pool.size()) throw std::invalid_argument("select_kcg: feats/pool mismatch");

    std::vector<float> min_d2(n, std::numeric_limits<float>::infinity());
    for (std::size_t l = 0; l < labeled_feats.rows(); ++l)
        kernels::min_dist_update(pool_feats.data.data(), n, dim,
                                 labeled_feats.data.data() + l * dim, min_d2.data());

    Acquisition acq;
    acq.strategy = "kcg";
    const std::size_t take = std::min(budget, n);
    for (std::size_t t = 0; t < take; ++t) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (min_d2[i] > min_d2[best]) best = i;
        acq.indices.push_back(pool[best]);
        acq.scores.push_back(min_d2[best] < 0.0f ? 0.0 : std::sqrt(double(min_d2[best])));
        kernels::min_dist_update(pool_feats.data.data(), n, dim,
                                 pool_feats.data.data() + best * dim, min_d2.data());
        min_d2[best] = -1.0f; // never re-selected
    }
    return acq;
}

template <typename T>
std::vector<std::size_t> kmeanspp_seed(const Tensor<T>& points, std::size_t budget, Rng& rng) {
    const std::size_t n = points.rows(), dim = points.cols();
    if (budget > n) throw std::invalid_argument("kmeanspp_seed: budget exceeds point count");
    if (budget == 0) return {};

    std::vector<std::size_t> centers;
    std::vector<char> chosen(n, 0);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());

    auto update = [&](std::size_t c) {
        const T* pc = points.data.data() + c * dim;
#pragma omp parallel for schedule(static) if (n * dim > 16384)
        for (std::size_t i = 0; i < n; ++i) {
            const T* pi = points.data.data() + i * dim;
            double acc = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = static_cast<double>(pi[d]) - static_cast<double>(pc[d]);
                acc += diff * diff;
            }
            if (acc < d2[i]) d2[i] = acc;
        }
    };

    std::size_t first = rng.index(n);
    centers.push_back(first);
    chosen[first] = 1;
    update(first);

    while (centers.size() < budget) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (!chosen[i]) total += d2[i];

        std::size_t pick = n;
        if (total > 0.0) {
            const double u = rng.unit() * total;
            double cum = 0.0;
            std::size_t last_positive = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i] || d2[i] == 0.0) continue;
                cum += d2[i];
                last_positive = i;
                if (u < cum) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) pick = last_positive; // guard against fp roundoff at the top end
        } else {
            // all remaining candidates sit exactly on a center: uniform draw
            std::size_t remaining = 0;
            for (std::size_t i = 0; i < n; ++i) remaining += chosen[i] ? 0 : 1;
            std::size_t skip = rng.index(remaining);
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i]) continue;
                if (skip == 0) {
                    pick = i;
                    break;
                }
                --skip;
            }
        }

        centers.push_back(pick);
        chosen[pick] = 1;
        update(pick);
    }
    return centers;
}

template std::vector<std::size_t> kmeanspp_seed<float>(const Tensor<float>&, std::size_t, Rng&);
template std::vector<std::size_t> kmeanspp_seed<double>(const Tensor<double>&, std::size_t, Rng&);

Acquisition select_badge(const Tensor<float>& embeddings, const std::vector<std::uint32_t>& pool,
                         std::size_t budget, Rng& rng) {
    if (embeddings.rows() != pool.size())
        throw std::invalid_argument("select_badge: embeddings/pool mismatch");
    const std::size_t take = std::min(budget, pool.size());
    std::vector<std::size_t> positions = kmeanspp_seed(embeddings, take, rng);

    Acquisition acq;
    acq.strategy = "badge";
    const std::size_t dim = embeddings.cols();
    for (std::size_t pos : positions) {
        acq.indices.push_back(pool[pos]);
        double norm = 0.0;
        const float* row = embeddings.data.data() + pos * dim;
        for (std::size_t d = 0; d < dim; ++d) norm += double(row[d]) * double(row[d]);
        acq.scores.push_back(std::sqrt(norm));
    }
    return acq;
}

Acquisition select_bmmal(const std::vector<Tensor<float>>& pool_blocks,
                         const std::vector<Tensor<float>>& labeled_blocks,
                         const Tensor<float>& pool_head, const std::vector<std::uint32_t>& pool,
                         std::size_t budget, Rng& rng) {
    const std::size_t m_count = pool_blocks.size();
    if (m_count == 0 || labeled_blocks.size() != m_count)
        throw std::invalid_argument("select_bmmal: malformed blocks");

    std::vector<double> contrib(m_count, 0.0);
    for (std::size_t m = 0; m < m_count; ++m) {
        const std::size_t rows = labeled_blocks[m].rows();
        const std::size_t dim = labeled_blocks[m].cols();
        double acc = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            double norm = 0.0;
            const float* row = labeled_blocks[m].data.data() + i * dim;
            for (std::size_t d = 0; d < dim; ++d) norm += double(row[d]) * double(row[d]);
            acc += std::sqrt(norm);
        }
        contrib[m] = rows ? acc / static_cast<double>(rows) : 0.0;
    }

    const double total = std::accumulate(contrib.begin(), contrib.end(), 0.0);
    const bool degenerate = total == 0.0; // no gradient signal anywhere

    std::vector<double> weights(m_count, 1.0);
    if (!degenerate) {
        for (std::size_t m = 0; m < m_count; ++m) {
            // contrib 0 for one modality yields +inf and lands on the clip cap
            weights[m] = std::clamp(total / (static_cast<double>(m_count) * contrib[m]), 0.1,
                                    10.0);
        }
    }

    const bool neutral = std::all_of(weights.begin(), weights.end(),
                                     [](double w) { return w == 1.0; });

    Acquisition acq;
    if (degenerate || neutral) {
        // No rebalancing signal: identical to plain BADGE under the same seed.
        acq = select_badge(pool_head, pool, budget, rng);
    } else {
        const std::size_t n = pool.size();
        std::size_t dim_total = 0;
        for (const auto& b : pool_blocks) dim_total += b.cols();
        Tensor<float> weighted({n, dim_total});
        std::size_t off = 0;
        for (std::size_t m = 0; m < m_count; ++m) {
            const std::size_t dim = pool_blocks[m].cols();
            const auto w = static_cast<float>(weights[m]);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t d = 0; d < dim; ++d)
                    weighted.data[i * dim_total + off + d] =
                        w * pool_blocks[m].data[i * dim + d];
            off += dim;
        }
        const std::size_t take = std::min(budget, n);
        std::vector<std::size_t> positions = kmeanspp_seed(weighted, take, rng);
        for (std::size_t pos : positions) acq.indices.push_back(pool[pos]);
    }
    acq.strategy = "bmmal-interp";
    acq.bmmal_fallback = degenerate;
    acq.bmmal_weights = weights;
    return acq;
}

} // namespace mmal
