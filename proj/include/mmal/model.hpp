#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmal/autodiff.hpp"
#include "mmal/loader.hpp"
#include "mmal/metrics.hpp"
#include "mmal/nn.hpp"
#include "mmal/rng.hpp"
#include "mmal/tensor.hpp"

namespace mmal {

struct NanLossError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelConfig {
    std::vector<std::size_t> input_dims; // per modality, after downscale/flatten
    std::size_t encoder_hidden = 256;
    std::size_t projection_dim = 64; // D, equal for all modalities
    std::size_t fusion_hidden = 128;
    std::size_t fused_dim = 64; // F, the penultimate width
    int n_classes = 10;
    double dropout_p = 0.1;  // projection-layer dropout
    double moddrop_p = 0.3;

    std::size_t n_modalities() const { return input_dims.size(); }

    void validate() const {
        if (input_dims.empty()) throw std::invalid_argument("model config: no modalities");
        if (n_classes < 2) throw std::invalid_argument("model config: n_classes must be >= 2");
        if (dropout_p < 0.0 || dropout_p >= 1.0)
            throw std::invalid_argument("model config: dropout_p must be in [0,1)");
    }
};

template <typename T>
struct Batch {
    std::vector<Tensor<T>> x;                        // per modality [B x dim]
    std::vector<std::vector<std::uint8_t>> present;  // [B][M]
    std::vector<int> labels;                         // empty for unlabeled scoring

    std::size_t size() const { return present.size(); }
};

template <typename T>
struct ForwardOutput {
    Tensor<T> logits;                   // [B x K]
    Tensor<T> fused;                    // [B x F], input to the linear head
    std::vector<Tensor<T>> projections; // per modality [B x D], zeroed where absent
    std::vector<std::vector<std::uint8_t>> presence;
};

template <typename T>
struct BadgeEmbedding {
    Tensor<T> head;                 // [B x K*F]: exact head-weight gradient at the pseudo-label
    std::vector<Tensor<T>> blocks;  // per modality [B x K*D], scaled by 1/|present|
};

// Per-sample modality dropout with the keep-one repair: every present
// modality is dropped independently with p_drop, and a sample that would end
// up empty gets one of its original modalities back, chosen uniformly.
std::vector<std::uint8_t> moddrop(std::vector<std::uint8_t> masks, double p_drop,
                                  std::size_t n_modalities, Rng& rng);

// Encoders -> equal-size tanh projections -> presence-masked mean -> 2-layer
// relu MLP -> linear head. Dropout sits on the projection outputs and is
// active only when requested (training and MC passes).
template <typename T>
class MultimodalNet {
  public:
    ModelConfig cfg;
    std::vector<Tensor<T>> params;

    // He init on the relu-fed layers, Glorot on the tanh projection and the
    // linear head; biases zero.
    static MultimodalNet init(const ModelConfig& cfg, std::uint64_t seed) {
        cfg.validate();
        MultimodalNet net;
        net.cfg = cfg;
        Rng rng(seed);
        for (std::size_t m = 0; m < cfg.n_modalities(); ++m) {
            net.params.push_back(he_uniform<T>(cfg.input_dims[m], cfg.encoder_hidden, rng));
            net.params.push_back(Tensor<T>({cfg.encoder_hidden}));
            net.params.push_back(glorot_uniform<T>(cfg.encoder_hidden, cfg.projection_dim, rng));
            net.params.push_back(Tensor<T>({cfg.projection_dim}));
        }
        net.params.push_back(he_uniform<T>(cfg.projection_dim, cfg.fusion_hidden, rng));
        net.params.push_back(Tensor<T>({cfg.fusion_hidden}));
        net.params.push_back(he_uniform<T>(cfg.fusion_hidden, cfg.fused_dim, rng));
        net.params.push_back(Tensor<T>({cfg.fused_dim}));
        net.params.push_back(glorot_uniform<T>(cfg.fused_dim, static_cast<std::size_t>(cfg.n_classes), rng));
        net.params.push_back(Tensor<T>({static_cast<std::size_t>(cfg.n_classes)}));
        return net;
    }

    // Parameter ids, by role.
    int enc_w(std::size_t m) const { return static_cast<int>(4 * m + 0); }
    int enc_b(std::size_t m) const { return static_cast<int>(4 * m + 1); }
    int proj_w(std::size_t m) const { return static_cast<int>(4 * m + 2); }
    int proj_b(std::size_t m) const { return static_cast<int>(4 * m + 3); }
    int fus_w1() const { return static_cast<int>(4 * cfg.n_modalities() + 0); }
    int fus_b1() const { return static_cast<int>(4 * cfg.n_modalities() + 1); }
    int fus_w2() const { return static_cast<int>(4 * cfg.n_modalities() + 2); }
    int fus_b2() const { return static_cast<int>(4 * cfg.n_modalities() + 3); }
    int head_w() const { return static_cast<int>(4 * cfg.n_modalities() + 4); }
    int head_b() const { return static_cast<int>(4 * cfg.n_modalities() + 5); }

    struct GraphNodes {
        std::vector<NodeId> proj;
        NodeId fused = -1;
        NodeId logits = -1;
    };

    GraphNodes build_graph(Tape<T>& tape, const Batch<T>& batch, bool trainable,
                           bool dropout_active, std::uint64_t dropout_seed) const {
        const std::size_t M = cfg.n_modalities();
        if (batch.x.size() != M) throw std::invalid_argument("forward: modality count mismatch");
        for (const auto& mask : batch.present) {
            bool any = false;
            for (std::size_t m = 0; m < M; ++m) any = any || mask[m];
            if (!any) throw std::invalid_argument("forward: sample with no present modality");
        }

        auto p = [&](int pid) {
            return trainable ? tape.param(params[pid], pid) : tape.leaf(params[pid], false);
        };

        GraphNodes g;
        for (std::size_t m = 0; m < M; ++m) {
            NodeId x = tape.leaf(batch.x[m], false);
            NodeId h = relu(tape, linear(tape, x, p(enc_w(m)), p(enc_b(m))));
            NodeId pr = tanh_act(tape, linear(tape, h, p(proj_w(m)), p(proj_b(m))));
            pr = dropout(tape, pr, cfg.dropout_p, hash_mix(dropout_seed, m), dropout_active);
            g.proj.push_back(pr);
        }
        NodeId z = masked_mean(tape, g.proj, batch.present);
        NodeId f1 = relu(tape, linear(tape, z, p(fus_w1()), p(fus_b1())));
        g.fused = relu(tape, linear(tape, f1, p(fus_w2()), p(fus_b2())));
        g.logits = linear(tape, g.fused, p(head_w()), p(head_b()));
        return g;
    }

    ForwardOutput<T> forward(const Batch<T>& batch, bool dropout_active = false,
                             std::uint64_t dropout_seed = 0) const {
        Tape<T> tape;
        GraphNodes g = build_graph(tape, batch, /*trainable=*/false, dropout_active, dropout_seed);

        ForwardOutput<T> out;
        out.logits = tape.value(g.logits);
        out.fused = tape.value(g.fused);
        out.presence = batch.present;
        const std::size_t D = cfg.projection_dim;
        for (std::size_t m = 0; m < cfg.n_modalities(); ++m) {
            Tensor<T> proj = tape.value(g.proj[m]);
            for (std::size_t i = 0; i < batch.size(); ++i)
                if (!batch.present[i][m])
                    for (std::size_t j = 0; j < D; ++j) proj.data[i * D + j] = T{0};
            out.projections.push_back(std::move(proj));
        }
        return out;
    }

    // T independent stochastic passes with dropout active and masks fixed.
    Tensor<T> mc_predict(const Batch<T>& batch, int passes, Rng& rng) const {
        if (passes < 1) throw std::invalid_argument("mc_predict: passes must be >= 1");
        const std::size_t B = batch.size();
        const auto K = static_cast<std::size_t>(cfg.n_classes);
        Tensor<T> probs({static_cast<std::size_t>(passes), B, K});
        for (int t = 0; t < passes; ++t) {
            const std::uint64_t seed = rng.next_u64();
            ForwardOutput<T> out = forward(batch, /*dropout_active=*/true, seed);
            Tensor<double> p = softmax_rows(out.logits);
            for (std::size_t i = 0; i < B * K; ++i)
                probs.data[static_cast<std::size_t>(t) * B * K + i] = static_cast<T>(p.data[i]);
        }
        return probs;
    }

    BadgeEmbedding<T> badge_embedding(const Batch<T>& batch) const {
        ForwardOutput<T> out = forward(batch, /*dropout_active=*/false);
        const std::size_t B = batch.size();
        const auto K = static_cast<std::size_t>(cfg.n_classes);
        const std::size_t F = cfg.fused_dim;
        const std::size_t D = cfg.projection_dim;
        const std::size_t M = cfg.n_modalities();

        Tensor<double> probs = softmax_rows(out.logits);
        const std::vector<int> pseudo = argmax_rows(out.logits);

        BadgeEmbedding<T> emb;
        emb.head = Tensor<T>({B, K * F});
        for (std::size_t m = 0; m < M; ++m) emb.blocks.emplace_back(Tensor<T>({B, K * D}));

        for (std::size_t i = 0; i < B; ++i) {
            int present = 0;
            for (std::size_t m = 0; m < M; ++m) present += batch.present[i][m] ? 1 : 0;
            const T inv_present = T{1} / static_cast<T>(present);
            for (std::size_t k = 0; k < K; ++k) {
                const T g = static_cast<T>(probs.data[i * K + k]) -
                            (static_cast<std::size_t>(pseudo[i]) == k ? T{1} : T{0});
                for (std::size_t f = 0; f < F; ++f)
                    emb.head.data[i * K * F + k * F + f] = g * out.fused.data[i * F + f];
                for (std::size_t m = 0; m < M; ++m)
                    for (std::size_t d = 0; d < D; ++d)
                        emb.blocks[m].data[i * K * D + k * D + d] =
                            g * out.projections[m].data[i * D + d] * inv_present;
            }
        }
        return emb;
    }
};

// ---- batch assembly ----------------------------------------------------

enum class Part { Train, Test };

// presence_override == 0 keeps the stored masks; otherwise every sample gets
// the given subset mask (used by the exhaustive missing-modality evaluation).
template <typename T>
Batch<T> gather_batch(const LoadedDataset& data, Part part, const std::uint32_t* rows,
                      std::size_t n, std::uint32_t presence_override = 0) {
    const std::size_t M = data.geom.size();
    Batch<T> batch;
    batch.present.resize(n);
    batch.labels.resize(n);
    for (std::size_t m = 0; m < M; ++m) {
        const std::size_t dim = data.geom[m].dim();
        Tensor<T> x({n, dim});
        for (std::size_t i = 0; i < n; ++i) {
            const float* src =
                part == Part::Train ? data.train_row(static_cast<int>(m), rows[i])
                                    : data.test_row(static_cast<int>(m), rows[i]);
            for (std::size_t j = 0; j < dim; ++j) x.data[i * dim + j] = static_cast<T>(src[j]);
        }
        batch.x.push_back(std::move(x));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t stored = part == Part::Train ? data.train_presence[rows[i]]
                                                        : data.test_presence[rows[i]];
        const std::uint8_t mask =
            presence_override ? static_cast<std::uint8_t>(presence_override) : stored;
        std::vector<std::uint8_t> bits(M);
        for (std::size_t m = 0; m < M; ++m) bits[m] = (mask >> m) & 1u;
        batch.present[i] = std::move(bits);
        batch.labels[i] = part == Part::Train ? data.train_labels[rows[i]]
                                              : data.test_labels[rows[i]];
    }
    return batch;
}

template <typename T>
std::vector<int> predict_labels(const MultimodalNet<T>& net, const LoadedDataset& data, Part part,
                                std::span<const std::uint32_t> rows, int batch_size,
                                std::uint32_t presence_override = 0) {
    std::vector<int> preds;
    preds.reserve(rows.size());
    for (std::size_t off = 0; off < rows.size(); off += batch_size) {
        const std::size_t n = std::min<std::size_t>(batch_size, rows.size() - off);
        Batch<T> batch = gather_batch<T>(data, part, rows.data() + off, n, presence_override);
        ForwardOutput<T> out = net.forward(batch);
        std::vector<int> p = argmax_rows(out.logits);
        preds.insert(preds.end(), p.begin(), p.end());
    }
    return preds;
}

// ---- training ---------------------------------------------------------------

template <typename T>
struct TrainedModel {
    MultimodalNet<T> net; // best checkpoint by validation balanced accuracy
    std::vector<double> val_bacc;
    int best_epoch = -1;
};

template <typename T>
TrainedModel<T> train_model(const LoadedDataset& data, const std::vector<std::uint32_t>& labeled,
                            const std::vector<std::uint32_t>& val, const TrainRecipe& recipe,
                            const ModelConfig& cfg, std::uint64_t seed, bool moddrop_enabled) {
    recipe.validate();
    if (labeled.empty() || val.empty())
        throw std::invalid_argument("train_model: labeled and validation sets must be non-empty");

    const std::size_t M = cfg.n_modalities();
    MultimodalNet<T> net = MultimodalNet<T>::init(cfg, derive_seed(seed, "init"));

    TrainedModel<T> result;
    double best_bacc = -1.0;

    for (int epoch = 0; epoch < recipe.epochs; ++epoch) {
        const double lr = lr_at(epoch, recipe);

        std::vector<std::uint32_t> order = labeled;
        Rng shuffle_rng(derive_seed(seed, "shuffle", epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.index(i)]);

        std::vector<std::uint8_t> epoch_masks(order.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            epoch_masks[i] = data.train_presence[order[i]];
        if (moddrop_enabled) {
            Rng md_rng(derive_seed(seed, "moddrop", epoch));
            epoch_masks = moddrop(std::move(epoch_masks), cfg.moddrop_p, M, md_rng);
        }

        const std::uint64_t aug_base = derive_seed(seed, "augment", epoch);
        const std::uint64_t drop_base = derive_seed(seed, "dropout", epoch);

        std::size_t batch_index = 0;
        for (std::size_t off = 0; off < order.size();
             off += recipe.batch_size, ++batch_index) {
            const std::size_t n = std::min<std::size_t>(recipe.batch_size, order.size() - off);
            Batch<T> batch = gather_batch<T>(data, Part::Train, order.data() + off, n);
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint8_t mask = epoch_masks[off + i];
                for (std::size_t m = 0; m < M; ++m) batch.present[i][m] = (mask >> m) & 1u;
            }
            if (recipe.augmentation == Augmentation::Basic) {
                for (std::size_t m = 0; m < M; ++m) {
                    if (!data.geom[m].is_image) continue;
                    const std::size_t dim = data.geom[m].dim();
                    std::vector<float> buf(dim);
                    for (std::size_t i = 0; i < n; ++i) {
                        T* xrow = batch.x[m].data.data() + i * dim;
                        for (std::size_t j = 0; j < dim; ++j)
                            buf[j] = static_cast<float>(xrow[j]);
                        augment_basic(buf.data(), data.geom[m],
                                      hash_mix(aug_base, order[off + i] * M + m));
                        for (std::size_t j = 0; j < dim; ++j) xrow[j] = static_cast<T>(buf[j]);
                    }
                }
            }

            Tape<T> tape;
            auto g = net.build_graph(tape, batch, /*trainable=*/true, /*dropout_active=*/true,
                                     hash_mix(drop_base, batch_index));
            XentResult<T> xent = softmax_xent(tape, g.logits, batch.labels);
            const double loss = static_cast<double>(tape.value(xent.loss).data[0]);
            if (!std::isfinite(loss)) throw NanLossError("train_model: non-finite loss");
            auto grads = tape.backward(xent.loss);
            sgd_step(net.params, grads, lr, recipe.weight_decay);
        }

        std::vector<int> preds =
            predict_labels(net, data, Part::Train, std::span<const std::uint32_t>(val),
                           recipe.batch_size);
        std::vector<int> truth(val.size());
        for (std::size_t i = 0; i < val.size(); ++i) truth[i] = data.train_labels[val[i]];
        const double bacc = balanced_accuracy(preds, truth, cfg.n_classes);
        result.val_bacc.push_back(bacc);

        if (bacc > best_bacc) {
            best_bacc = bacc;
            result.best_epoch = epoch;
            result.net = net;
        }
    }
    return result;
}

struct GridChoice {
    double lr = 0.0;
    double wd = 0.0;
    Augmentation aug = Augmentation::Basic;
    std::vector<double> scores; // one per grid point, in grid order
};

// Trains one model per grid point on the initial budget and returns the
// combination with the best validation balanced accuracy; ties keep the
// lexicographically first grid point.
template <typename T>
GridChoice grid_search(const LoadedDataset& data, const std::vector<std::uint32_t>& labeled,
                       const std::vector<std::uint32_t>& val, const HyperGrid& grid,
                       TrainRecipe base, const ModelConfig& cfg, std::uint64_t seed,
                       bool moddrop_enabled) {
    if (grid.lrs.empty() || grid.wds.empty() || grid.augs.empty())
        throw std::invalid_argument("grid_search: empty grid");

    GridChoice choice;
    double best = -2.0; // below the divergence sentinel so some point is always chosen
    int combo = 0;
    for (double lr : grid.lrs)
        for (double wd : grid.wds)
            for (Augmentation aug : grid.augs) {
                TrainRecipe recipe = base;
                recipe.base_lr = lr;
                recipe.weight_decay = wd;
                recipe.augmentation = aug;
                double score;
                try {
                    TrainedModel<T> trained = train_model<T>(data, labeled, val, recipe, cfg,
                                                             derive_seed(seed, "grid", combo),
                                                             moddrop_enabled);
                    score = *std::max_element(trained.val_bacc.begin(), trained.val_bacc.end());
                } catch (const NanLossError&) {
                    score = -1.0; // diverged: worst possible, never selected over a stable point
                }
                choice.scores.push_back(score);
                if (score > best) {
                    best = score;
                    choice.lr = lr;
                    choice.wd = wd;
                    choice.aug = aug;
                }
                ++combo;
            }
    return choice;
}

} // namespace mmal
