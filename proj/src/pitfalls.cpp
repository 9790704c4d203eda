#include "mmal/pitfalls.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mmal {

void MissingnessPolicy::validate() const {
    if (p_missing.empty()) throw std::invalid_argument("missingness: empty probability vector");
    for (double p : p_missing)
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("missingness: probabilities must be in [0,1]");
    if (!keep_one) throw std::invalid_argument("missingness: keep_one_rule must stay enabled");
}

ClassBijection ClassBijection::identity() {
    ClassBijection b;
    for (int i = 0; i < 10; ++i) b.cifar_to_mnist[i] = i;
    return b;
}

ClassBijection ClassBijection::shuffled(std::uint64_t seed) {
    ClassBijection b = identity();
    b.seed = seed;
    Rng rng(seed);
    for (int i = 9; i > 0; --i)
        std::swap(b.cifar_to_mnist[i], b.cifar_to_mnist[rng.index(i + 1)]);
    return b;
}

void ClassBijection::validate() const {
    std::array<bool, 10> seen{};
    for (int v : cifar_to_mnist) {
        if (v < 0 || v >= 10 || seen[v])
            throw std::invalid_argument("class bijection: not a permutation of [0,10)");
        seen[v] = true;
    }
}

std::vector<std::uint8_t> apply_missingness(std::vector<std::uint8_t> masks,
                                            const MissingnessPolicy& policy, Rng& rng,
                                            std::vector<std::uint8_t>* pre_repair) {
    policy.validate();
    if (pre_repair) pre_repair->clear();
    const int m_count = static_cast<int>(policy.p_missing.size());
    for (std::uint8_t& mask : masks) {
        const std::uint8_t original = mask;
        std::uint8_t out = 0;
        for (int m = 0; m < m_count; ++m) {
            const std::uint8_t bit = static_cast<std::uint8_t>(1u << m);
            if (!(original & bit)) continue;
            if (!rng.bernoulli(policy.p_missing[m])) out |= bit;
        }
        if (pre_repair) pre_repair->push_back(out);
        if (out == 0) {
            std::vector<int> candidates;
            for (int m = 0; m < m_count; ++m)
                if (original & (1u << m)) candidates.push_back(m);
            if (candidates.empty())
                throw std::invalid_argument("apply_missingness: sample already all-absent");
            out = static_cast<std::uint8_t>(1u << candidates[rng.index(candidates.size())]);
        }
        mask = out;
    }
    return masks;
}

// ---- quintfeatures-based builders ------------------------------------------

namespace {

struct QuintSampleRule {
    // Returns the two specs and the class label for sample `index` of the
    // named partition. Must be a pure function of (seed, partition, index).
    virtual ~QuintSampleRule() = default;
    virtual void sample(Rng& rng, QuintSpec& a, QuintSpec& b, int& label) const = 0;
};

DatasetBundle build_quint_bundle(const GenConfig& gen_cfg, BuildSizes sizes, std::uint64_t seed,
                                 const QuintSampleRule& rule, int n_classes) {
    gen_cfg.validate();
    const int canvas = gen_cfg.canvas;
    const std::size_t px = static_cast<std::size_t>(canvas) * canvas * 3;

    DatasetBundle bundle;
    auto build_partition = [&](const char* name, std::size_t n) {
        Partition part;
        part.tensors.assign(2, Tensor<std::uint8_t>({n, static_cast<std::size_t>(canvas),
                                                     static_cast<std::size_t>(canvas), 3}));
        part.labels.resize(n);
        part.presence.assign(n, 0x3);
        part.provenance.quint_specs.resize(n);

        // Specs are drawn serially so the per-sample rng streams are pinned;
        // rendering is pure per sample and runs in parallel.
        std::vector<QuintSpec> specs_a(n), specs_b(n);
        for (std::size_t i = 0; i < n; ++i) {
            Rng rng(derive_seed(seed, name, i));
            int label = 0;
            rule.sample(rng, specs_a[i], specs_b[i], label);
            part.labels[i] = static_cast<std::uint8_t>(label);
            part.provenance.quint_specs[i] = {specs_a[i], specs_b[i]};
        }

#pragma omp parallel for schedule(dynamic, 16)
        for (std::size_t i = 0; i < n; ++i) {
            const QuintImage img_a = render(specs_a[i], gen_cfg);
            const QuintImage img_b = render(specs_b[i], gen_cfg);
            std::copy(img_a.pixels.begin(), img_a.pixels.end(),
                      part.tensors[0].data.begin() + i * px);
            std::copy(img_b.pixels.begin(), img_b.pixels.end(),
                      part.tensors[1].data.begin() + i * px);
        }
        return part;
    };

    bundle.train = build_partition("train", sizes.n_train);
    bundle.test = build_partition("test", sizes.n_test);

    BundleManifest& m = bundle.manifest;
    m.n_modalities = 2;
    m.modalities.assign(2, ModalityInfo{{static_cast<std::size_t>(canvas),
                                         static_cast<std::size_t>(canvas), 3},
                                        "u8",
                                        true});
    m.n_classes = n_classes;
    m.seed = seed;
    m.partition_sizes = {{"train", sizes.n_train}, {"test", sizes.n_test}};
    m.generator_params = {{"canvas", canvas},
                          {"erosion_frequency", gen_cfg.erosion.frequency},
                          {"erosion_octaves", gen_cfg.erosion.octaves},
                          {"erosion_threshold", gen_cfg.erosion.threshold}};
    return bundle;
}

struct MissingRule final : QuintSampleRule {
    void sample(Rng& rng, QuintSpec& a, QuintSpec& b, int& label) const override {
        a = sample_spec(SpecConstraints::free_all(), rng);
        b = sample_spec(SpecConstraints::free_all().tie_shape(a), rng);
        label = a.shape_id;
    }
};

struct UniqueRule final : QuintSampleRule {
    void sample(Rng& rng, QuintSpec& a, QuintSpec& b, int& label) const override {
        a = sample_spec(SpecConstraints::free_all(), rng);
        b = sample_spec(SpecConstraints::free_all().tie_shape(a), rng);
        label = 10 * a.shape_id + a.fg_texture_id;
    }
};

struct SynergyRule final : QuintSampleRule {
    void sample(Rng& rng, QuintSpec& a, QuintSpec& b, int& label) const override {
        a = sample_spec(SpecConstraints::free_all(), rng);
        b = sample_spec(SpecConstraints::free_all(), rng);
        label = 10 * a.fg_texture_id + b.shape_id;
    }
};

} // namespace

DatasetBundle build_missing(const GenConfig& gen_cfg, const MissingnessPolicy& policy,
                            BuildSizes sizes, std::uint64_t seed) {
    policy.validate();
    if (policy.p_missing.size() != 2)
        throw std::invalid_argument("build_missing: policy must cover two modalities");

    DatasetBundle bundle = build_quint_bundle(gen_cfg, sizes, seed, MissingRule{}, 10);

    Rng rng(derive_seed(seed, "missingness"));
    bundle.train.presence = apply_missingness(std::move(bundle.train.presence), policy, rng,
                                              &bundle.train.provenance.pre_repair_presence);

    BundleManifest& m = bundle.manifest;
    m.kind = DatasetKind::Missing;
    m.label_semantics = "shape (shared across both modalities)";
    m.weak_subset_mask = 0x1; // modality A is the rare one
    m.generator_params["p_missing"] = policy.p_missing;
    return bundle;
}

DatasetBundle build_unique(const GenConfig& gen_cfg, BuildSizes sizes, std::uint64_t seed) {
    DatasetBundle bundle = build_quint_bundle(gen_cfg, sizes, seed, UniqueRule{}, 100);
    BundleManifest& m = bundle.manifest;
    m.kind = DatasetKind::Unique;
    m.label_semantics = "10*shape_shared + fg_texture_A";
    m.weak_subset_mask = 0x2;   // modality B never sees the texture factor
    m.scaled_subsets = {0x2};
    return bundle;
}

DatasetBundle build_synergy(const GenConfig& gen_cfg, BuildSizes sizes, std::uint64_t seed) {
    DatasetBundle bundle = build_quint_bundle(gen_cfg, sizes, seed, SynergyRule{}, 100);
    BundleManifest& m = bundle.manifest;
    m.kind = DatasetKind::Synergy;
    m.label_semantics = "10*fg_texture_A + shape_B";
    m.weak_subset_mask = 0x2;
    m.scaled_subsets = {0x1, 0x2};
    return bundle;
}

// ---- share ----------------------------------------------------------------

namespace {

// Per-class pools of source rows, consumed without replacement; a dry class
// falls back to uniform draws over its full list.
class ClassPool {
  public:
    ClassPool(const std::vector<std::uint8_t>& labels, Rng& rng) {
        by_class_.resize(10);
        for (std::size_t i = 0; i < labels.size(); ++i)
            by_class_[labels[i]].push_back(static_cast<std::uint32_t>(i));
        for (auto& pool : by_class_)
            for (std::size_t i = pool.size(); i > 1; --i)
                std::swap(pool[i - 1], pool[rng.index(i)]);
        cursor_.assign(10, 0);
    }

    std::uint32_t draw(int cls, Rng& rng, bool& exhausted) {
        auto& pool = by_class_[cls];
        if (pool.empty()) throw std::runtime_error("share: source has no images for a class");
        if (cursor_[cls] < pool.size()) return pool[cursor_[cls]++];
        exhausted = true;
        return pool[rng.index(pool.size())];
    }

  private:
    std::vector<std::vector<std::uint32_t>> by_class_;
    std::vector<std::size_t> cursor_;
};

} // namespace

DatasetBundle build_share(const ShareSources& sources, const ClassBijection& bijection,
                          BuildSizes sizes, std::uint64_t seed) {
    bijection.validate();
    if (sources.cifar_train.images.shape.empty() || sources.mnist_train_images.shape.empty())
        throw std::invalid_argument("build_share: empty sources");

    const std::size_t cifar_px = 32 * 32 * 3;
    const std::size_t mnist_px = 28 * 28;

    DatasetBundle bundle;
    bool with_replacement = false;

    auto build_partition = [&](const char* name, std::size_t n, const Cifar10& cifar,
                               const Tensor<std::uint8_t>& mnist_images,
                               const std::vector<std::uint8_t>& mnist_labels) {
        if (mnist_images.shape[0] != mnist_labels.size())
            throw std::invalid_argument("build_share: mnist image/label count mismatch");

        Rng rng(derive_seed(seed, name));
        ClassPool cifar_pool(cifar.labels, rng);
        ClassPool mnist_pool(mnist_labels, rng);

        Partition part;
        part.tensors = {Tensor<std::uint8_t>({n, 32, 32, 3}), Tensor<std::uint8_t>({n, 28, 28, 1})};
        part.labels.resize(n);
        part.presence.assign(n, 0x3);
        part.provenance.source_rows.resize(n);

        for (std::size_t i = 0; i < n; ++i) {
            const int cls = static_cast<int>(rng.index(10));
            bool exhausted = false;
            const std::uint32_t crow = cifar_pool.draw(cls, rng, exhausted);
            const std::uint32_t mrow = mnist_pool.draw(bijection.cifar_to_mnist[cls], rng,
                                                       exhausted);
            with_replacement = with_replacement || exhausted;

            part.labels[i] = static_cast<std::uint8_t>(cls);
            part.provenance.source_rows[i] = {crow, mrow};
            std::copy_n(cifar.images.data.begin() + crow * cifar_px, cifar_px,
                        part.tensors[0].data.begin() + i * cifar_px);
            std::copy_n(mnist_images.data.begin() + mrow * mnist_px, mnist_px,
                        part.tensors[1].data.begin() + i * mnist_px);
        }
        return part;
    };

    bundle.test = build_partition("test", sizes.n_test, sources.cifar_test,
                                  sources.mnist_test_images, sources.mnist_test_labels);
    bundle.train = build_partition("train", sizes.n_train, sources.cifar_train,
                                   sources.mnist_train_images, sources.mnist_train_labels);

    BundleManifest& m = bundle.manifest;
    m.kind = DatasetKind::Share;
    m.n_modalities = 2;
    m.modalities = {ModalityInfo{{32, 32, 3}, "u8", true}, ModalityInfo{{28, 28, 1}, "u8", true}};
    m.n_classes = 10;
    m.label_semantics = "cifar class; mnist digit = bijection(cifar class)";
    m.seed = seed;
    m.partition_sizes = {{"train", sizes.n_train}, {"test", sizes.n_test}};
    m.weak_subset_mask = 0x1; // CIFAR-10 side
    m.share_with_replacement = with_replacement;
    nlohmann::json perm = nlohmann::json::array();
    for (int v : bijection.cifar_to_mnist) perm.push_back(v);
    m.generator_params = {{"bijection", perm}, {"bijection_seed", bijection.seed}};
    return bundle;
}

} // namespace mmal
