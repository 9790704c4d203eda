#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mmal/ingest.hpp"
#include "mmal/quintfeatures.hpp"
#include "mmal/rng.hpp"

namespace mmal {

struct MissingnessPolicy {
    std::vector<double> p_missing = {0.9, 0.1};
    bool keep_one = true;

    void validate() const;
};

struct ClassBijection {
    std::array<int, 10> cifar_to_mnist{};
    std::uint64_t seed = 0;

    static ClassBijection identity();
    static ClassBijection shuffled(std::uint64_t seed);
    void validate() const;
};

struct BuildSizes {
    std::size_t n_train = 0;
    std::size_t n_test = 0;
};

// Independent Bernoulli drop per present modality; a sample that would lose
// every modality gets one of its original modalities restored uniformly at
// random. Input masks use bit m for modality m. When pre_repair is given it
// receives the raw draws before the keep-one repair.
std::vector<std::uint8_t> apply_missingness(std::vector<std::uint8_t> masks,
                                            const MissingnessPolicy& policy, Rng& rng,
                                            std::vector<std::uint8_t>* pre_repair = nullptr);

// Two QuintFeatures modalities with a shared shape; label = shape. Training
// partition presence follows the policy, the test partition stays complete.
DatasetBundle build_missing(const GenConfig& gen_cfg, const MissingnessPolicy& policy,
                            BuildSizes sizes, std::uint64_t seed);

struct ShareSources {
    Cifar10 cifar_train;
    Cifar10 cifar_test;
    Tensor<std::uint8_t> mnist_train_images; // {N, 28, 28}
    std::vector<std::uint8_t> mnist_train_labels;
    Tensor<std::uint8_t> mnist_test_images;
    std::vector<std::uint8_t> mnist_test_labels;
};

// CIFAR-10 image as modality A and a class-mapped MNIST digit as modality B;
// label = CIFAR class. Pairing draws images uniformly without replacement
// within each class and partition, falling back to replacement (recorded in
// the manifest) when a class runs dry.
DatasetBundle build_share(const ShareSources& sources, const ClassBijection& bijection,
                          BuildSizes sizes, std::uint64_t seed);

// Shared shape plus a texture only modality A can see;
// label = 10*shape + fg_texture_A.
DatasetBundle build_unique(const GenConfig& gen_cfg, BuildSizes sizes, std::uint64_t seed);

// Complementary factors: label = 10*fg_texture_A + shape_B; the two factors
// live in different modalities and everything else is independent.
DatasetBundle build_synergy(const GenConfig& gen_cfg, BuildSizes sizes, std::uint64_t seed);

} // namespace mmal
