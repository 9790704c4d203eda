#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmal/quintfeatures.hpp"
#include "mmal/tensor.hpp"

namespace mmal {

enum class DatasetKind { Missing, Share, Unique, Synergy, External };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& s);

struct ModalityInfo {
    std::vector<std::size_t> sample_shape; // e.g. {64, 64, 3}
    std::string dtype = "u8";
    bool is_image = true;

    std::size_t sample_elems() const {
        std::size_t n = 1;
        for (std::size_t d : sample_shape) n *= d;
        return n;
    }
};

struct BundleManifest {
    DatasetKind kind = DatasetKind::External;
    int n_modalities = 0;
    std::vector<ModalityInfo> modalities;
    int n_classes = 0;
    std::string label_semantics;
    nlohmann::json generator_params = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::map<std::string, std::size_t> partition_sizes;

    // Evaluation hints: which subset is the weak modality for rank tables,
    // and which subsets get the x10 display scaling because only part of the
    // label is predictable from them.
    std::uint32_t weak_subset_mask = 0;
    std::vector<std::uint32_t> scaled_subsets;

    // Set when Share pairing ran out of distinct images in a class.
    bool share_with_replacement = false;

    void validate() const;
};

// Per-sample generation provenance, kept alongside the payload so dataset
// properties can be audited without re-rendering.
struct SampleProvenance {
    std::vector<std::vector<QuintSpec>> quint_specs;       // [sample][modality]
    std::vector<std::array<std::uint32_t, 2>> source_rows; // Share: (cifar, mnist)
    std::vector<std::uint8_t> pre_repair_presence; // raw Bernoulli draws, before keep-one

    bool empty() const {
        return quint_specs.empty() && source_rows.empty() && pre_repair_presence.empty();
    }
};

struct Partition {
    std::vector<Tensor<std::uint8_t>> tensors; // one per modality, shape {n, ...}
    std::vector<std::uint8_t> labels;
    std::vector<std::uint8_t> presence; // bit m set = modality m present
    SampleProvenance provenance;

    std::size_t size() const { return labels.size(); }
};

struct DatasetBundle {
    BundleManifest manifest;
    Partition train;
    Partition test;
};

// ---- external formats -------------------------------------------------

// IDX (big-endian): magic 0x00000803 for 3-D image files, 0x00000801 for
// 1-D label files; unsigned-byte payload in row-major order.
Tensor<std::uint8_t> read_idx(const std::string& path);

struct Cifar10 {
    Tensor<std::uint8_t> images; // {N, 32, 32, 3}, HWC
    std::vector<std::uint8_t> labels;
};

// CIFAR-10 binary batches: records of 1 label byte + 3072 pixel bytes laid
// out as channel-major R,G,B planes (record size 3073).
Cifar10 read_cifar10(const std::vector<std::string>& paths);

// ---- bundle container ---------------------------------------------------
//
// A bundle directory holds manifest.json plus, per partition, one raw tensor
// file per modality (<part>_m<k>.tnsr), <part>_labels.bin, <part>_presence.bin
// and optional <part>_specs.json provenance. Tensor files are little-endian:
// magic "MMALTNSR", u32 dtype code (1 = u8, 2 = f32, 3 = f64), u32 ndim,
// u64 dims, contiguous payload.

void write_bundle(const DatasetBundle& bundle, const std::string& dir);
DatasetBundle read_bundle(const std::string& dir);

void write_tensor_file(const std::string& path, const Tensor<std::uint8_t>& t);
Tensor<std::uint8_t> read_tensor_file(const std::string& path);

nlohmann::json manifest_to_json(const BundleManifest& m);
BundleManifest manifest_from_json(const nlohmann::json& j);

} // namespace mmal
