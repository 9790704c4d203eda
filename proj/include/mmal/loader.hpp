#pragma once

#include <cstdint>
#include <vector>

#include "mmal/ingest.hpp"
#include "mmal/rng.hpp"

namespace mmal {

struct ModalityGeom {
    int h = 0, w = 0, c = 0;
    bool is_image = true;
    std::size_t dim() const { return static_cast<std::size_t>(h) * w * c; }
};

// Bundle payload converted to flat [0,1] float vectors, optionally box
// resampled to a smaller side. Built once per (bundle, downscale) and shared
// read-only by all runs on that dataset.
struct LoadedDataset {
    BundleManifest manifest;
    std::vector<ModalityGeom> geom;

    // [modality][sample * dim]
    std::vector<std::vector<float>> train_x;
    std::vector<std::vector<float>> test_x;
    std::vector<int> train_labels;
    std::vector<int> test_labels;
    std::vector<std::uint8_t> train_presence;
    std::vector<std::uint8_t> test_presence;

    std::size_t train_size() const { return train_labels.size(); }
    std::size_t test_size() const { return test_labels.size(); }

    const float* train_row(int modality, std::size_t i) const {
        return train_x[modality].data() + i * geom[modality].dim();
    }
    const float* test_row(int modality, std::size_t i) const {
        return test_x[modality].data() + i * geom[modality].dim();
    }
};

// downscale_side <= 0 keeps the native resolution. Images smaller than the
// target keep their own size.
LoadedDataset load_for_training(const DatasetBundle& bundle, int downscale_side);

// Exact area-weighted box resample of an interleaved HWC image.
std::vector<float> area_resize(const float* src, int sh, int sw, int c, int dh, int dw);

// Horizontal flip with p=0.5 followed by a random crop after 4px reflect
// padding; mask draws are a pure function of the seed.
void augment_basic(float* x, const ModalityGeom& geom, std::uint64_t seed);

} // namespace mmal
