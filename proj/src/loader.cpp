#include "mmal/loader.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmal {

std::vector<float> area_resize(const float* src, int sh, int sw, int c, int dh, int dw) {
    std::vector<float> dst(static_cast<std::size_t>(dh) * dw * c, 0.0f);
    const double ry = static_cast<double>(sh) / dh;
    const double rx = static_cast<double>(sw) / dw;
    for (int y = 0; y < dh; ++y) {
        const double y0 = y * ry, y1 = (y + 1) * ry;
        for (int x = 0; x < dw; ++x) {
            const double x0 = x * rx, x1 = (x + 1) * rx;
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int sy = static_cast<int>(y0); sy < static_cast<int>(std::ceil(y1)); ++sy) {
                    const double wy =
                        std::min<double>(sy + 1, y1) - std::max<double>(sy, y0);
                    for (int sx = static_cast<int>(x0); sx < static_cast<int>(std::ceil(x1));
                         ++sx) {
                        const double wx =
                            std::min<double>(sx + 1, x1) - std::max<double>(sx, x0);
                        acc += wy * wx * src[(static_cast<std::size_t>(sy) * sw + sx) * c + ch];
                    }
                }
                dst[(static_cast<std::size_t>(y) * dw + x) * c + ch] =
                    static_cast<float>(acc / (ry * rx));
            }
        }
    }
    return dst;
}

namespace {

void convert_partition(const Partition& part, const BundleManifest& manifest, int downscale_side,
                       std::vector<ModalityGeom>& geom, std::vector<std::vector<float>>& out_x,
                       std::vector<int>& out_labels, std::vector<std::uint8_t>& out_presence) {
    const std::size_t n = part.size();
    out_labels.assign(part.labels.begin(), part.labels.end());
    out_presence = part.presence;

    out_x.resize(manifest.n_modalities);
    for (int m = 0; m < manifest.n_modalities; ++m) {
        const ModalityInfo& info = manifest.modalities[m];
        if (info.sample_shape.size() != 3)
            throw std::invalid_argument("loader: expected HWC modality payloads");
        const int sh = static_cast<int>(info.sample_shape[0]);
        const int sw = static_cast<int>(info.sample_shape[1]);
        const int c = static_cast<int>(info.sample_shape[2]);

        int dh = sh, dw = sw;
        if (downscale_side > 0 && info.is_image) {
            dh = std::min(sh, downscale_side);
            dw = std::min(sw, downscale_side);
        }
        geom[m] = ModalityGeom{dh, dw, c, info.is_image};

        const std::size_t src_dim = static_cast<std::size_t>(sh) * sw * c;
        const std::size_t dst_dim = geom[m].dim();
        out_x[m].resize(n * dst_dim);

#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<float> buf(src_dim);
            const std::uint8_t* row = part.tensors[m].data.data() + i * src_dim;
            for (std::size_t k = 0; k < src_dim; ++k)
                buf[k] = static_cast<float>(row[k]) * (1.0f / 255.0f);
            float* dst = out_x[m].data() + i * dst_dim;
            if (dh == sh && dw == sw) {
                std::copy(buf.begin(), buf.end(), dst);
            } else {
                std::vector<float> resized = area_resize(buf.data(), sh, sw, c, dh, dw);
                std::copy(resized.begin(), resized.end(), dst);
            }
            // Image modalities are fed as contrast-normalized deviation maps:
            // per channel, the absolute deviation from the image's own channel
            // mean, then divided by the image's mean deviation. The background
            // dominates the mean, so the map exposes the foreground silhouette
            // and texture structure independent of the per-sample color and
            // contrast randomization; raw [0,1] pixels leave shallow encoders
            // at chance at desk-scale sample counts.
            if (info.is_image) {
                for (int ch = 0; ch < c; ++ch) {
                    double mean = 0.0;
                    for (int p = 0; p < dh * dw; ++p) mean += dst[p * c + ch];
                    mean /= dh * dw;
                    for (int p = 0; p < dh * dw; ++p)
                        dst[p * c + ch] = static_cast<float>(
                            std::fabs(dst[p * c + ch] - mean));
                }
                double dev_mean = 0.0;
                for (std::size_t k = 0; k < dst_dim; ++k) dev_mean += dst[k];
                const float inv = static_cast<float>(
                    1.0 / (dev_mean / static_cast<double>(dst_dim) + 1e-4));
                for (std::size_t k = 0; k < dst_dim; ++k) dst[k] *= inv;
            }
        }
    }
}

} // namespace

LoadedDataset load_for_training(const DatasetBundle& bundle, int downscale_side) {
    LoadedDataset data;
    data.manifest = bundle.manifest;
    data.geom.resize(bundle.manifest.n_modalities);

    std::vector<ModalityGeom> geom_test(bundle.manifest.n_modalities);
    convert_partition(bundle.train, bundle.manifest, downscale_side, data.geom, data.train_x,
                      data.train_labels, data.train_presence);
    convert_partition(bundle.test, bundle.manifest, downscale_side, geom_test, data.test_x,
                      data.test_labels, data.test_presence);
    return data;
}

namespace {

inline int reflect(int idx, int n) {
    if (idx < 0) return -idx;
    if (idx >= n) return 2 * n - 2 - idx;
    return idx;
}

} // namespace

void augment_basic(float* x, const ModalityGeom& geom, std::uint64_t seed) {
    if (!geom.is_image) return;
    const int h = geom.h, w = geom.w, c = geom.c;

    if (unit_from_hash(seed, 0) < 0.5) {
        for (int y = 0; y < h; ++y)
            for (int xl = 0, xr = w - 1; xl < xr; ++xl, --xr)
                for (int ch = 0; ch < c; ++ch)
                    std::swap(x[(static_cast<std::size_t>(y) * w + xl) * c + ch],
                              x[(static_cast<std::size_t>(y) * w + xr) * c + ch]);
    }

    constexpr int pad = 4;
    const int dy = static_cast<int>(unit_from_hash(seed, 1) * (2 * pad + 1)) - pad;
    const int dx = static_cast<int>(unit_from_hash(seed, 2) * (2 * pad + 1)) - pad;
    if (dy == 0 && dx == 0) return;

    std::vector<float> shifted(static_cast<std::size_t>(h) * w * c);
    for (int y = 0; y < h; ++y) {
        const int sy = reflect(y + dy, h);
        for (int xx = 0; xx < w; ++xx) {
            const int sx = reflect(xx + dx, w);
            for (int ch = 0; ch < c; ++ch)
                shifted[(static_cast<std::size_t>(y) * w + xx) * c + ch] =
                    x[(static_cast<std::size_t>(sy) * w + sx) * c + ch];
        }
    }
    std::copy(shifted.begin(), shifted.end(), x);
}

} // namespace mmal
