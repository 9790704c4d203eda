#include "mmal/ingest.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace mmal {

namespace {

constexpr char kTensorMagic[8] = {'M', 'M', 'A', 'L', 'T', 'N', 'S', 'R'};

std::uint32_t read_u32_be(std::istream& in) {
    std::uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("idx: truncated header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

template <typename T>
void write_le(std::ostream& out, T v) {
    std::uint8_t b[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    std::uint8_t b[sizeof(T)];
    in.read(reinterpret_cast<char*>(b), sizeof(T));
    if (!in) throw std::runtime_error(std::string("tensor file: truncated ") + what);
    T v{0};
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
    return v;
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    f.seekg(0, std::ios::end);
    const auto len = f.tellg();
    f.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
    f.read(reinterpret_cast<char*>(bytes.data()), len);
    if (!f) throw std::runtime_error("read failed: " + path);
    return bytes;
}

} // namespace

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::Missing: return "missing";
        case DatasetKind::Share: return "share";
        case DatasetKind::Unique: return "unique";
        case DatasetKind::Synergy: return "synergy";
        case DatasetKind::External: return "external";
    }
    throw std::logic_error("unreachable dataset kind");
}

DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "missing") return DatasetKind::Missing;
    if (s == "share") return DatasetKind::Share;
    if (s == "unique") return DatasetKind::Unique;
    if (s == "synergy") return DatasetKind::Synergy;
    if (s == "external") return DatasetKind::External;
    throw std::invalid_argument("unknown dataset kind: " + s);
}

void BundleManifest::validate() const {
    if (n_classes < 2) throw std::invalid_argument("manifest: n_classes must be >= 2");
    if (n_modalities < 1 || n_modalities > 8)
        throw std::invalid_argument("manifest: n_modalities must be in [1,8]");
    if (modalities.size() != static_cast<std::size_t>(n_modalities))
        throw std::invalid_argument("manifest: modality info count mismatch");
}

// ---- IDX ------------------------------------------------------------------

Tensor<std::uint8_t> read_idx(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("idx: cannot open " + path);

    const std::uint32_t magic = read_u32_be(f);
    if ((magic & 0xffff0000u) != 0 || ((magic >> 8) & 0xffu) != 0x08u)
        throw std::runtime_error("idx: bad magic in " + path);
    const std::uint32_t ndim = magic & 0xffu;
    if (ndim == 0 || ndim > 4) throw std::runtime_error("idx: bad magic in " + path);

    std::vector<std::size_t> shape;
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
        const std::uint32_t extent = read_u32_be(f);
        shape.push_back(extent);
        total *= extent;
    }

    Tensor<std::uint8_t> out(shape);
    f.read(reinterpret_cast<char*>(out.data.data()), static_cast<std::streamsize>(total));
    if (static_cast<std::size_t>(f.gcount()) != total)
        throw std::runtime_error("idx: truncated payload in " + path);
    return out;
}

// ---- CIFAR-10 ----------------------------------------------------------------

Cifar10 read_cifar10(const std::vector<std::string>& paths) {
    constexpr std::size_t kRecord = 1 + 3 * 32 * 32;

    std::vector<std::vector<std::uint8_t>> batches;
    std::size_t total = 0;
    for (const std::string& path : paths) {
        std::vector<std::uint8_t> bytes = read_bytes(path);
        if (bytes.size() % kRecord != 0)
            throw std::runtime_error("cifar10: file length not a multiple of record size: " +
                                     path);
        total += bytes.size() / kRecord;
        batches.push_back(std::move(bytes));
    }

    Cifar10 out;
    out.images = Tensor<std::uint8_t>({total, 32, 32, 3});
    out.labels.resize(total);

    std::size_t sample = 0;
    for (const auto& bytes : batches) {
        for (std::size_t off = 0; off < bytes.size(); off += kRecord, ++sample) {
            const std::uint8_t label = bytes[off];
            if (label >= 10) throw std::runtime_error("cifar10: label byte out of range");
            out.labels[sample] = label;
            const std::uint8_t* planes = bytes.data() + off + 1;
            std::uint8_t* dst = out.images.data.data() + sample * 32 * 32 * 3;
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x)
                    for (int c = 0; c < 3; ++c)
                        dst[(y * 32 + x) * 3 + c] = planes[c * 1024 + y * 32 + x];
        }
    }
    return out;
}

// ---- tensor files ----------------------------------------------------------

void write_tensor_file(const std::string& path, const Tensor<std::uint8_t>& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f.write(kTensorMagic, 8);
    write_le<std::uint32_t>(f, 1); // dtype u8
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) write_le<std::uint64_t>(f, d);
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

Tensor<std::uint8_t> read_tensor_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);

    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kTensorMagic, 8) != 0)
        throw std::runtime_error("tensor file: magic mismatch in " + path);

    const std::uint32_t dtype = read_le<std::uint32_t>(f, "dtype");
    if (dtype != 1) throw std::runtime_error("tensor file: unsupported dtype in " + path);
    const std::uint32_t ndim = read_le<std::uint32_t>(f, "ndim");
    if (ndim == 0 || ndim > 8) throw std::runtime_error("tensor file: bad ndim in " + path);

    std::vector<std::size_t> shape;
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
        const auto extent = read_le<std::uint64_t>(f, "dims");
        shape.push_back(static_cast<std::size_t>(extent));
        total *= static_cast<std::size_t>(extent);
    }

    Tensor<std::uint8_t> out(shape);
    f.read(reinterpret_cast<char*>(out.data.data()), static_cast<std::streamsize>(total));
    if (static_cast<std::size_t>(f.gcount()) != total)
        throw std::runtime_error("tensor file: payload/dims inconsistency in " + path);
    return out;
}

// ---- manifest ---------------------------------------------------------------

nlohmann::json manifest_to_json(const BundleManifest& m) {
    nlohmann::json j;
    j["dataset_kind"] = to_string(m.kind);
    j["n_modalities"] = m.n_modalities;
    nlohmann::json mods = nlohmann::json::array();
    for (const ModalityInfo& mi : m.modalities) {
        nlohmann::json mj;
        mj["shape"] = mi.sample_shape;
        mj["dtype"] = mi.dtype;
        mj["is_image"] = mi.is_image;
        mods.push_back(mj);
    }
    j["modalities"] = mods;
    j["n_classes"] = m.n_classes;
    j["label_semantics"] = m.label_semantics;
    j["generator_params"] = m.generator_params;
    j["seed"] = m.seed;
    j["partition_sizes"] = m.partition_sizes;
    j["weak_subset_mask"] = m.weak_subset_mask;
    j["scaled_subsets"] = m.scaled_subsets;
    j["share_with_replacement"] = m.share_with_replacement;
    return j;
}

BundleManifest manifest_from_json(const nlohmann::json& j) {
    BundleManifest m;
    m.kind = dataset_kind_from_string(j.at("dataset_kind").get<std::string>());
    m.n_modalities = j.at("n_modalities").get<int>();
    for (const auto& mj : j.at("modalities")) {
        ModalityInfo mi;
        mi.sample_shape = mj.at("shape").get<std::vector<std::size_t>>();
        mi.dtype = mj.at("dtype").get<std::string>();
        mi.is_image = mj.at("is_image").get<bool>();
        m.modalities.push_back(std::move(mi));
    }
    m.n_classes = j.at("n_classes").get<int>();
    m.label_semantics = j.at("label_semantics").get<std::string>();
    m.generator_params = j.at("generator_params");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.partition_sizes = j.at("partition_sizes").get<std::map<std::string, std::size_t>>();
    m.weak_subset_mask = j.at("weak_subset_mask").get<std::uint32_t>();
    m.scaled_subsets = j.at("scaled_subsets").get<std::vector<std::uint32_t>>();
    m.share_with_replacement = j.at("share_with_replacement").get<bool>();
    m.validate();
    return m;
}

// ---- provenance ----------------------------------------------------------------

namespace {

nlohmann::json spec_to_json(const QuintSpec& s) {
    nlohmann::json j;
    j["shape"] = s.shape_id;
    j["fg_color"] = s.fg_color_id;
    j["fg_texture"] = s.fg_texture_id;
    j["bg_color"] = s.bg_color_id;
    j["bg_texture"] = s.bg_texture_id;
    j["erosion_seed"] = s.erosion_seed;
    j["jitter_seed"] = s.jitter_seed;
    return j;
}

QuintSpec spec_from_json(const nlohmann::json& j) {
    QuintSpec s;
    s.shape_id = j.at("shape").get<int>();
    s.fg_color_id = j.at("fg_color").get<int>();
    s.fg_texture_id = j.at("fg_texture").get<int>();
    s.bg_color_id = j.at("bg_color").get<int>();
    s.bg_texture_id = j.at("bg_texture").get<int>();
    s.erosion_seed = j.at("erosion_seed").get<std::uint64_t>();
    s.jitter_seed = j.at("jitter_seed").get<std::uint64_t>();
    return s;
}

void write_provenance(const std::string& path, const SampleProvenance& p) {
    nlohmann::json j;
    if (!p.quint_specs.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& sample : p.quint_specs) {
            nlohmann::json mods = nlohmann::json::array();
            for (const QuintSpec& s : sample) mods.push_back(spec_to_json(s));
            arr.push_back(mods);
        }
        j["quint_specs"] = arr;
    }
    if (!p.source_rows.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [a, b] : p.source_rows) arr.push_back({a, b});
        j["source_rows"] = arr;
    }
    if (!p.pre_repair_presence.empty()) j["pre_repair_presence"] = p.pre_repair_presence;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << j.dump(2) << '\n';
}

SampleProvenance read_provenance(const std::string& path) {
    SampleProvenance p;
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    f >> j;
    if (j.contains("quint_specs")) {
        for (const auto& sample : j["quint_specs"]) {
            std::vector<QuintSpec> mods;
            for (const auto& sj : sample) mods.push_back(spec_from_json(sj));
            p.quint_specs.push_back(std::move(mods));
        }
    }
    if (j.contains("source_rows")) {
        for (const auto& row : j["source_rows"])
            p.source_rows.push_back({row[0].get<std::uint32_t>(), row[1].get<std::uint32_t>()});
    }
    if (j.contains("pre_repair_presence"))
        p.pre_repair_presence = j["pre_repair_presence"].get<std::vector<std::uint8_t>>();
    return p;
}

void write_partition(const std::string& dir, const std::string& name, const Partition& part,
                     const BundleManifest& manifest) {
    for (int m = 0; m < manifest.n_modalities; ++m)
        write_tensor_file(dir + "/" + name + "_m" + std::to_string(m) + ".tnsr",
                          part.tensors[m]);
    write_bytes(dir + "/" + name + "_labels.bin", part.labels);
    write_bytes(dir + "/" + name + "_presence.bin", part.presence);
    if (!part.provenance.empty())
        write_provenance(dir + "/" + name + "_specs.json", part.provenance);
}

Partition read_partition(const std::string& dir, const std::string& name,
                         const BundleManifest& manifest) {
    Partition part;
    const auto it = manifest.partition_sizes.find(name);
    if (it == manifest.partition_sizes.end())
        throw std::runtime_error("bundle: manifest lacks partition " + name);
    const std::size_t n = it->second;

    for (int m = 0; m < manifest.n_modalities; ++m) {
        Tensor<std::uint8_t> t =
            read_tensor_file(dir + "/" + name + "_m" + std::to_string(m) + ".tnsr");
        if (t.shape.empty() || t.shape[0] != n)
            throw std::runtime_error("bundle: tensor sample count mismatch in " + name);
        std::vector<std::size_t> expect = manifest.modalities[m].sample_shape;
        expect.insert(expect.begin(), n);
        if (t.shape != expect)
            throw std::runtime_error("bundle: tensor shape disagrees with manifest in " + name);
        part.tensors.push_back(std::move(t));
    }

    part.labels = read_bytes(dir + "/" + name + "_labels.bin");
    if (part.labels.size() != n)
        throw std::runtime_error("bundle: label count mismatch in " + name);
    for (std::uint8_t l : part.labels)
        if (l >= manifest.n_classes)
            throw std::runtime_error("bundle: label out of range in " + name);

    part.presence = read_bytes(dir + "/" + name + "_presence.bin");
    if (part.presence.size() != n)
        throw std::runtime_error("bundle: presence count mismatch in " + name);
    const std::uint8_t valid = static_cast<std::uint8_t>((1u << manifest.n_modalities) - 1u);
    for (std::uint8_t p : part.presence) {
        if ((p & ~valid) != 0)
            throw std::runtime_error("bundle: presence mask has bits beyond n_modalities");
        if ((p & valid) == 0)
            throw std::runtime_error("bundle: sample with no present modality in " + name);
    }

    const std::string specs_path = dir + "/" + name + "_specs.json";
    if (fs::exists(specs_path)) part.provenance = read_provenance(specs_path);
    return part;
}

} // namespace

void write_bundle(const DatasetBundle& bundle, const std::string& dir) {
    bundle.manifest.validate();
    fs::create_directories(dir);
    {
        std::ofstream f(dir + "/manifest.json", std::ios::binary);
        if (!f) throw std::runtime_error("cannot open for write: " + dir + "/manifest.json");
        f << manifest_to_json(bundle.manifest).dump(2) << '\n';
    }
    write_partition(dir, "train", bundle.train, bundle.manifest);
    write_partition(dir, "test", bundle.test, bundle.manifest);
}

DatasetBundle read_bundle(const std::string& dir) {
    std::ifstream f(dir + "/manifest.json", std::ios::binary);
    if (!f) throw std::runtime_error("bundle: cannot open " + dir + "/manifest.json");
    nlohmann::json j;
    f >> j;

    DatasetBundle bundle;
    bundle.manifest = manifest_from_json(j);
    bundle.train = read_partition(dir, "train", bundle.manifest);
    bundle.test = read_partition(dir, "test", bundle.manifest);
    return bundle;
}

} // namespace mmal
