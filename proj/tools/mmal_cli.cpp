// mmal: procedural bimodal benchmark datasets, an active-learning experiment
// runner, and AULC reporting. Subcommands: generate | run | aggregate | report.
//
// Exit codes: 0 ok, 2 usage error, 3 missing or invalid data, 4 at least one
// run failed (other runs still written).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmal/engine.hpp"
#include "mmal/eval.hpp"
#include "mmal/ingest.hpp"
#include "mmal/loader.hpp"
#include "mmal/pitfalls.hpp"
#include "mmal/png.hpp"
#include "mmal/report.hpp"

namespace fs = std::filesystem;
using namespace mmal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitRunFailed = 4;

std::string resolve_data_path(const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute()) return path;
    if (const char* root = std::getenv("MMAL_DATA_DIR"); root && *root) {
        if (!fs::exists(path) && fs::exists(fs::path(root) / path))
            return (fs::path(root) / path).string();
        if (!fs::exists(path)) return (fs::path(root) / path).string();
    }
    return path;
}

// '*' and '?' wildcards within the final path segment.
bool wildcard_match(const std::string& pattern, const std::string& text) {
    std::size_t p = 0, t = 0, star = std::string::npos, mark = 0;
    while (t < text.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
            ++p, ++t;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = t;
        } else if (star != std::string::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

std::vector<std::string> find_run_dirs(const std::string& runs_arg) {
    std::vector<std::string> dirs;
    const fs::path arg(runs_arg);
    if (runs_arg.find('*') == std::string::npos && runs_arg.find('?') == std::string::npos) {
        if (fs::exists(arg / "config.json")) {
            dirs.push_back(arg.string());
        } else if (fs::is_directory(arg)) {
            for (const auto& entry : fs::directory_iterator(arg))
                if (entry.is_directory() && fs::exists(entry.path() / "config.json"))
                    dirs.push_back(entry.path().string());
        }
    } else {
        const fs::path parent = arg.parent_path().empty() ? "." : arg.parent_path();
        const std::string pattern = arg.filename().string();
        if (fs::is_directory(parent)) {
            for (const auto& entry : fs::directory_iterator(parent)) {
                if (!entry.is_directory()) continue;
                if (!wildcard_match(pattern, entry.path().filename().string())) continue;
                if (fs::exists(entry.path() / "config.json"))
                    dirs.push_back(entry.path().string());
            }
        }
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

std::vector<RunRecord> load_runs_or_exit(const std::string& runs_arg) {
    const std::vector<std::string> dirs = find_run_dirs(runs_arg);
    if (dirs.empty()) {
        std::cerr << "error: no run directories match '" << runs_arg << "'\n";
        std::exit(kExitData);
    }
    std::vector<RunRecord> runs;
    for (const std::string& dir : dirs) {
        try {
            runs.push_back(load_run_dir(dir));
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            std::exit(kExitData);
        }
    }
    return runs;
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
    std::string kind;
    std::string out;
    std::uint64_t seed = 1;
    std::size_t n_train = 2000;
    std::size_t n_test = 1000;
    int canvas = 64;
    double erosion_frequency = 4.0;
    int erosion_octaves = 2;
    double erosion_threshold = 0.25;
    std::vector<double> p_missing = {0.9, 0.1};
    std::string mnist_dir;
    std::string cifar_dir;
    std::uint64_t bijection_seed = 0; // 0 = identity mapping
    int export_png = 0;
};

int cmd_generate(const GenerateArgs& args) {
    GenConfig gen;
    gen.canvas = args.canvas;
    gen.seed = args.seed;
    gen.erosion.frequency = args.erosion_frequency;
    gen.erosion.octaves = args.erosion_octaves;
    gen.erosion.threshold = args.erosion_threshold;

    const BuildSizes sizes{args.n_train, args.n_test};
    DatasetBundle bundle;
    try {
        if (args.kind == "missing") {
            MissingnessPolicy policy;
            policy.p_missing = args.p_missing;
            bundle = build_missing(gen, policy, sizes, args.seed);
        } else if (args.kind == "unique") {
            bundle = build_unique(gen, sizes, args.seed);
        } else if (args.kind == "synergy") {
            bundle = build_synergy(gen, sizes, args.seed);
        } else if (args.kind == "share") {
            ShareSources sources;
            const fs::path mnist(resolve_data_path(args.mnist_dir));
            const fs::path cifar(resolve_data_path(args.cifar_dir));
            sources.mnist_train_images = read_idx((mnist / "train-images-idx3-ubyte").string());
            Tensor<std::uint8_t> tl = read_idx((mnist / "train-labels-idx1-ubyte").string());
            sources.mnist_train_labels.assign(tl.data.begin(), tl.data.end());
            sources.mnist_test_images = read_idx((mnist / "t10k-images-idx3-ubyte").string());
            Tensor<std::uint8_t> sl = read_idx((mnist / "t10k-labels-idx1-ubyte").string());
            sources.mnist_test_labels.assign(sl.data.begin(), sl.data.end());
            std::vector<std::string> train_batches;
            for (int b = 1; b <= 5; ++b)
                train_batches.push_back((cifar / ("data_batch_" + std::to_string(b) + ".bin"))
                                            .string());
            sources.cifar_train = read_cifar10(train_batches);
            sources.cifar_test = read_cifar10({(cifar / "test_batch.bin").string()});
            const ClassBijection bijection = args.bijection_seed
                                                 ? ClassBijection::shuffled(args.bijection_seed)
                                                 : ClassBijection::identity();
            bundle = build_share(sources, bijection, sizes, args.seed);
        } else {
            std::cerr << "error: unknown dataset kind '" << args.kind << "'\n";
            return kExitUsage;
        }

        const std::string out = resolve_data_path(args.out);
        write_bundle(bundle, out);

        if (args.export_png > 0) {
            const std::string preview = out + "/preview";
            fs::create_directories(preview);
            const int n = std::min<std::size_t>(args.export_png, bundle.train.size());
            for (int i = 0; i < n; ++i) {
                for (int m = 0; m < bundle.manifest.n_modalities; ++m) {
                    const auto& info = bundle.manifest.modalities[m];
                    if (info.sample_shape.size() != 3 || info.sample_shape[2] != 3) continue;
                    const int side = static_cast<int>(info.sample_shape[0]);
                    const std::size_t dim = info.sample_elems();
                    write_png_rgb8(preview + "/train_" + std::to_string(i) + "_m" +
                                       std::to_string(m) + ".png",
                                   bundle.train.tensors[m].data.data() + i * dim, side, side);
                }
            }
        }

        std::cout << manifest_to_json(bundle.manifest).dump(2) << '\n';
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
}

// ---- run ----------------------------------------------------------------------

struct RunArgs {
    std::string config_path;
    std::vector<std::string> datasets;
    std::vector<std::string> regimes;
    std::vector<std::string> strategies;
    std::vector<std::uint64_t> seeds;
    bool moddrop = false;
    bool desk = false;
    std::string out = "runs";
    int jobs = 1;
    int epochs = 0;
    int downscale = -2;
    int mc_passes = 10;
};

void check_known_keys(const nlohmann::json& j, const std::set<std::string>& known,
                      const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (known.find(key) == known.end())
            throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
}

void apply_config_file(const std::string& path, RunArgs& args, RunConfig& proto) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("config: cannot open " + path);
    nlohmann::json j;
    f >> j;

    check_known_keys(j, {"datasets", "regimes", "strategies", "seeds", "moddrop", "desk",
                         "output_dir", "jobs", "recipe", "model", "custom_regime", "mc_passes",
                         "downscale", "pool_cap"},
                     "top level");

    if (j.contains("datasets")) args.datasets = j["datasets"].get<std::vector<std::string>>();
    if (j.contains("regimes")) args.regimes = j["regimes"].get<std::vector<std::string>>();
    if (j.contains("strategies"))
        args.strategies = j["strategies"].get<std::vector<std::string>>();
    if (j.contains("seeds")) args.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("moddrop")) args.moddrop = j["moddrop"].get<bool>();
    if (j.contains("desk")) args.desk = j["desk"].get<bool>();
    if (j.contains("output_dir")) args.out = j["output_dir"].get<std::string>();
    if (j.contains("jobs")) args.jobs = j["jobs"].get<int>();
    if (j.contains("mc_passes")) proto.mc_passes = j["mc_passes"].get<int>();
    if (j.contains("downscale")) proto.downscale = j["downscale"].get<int>();
    if (j.contains("pool_cap")) proto.pool_cap_override = j["pool_cap"].get<std::size_t>();

    if (j.contains("recipe")) {
        const auto& r = j["recipe"];
        check_known_keys(r, {"epochs", "batch_size", "warmup_epochs"}, "recipe");
        if (r.contains("epochs")) proto.epochs = r["epochs"].get<int>();
        if (r.contains("batch_size")) proto.batch_size = r["batch_size"].get<int>();
        if (r.contains("warmup_epochs")) proto.warmup_epochs = r["warmup_epochs"].get<int>();
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        check_known_keys(m, {"encoder_hidden", "projection_dim", "fusion_hidden", "fused_dim",
                             "dropout_p", "moddrop_p"},
                         "model");
        if (m.contains("encoder_hidden"))
            proto.model.encoder_hidden = m["encoder_hidden"].get<std::size_t>();
        if (m.contains("projection_dim"))
            proto.model.projection_dim = m["projection_dim"].get<std::size_t>();
        if (m.contains("fusion_hidden"))
            proto.model.fusion_hidden = m["fusion_hidden"].get<std::size_t>();
        if (m.contains("fused_dim")) proto.model.fused_dim = m["fused_dim"].get<std::size_t>();
        if (m.contains("dropout_p")) proto.model.dropout_p = m["dropout_p"].get<double>();
        if (m.contains("moddrop_p")) proto.model.moddrop_p = m["moddrop_p"].get<double>();
    }
    if (j.contains("custom_regime")) {
        const auto& c = j["custom_regime"];
        check_known_keys(c, {"initial_budget", "val_size", "acq_size", "iterations"},
                         "custom_regime");
        proto.custom.initial_budget = c.at("initial_budget").get<std::size_t>();
        proto.custom.val_size = c.at("val_size").get<std::size_t>();
        proto.custom.acq_size = c.at("acq_size").get<std::size_t>();
        proto.custom.iterations = c.at("iterations").get<int>();
    }
}

int cmd_run(RunArgs args) {
    RunConfig proto;
    try {
        if (!args.config_path.empty()) apply_config_file(args.config_path, args, proto);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    if (args.datasets.empty()) {
        std::cerr << "error: no datasets given (flag --dataset or config 'datasets')\n";
        return kExitUsage;
    }
    if (args.regimes.empty()) args.regimes = {"mid"};
    if (args.strategies.empty()) args.strategies = {"random"};
    if (args.seeds.empty()) args.seeds = {1, 2, 3};
    if (args.epochs > 0) proto.epochs = args.epochs;
    if (args.downscale != -2) proto.downscale = args.downscale;
    proto.mc_passes = args.mc_passes;
    proto.moddrop = args.moddrop;
    proto.desk_scale = args.desk;

    for (const std::string& s : args.strategies) {
        try {
            strategy_by_name(s);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitUsage;
        }
    }

    std::vector<RunConfig> configs;
    for (const std::string& dataset : args.datasets)
        for (const std::string& regime : args.regimes)
            for (const std::string& strategy : args.strategies)
                for (std::uint64_t seed : args.seeds) {
                    RunConfig cfg = proto;
                    cfg.dataset_path = resolve_data_path(dataset);
                    cfg.regime = regime;
                    cfg.strategy = strategy;
                    cfg.seed = seed;
                    configs.push_back(std::move(cfg));
                }

    try {
        MatrixResult result = run_matrix(configs, args.jobs, args.out,
                                         [](const std::string& line) {
                                             std::cout << line << '\n';
                                         });
        if (result.failures > 0) {
            std::cerr << result.failures << " run(s) failed\n";
            return kExitRunFailed;
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
}

// ---- aggregate / report ----------------------------------------------------------

int cmd_aggregate(const std::string& runs_arg, const std::string& out_dir) {
    const std::vector<RunRecord> runs = load_runs_or_exit(runs_arg);
    fs::create_directories(out_dir);

    const std::vector<AulcCell> cells = aggregate_runs(runs);
    write_aulc_csv(out_dir + "/aulc.csv", cells);

    std::map<std::string, std::uint32_t> weak_subsets;
    for (const RunRecord& rec : runs)
        if (!rec.failed && rec.weak_subset_mask) weak_subsets[rec.dataset] = rec.weak_subset_mask;
    if (!weak_subsets.empty()) {
        try {
            write_rank_csv(out_dir + "/ranks.csv", rank_summary(cells, weak_subsets));
        } catch (const std::exception& e) {
            std::cerr << "warning: rank table skipped: " << e.what() << '\n';
        }
    }
    std::cout << "wrote " << out_dir << "/aulc.csv (" << cells.size() << " cells)\n";
    return kExitOk;
}

int cmd_report(const std::string& runs_arg, const std::string& out_dir) {
    const std::vector<RunRecord> runs = load_runs_or_exit(runs_arg);
    fs::create_directories(out_dir);
    write_curves_csv(out_dir + "/curves.csv", runs);
    const std::vector<std::string> files = write_report_svgs(out_dir, runs);
    for (const std::string& f : files) std::cout << "wrote " << f << '\n';
    std::cout << "wrote " << out_dir << "/curves.csv\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multimodal active-learning benchmark harness"};
    app.require_subcommand(1);

    // generate
    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand(
        "generate", "Build a benchmark dataset bundle (missing|share|unique|synergy)");
    generate->add_option("kind", gen.kind, "Dataset kind: missing|share|unique|synergy")
        ->required();
    generate->add_option("--out", gen.out, "Output bundle directory")->required();
    generate->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    generate->add_option("--n-train", gen.n_train, "Train partition size")
        ->capture_default_str();
    generate->add_option("--n-test", gen.n_test, "Test partition size")->capture_default_str();
    generate->add_option("--canvas", gen.canvas, "Canvas side in pixels")->capture_default_str();
    generate->add_option("--erosion-frequency", gen.erosion_frequency,
                         "Perlin cycles per canvas")
        ->capture_default_str();
    generate->add_option("--erosion-octaves", gen.erosion_octaves, "Perlin octaves")
        ->capture_default_str();
    generate->add_option("--erosion-threshold", gen.erosion_threshold,
                         "Erosion threshold tau in (-1,1)")
        ->capture_default_str();
    generate->add_option("--p-missing", gen.p_missing,
                         "Per-modality missing probabilities (missing kind)")
        ->expected(2);
    generate->add_option("--mnist-dir", gen.mnist_dir, "Directory with MNIST IDX files (share)");
    generate->add_option("--cifar-dir", gen.cifar_dir,
                         "Directory with CIFAR-10 binary batches (share)");
    generate->add_option("--bijection-seed", gen.bijection_seed,
                         "Seed for the CIFAR->MNIST class bijection; 0 = identity")
        ->capture_default_str();
    generate->add_option("--export-png", gen.export_png,
                         "Also write the first N train samples as PNGs")
        ->capture_default_str();

    // run
    RunArgs run;
    CLI::App* runc = app.add_subcommand("run", "Execute the active-learning run matrix");
    runc->add_option("--config", run.config_path, "JSON config file (unknown keys are errors)");
    runc->add_option("--dataset", run.datasets, "Bundle directory (repeatable)");
    runc->add_option("--regime", run.regimes, "Label regime: low|mid|high|custom (repeatable)");
    runc->add_option("--strategy", run.strategies,
                     "Query strategy: random|entropy|bald|kcg|badge|bmmal-interp (repeatable)");
    runc->add_option("--seed", run.seeds, "Run seed (repeatable; default 1 2 3)");
    runc->add_flag("--moddrop", run.moddrop, "Enable modality dropout during training");
    runc->add_flag("--desk", run.desk, "Desk-scale preset: budgets/10, 30 epochs, 16x16 inputs");
    runc->add_option("--out", run.out, "Output directory for run records")
        ->capture_default_str();
    runc->add_option("--jobs", run.jobs, "Parallel runs (output is jobs-independent)")
        ->capture_default_str();
    runc->add_option("--epochs", run.epochs, "Override training epochs");
    runc->add_option("--downscale", run.downscale, "Override input downscale side (0 = native)");
    runc->add_option("--mc-passes", run.mc_passes, "MC-dropout passes for BALD")
        ->capture_default_str();

    // aggregate
    std::string agg_runs, agg_out = "tables";
    CLI::App* agg = app.add_subcommand("aggregate", "Fold run records into AULC and rank CSVs");
    agg->add_option("--runs", agg_runs, "Run directory, parent directory, or glob")->required();
    agg->add_option("--out", agg_out, "Output directory")->capture_default_str();

    // report
    std::string rep_runs, rep_out = "report";
    CLI::App* rep = app.add_subcommand("report", "Render SVG learning curves and curve CSVs");
    rep->add_option("--runs", rep_runs, "Run directory, parent directory, or glob")->required();
    rep->add_option("--out", rep_out, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (generate->parsed()) {
        if (gen.kind == "share" && (gen.mnist_dir.empty() || gen.cifar_dir.empty())) {
            std::cerr << "error: 'generate share' requires --mnist-dir and --cifar-dir\n"
                      << generate->help();
            return kExitUsage;
        }
        return cmd_generate(gen);
    }
    if (runc->parsed()) return cmd_run(run);
    if (agg->parsed()) return cmd_aggregate(agg_runs, agg_out);
    if (rep->parsed()) return cmd_report(rep_runs, rep_out);
    return kExitUsage;
}
