#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmal/eval.hpp"
#include "mmal/loader.hpp"
#include "mmal/model.hpp"
#include "mmal/query.hpp"
#include "mmal/records.hpp"

namespace mmal {

struct RegimeSpec {
    std::size_t initial_budget = 0;
    std::size_t val_size = 0;
    std::size_t acq_size = 0;
    int iterations = 10;
};

// Label-regime table: initial budget / validation size / acquisition size,
// ten iterations everywhere.
RegimeSpec regime_defaults(DatasetKind kind, const std::string& regime);

struct RunConfig {
    std::string dataset_path;
    std::string dataset_label; // defaults to the bundle directory name
    std::string regime = "mid"; // low | mid | high | custom
    RegimeSpec custom{};
    std::string strategy = "random";
    std::uint64_t seed = 1;
    bool moddrop = false;

    // Desk-scale preset: budgets/validation divided by 10, 30 epochs, 16x16
    // inputs, unlabeled pool capped at 5000.
    bool desk_scale = false;

    // Overrides; 0 / -1 pick the defaults.
    int epochs = 0;
    int batch_size = 0;
    int warmup_epochs = -1;
    int downscale = -2; // -2 auto (desk 16, else native); -1/0 native
    int mc_passes = 10;
    std::size_t pool_cap_override = 0;

    HyperGrid grid;
    ModelConfig model; // input_dims and n_classes are filled from the bundle

    int fail_at_iteration = -1; // test hook: injects a non-finite loss
};

struct ResolvedRun {
    RegimeSpec regime;
    TrainRecipe recipe;
    int downscale = 0; // 0 = native
    std::size_t pool_cap = 0;
    int mc_passes = 10;
};

std::string run_id(const RunConfig& cfg);
ResolvedRun resolve_run(const RunConfig& cfg, DatasetKind kind);

// Lazily materialized model outputs over the pool, shared by the built-in
// strategies and available to plug-ins.
class StrategyContext {
  public:
    StrategyContext(const MultimodalNet<float>& net, const LoadedDataset& data,
                    const PoolState& pool, int batch_size, int mc_passes);

    const std::vector<std::uint32_t>& pool_ids() const { return pool_.unlabeled; }
    const std::vector<std::uint32_t>& labeled_ids() const { return pool_.labeled; }
    int mc_pass_count() const { return mc_passes_; }

    const Tensor<double>& probs();
    const Tensor<double>& mc_probs(Rng& rng);
    const Tensor<float>& pool_features();
    const Tensor<float>& labeled_features();
    const Tensor<float>& pool_head_embeddings();
    const std::vector<Tensor<float>>& pool_blocks();
    const std::vector<Tensor<float>>& labeled_blocks();

  private:
    void ensure_pool_forward();
    void ensure_labeled_forward();

    const MultimodalNet<float>& net_;
    const LoadedDataset& data_;
    const PoolState& pool_;
    int batch_size_;
    int mc_passes_;

    std::optional<Tensor<double>> probs_;
    std::optional<Tensor<double>> mc_probs_;
    std::optional<Tensor<float>> pool_fused_;
    std::optional<Tensor<float>> labeled_fused_;
    std::optional<Tensor<float>> pool_head_;
    std::optional<std::vector<Tensor<float>>> pool_blocks_;
    std::optional<std::vector<Tensor<float>>> labeled_blocks_;
};

using StrategyFn =
    std::function<Acquisition(StrategyContext& ctx, std::size_t budget, Rng& rng)>;

// Built-ins: random | entropy | bald | kcg | badge | bmmal-interp. Plug-ins
// may be registered under new names before running.
void register_strategy(const std::string& name, StrategyFn fn);
std::vector<std::string> strategy_names();
const StrategyFn& strategy_by_name(const std::string& name);

using ProgressFn = std::function<void(const std::string& line)>;

// Runs the full protocol for one configuration and persists
// runs_dir/<run_id>/{config.json, record.jsonl} incrementally. Throws on
// failure (including injected or genuine non-finite losses).
RunRecord run_experiment(const RunConfig& cfg, const LoadedDataset& data,
                         const std::string& runs_dir, const ProgressFn& progress = nullptr);

struct MatrixResult {
    std::vector<RunRecord> records;
    int failures = 0;
};

// Executes independent runs, optionally across worker threads. A failed run
// leaves failed.json in its directory and does not disturb the others.
MatrixResult run_matrix(const std::vector<RunConfig>& configs, int jobs,
                        const std::string& runs_dir, const ProgressFn& progress = nullptr);

} // namespace mmal
