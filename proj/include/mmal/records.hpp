#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace mmal {

// One evaluation point of a run. iteration 0 is the model trained on the
// initial budget; iteration i >= 1 follows the i-th acquisition. `acquired`
// holds the indices moved to the labeled set right after this evaluation
// (empty on the final iteration).
struct IterationRecord {
    int iteration = 0;
    std::size_t labeled_size = 0;
    std::map<std::uint32_t, double> subset_bacc; // subset bitmask -> balanced accuracy
    std::vector<std::uint32_t> acquired;
};

struct RunRecord {
    std::string run_id;
    std::string dataset;  // bundle label
    std::string dataset_kind;
    std::string regime;   // low | mid | high | custom
    std::string strategy;
    std::uint64_t seed = 0;
    bool moddrop = false;

    double chosen_lr = 0.0;
    double chosen_wd = 0.0;
    std::string chosen_aug;

    std::vector<IterationRecord> iterations;

    // evaluation metadata copied from the bundle manifest
    int n_modalities = 0;
    std::uint32_t weak_subset_mask = 0;
    std::vector<std::uint32_t> scaled_subsets;

    // wall clock per phase; reported on stdout, never serialized so output
    // files stay byte-stable across reruns
    double secs_grid = 0.0;
    double secs_train = 0.0;
    double secs_eval = 0.0;
    double secs_query = 0.0;

    bool failed = false;
    std::string failure;
};

nlohmann::json iteration_to_json(const IterationRecord& rec);
IterationRecord iteration_from_json(const nlohmann::json& j);

// Everything except the per-iteration list; stored as config.json.
nlohmann::json run_header_to_json(const RunRecord& rec);
void run_header_from_json(const nlohmann::json& j, RunRecord& rec);

// Reads config.json + record.jsonl (+ failed.json if present) from a run dir.
RunRecord load_run_dir(const std::string& dir);

} // namespace mmal
