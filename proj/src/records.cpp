#include "mmal/records.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace mmal {

nlohmann::json iteration_to_json(const IterationRecord& rec) {
    nlohmann::json j;
    j["iteration"] = rec.iteration;
    j["labeled_size"] = rec.labeled_size;
    nlohmann::json subsets = nlohmann::json::object();
    for (const auto& [mask, bacc] : rec.subset_bacc) subsets[std::to_string(mask)] = bacc;
    j["subsets"] = subsets;
    j["acquired"] = rec.acquired;
    return j;
}

IterationRecord iteration_from_json(const nlohmann::json& j) {
    IterationRecord rec;
    rec.iteration = j.at("iteration").get<int>();
    rec.labeled_size = j.at("labeled_size").get<std::size_t>();
    for (const auto& [key, value] : j.at("subsets").items())
        rec.subset_bacc[static_cast<std::uint32_t>(std::stoul(key))] = value.get<double>();
    rec.acquired = j.at("acquired").get<std::vector<std::uint32_t>>();
    return rec;
}

nlohmann::json run_header_to_json(const RunRecord& rec) {
    nlohmann::json j;
    j["run_id"] = rec.run_id;
    j["dataset"] = rec.dataset;
    j["dataset_kind"] = rec.dataset_kind;
    j["regime"] = rec.regime;
    j["strategy"] = rec.strategy;
    j["seed"] = rec.seed;
    j["moddrop"] = rec.moddrop;
    j["chosen_lr"] = rec.chosen_lr;
    j["chosen_wd"] = rec.chosen_wd;
    j["chosen_aug"] = rec.chosen_aug;
    j["n_modalities"] = rec.n_modalities;
    j["weak_subset_mask"] = rec.weak_subset_mask;
    j["scaled_subsets"] = rec.scaled_subsets;
    return j;
}

void run_header_from_json(const nlohmann::json& j, RunRecord& rec) {
    rec.run_id = j.at("run_id").get<std::string>();
    rec.dataset = j.at("dataset").get<std::string>();
    rec.dataset_kind = j.at("dataset_kind").get<std::string>();
    rec.regime = j.at("regime").get<std::string>();
    rec.strategy = j.at("strategy").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.moddrop = j.at("moddrop").get<bool>();
    rec.chosen_lr = j.at("chosen_lr").get<double>();
    rec.chosen_wd = j.at("chosen_wd").get<double>();
    rec.chosen_aug = j.at("chosen_aug").get<std::string>();
    rec.n_modalities = j.at("n_modalities").get<int>();
    rec.weak_subset_mask = j.at("weak_subset_mask").get<std::uint32_t>();
    rec.scaled_subsets = j.at("scaled_subsets").get<std::vector<std::uint32_t>>();
}

RunRecord load_run_dir(const std::string& dir) {
    RunRecord rec;
    {
        std::ifstream f(dir + "/config.json");
        if (!f) throw std::runtime_error("run dir: cannot open " + dir + "/config.json");
        nlohmann::json j;
        f >> j;
        run_header_from_json(j, rec);
    }
    {
        std::ifstream f(dir + "/record.jsonl");
        if (!f) throw std::runtime_error("run dir: cannot open " + dir + "/record.jsonl");
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            rec.iterations.push_back(iteration_from_json(nlohmann::json::parse(line)));
        }
    }
    const std::string failed = dir + "/failed.json";
    if (fs::exists(failed)) {
        std::ifstream f(failed);
        nlohmann::json j;
        f >> j;
        rec.failed = true;
        rec.failure = j.value("error", "unknown");
    }
    return rec;
}

} // namespace mmal
