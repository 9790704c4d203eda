#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mmal/metrics.hpp"
#include "mmal/model.hpp"
#include "mmal/records.hpp"

namespace mmal {

// Balanced accuracy per AL iteration for one modality subset. acc[0] is the
// fixed 0 anchor; acc[i] for i >= 1 is the accuracy after the i-th
// acquisition, so acc has N+1 entries for N iterations.
struct LearningCurve {
    std::uint32_t subset_mask = 0;
    std::vector<double> acc;

    int iterations() const { return static_cast<int>(acc.size()) - 1; }
    void validate() const;
};

// Trapezoidal area under the curve with unit spacing; bounded by [0, N].
double aulc(const LearningCurve& curve);

// Exhaustive missing-modality evaluation: one balanced accuracy per nonempty
// modality subset of the (modality-complete) test partition.
template <typename T>
std::map<std::uint32_t, double> subset_eval(const MultimodalNet<T>& net,
                                            const LoadedDataset& data, int batch_size) {
    const int m_count = static_cast<int>(data.geom.size());
    std::vector<std::uint32_t> rows(data.test_size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);

    std::map<std::uint32_t, double> result;
    for (std::uint32_t mask = 1; mask < (1u << m_count); ++mask) {
        std::vector<int> preds = predict_labels(net, data, Part::Test,
                                                std::span<const std::uint32_t>(rows), batch_size,
                                                mask);
        result[mask] = balanced_accuracy(preds, data.test_labels, data.manifest.n_classes);
    }
    return result;
}

// One aggregated table cell: mean +/- sample std of per-run AULC over seeds.
struct AulcCell {
    std::string dataset;
    std::string regime;
    std::string strategy;
    std::uint32_t subset = 0;
    int n = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double scale = 1.0; // 10 for partially predictive subsets

    double display_mean() const { return mean * scale; }
    double display_std() const { return stddev * scale; }
};

// Extracts a subset's learning curve from a run record (ACC(0) = 0, then one
// point per acquisition; the initial-budget evaluation anchors plots only).
LearningCurve curve_from_record(const RunRecord& rec, std::uint32_t subset);

double run_aulc(const RunRecord& rec, std::uint32_t subset);

std::vector<AulcCell> aggregate_runs(const std::vector<RunRecord>& runs);

// Per-regime rank sums: within each (dataset, regime) strategies are ranked
// by descending AULC of the selected subset (rank 1 = best; ties share the
// mean rank), then summed across datasets. Lower is better.
struct RankTable {
    std::string regime;
    std::vector<std::pair<std::string, double>> rank_sums; // sorted by strategy name
};

std::vector<RankTable> rank_summary(const std::vector<AulcCell>& cells,
                                    const std::map<std::string, std::uint32_t>& subset_by_dataset);

// Pearson chi-square independence test p-value for a contingency table.
double chi_square_independence_p(const std::vector<std::vector<std::size_t>>& table);

// Regularized upper incomplete gamma Q(a, x); chi-square survival function is
// Q(df/2, x/2).
double gamma_q(double a, double x);

} // namespace mmal
