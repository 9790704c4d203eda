#pragma once

#include <string>
#include <vector>

#include "mmal/eval.hpp"
#include "mmal/records.hpp"

namespace mmal {

// RFC-4180 quoting: fields with commas, quotes or newlines are wrapped and
// inner quotes doubled.
std::string csv_escape(const std::string& field);

// "A", "B", "AB", ... from a subset bitmask.
std::string subset_label(std::uint32_t mask);

void write_aulc_csv(const std::string& path, const std::vector<AulcCell>& cells);
void write_rank_csv(const std::string& path, const std::vector<RankTable>& tables);

// Per-iteration mean/std of balanced accuracy per (dataset, regime, strategy,
// subset), aggregated over seeds.
void write_curves_csv(const std::string& path, const std::vector<RunRecord>& runs);

// One SVG per (dataset, regime): a polyline per (strategy, subset) of mean
// accuracy per iteration with a translucent +/- std band and a legend.
// Returns the files written.
std::vector<std::string> write_report_svgs(const std::string& out_dir,
                                           const std::vector<RunRecord>& runs);

} // namespace mmal
