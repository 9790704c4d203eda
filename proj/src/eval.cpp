#include "mmal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace mmal {

void LearningCurve::validate() const {
    if (acc.size() < 2) throw std::invalid_argument("curve: needs at least one iteration");
    if (acc[0] != 0.0) throw std::invalid_argument("curve: acc[0] must be 0");
    for (double a : acc)
        if (a < 0.0 || a > 1.0) throw std::invalid_argument("curve: accuracy outside [0,1]");
}

double aulc(const LearningCurve& curve) {
    curve.validate();
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < curve.acc.size(); ++i)
        area += 0.5 * (curve.acc[i] + curve.acc[i + 1]);
    return area;
}

LearningCurve curve_from_record(const RunRecord& rec, std::uint32_t subset) {
    if (rec.iterations.size() < 2)
        throw std::invalid_argument("record: needs the initial evaluation plus >= 1 iteration");
    LearningCurve curve;
    curve.subset_mask = subset;
    curve.acc.push_back(0.0);
    for (std::size_t i = 1; i < rec.iterations.size(); ++i) {
        const auto& sub = rec.iterations[i].subset_bacc;
        const auto it = sub.find(subset);
        if (it == sub.end()) throw std::invalid_argument("record: subset missing from iteration");
        curve.acc.push_back(it->second);
    }
    return curve;
}

double run_aulc(const RunRecord& rec, std::uint32_t subset) {
    return aulc(curve_from_record(rec, subset));
}

std::vector<AulcCell> aggregate_runs(const std::vector<RunRecord>& runs) {
    std::map<std::tuple<std::string, std::string, std::string, std::uint32_t>,
             std::vector<double>>
        values;
    std::map<std::tuple<std::string, std::string, std::string, std::uint32_t>, double> scales;

    for (const RunRecord& rec : runs) {
        if (rec.failed) continue;
        const std::uint32_t all = (1u << rec.n_modalities) - 1u;
        for (std::uint32_t mask = 1; mask <= all; ++mask) {
            if (rec.iterations.empty() ||
                rec.iterations.front().subset_bacc.find(mask) ==
                    rec.iterations.front().subset_bacc.end())
                continue;
            const auto key = std::make_tuple(rec.dataset, rec.regime, rec.strategy, mask);
            values[key].push_back(run_aulc(rec, mask));
            const bool scaled = std::find(rec.scaled_subsets.begin(), rec.scaled_subsets.end(),
                                          mask) != rec.scaled_subsets.end();
            scales[key] = scaled ? 10.0 : 1.0;
        }
    }

    std::vector<AulcCell> cells;
    for (const auto& [key, vals] : values) {
        AulcCell cell;
        cell.dataset = std::get<0>(key);
        cell.regime = std::get<1>(key);
        cell.strategy = std::get<2>(key);
        cell.subset = std::get<3>(key);
        cell.n = static_cast<int>(vals.size());
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        cell.mean = mean;
        if (vals.size() > 1) {
            double ss = 0.0;
            for (double v : vals) ss += (v - mean) * (v - mean);
            cell.stddev = std::sqrt(ss / static_cast<double>(vals.size() - 1));
        }
        cell.scale = scales[key];
        cells.push_back(std::move(cell));
    }
    return cells;
}

std::vector<RankTable> rank_summary(
    const std::vector<AulcCell>& cells,
    const std::map<std::string, std::uint32_t>& subset_by_dataset) {
    // regime -> dataset -> strategy -> mean AULC on the selected subset
    std::map<std::string, std::map<std::string, std::map<std::string, double>>> table;
    std::set<std::string> all_strategies;
    for (const AulcCell& cell : cells) {
        const auto it = subset_by_dataset.find(cell.dataset);
        if (it == subset_by_dataset.end() || it->second != cell.subset) continue;
        table[cell.regime][cell.dataset][cell.strategy] = cell.mean;
        all_strategies.insert(cell.strategy);
    }
    if (table.empty()) throw std::invalid_argument("rank_summary: no matching cells");

    std::vector<RankTable> out;
    for (const auto& [regime, datasets] : table) {
        std::map<std::string, double> sums;
        for (const auto& [dataset, scores] : datasets) {
            for (const std::string& s : all_strategies)
                if (scores.find(s) == scores.end())
                    throw std::invalid_argument("rank_summary: strategy " + s +
                                                " missing for dataset " + dataset);

            // descending AULC; ties share the mean of the ranks they span
            std::vector<std::pair<double, std::string>> order;
            for (const auto& [strategy, score] : scores) order.emplace_back(score, strategy);
            std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            std::size_t i = 0;
            while (i < order.size()) {
                std::size_t j = i;
                while (j + 1 < order.size() && order[j + 1].first == order[i].first) ++j;
                const double mean_rank = (static_cast<double>(i + 1) +
                                          static_cast<double>(j + 1)) /
                                         2.0;
                for (std::size_t k = i; k <= j; ++k) sums[order[k].second] += mean_rank;
                i = j + 1;
            }
        }
        RankTable rt;
        rt.regime = regime;
        rt.rank_sums.assign(sums.begin(), sums.end());
        out.push_back(std::move(rt));
    }
    return out;
}

// ---- chi-square -----------------------------------------------------------

namespace {

double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1e308;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_contfrac(a, x);
}

double chi_square_independence_p(const std::vector<std::vector<std::size_t>>& table) {
    const std::size_t r = table.size();
    if (r < 2) throw std::invalid_argument("chi-square: need >= 2 rows");
    const std::size_t c = table[0].size();
    if (c < 2) throw std::invalid_argument("chi-square: need >= 2 columns");

    std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        if (table[i].size() != c) throw std::invalid_argument("chi-square: ragged table");
        for (std::size_t j = 0; j < c; ++j) {
            row_sum[i] += static_cast<double>(table[i][j]);
            col_sum[j] += static_cast<double>(table[i][j]);
            total += static_cast<double>(table[i][j]);
        }
    }
    if (total == 0.0) throw std::invalid_argument("chi-square: empty table");

    double stat = 0.0;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            const double expected = row_sum[i] * col_sum[j] / total;
            if (expected <= 0.0) continue;
            const double diff = static_cast<double>(table[i][j]) - expected;
            stat += diff * diff / expected;
        }
    const double df = static_cast<double>((r - 1) * (c - 1));
    return gamma_q(df / 2.0, stat / 2.0);
}

} // namespace mmal
