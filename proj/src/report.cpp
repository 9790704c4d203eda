#include "mmal/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace mmal {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("report: cannot open for write: " + path);
    return f;
}

} // namespace

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string subset_label(std::uint32_t mask) {
    std::string label;
    for (int m = 0; m < 8; ++m)
        if (mask & (1u << m)) label += static_cast<char>('A' + m);
    return label.empty() ? "-" : label;
}

void write_aulc_csv(const std::string& path, const std::vector<AulcCell>& cells) {
    std::ofstream f = open_out(path);
    f << "dataset,regime,strategy,subset,n,mean,std,scale,display_mean,display_std\n";
    for (const AulcCell& c : cells) {
        f << csv_escape(c.dataset) << ',' << csv_escape(c.regime) << ','
          << csv_escape(c.strategy) << ',' << subset_label(c.subset) << ',' << c.n << ','
          << fmt(c.mean) << ',' << fmt(c.stddev) << ',' << fmt(c.scale) << ','
          << fmt(c.display_mean()) << ',' << fmt(c.display_std()) << '\n';
    }
}

void write_rank_csv(const std::string& path, const std::vector<RankTable>& tables) {
    std::ofstream f = open_out(path);
    f << "regime,strategy,rank_sum\n";
    for (const RankTable& t : tables)
        for (const auto& [strategy, sum] : t.rank_sums)
            f << csv_escape(t.regime) << ',' << csv_escape(strategy) << ',' << fmt(sum) << '\n';
}

namespace {

struct CurveStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

// (dataset, regime) -> (strategy, subset) -> per-iteration stats
using CurveMap =
    std::map<std::pair<std::string, std::string>,
             std::map<std::pair<std::string, std::uint32_t>, CurveStats>>;

CurveMap collect_curves(const std::vector<RunRecord>& runs) {
    std::map<std::pair<std::string, std::string>,
             std::map<std::pair<std::string, std::uint32_t>, std::vector<std::vector<double>>>>
        samples;
    for (const RunRecord& rec : runs) {
        if (rec.failed) continue;
        for (const IterationRecord& it : rec.iterations) {
            for (const auto& [mask, bacc] : it.subset_bacc) {
                auto& vecs = samples[{rec.dataset, rec.regime}][{rec.strategy, mask}];
                if (vecs.size() <= static_cast<std::size_t>(it.iteration))
                    vecs.resize(it.iteration + 1);
                vecs[it.iteration].push_back(bacc);
            }
        }
    }

    CurveMap out;
    for (const auto& [key, by_line] : samples) {
        for (const auto& [line, vecs] : by_line) {
            CurveStats stats;
            for (const auto& vals : vecs) {
                double mean = 0.0;
                for (double v : vals) mean += v;
                mean = vals.empty() ? 0.0 : mean / static_cast<double>(vals.size());
                double sd = 0.0;
                if (vals.size() > 1) {
                    for (double v : vals) sd += (v - mean) * (v - mean);
                    sd = std::sqrt(sd / static_cast<double>(vals.size() - 1));
                }
                stats.mean.push_back(mean);
                stats.stddev.push_back(sd);
            }
            out[key][line] = std::move(stats);
        }
    }
    return out;
}

const char* kPalette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee",
                          "#aa3377", "#bbbbbb", "#222255", "#225555", "#553311",
                          "#802392", "#2a9d8f", "#e76f51", "#e9c46a"};

} // namespace

void write_curves_csv(const std::string& path, const std::vector<RunRecord>& runs) {
    CurveMap curves = collect_curves(runs);
    std::ofstream f = open_out(path);
    f << "dataset,regime,strategy,subset,iteration,mean_bacc,std_bacc\n";
    for (const auto& [key, by_line] : curves)
        for (const auto& [line, stats] : by_line)
            for (std::size_t i = 0; i < stats.mean.size(); ++i)
                f << csv_escape(key.first) << ',' << csv_escape(key.second) << ','
                  << csv_escape(line.first) << ',' << subset_label(line.second) << ',' << i
                  << ',' << fmt(stats.mean[i]) << ',' << fmt(stats.stddev[i]) << '\n';
}

std::vector<std::string> write_report_svgs(const std::string& out_dir,
                                           const std::vector<RunRecord>& runs) {
    fs::create_directories(out_dir);
    CurveMap curves = collect_curves(runs);

    std::vector<std::string> written;
    for (const auto& [key, by_line] : curves) {
        const auto& [dataset, regime] = key;

        std::size_t max_iter = 1;
        for (const auto& [line, stats] : by_line)
            max_iter = std::max(max_iter, stats.mean.size() - 1);

        const double width = 880, height = 560;
        const double left = 64, right = 260, top = 40, bottom = 56;
        const double plot_w = width - left - right, plot_h = height - top - bottom;
        auto px = [&](double it) { return left + plot_w * it / static_cast<double>(max_iter); };
        auto py = [&](double acc) { return top + plot_h * (1.0 - acc); };

        std::ostringstream svg;
        svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
            << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
        svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
            << "\" fill=\"white\"/>\n";
        svg << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
            << dataset << " / " << regime << " — balanced accuracy per iteration</text>\n";

        // axes and gridlines
        svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\""
            << left + plot_w << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
        svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
            << top + plot_h << "\" stroke=\"black\"/>\n";
        for (int tick = 0; tick <= 10; tick += 2) {
            const double y = py(tick / 10.0);
            svg << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + plot_w
                << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
            svg << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
                << fmt(tick / 10.0) << "</text>\n";
        }
        for (std::size_t it = 0; it <= max_iter; ++it) {
            svg << "<text x=\"" << px(static_cast<double>(it)) << "\" y=\""
                << top + plot_h + 18
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << it
                << "</text>\n";
        }

        int color = 0;
        double legend_y = top + 8;
        for (const auto& [line, stats] : by_line) {
            const char* stroke = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
            ++color;

            // translucent band at +/- one standard deviation
            std::ostringstream band;
            for (std::size_t i = 0; i < stats.mean.size(); ++i)
                band << px(static_cast<double>(i)) << ','
                     << py(std::min(1.0, stats.mean[i] + stats.stddev[i])) << ' ';
            for (std::size_t i = stats.mean.size(); i-- > 0;)
                band << px(static_cast<double>(i)) << ','
                     << py(std::max(0.0, stats.mean[i] - stats.stddev[i])) << ' ';
            svg << "<polygon points=\"" << band.str() << "\" fill=\"" << stroke
                << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";

            std::ostringstream pts;
            for (std::size_t i = 0; i < stats.mean.size(); ++i)
                pts << px(static_cast<double>(i)) << ',' << py(stats.mean[i]) << ' ';
            svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << stroke
                << "\" stroke-width=\"1.8\"/>\n";

            svg << "<line x1=\"" << left + plot_w + 16 << "\" y1=\"" << legend_y << "\" x2=\""
                << left + plot_w + 44 << "\" y2=\"" << legend_y << "\" stroke=\"" << stroke
                << "\" stroke-width=\"2\"/>\n";
            svg << "<text x=\"" << left + plot_w + 50 << "\" y=\"" << legend_y + 4
                << "\" font-family=\"sans-serif\" font-size=\"12\">" << line.first << " / "
                << subset_label(line.second) << "</text>\n";
            legend_y += 18;
        }
        svg << "</svg>\n";

        const std::string path = out_dir + "/curves_" + dataset + "_" + regime + ".svg";
        std::ofstream f = open_out(path);
        f << svg.str();
        written.push_back(path);
    }
    return written;
}

} // namespace mmal
