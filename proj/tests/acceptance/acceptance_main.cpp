// Acceptance suite: one self-contained check per criterion, each printing a
// single PASS/FAIL line. Run everything or a single criterion:
//
//   acceptance [--criterion N] [--workdir DIR]
//
// Exit code 0 iff every selected criterion passes.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mmal/engine.hpp"
#include "mmal/eval.hpp"
#include "mmal/pitfalls.hpp"
#include "mmal/query.hpp"
#include "mmal/report.hpp"

namespace fs = std::filesystem;
using namespace mmal;

namespace {

std::string g_workdir = "acceptance_work";

struct CheckLog {
    std::ostringstream detail;
    bool ok = true;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "    FAILED: " << what << "\n";
        }
    }
    void note(const std::string& line) { detail << "    " << line << "\n"; }
};

double rel_err(double a, double b, double floor = 1e-9) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

double central_diff(const std::function<double()>& f, double& theta, double h = 1e-5) {
    const double orig = theta;
    theta = orig + h;
    const double fp = f();
    theta = orig - h;
    const double fm = f();
    theta = orig;
    return (fp - fm) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// Criterion 1: gradients vs central finite differences; softmax normalization.
// ---------------------------------------------------------------------------

bool criterion_numerics(CheckLog& log) {
    // every layer type through the full model graph at 64-bit precision
    ModelConfig cfg;
    cfg.input_dims = {7, 9};
    cfg.encoder_hidden = 11;
    cfg.projection_dim = 6;
    cfg.fusion_hidden = 8;
    cfg.fused_dim = 5;
    cfg.n_classes = 4;
    cfg.dropout_p = 0.2;
    auto net = MultimodalNet<double>::init(cfg, 2024);

    Rng rng(1);
    Batch<double> batch;
    for (std::size_t m = 0; m < 2; ++m) {
        Tensor<double> x({4, cfg.input_dims[m]});
        for (auto& v : x.data) v = rng.uniform(-1, 1);
        batch.x.push_back(std::move(x));
    }
    batch.present = {{1, 1}, {1, 0}, {0, 1}, {1, 1}};
    batch.labels = {0, 3, 1, 2};

    auto loss_of = [&]() {
        Tape<double> tape;
        auto g = net.build_graph(tape, batch, false, /*dropout_active=*/true, /*seed=*/5);
        return tape.value(softmax_xent(tape, g.logits, batch.labels).loss).data[0];
    };
    std::map<int, Tensor<double>> grads;
    Tensor<double> probs;
    {
        Tape<double> tape;
        auto g = net.build_graph(tape, batch, true, true, 5);
        XentResult<double> xent = softmax_xent(tape, g.logits, batch.labels);
        probs = xent.probs;
        grads = tape.backward(xent.loss);
    }

    double worst = 0.0;
    Rng pick(2);
    for (int t = 0; t < 400; ++t) {
        const int pid = static_cast<int>(pick.index(net.params.size()));
        const std::size_t idx = pick.index(net.params[pid].size());
        const double fd = central_diff(loss_of, net.params[pid].data[idx]);
        worst = std::max(worst, rel_err(grads[pid].data[idx], fd));
    }
    log.note("max gradient rel err over 400 coordinates: " + std::to_string(worst));
    log.expect(worst <= 1e-6, "model gradient rel err exceeds 1e-6");

    // softmax rows normalized within 1e-6
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < probs.cols(); ++k) sum += probs.data[i * probs.cols() + k];
        log.expect(std::fabs(sum - 1.0) <= 1e-6, "softmax row not normalized within 1e-6");
    }

    // badge_embedding equals the head-weight gradient of the pseudo-label loss
    const BadgeEmbedding<double> emb = net.badge_embedding(batch);
    const ForwardOutput<double> fwd = net.forward(batch);
    const std::vector<int> pseudo = argmax_rows(fwd.logits);
    auto& head = net.params[net.head_w()];
    auto sample_loss = [&](std::size_t sample) {
        Tape<double> tape;
        auto g = net.build_graph(tape, batch, false, false, 0);
        Tensor<double> row({1, static_cast<std::size_t>(cfg.n_classes)});
        for (int k = 0; k < cfg.n_classes; ++k)
            row.data[k] = tape.value(g.logits).data[sample * cfg.n_classes + k];
        Tape<double> t2;
        return t2.value(softmax_xent(t2, t2.leaf(row, false), {pseudo[sample]}).loss).data[0];
    };
    double worst_badge = 0.0;
    for (int t = 0; t < 150; ++t) {
        const std::size_t sample = pick.index(batch.size());
        const std::size_t f = pick.index(cfg.fused_dim);
        const std::size_t k = pick.index(cfg.n_classes);
        const double fd = central_diff([&] { return sample_loss(sample); },
                                       head.data[f * cfg.n_classes + k], 1e-6);
        const double analytic =
            emb.head.data[sample * cfg.n_classes * cfg.fused_dim + k * cfg.fused_dim + f];
        worst_badge = std::max(worst_badge, rel_err(analytic, fd, 1e-8));
    }
    log.note("max badge-embedding rel err over 150 coordinates: " + std::to_string(worst_badge));
    log.expect(worst_badge <= 1e-5, "badge embedding rel err exceeds 1e-5");
    return log.ok;
}

// ---------------------------------------------------------------------------
// Criterion 2: strategy selections equal brute-force references.
// ---------------------------------------------------------------------------

Tensor<double> random_simplex_rows(std::size_t n, std::size_t k, std::uint64_t seed) {
    Rng rng(seed);
    Tensor<double> probs({n, k});
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            probs.data[i * k + j] = -std::log(1.0 - rng.unit());
            sum += probs.data[i * k + j];
        }
        for (std::size_t j = 0; j < k; ++j) probs.data[i * k + j] /= sum;
    }
    return probs;
}

std::vector<std::uint32_t> brute_force_top(const std::vector<double>& scores,
                                           std::size_t budget) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < std::min(budget, order.size()); ++i)
        out.push_back(static_cast<std::uint32_t>(order[i]));
    return out;
}

bool criterion_oracles(CheckLog& log) {
    const std::size_t n = 1000;
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);

    { // entropy on a 1000-point instance
        const Tensor<double> probs = random_simplex_rows(n, 8, 11);
        std::vector<double> scores(n);
        for (std::size_t i = 0; i < n; ++i) {
            double h = 0.0;
            for (std::size_t j = 0; j < 8; ++j) {
                const double p = probs.data[i * 8 + j];
                if (p > 0.0) h -= p * std::log(p);
            }
            scores[i] = h;
        }
        const Acquisition acq = select_entropy(probs, pool, 100);
        log.expect(acq.indices == brute_force_top(scores, 100),
                   "entropy selection differs from the brute-force reference");
    }

    { // BALD on a 1000-point instance
        const std::size_t passes = 6, k = 5;
        Tensor<double> mc({passes, n, k});
        for (std::size_t t = 0; t < passes; ++t) {
            const Tensor<double> rows = random_simplex_rows(n, k, 20 + t);
            std::copy(rows.data.begin(), rows.data.end(), mc.data.begin() + t * n * k);
        }
        std::vector<double> scores(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> mean(k, 0.0);
            double h_cond = 0.0;
            for (std::size_t t = 0; t < passes; ++t) {
                double h = 0.0;
                for (std::size_t j = 0; j < k; ++j) {
                    const double p = mc.data[(t * n + i) * k + j];
                    mean[j] += p / passes;
                    if (p > 0.0) h -= p * std::log(p);
                }
                h_cond += h / passes;
            }
            double h_mean = 0.0;
            for (double p : mean)
                if (p > 0.0) h_mean -= p * std::log(p);
            scores[i] = h_mean - h_cond;
        }
        const Acquisition acq = select_bald(mc, pool, 100);
        log.expect(acq.indices == brute_force_top(scores, 100),
                   "BALD selection differs from the brute-force reference");
    }

    { // greedy k-center vs a naive quadratic reference on 1000 points
        Rng rng(31);
        const std::size_t dim = 8;
        Tensor<float> labeled({10, dim});
        for (auto& v : labeled.data) v = static_cast<float>(rng.uniform(-1, 1));
        Tensor<float> feats({n, dim});
        for (auto& v : feats.data) v = static_cast<float>(rng.uniform(-1, 1));

        std::vector<std::vector<float>> covered;
        for (std::size_t i = 0; i < labeled.rows(); ++i)
            covered.emplace_back(labeled.data.begin() + i * dim,
                                 labeled.data.begin() + (i + 1) * dim);
        std::vector<bool> taken(n, false);
        std::vector<std::uint32_t> reference;
        for (int t = 0; t < 50; ++t) {
            double best_d = -1.0;
            std::size_t best_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) continue;
                double nearest = 1e300;
                for (const auto& c : covered) {
                    double d = 0.0;
                    for (std::size_t j = 0; j < dim; ++j) {
                        const double diff = double(feats.data[i * dim + j]) - double(c[j]);
                        d += diff * diff;
                    }
                    nearest = std::min(nearest, d);
                }
                if (nearest > best_d) {
                    best_d = nearest;
                    best_i = i;
                }
            }
            taken[best_i] = true;
            reference.push_back(static_cast<std::uint32_t>(best_i));
            covered.emplace_back(feats.data.begin() + best_i * dim,
                                 feats.data.begin() + (best_i + 1) * dim);
        }
        const Acquisition acq = select_kcg(labeled, feats, pool, 50);
        log.expect(acq.indices == reference,
                   "greedy k-center differs from the naive reference");
    }

    { // 2-approximation against the exhaustive optimum, n <= 10, B <= 3
        Rng rng(41);
        auto radius = [](const Tensor<float>& pts, const std::vector<std::size_t>& centers,
                         const Tensor<float>& labeled) {
            double worst = 0.0;
            const std::size_t dim = pts.cols();
            for (std::size_t i = 0; i < pts.rows(); ++i) {
                double nearest = 1e300;
                auto dist = [&](const float* a, const float* b) {
                    double d = 0.0;
                    for (std::size_t j = 0; j < dim; ++j) {
                        const double diff = double(a[j]) - double(b[j]);
                        d += diff * diff;
                    }
                    return d;
                };
                for (std::size_t c : centers)
                    nearest = std::min(nearest, dist(pts.data.data() + i * dim,
                                                     pts.data.data() + c * dim));
                for (std::size_t l = 0; l < labeled.rows(); ++l)
                    nearest = std::min(nearest, dist(pts.data.data() + i * dim,
                                                     labeled.data.data() + l * dim));
                worst = std::max(worst, nearest);
            }
            return std::sqrt(worst);
        };

        int instances = 0;
        for (std::size_t size = 4; size <= 10; ++size)
            for (std::size_t budget = 1; budget <= 3; ++budget)
                for (int rep = 0; rep < 6; ++rep) {
                    Tensor<float> pts({size, 2});
                    for (auto& v : pts.data) v = static_cast<float>(rng.uniform(-1, 1));
                    Tensor<float> labeled({1, 2});
                    for (auto& v : labeled.data) v = static_cast<float>(rng.uniform(-1, 1));
                    std::vector<std::uint32_t> small_pool(size);
                    std::iota(small_pool.begin(), small_pool.end(), 0);

                    const Acquisition acq = select_kcg(labeled, pts, small_pool, budget);
                    std::vector<std::size_t> centers(acq.indices.begin(), acq.indices.end());
                    const double greedy_r = radius(pts, centers, labeled);

                    double best_r = 1e300;
                    std::vector<std::size_t> combo(budget);
                    std::function<void(std::size_t, std::size_t)> rec =
                        [&](std::size_t start, std::size_t depth) {
                            if (depth == budget) {
                                best_r = std::min(best_r, radius(pts, combo, labeled));
                                return;
                            }
                            for (std::size_t i = start; i < size; ++i) {
                                combo[depth] = i;
                                rec(i + 1, depth + 1);
                            }
                        };
                    rec(0, 0);
                    if (greedy_r > 2.0 * best_r + 1e-9) {
                        log.expect(false, "greedy k-center radius above 2x the optimum");
                        return log.ok;
                    }
                    ++instances;
                }
        log.note("k-center 2-approximation verified on " + std::to_string(instances) +
                 " exhaustive instances");
    }

    { // k-means++ second-center distribution within 2% at 1e5 trials
        Tensor<double> pts({4, 1});
        pts.data = {0.0, 1.0, 3.0, 7.0};
        std::map<std::pair<std::size_t, std::size_t>, int> counts;
        const int trials = 100000;
        Rng rng(51);
        for (int t = 0; t < trials; ++t) {
            Rng trial_rng(rng.next_u64());
            const std::vector<std::size_t> centers = kmeanspp_seed(pts, 2, trial_rng);
            ++counts[{centers[0], centers[1]}];
        }
        double worst_gap = 0.0;
        for (std::size_t first = 0; first < 4; ++first) {
            double total = 0.0;
            std::array<double, 4> d2{};
            for (std::size_t j = 0; j < 4; ++j) {
                const double diff = pts.data[j] - pts.data[first];
                d2[j] = diff * diff;
                total += d2[j];
            }
            for (std::size_t j = 0; j < 4; ++j) {
                const double expect = 0.25 * d2[j] / total;
                const double got = static_cast<double>(counts[{first, j}]) / trials;
                worst_gap = std::max(worst_gap, std::fabs(got - expect));
            }
        }
        log.note("k-means++ second-center max deviation from D^2 weights: " +
                 std::to_string(worst_gap));
        log.expect(worst_gap <= 0.02, "k-means++ empirical distribution off by more than 2%");
    }
    return log.ok;
}

// ---------------------------------------------------------------------------
// Criterion 3: metric suite.
// ---------------------------------------------------------------------------

bool criterion_metrics(CheckLog& log) {
    {
        LearningCurve c;
        c.acc.assign(11, 1.0);
        c.acc[0] = 0.0;
        log.expect(aulc(c) == 9.5, "aulc([0,1,...,1], N=10) != 9.5 exactly");
    }
    {
        Rng rng(3);
        for (int t = 0; t < 10000; ++t) {
            const int n = 1 + static_cast<int>(rng.index(15));
            LearningCurve c;
            c.acc.push_back(0.0);
            for (int i = 0; i < n; ++i) c.acc.push_back(rng.unit());
            const double area = aulc(c);
            if (area < 0.0 || area > n) {
                log.expect(false, "aulc left the [0, N] bound on a random curve");
                break;
            }
        }
    }
    {
        // M = 2 toy model, subset count and masked-modality invariance
        ModelConfig cfg;
        cfg.input_dims = {6, 6};
        cfg.encoder_hidden = 8;
        cfg.projection_dim = 4;
        cfg.fusion_hidden = 6;
        cfg.fused_dim = 4;
        cfg.n_classes = 3;
        auto net = MultimodalNet<float>::init(cfg, 9);

        LoadedDataset data;
        data.manifest.kind = DatasetKind::External;
        data.manifest.n_modalities = 2;
        data.manifest.n_classes = 3;
        data.manifest.modalities.assign(2, ModalityInfo{{6, 1, 1}, "u8", false});
        data.geom.assign(2, ModalityGeom{6, 1, 1, false});
        Rng rng(4);
        const std::size_t n_test = 60;
        data.test_x.assign(2, std::vector<float>(n_test * 6));
        for (auto& xs : data.test_x)
            for (auto& v : xs) v = static_cast<float>(rng.uniform(-1, 1));
        data.test_labels.resize(n_test);
        for (std::size_t i = 0; i < n_test; ++i) data.test_labels[i] = i % 3;
        data.test_presence.assign(n_test, 0x3);

        const auto result = subset_eval(net, data, 16);
        log.expect(result.size() == 3, "M=2 subset_eval must emit exactly 3 entries");

        LoadedDataset scrambled = data;
        for (auto& v : scrambled.test_x[1]) v = static_cast<float>(rng.uniform(-7, 7));
        const auto again = subset_eval(net, scrambled, 16);
        log.expect(again.at(1) == result.at(1),
                   "subset {A} changed when modality B test payload was scrambled");

        // M = 3 variant for the 2^M - 1 cardinality
        ModelConfig cfg3 = cfg;
        cfg3.input_dims = {6, 6, 6};
        auto net3 = MultimodalNet<float>::init(cfg3, 10);
        LoadedDataset data3 = data;
        data3.manifest.n_modalities = 3;
        data3.manifest.modalities.assign(3, ModalityInfo{{6, 1, 1}, "u8", false});
        data3.geom.assign(3, ModalityGeom{6, 1, 1, false});
        data3.test_x.push_back(data.test_x[0]);
        data3.test_presence.assign(n_test, 0x7);
        log.expect(subset_eval(net3, data3, 16).size() == 7,
                   "M=3 subset_eval must emit exactly 7 entries");
    }
    return log.ok;
}

// ---------------------------------------------------------------------------
// Criterion 4: generator determinism, missingness rates, independence tests.
// ---------------------------------------------------------------------------

bool dirs_identical(const std::string& a, const std::string& b) {
    std::vector<std::string> names_a, names_b;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) names_a.push_back(fs::relative(e.path(), a).string());
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) names_b.push_back(fs::relative(e.path(), b).string());
    std::sort(names_a.begin(), names_a.end());
    std::sort(names_b.begin(), names_b.end());
    if (names_a != names_b) return false;
    auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
    };
    for (const std::string& name : names_a)
        if (slurp(a + "/" + name) != slurp(b + "/" + name)) return false;
    return true;
}

bool criterion_generators(CheckLog& log) {
    const fs::path work = fs::path(g_workdir) / "c4";
    fs::remove_all(work);
    fs::create_directories(work);

    GenConfig gen; // 64x64 defaults
    MissingnessPolicy policy;

    const DatasetBundle missing_a = build_missing(gen, policy, {10000, 50}, 4242);
    write_bundle(missing_a, (work / "missing_a").string());
    {
        const DatasetBundle missing_b = build_missing(gen, policy, {10000, 50}, 4242);
        write_bundle(missing_b, (work / "missing_b").string());
    }
    log.expect(dirs_identical((work / "missing_a").string(), (work / "missing_b").string()),
               "regenerated Missing bundle is not byte-identical");

    { // pre-repair rates within +/-1% of the 90%/10% targets; no all-absent sample
        const auto& pre = missing_a.train.provenance.pre_repair_presence;
        std::size_t a_missing = 0, b_missing = 0;
        for (std::uint8_t m : pre) {
            if (!(m & 0x1)) ++a_missing;
            if (!(m & 0x2)) ++b_missing;
        }
        const double rate_a = static_cast<double>(a_missing) / pre.size();
        const double rate_b = static_cast<double>(b_missing) / pre.size();
        log.note("missingness draw rates: A=" + std::to_string(rate_a) +
                 " B=" + std::to_string(rate_b));
        log.expect(rate_a >= 0.89 && rate_a <= 0.91, "modality A missingness off 90% +/- 1%");
        log.expect(rate_b >= 0.09 && rate_b <= 0.11, "modality B missingness off 10% +/- 1%");
        for (std::uint8_t m : missing_a.train.presence)
            if (m == 0) {
                log.expect(false, "found an all-absent sample after the keep-one repair");
                break;
            }
    }

    auto chi_all = [&](const DatasetBundle& bundle, bool factor_of_a,
                       const std::string& name) {
        // label factor of one modality vs every generative factor of the other
        auto field = [&](const QuintSpec& s, int which) {
            switch (which) {
                case 0: return s.shape_id;
                case 1: return s.fg_color_id;
                case 2: return s.fg_texture_id;
                case 3: return s.bg_color_id;
                default: return s.bg_texture_id;
            }
        };
        for (int which = 0; which < 5; ++which) {
            std::vector<std::vector<std::size_t>> table(10, std::vector<std::size_t>(10, 0));
            for (std::size_t i = 0; i < bundle.train.size(); ++i) {
                const auto& specs = bundle.train.provenance.quint_specs[i];
                const int a_factor = factor_of_a ? specs[0].fg_texture_id : specs[1].shape_id;
                const int b_factor = field(factor_of_a ? specs[1] : specs[0], which);
                ++table[a_factor][b_factor];
            }
            const double p = chi_square_independence_p(table);
            log.note(name + " factor " + std::to_string(which) + ": p=" + std::to_string(p));
            log.expect(p > 0.01, name + " chi-square test " + std::to_string(which) +
                                     " rejected independence");
        }
    };

    const DatasetBundle unique = build_unique(gen, {10000, 10}, 77);
    chi_all(unique, true, "unique textureA vs B");
    const DatasetBundle synergy = build_synergy(gen, {10000, 10}, 78);
    chi_all(synergy, true, "synergy textureA vs B");
    chi_all(synergy, false, "synergy shapeB vs A");
    return log.ok;
}

// ---------------------------------------------------------------------------
// Criteria 5-7: desk-scale directional replications.
// ---------------------------------------------------------------------------

struct DeskRuns {
    // aulc[seed index] maps subset mask -> AULC
    std::vector<std::map<std::uint32_t, double>> aulcs;
};

DeskRuns desk_runs(const std::string& bundle_dir, const std::string& runs_dir,
                   const std::string& regime, bool moddrop_flag, CheckLog& log) {
    std::vector<RunConfig> configs;
    for (std::uint64_t seed : {1, 2, 3}) {
        RunConfig cfg;
        cfg.dataset_path = bundle_dir;
        cfg.regime = regime;
        cfg.strategy = "random";
        cfg.seed = seed;
        cfg.desk_scale = true;
        cfg.moddrop = moddrop_flag;
        configs.push_back(cfg);
    }
    const MatrixResult result = run_matrix(configs, 1, runs_dir);
    DeskRuns out;
    for (const RunRecord& rec : result.records) {
        if (rec.failed) {
            log.expect(false, "desk run failed: " + rec.failure);
            continue;
        }
        std::map<std::uint32_t, double> by_subset;
        for (std::uint32_t mask = 1; mask <= 3; ++mask)
            by_subset[mask] = run_aulc(rec, mask);
        std::ostringstream line;
        line << "seed " << rec.seed << " moddrop=" << (moddrop_flag ? 1 : 0) << " AULC:"
             << " A=" << by_subset[1] << " B=" << by_subset[2] << " AB=" << by_subset[3];
        log.note(line.str());
        out.aulcs.push_back(std::move(by_subset));
    }
    return out;
}

double mean_of(const DeskRuns& runs, std::uint32_t subset) {
    double acc = 0.0;
    for (const auto& m : runs.aulcs) acc += m.at(subset);
    return acc / runs.aulcs.size();
}

bool criterion_missing_directional(CheckLog& log) {
    const fs::path work = fs::path(g_workdir) / "c5";
    fs::remove_all(work);
    fs::create_directories(work);

    // Half of the foreground eroded: the rare modality's ~7x smaller sample
    // budget binds hard on the tougher task, as in the full-scale setting.
    GenConfig gen;
    gen.erosion.threshold = 0.0;
    const DatasetBundle bundle = build_missing(gen, MissingnessPolicy{}, {1700, 1000}, 101);
    write_bundle(bundle, (work / "bundle").string());

    // high regime scaled /10: budget 100, val 500, acquisition 100
    const DeskRuns runs =
        desk_runs((work / "bundle").string(), (work / "runs").string(), "high", false, log);
    if (runs.aulcs.size() != 3) return false;

    int rare_below_half = 0;
    for (const auto& m : runs.aulcs)
        if (m.at(1) < 0.5 * m.at(2)) ++rare_below_half;
    log.note("seeds with AULC(rare) < 0.5 * AULC(frequent): " +
             std::to_string(rare_below_half) + "/3");
    log.expect(rare_below_half >= 2, "rare modality did not underperform in >= 2 of 3 seeds");

    const double both = mean_of(runs, 3);
    const double frequent = mean_of(runs, 2);
    log.note("mean AULC(both)=" + std::to_string(both) +
             " mean AULC(frequent)=" + std::to_string(frequent));
    log.expect(std::fabs(both - frequent) <= 0.10 * frequent,
               "AULC(both) not within 10% of AULC(frequent-only)");
    return log.ok;
}

bool criterion_unique_moddrop(CheckLog& log) {
    const fs::path work = fs::path(g_workdir) / "c6";
    fs::remove_all(work);
    fs::create_directories(work);

    GenConfig gen;
    const DatasetBundle bundle = build_unique(gen, {1700, 2000}, 102);
    write_bundle(bundle, (work / "bundle").string());

    // mid regime scaled /10: budget 100, val 500, acquisition 100
    const std::string dir = (work / "bundle").string();
    const DeskRuns without =
        desk_runs(dir, (work / "runs_plain").string(), "mid", false, log);
    const DeskRuns with_md =
        desk_runs(dir, (work / "runs_moddrop").string(), "mid", true, log);
    if (without.aulcs.size() != 3 || with_md.aulcs.size() != 3) return false;

    // modality A carries the full label; modality B only the shape part
    const double partial_plain = mean_of(without, 2);
    const double partial_md = mean_of(with_md, 2);
    const double full_plain = mean_of(without, 1);
    const double full_md = mean_of(with_md, 1);
    log.note("partial-modality AULC: no-moddrop=" + std::to_string(partial_plain) +
             " moddrop=" + std::to_string(partial_md));
    log.note("full-modality AULC: no-moddrop=" + std::to_string(full_plain) +
             " moddrop=" + std::to_string(full_md));

    log.expect(partial_md > partial_plain,
               "ModDrop did not improve the partial modality's mean AULC");
    log.expect(std::fabs(full_md - full_plain) < 0.15 * full_plain,
               "full-modality AULC moved by 15% or more under ModDrop");
    return log.ok;
}

bool criterion_synergy_moddrop(CheckLog& log) {
    const fs::path work = fs::path(g_workdir) / "c7";
    fs::remove_all(work);
    fs::create_directories(work);

    GenConfig gen;
    const DatasetBundle bundle = build_synergy(gen, {1700, 2000}, 103);
    write_bundle(bundle, (work / "bundle").string());

    const std::string dir = (work / "bundle").string();
    const DeskRuns without =
        desk_runs(dir, (work / "runs_plain").string(), "mid", false, log);
    const DeskRuns with_md =
        desk_runs(dir, (work / "runs_moddrop").string(), "mid", true, log);
    if (without.aulcs.size() != 3 || with_md.aulcs.size() != 3) return false;

    int plain_wins = 0;
    for (std::size_t s = 0; s < 3; ++s)
        if (without.aulcs[s].at(3) > with_md.aulcs[s].at(3)) ++plain_wins;
    log.note("seeds where joint AULC without ModDrop exceeds with ModDrop: " +
             std::to_string(plain_wins) + "/3");
    log.expect(plain_wins >= 2, "joint AULC without ModDrop won fewer than 2 of 3 seeds");
    return log.ok;
}

// ---------------------------------------------------------------------------
// Criterion 8: protocol determinism across reruns and worker counts.
// ---------------------------------------------------------------------------

bool criterion_determinism(CheckLog& log) {
    const fs::path work = fs::path(g_workdir) / "c8";
    fs::remove_all(work);
    fs::create_directories(work);

    GenConfig gen;
    const DatasetBundle bundle = build_missing(gen, MissingnessPolicy{}, {450, 120}, 104);
    write_bundle(bundle, (work / "bundle").string());

    std::vector<RunConfig> configs;
    for (const std::string strategy : {"entropy", "kcg", "badge"})
        for (std::uint64_t seed : {1, 2, 3}) {
            RunConfig cfg;
            cfg.dataset_path = (work / "bundle").string();
            cfg.regime = "mid"; // desk: budget 25, val 125, acquisition 25
            cfg.strategy = strategy;
            cfg.seed = seed;
            cfg.desk_scale = true;
            configs.push_back(cfg);
        }

    const MatrixResult first = run_matrix(configs, 1, (work / "runs_a").string());
    log.expect(first.failures == 0, "runs failed in the first serial execution");
    const MatrixResult second = run_matrix(configs, 1, (work / "runs_b").string());
    log.expect(second.failures == 0, "runs failed in the second serial execution");
    const MatrixResult parallel = run_matrix(configs, 8, (work / "runs_c").string());
    log.expect(parallel.failures == 0, "runs failed in the 8-worker execution");

    log.expect(dirs_identical((work / "runs_a").string(), (work / "runs_b").string()),
               "rerunning the matrix changed the output bytes");
    log.expect(dirs_identical((work / "runs_a").string(), (work / "runs_c").string()),
               "8 workers changed the output bytes versus 1 worker");
    log.note("9 runs x 3 executions compared byte-for-byte");
    return log.ok;
}

// ---------------------------------------------------------------------------
// Criterion 9: rank pipeline against a hand-computed fixture.
// ---------------------------------------------------------------------------

bool criterion_ranks(CheckLog& log) {
    // 3 strategies x 4 datasets, one regime; AULC means on the ranked subset:
    //            d1    d2    d3    d4
    //   alpha   0.90  0.40  0.70  0.20
    //   beta    0.80  0.60  0.70  0.30
    //   gamma   0.10  0.50  0.90  0.30
    // ranks:    1,2,3 | 3,1,2 | 2.5,2.5,1 | 3,1.5,1.5
    // sums: alpha 9.5, beta 7.0, gamma 7.5
    auto cell = [](const std::string& ds, const std::string& s, double mean) {
        AulcCell c;
        c.dataset = ds;
        c.regime = "mid";
        c.strategy = s;
        c.subset = 2;
        c.mean = mean;
        c.n = 3;
        return c;
    };
    const std::vector<AulcCell> cells = {
        cell("d1", "alpha", 0.90), cell("d1", "beta", 0.80), cell("d1", "gamma", 0.10),
        cell("d2", "alpha", 0.40), cell("d2", "beta", 0.60), cell("d2", "gamma", 0.50),
        cell("d3", "alpha", 0.70), cell("d3", "beta", 0.70), cell("d3", "gamma", 0.90),
        cell("d4", "alpha", 0.20), cell("d4", "beta", 0.30), cell("d4", "gamma", 0.30)};
    const std::map<std::string, std::uint32_t> selector = {
        {"d1", 2}, {"d2", 2}, {"d3", 2}, {"d4", 2}};

    const std::vector<RankTable> tables = rank_summary(cells, selector);
    log.expect(tables.size() == 1, "expected a single regime table");
    std::map<std::string, double> sums(tables[0].rank_sums.begin(),
                                       tables[0].rank_sums.end());
    log.note("rank sums: alpha=" + std::to_string(sums["alpha"]) +
             " beta=" + std::to_string(sums["beta"]) +
             " gamma=" + std::to_string(sums["gamma"]));
    log.expect(sums["alpha"] == 9.5, "alpha rank sum != 9.5");
    log.expect(sums["beta"] == 7.0, "beta rank sum != 7.0");
    log.expect(sums["gamma"] == 7.5, "gamma rank sum != 7.5");
    return log.ok;
}

struct Criterion {
    int id;
    const char* name;
    bool (*run)(CheckLog&);
};

const Criterion kCriteria[] = {
    {1, "numerics: gradients and softmax", criterion_numerics},
    {2, "oracle equivalence: entropy/BALD/k-center/k-means++", criterion_oracles},
    {3, "metric suite: aulc and subset_eval", criterion_metrics},
    {4, "generators: determinism, missingness, independence", criterion_generators},
    {5, "directional replication: Missing", criterion_missing_directional},
    {6, "directional replication: Unique + ModDrop", criterion_unique_moddrop},
    {7, "directional replication: Synergy", criterion_synergy_moddrop},
    {8, "protocol determinism: rerun and worker count", criterion_determinism},
    {9, "rank pipeline fixture", criterion_ranks},
};

} // namespace

int main(int argc, char** argv) {
    int selected = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            selected = std::atoi(argv[++i]);
        } else if (std::strcmp(argv[i], "--workdir") == 0 && i + 1 < argc) {
            g_workdir = argv[++i];
        } else {
            std::cerr << "usage: acceptance [--criterion N] [--workdir DIR]\n";
            return 2;
        }
    }
    fs::create_directories(g_workdir);

    bool all_ok = true;
    for (const Criterion& crit : kCriteria) {
        if (selected != 0 && crit.id != selected) continue;
        CheckLog log;
        bool ok = false;
        try {
            ok = crit.run(log);
        } catch (const std::exception& e) {
            log.detail << "    exception: " << e.what() << "\n";
        }
        all_ok = all_ok && ok;
        std::cout << "criterion " << crit.id << " (" << crit.name
                  << "): " << (ok ? "PASS" : "FAIL") << "\n"
                  << log.detail.str();
        std::cout.flush();
    }
    return all_ok ? 0 : 1;
}
