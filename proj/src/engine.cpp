#include "mmal/engine.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace mmal {

RegimeSpec regime_defaults(DatasetKind kind, const std::string& regime) {
    const bool small = kind == DatasetKind::Missing || kind == DatasetKind::Share;
    const bool large = kind == DatasetKind::Unique || kind == DatasetKind::Synergy;
    if (!small && !large)
        throw std::invalid_argument("regime_defaults: no defaults for dataset kind '" +
                                    to_string(kind) + "'");
    RegimeSpec spec;
    spec.iterations = 10;
    if (regime == "low") {
        spec = small ? RegimeSpec{50, 250, 50, 10} : RegimeSpec{500, 2500, 500, 10};
    } else if (regime == "mid") {
        spec = small ? RegimeSpec{250, 1250, 250, 10} : RegimeSpec{1000, 5000, 1000, 10};
    } else if (regime == "high") {
        spec = small ? RegimeSpec{1000, 5000, 1000, 10} : RegimeSpec{5000, 5000, 5000, 10};
    } else {
        throw std::invalid_argument("regime_defaults: unknown regime '" + regime + "'");
    }
    return spec;
}

std::string run_id(const RunConfig& cfg) {
    std::string label = cfg.dataset_label;
    if (label.empty()) {
        fs::path p(cfg.dataset_path);
        label = p.filename().string();
        if (label.empty()) label = p.parent_path().filename().string();
    }
    std::ostringstream id;
    id << label << '_' << cfg.regime << '_' << cfg.strategy << "_md" << (cfg.moddrop ? 1 : 0)
       << "_s" << cfg.seed;
    return id.str();
}

ResolvedRun resolve_run(const RunConfig& cfg, DatasetKind kind) {
    ResolvedRun r;
    if (cfg.regime == "custom") {
        if (cfg.custom.initial_budget == 0 || cfg.custom.acq_size == 0 ||
            cfg.custom.iterations < 1)
            throw std::invalid_argument("resolve_run: custom regime incomplete");
        r.regime = cfg.custom;
    } else {
        r.regime = regime_defaults(kind, cfg.regime);
        if (cfg.desk_scale) {
            r.regime.initial_budget /= 10;
            r.regime.val_size /= 10;
            r.regime.acq_size /= 10;
        }
    }
    if (r.regime.initial_budget < 1 || r.regime.acq_size < 1 || r.regime.iterations < 1)
        throw std::invalid_argument("resolve_run: degenerate regime");

    r.recipe.epochs = cfg.epochs > 0 ? cfg.epochs : (cfg.desk_scale ? 30 : 60);
    // Desk scale trains on tenth-size budgets: batch 32 keeps the step count
    // usable, and the 4px random crops that suit convnets wreck 16x16 MLP
    // inputs, so the desk recipe turns augmentation off.
    r.recipe.batch_size = cfg.batch_size > 0 ? cfg.batch_size : (cfg.desk_scale ? 32 : 128);
    r.recipe.warmup_epochs = cfg.warmup_epochs >= 0 ? cfg.warmup_epochs : 10;
    if (r.recipe.warmup_epochs >= r.recipe.epochs)
        r.recipe.warmup_epochs = r.recipe.epochs / 3;
    if (cfg.desk_scale) r.recipe.augmentation = Augmentation::None;

    r.downscale = cfg.downscale == -2 ? (cfg.desk_scale ? 16 : 0)
                                      : (cfg.downscale > 0 ? cfg.downscale : 0);
    r.pool_cap = cfg.pool_cap_override ? cfg.pool_cap_override
                                       : (cfg.desk_scale ? 5000 : 0);
    r.mc_passes = cfg.mc_passes;
    return r;
}

// ---- strategy context ---------------------------------------------------------

namespace {

struct PoolForward {
    Tensor<float> fused;
    Tensor<float> head;
    std::vector<Tensor<float>> blocks;
    Tensor<double> probs;
};

PoolForward forward_over(const MultimodalNet<float>& net, const LoadedDataset& data,
                         const std::vector<std::uint32_t>& rows, int batch_size) {
    const std::size_t n = rows.size();
    const auto K = static_cast<std::size_t>(net.cfg.n_classes);
    const std::size_t F = net.cfg.fused_dim;
    const std::size_t D = net.cfg.projection_dim;
    const std::size_t M = net.cfg.n_modalities();

    PoolForward out;
    out.fused = Tensor<float>({n, F});
    out.head = Tensor<float>({n, K * F});
    out.probs = Tensor<double>({n, K});
    for (std::size_t m = 0; m < M; ++m) out.blocks.emplace_back(Tensor<float>({n, K * D}));

    for (std::size_t off = 0; off < n; off += batch_size) {
        const std::size_t b = std::min<std::size_t>(batch_size, n - off);
        Batch<float> batch = gather_batch<float>(data, Part::Train, rows.data() + off, b);
        BadgeEmbedding<float> emb = net.badge_embedding(batch);
        ForwardOutput<float> fwd = net.forward(batch);
        Tensor<double> probs = softmax_rows(fwd.logits);

        std::copy(fwd.fused.data.begin(), fwd.fused.data.end(),
                  out.fused.data.begin() + off * F);
        std::copy(emb.head.data.begin(), emb.head.data.end(),
                  out.head.data.begin() + off * K * F);
        std::copy(probs.data.begin(), probs.data.end(), out.probs.data.begin() + off * K);
        for (std::size_t m = 0; m < M; ++m)
            std::copy(emb.blocks[m].data.begin(), emb.blocks[m].data.end(),
                      out.blocks[m].data.begin() + off * K * D);
    }
    return out;
}

} // namespace

StrategyContext::StrategyContext(const MultimodalNet<float>& net, const LoadedDataset& data,
                                 const PoolState& pool, int batch_size, int mc_passes)
    : net_(net), data_(data), pool_(pool), batch_size_(batch_size), mc_passes_(mc_passes) {}

void StrategyContext::ensure_pool_forward() {
    if (pool_fused_) return;
    PoolForward f = forward_over(net_, data_, pool_.unlabeled, batch_size_);
    pool_fused_ = std::move(f.fused);
    pool_head_ = std::move(f.head);
    pool_blocks_ = std::move(f.blocks);
    probs_ = std::move(f.probs);
}

void StrategyContext::ensure_labeled_forward() {
    if (labeled_fused_) return;
    PoolForward f = forward_over(net_, data_, pool_.labeled, batch_size_);
    labeled_fused_ = std::move(f.fused);
    labeled_blocks_ = std::move(f.blocks);
}

const Tensor<double>& StrategyContext::probs() {
    ensure_pool_forward();
    return *probs_;
}

const Tensor<double>& StrategyContext::mc_probs(Rng& rng) {
    if (mc_probs_) return *mc_probs_;
    const std::size_t n = pool_.unlabeled.size();
    const auto K = static_cast<std::size_t>(net_.cfg.n_classes);
    const auto T = static_cast<std::size_t>(mc_passes_);
    mc_probs_ = Tensor<double>({T, n, K});

    // Per-pass dropout seeds are drawn up front so batching cannot shift the
    // rng stream.
    std::vector<std::uint64_t> pass_seeds(T);
    for (std::size_t t = 0; t < T; ++t) pass_seeds[t] = rng.next_u64();

    for (std::size_t off = 0; off < n; off += batch_size_) {
        const std::size_t b = std::min<std::size_t>(batch_size_, n - off);
        Batch<float> batch =
            gather_batch<float>(data_, Part::Train, pool_.unlabeled.data() + off, b);
        for (std::size_t t = 0; t < T; ++t) {
            ForwardOutput<float> fwd =
                net_.forward(batch, /*dropout_active=*/true, hash_mix(pass_seeds[t], off));
            Tensor<double> probs = softmax_rows(fwd.logits);
            std::copy(probs.data.begin(), probs.data.end(),
                      mc_probs_->data.begin() + (t * n + off) * K);
        }
    }
    return *mc_probs_;
}

const Tensor<float>& StrategyContext::pool_features() {
    ensure_pool_forward();
    return *pool_fused_;
}

const Tensor<float>& StrategyContext::labeled_features() {
    ensure_labeled_forward();
    return *labeled_fused_;
}

const Tensor<float>& StrategyContext::pool_head_embeddings() {
    ensure_pool_forward();
    return *pool_head_;
}

const std::vector<Tensor<float>>& StrategyContext::pool_blocks() {
    ensure_pool_forward();
    return *pool_blocks_;
}

const std::vector<Tensor<float>>& StrategyContext::labeled_blocks() {
    ensure_labeled_forward();
    return *labeled_blocks_;
}

// ---- strategy registry -----------------------------------------------------------

namespace {

std::map<std::string, StrategyFn>& registry() {
    static std::map<std::string, StrategyFn> reg = [] {
        std::map<std::string, StrategyFn> r;
        r["random"] = [](StrategyContext& ctx, std::size_t budget, Rng& rng) {
            return select_random(ctx.pool_ids(), budget, rng);
        };
        r["entropy"] = [](StrategyContext& ctx, std::size_t budget, Rng&) {
            return select_entropy(ctx.probs(), ctx.pool_ids(), budget);
        };
        r["bald"] = [](StrategyContext& ctx, std::size_t budget, Rng& rng) {
            return select_bald(ctx.mc_probs(rng), ctx.pool_ids(), budget);
        };
        r["kcg"] = [](StrategyContext& ctx, std::size_t budget, Rng&) {
            return select_kcg(ctx.labeled_features(), ctx.pool_features(), ctx.pool_ids(),
                              budget);
        };
        r["badge"] = [](StrategyContext& ctx, std::size_t budget, Rng& rng) {
            return select_badge(ctx.pool_head_embeddings(), ctx.pool_ids(), budget, rng);
        };
        r["bmmal-interp"] = [](StrategyContext& ctx, std::size_t budget, Rng& rng) {
            return select_bmmal(ctx.pool_blocks(), ctx.labeled_blocks(),
                                ctx.pool_head_embeddings(), ctx.pool_ids(), budget, rng);
        };
        return r;
    }();
    return reg;
}

} // namespace

void register_strategy(const std::string& name, StrategyFn fn) {
    registry()[name] = std::move(fn);
}

std::vector<std::string> strategy_names() {
    std::vector<std::string> names;
    for (const auto& [name, fn] : registry()) names.push_back(name);
    return names;
}

const StrategyFn& strategy_by_name(const std::string& name) {
    const auto it = registry().find(name);
    if (it == registry().end()) {
        std::string valid;
        for (const auto& n : strategy_names()) valid += (valid.empty() ? "" : " | ") + n;
        throw std::invalid_argument("unknown strategy '" + name + "' (valid: " + valid + ")");
    }
    return it->second;
}

// ---- run protocol ------------------------------------------------------------------

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::json resolved_to_json(const RunConfig& cfg, const ResolvedRun& r) {
    nlohmann::json j;
    j["initial_budget"] = r.regime.initial_budget;
    j["val_size"] = r.regime.val_size;
    j["acq_size"] = r.regime.acq_size;
    j["iterations"] = r.regime.iterations;
    j["epochs"] = r.recipe.epochs;
    j["batch_size"] = r.recipe.batch_size;
    j["warmup_epochs"] = r.recipe.warmup_epochs;
    j["downscale"] = r.downscale;
    j["pool_cap"] = r.pool_cap;
    j["mc_passes"] = r.mc_passes;
    j["desk_scale"] = cfg.desk_scale;
    j["dataset_path"] = cfg.dataset_path;
    return j;
}

} // namespace

RunRecord run_experiment(const RunConfig& cfg, const LoadedDataset& data,
                         const std::string& runs_dir, const ProgressFn& progress) {
    const DatasetKind kind = data.manifest.kind;
    const ResolvedRun resolved = resolve_run(cfg, kind);
    const RegimeSpec& regime = resolved.regime;

    if (regime.initial_budget < static_cast<std::size_t>(data.manifest.n_classes))
        throw std::invalid_argument("run: initial budget below the class count");
    if (regime.initial_budget + regime.val_size > data.train_size())
        throw std::invalid_argument("run: budget + validation exceed the train partition");

    ModelConfig mc = cfg.model;
    mc.input_dims.clear();
    for (const ModalityGeom& g : data.geom) mc.input_dims.push_back(g.dim());
    mc.n_classes = data.manifest.n_classes;
    mc.validate();

    // run seed -> (split, grid, per-iteration init, per-iteration strategy)
    std::vector<std::uint32_t> order(data.train_size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    Rng split_rng(derive_seed(cfg.seed, "split"));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[split_rng.index(i)]);

    std::vector<std::uint32_t> val(order.begin(), order.begin() + regime.val_size);
    std::vector<std::uint32_t> labeled(order.begin() + regime.val_size,
                                       order.begin() + regime.val_size + regime.initial_budget);
    std::vector<std::uint32_t> pool(order.begin() + regime.val_size + regime.initial_budget,
                                    order.end());
    if (resolved.pool_cap && pool.size() > resolved.pool_cap) pool.resize(resolved.pool_cap);
    std::sort(val.begin(), val.end());
    std::sort(labeled.begin(), labeled.end());
    std::sort(pool.begin(), pool.end());

    PoolState state;
    state.labeled = std::move(labeled);
    state.unlabeled = std::move(pool);
    state.validate();

    RunRecord rec;
    rec.run_id = run_id(cfg);
    rec.dataset = cfg.dataset_label.empty()
                      ? fs::path(cfg.dataset_path).filename().string()
                      : cfg.dataset_label;
    rec.dataset_kind = to_string(kind);
    rec.regime = cfg.regime;
    rec.strategy = cfg.strategy;
    rec.seed = cfg.seed;
    rec.moddrop = cfg.moddrop;
    rec.n_modalities = data.manifest.n_modalities;
    rec.weak_subset_mask = data.manifest.weak_subset_mask;
    rec.scaled_subsets = data.manifest.scaled_subsets;

    const StrategyFn& strategy = strategy_by_name(cfg.strategy);

    const std::string dir = runs_dir + "/" + rec.run_id;
    fs::create_directories(dir);

    auto t0 = std::chrono::steady_clock::now();
    TrainRecipe recipe = resolved.recipe;
    HyperGrid grid = cfg.grid;
    if (cfg.desk_scale) grid.augs = {Augmentation::None};
    GridChoice choice = grid_search<float>(data, state.labeled, val, grid, recipe, mc,
                                           derive_seed(cfg.seed, "grid"), cfg.moddrop);
    recipe.base_lr = choice.lr;
    recipe.weight_decay = choice.wd;
    recipe.augmentation = choice.aug;
    rec.chosen_lr = choice.lr;
    rec.chosen_wd = choice.wd;
    rec.chosen_aug = choice.aug == Augmentation::Basic ? "basic" : "none";
    rec.secs_grid = seconds_since(t0);

    {
        nlohmann::json j = run_header_to_json(rec);
        j["resolved"] = resolved_to_json(cfg, resolved);
        std::ofstream f(dir + "/config.json", std::ios::binary);
        if (!f) throw std::runtime_error("run: cannot write " + dir + "/config.json");
        f << j.dump(2) << '\n';
    }

    std::ofstream jsonl(dir + "/record.jsonl", std::ios::binary);
    if (!jsonl) throw std::runtime_error("run: cannot write " + dir + "/record.jsonl");

    for (int iter = 0; iter <= regime.iterations; ++iter) {
        auto t_train = std::chrono::steady_clock::now();
        TrainedModel<float> trained =
            train_model<float>(data, state.labeled, val, recipe, mc,
                               derive_seed(cfg.seed, "iter", iter), cfg.moddrop);
        rec.secs_train += seconds_since(t_train);

        if (cfg.fail_at_iteration == iter)
            throw NanLossError("injected non-finite loss at iteration " +
                               std::to_string(iter));

        auto t_eval = std::chrono::steady_clock::now();
        IterationRecord ir;
        ir.iteration = iter;
        ir.labeled_size = state.labeled.size();
        ir.subset_bacc = subset_eval(trained.net, data, recipe.batch_size);
        rec.secs_eval += seconds_since(t_eval);

        if (progress) {
            for (const auto& [mask, bacc] : ir.subset_bacc) {
                std::ostringstream line;
                line << "run=" << rec.run_id << " iter=" << iter << " subset=" << mask
                     << " bacc=" << bacc;
                progress(line.str());
            }
        }

        const bool exhausted = state.unlabeled.empty();
        if (iter < regime.iterations && !exhausted) {
            auto t_query = std::chrono::steady_clock::now();
            StrategyContext ctx(trained.net, data, state, recipe.batch_size,
                                resolved.mc_passes);
            Rng srng(derive_seed(cfg.seed, "strategy", iter));
            const std::size_t budget = std::min<std::size_t>(regime.acq_size,
                                                             state.unlabeled.size());
            Acquisition acq = strategy(ctx, budget, srng);
            acq.validate(state.unlabeled, budget);
            ir.acquired = acq.indices;
            rec.secs_query += seconds_since(t_query);

            jsonl << iteration_to_json(ir).dump() << '\n';
            jsonl.flush();
            rec.iterations.push_back(std::move(ir));
            state.acquire(rec.iterations.back().acquired);
        } else {
            jsonl << iteration_to_json(ir).dump() << '\n';
            jsonl.flush();
            rec.iterations.push_back(std::move(ir));
            if (exhausted && iter < regime.iterations) {
                if (progress)
                    progress("run=" + rec.run_id + " truncated at iter=" +
                             std::to_string(iter) + " (pool exhausted)");
                break;
            }
        }
    }
    return rec;
}

MatrixResult run_matrix(const std::vector<RunConfig>& configs, int jobs,
                        const std::string& runs_dir, const ProgressFn& progress) {
    {
        std::set<std::string> ids;
        for (const RunConfig& cfg : configs)
            if (!ids.insert(run_id(cfg)).second)
                throw std::invalid_argument("run_matrix: duplicate run id " + run_id(cfg));
    }

    // Shared read-only datasets, loaded once per (path, downscale).
    std::map<std::string, LoadedDataset> datasets;
    std::vector<std::string> dataset_keys(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const RunConfig& cfg = configs[i];
        DatasetBundle bundle;
        int downscale = 0;
        {
            // peek the manifest first to resolve desk downscaling per kind
            std::ifstream f(cfg.dataset_path + "/manifest.json");
            if (!f)
                throw std::runtime_error("run_matrix: cannot open " + cfg.dataset_path +
                                         "/manifest.json");
            nlohmann::json j;
            f >> j;
            const DatasetKind kind =
                dataset_kind_from_string(j.at("dataset_kind").get<std::string>());
            downscale = resolve_run(cfg, kind).downscale;
        }
        const std::string key = cfg.dataset_path + "#" + std::to_string(downscale);
        dataset_keys[i] = key;
        if (datasets.find(key) == datasets.end()) {
            bundle = read_bundle(cfg.dataset_path);
            datasets.emplace(key, load_for_training(bundle, downscale));
        }
    }

    MatrixResult result;
    result.records.resize(configs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};
    std::mutex progress_mu;

    auto emit = [&](const std::string& line) {
        if (!progress) return;
        std::lock_guard<std::mutex> lock(progress_mu);
        progress(line);
    };

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= configs.size()) return;
            const RunConfig& cfg = configs[i];
            try {
                result.records[i] =
                    run_experiment(cfg, datasets.at(dataset_keys[i]), runs_dir, emit);
            } catch (const std::exception& e) {
                RunRecord failed;
                failed.run_id = run_id(cfg);
                failed.strategy = cfg.strategy;
                failed.seed = cfg.seed;
                failed.failed = true;
                failed.failure = e.what();
                result.records[i] = std::move(failed);
                ++failures;

                const std::string dir = runs_dir + "/" + run_id(cfg);
                std::error_code ec;
                fs::create_directories(dir, ec);
                std::ofstream f(dir + "/failed.json", std::ios::binary);
                if (f) {
                    nlohmann::json j;
                    j["error"] = e.what();
                    f << j.dump(2) << '\n';
                }
                emit("run=" + run_id(cfg) + " FAILED: " + e.what());
            }
        }
    };

    const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }
    result.failures = failures.load();
    return result;
}

} // namespace mmal
