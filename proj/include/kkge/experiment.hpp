#pragma once
// One training-plus-evaluation experiment: resolve dataset paths, apply the
// configured augmentations, train, evaluate the requested splits, and write
// the run artifacts (report.csv, report.md, model.ckpt, run.json).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kkge/checkpoint.hpp"
#include "kkge/dataset.hpp"
#include "kkge/evaluator.hpp"
#include "kkge/trainer.hpp"
#include "kkge/version.hpp"

namespace kkge {

struct RunSpec {
    std::string dataset;  // bundled shortcut (resolved under data_root), or empty
    std::string data_root = "data";
    std::string train_path, valid_path, test_path;

    Variant variant = Variant::distmult;
    int d = 16;
    LossSpec loss;
    int epochs = 1000;
    double lr = 0.01;
    int batch = 1024;
    std::uint64_t seed = 1;
    bool reciprocal = false;
    double noise_fraction = 0.0;
    bool noise_in_filter = true;
    TiePolicy tie = TiePolicy::optimistic;
    bool eval_train = true;
    int eval_every = 0;
    std::string out_dir;  // empty: keep everything in memory

    void resolve_paths() {
        if (!dataset.empty()) {
            const std::string base = data_root + "/" + dataset;
            train_path = base + "/train.txt";
            valid_path = base + "/valid.txt";
            test_path = base + "/test.txt";
        }
        if (train_path.empty()) throw ConfigError("no dataset: pass --dataset or --train");
    }
};

struct RunOutput {
    std::vector<EvalReport> reports;
    TrainLog log;
    std::int64_t params = 0;
    double wall_seconds = 0.0;

    const EvalReport* report_for(const std::string& split) const {
        for (const auto& r : reports)
            if (r.split == split) return &r;
        return nullptr;
    }
};

inline TripleStore load_run_store(const RunSpec& spec) {
    TripleStore store = ingest(spec.train_path, spec.valid_path, spec.test_path);
    if (spec.reciprocal) store = add_reciprocals(store);
    if (spec.noise_fraction > 0.0) {
        store = inject_noise(store, spec.noise_fraction, spec.seed);
        if (!spec.noise_in_filter) {
            TripleStore clean = store;
            clean.train.resize(clean.train.size() - clean.noise_count);
            clean.rebuild_filter();
            store.filter = std::move(clean.filter);
        }
    }
    return store;
}

inline nlohmann::json run_spec_json(const RunSpec& spec) {
    return nlohmann::json{{"dataset", spec.dataset},
                          {"train", spec.train_path},
                          {"valid", spec.valid_path},
                          {"test", spec.test_path},
                          {"model", variant_name(spec.variant)},
                          {"dim", spec.d},
                          {"loss", loss_name(spec.loss.kind)},
                          {"alpha", spec.loss.alpha},
                          {"epochs", spec.epochs},
                          {"lr", spec.lr},
                          {"batch", spec.batch},
                          {"seed", spec.seed},
                          {"reciprocal", spec.reciprocal},
                          {"fraction", spec.noise_fraction},
                          {"tie", spec.tie == TiePolicy::optimistic ? "optimistic" : "pessimistic"},
                          {"eval_train", spec.eval_train},
                          {"eval_every", spec.eval_every}};
}

inline RunOutput run_experiment(RunSpec spec) {
    spec.resolve_paths();
    const auto t0 = std::chrono::steady_clock::now();
    TripleStore store = load_run_store(spec);

    TrainConfig cfg;
    cfg.variant = spec.variant;
    cfg.d = spec.d;
    cfg.loss = spec.loss;
    cfg.epochs = spec.epochs;
    cfg.lr = spec.lr;
    cfg.batch_size = spec.batch;
    cfg.seed = spec.seed;
    cfg.reciprocal = spec.reciprocal;
    cfg.noise_fraction = spec.noise_fraction;
    cfg.train_path = spec.train_path;
    cfg.valid_path = spec.valid_path;
    cfg.test_path = spec.test_path;
    cfg.eval_every = spec.eval_every;

    TrainResult trained = train(store, cfg);

    RunOutput out;
    out.log = std::move(trained.log);
    out.params = param_count(trained.model);
    EvalOptions eopt;
    eopt.tie = spec.tie;
    if (spec.eval_train) out.reports.push_back(evaluate(trained.model, store, "train", eopt));
    if (!store.valid.empty()) out.reports.push_back(evaluate(trained.model, store, "valid", eopt));
    if (!store.test.empty()) out.reports.push_back(evaluate(trained.model, store, "test", eopt));
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!spec.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(spec.out_dir);
        {
            std::ofstream f(spec.out_dir + "/report.csv", std::ios::binary);
            f << reports_to_csv(out.reports);
        }
        {
            std::ofstream f(spec.out_dir + "/report.md", std::ios::binary);
            std::string title = std::string(variant_name(spec.variant)) + " d=" +
                                std::to_string(spec.d) + " loss=" + loss_name(spec.loss.kind) +
                                (spec.dataset.empty() ? "" : " on " + spec.dataset);
            f << reports_to_markdown(out.reports, title);
        }
        Checkpoint ckpt;
        ckpt.model = std::move(trained.model);
        ckpt.adam = std::move(trained.adam);
        ckpt.vocab = store.vocab;
        ckpt.epoch = spec.epochs;
        ckpt.loss = spec.loss;
        ckpt.seed = spec.seed;
        ckpt.lr = spec.lr;
        ckpt.batch_size = spec.batch;
        ckpt.reciprocal = spec.reciprocal;
        ckpt.noise_fraction = spec.noise_fraction;
        save_checkpoint(spec.out_dir + "/model.ckpt", ckpt);

        nlohmann::json run = run_spec_json(spec);
        run["version"] = kVersion;
        run["wall_seconds"] = out.wall_seconds;
        run["final_epoch_loss"] = out.log.epoch_loss.empty() ? 0.0 : out.log.epoch_loss.back();
        run["params"] = out.params;
        nlohmann::json splits = nlohmann::json::object();
        for (const EvalReport& r : out.reports)
            splits[r.split] = {{"mrr", r.mrr},       {"hits1", r.hits1}, {"hits3", r.hits3},
                               {"hits10", r.hits10}, {"n", r.n_triples}, {"seconds", r.wall_seconds}};
        run["splits"] = splits;
        std::ofstream f(spec.out_dir + "/run.json", std::ios::binary);
        f << run.dump(2) << "\n";
    }
    return out;
}

// The embedding-size grid used by the sweeps: perfect squares, 2^2 .. 20^2.
inline std::vector<int> paper_grid() {
    std::vector<int> dims;
    for (int k = 2; k <= 20; ++k) dims.push_back(k * k);
    return dims;
}

}  // namespace kkge
