// kkge: train, evaluate and sweep compressed knowledge graph embeddings.
//
// Exit codes: 0 success, 1 invalid flags, 2 data errors, 3 numerical abort.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kkge/kkge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
    std::string dataset;
    std::string data_root = "data";
    std::string train_path, valid_path, test_path;
    std::string model = "distmult";
    int dim = 16;
    int epochs = 1000;
    double lr = 0.01;
    int batch = 1024;
    std::uint64_t seed = 1;
    std::string loss = "ce";
    double alpha = 0.1;
    bool reciprocal = false;
    double fraction = 0.0;
    std::string tie = "optimistic";
    bool eval_train = true;
    bool filter_noise = true;
    int eval_every = 0;
    std::string out = "kkge-out";
};

void add_dataset_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--dataset", f.dataset, "Bundled dataset shortcut: umls or kinship");
    cmd->add_option("--data-root", f.data_root, "Directory holding the bundled datasets");
    cmd->add_option("--train", f.train_path, "Train triples (TSV: head\\trelation\\ttail)");
    cmd->add_option("--valid", f.valid_path, "Validation triples");
    cmd->add_option("--test", f.test_path, "Test triples");
}

void add_run_flags(CLI::App* cmd, CommonFlags& f) {
    add_dataset_flags(cmd, f);
    cmd->add_option("--model", f.model, "Scoring model: distmult, kd-rel, kd-distmult");
    cmd->add_option("--dim", f.dim, "Embedding dimension d (perfect square for kd models)");
    cmd->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--batch", f.batch, "Batch size")->capture_default_str();
    cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--loss", f.loss,
                    "Loss: ce, ce-ls, ce-lr (softmax family), bce, ls, lr (per-entity family)")
        ->capture_default_str();
    cmd->add_option("--alpha", f.alpha, "Smoothing / relaxation strength for ls and lr")
        ->capture_default_str();
    cmd->add_flag("--reciprocal", f.reciprocal, "Add inverse triples to every split");
    cmd->add_option("--tie", f.tie, "Rank ties: optimistic or pessimistic")
        ->capture_default_str();
    cmd->add_option("--eval-train", f.eval_train, "Also evaluate the train split (0/1)")
        ->capture_default_str();
    cmd->add_option("--eval-every", f.eval_every, "Mid-training evaluation period (0 = off)");
    cmd->add_option("--filter-noise", f.filter_noise,
                    "Keep injected noise triples in the evaluation filter (0/1)")
        ->capture_default_str();
    cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
}

kkge::RunSpec to_run_spec(const CommonFlags& f) {
    kkge::RunSpec spec;
    spec.dataset = f.dataset;
    spec.data_root = f.data_root;
    spec.train_path = f.train_path;
    spec.valid_path = f.valid_path;
    spec.test_path = f.test_path;
    spec.variant = kkge::variant_from_name(f.model);
    spec.d = f.dim;
    spec.loss.kind = kkge::loss_from_name(f.loss);
    spec.loss.alpha = kkge::loss_needs_alpha(spec.loss.kind) ? f.alpha : 0.0;
    spec.epochs = f.epochs;
    spec.lr = f.lr;
    spec.batch = f.batch;
    spec.seed = f.seed;
    spec.reciprocal = f.reciprocal;
    spec.noise_fraction = f.fraction;
    spec.noise_in_filter = f.filter_noise;
    spec.tie = kkge::tie_from_name(f.tie);
    spec.eval_train = f.eval_train;
    spec.eval_every = f.eval_every;
    spec.out_dir = f.out;

    if (spec.variant != kkge::Variant::distmult && kkge::exact_sqrt(spec.d) < 0)
        throw kkge::ConfigError("--dim " + std::to_string(spec.d) +
                                " is not a perfect square, required for " + f.model);
    return spec;
}

void print_reports(const kkge::RunOutput& out) {
    for (const kkge::EvalReport& r : out.reports)
        std::printf("%-6s  params=%lld  MRR=%.4f  @1=%.4f  @3=%.4f  @10=%.4f  (n=%zu)\n",
                    r.split.c_str(), static_cast<long long>(r.params), r.mrr, r.hits1, r.hits3,
                    r.hits10, r.n_triples);
}

int cmd_train(const CommonFlags& flags) {
    kkge::RunSpec spec = to_run_spec(flags);
    kkge::RunOutput out = kkge::run_experiment(spec);
    print_reports(out);
    std::printf("wrote %s/{report.csv,report.md,model.ckpt,run.json}\n", spec.out_dir.c_str());
    return 0;
}

int cmd_noise(const CommonFlags& flags) {
    if (flags.fraction == 0.0)
        throw kkge::ConfigError("--fraction 0 disables noise; use the train command instead");
    if (!(flags.fraction > 0.0 && flags.fraction < 1.0))
        throw kkge::ConfigError("--fraction must be in (0, 1)");
    return cmd_train(flags);
}

struct SweepRow {
    kkge::Variant variant;
    int dim = 0;
    kkge::LossSpec loss;
    std::uint64_t seed = 1;
    std::int64_t params = 0;
    bool ok = false;
    std::string error;
    double test_mrr = 0, test_h1 = 0, test_h3 = 0, test_h10 = 0;
    double train_mrr = -1;
};

kkge::LossSpec parse_loss_token(const std::string& tok, double default_alpha) {
    kkge::LossSpec spec;
    const std::size_t colon = tok.find(':');
    spec.kind = kkge::loss_from_name(tok.substr(0, colon));
    if (kkge::loss_needs_alpha(spec.kind))
        spec.alpha = colon == std::string::npos ? default_alpha : std::stod(tok.substr(colon + 1));
    return spec;
}

int cmd_sweep(const CommonFlags& flags, std::vector<int> dims, bool use_paper_grid,
              std::vector<std::string> model_names, std::vector<std::string> loss_tokens,
              std::vector<std::uint64_t> seeds, int jobs) {
    if (use_paper_grid) dims = kkge::paper_grid();
    if (dims.empty()) throw kkge::ConfigError("sweep: empty dimension list");
    if (model_names.empty()) model_names = {"distmult", "kd-rel", "kd-distmult"};
    if (loss_tokens.empty()) loss_tokens = {"bce"};
    if (seeds.empty()) seeds = {1};
    if (jobs < 1) jobs = 1;

    std::vector<SweepRow> rows;
    for (const std::string& m : model_names)
        for (int d : dims)
            for (const std::string& lt : loss_tokens)
                for (std::uint64_t s : seeds) {
                    SweepRow row;
                    row.variant = kkge::variant_from_name(m);
                    row.dim = d;
                    row.loss = parse_loss_token(lt, flags.alpha);
                    row.seed = s;
                    rows.push_back(row);
                }

    std::atomic<std::size_t> next{0};
    std::mutex io_mutex;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= rows.size()) break;
            SweepRow& row = rows[i];
            try {
                CommonFlags rf = flags;
                rf.out.clear();
                rf.model = kkge::variant_name(row.variant);
                rf.dim = row.dim;
                rf.seed = row.seed;
                kkge::RunSpec spec = to_run_spec(rf);
                spec.loss = row.loss;
                spec.out_dir.clear();
                kkge::RunOutput out = kkge::run_experiment(spec);
                row.params = out.params;
                if (const auto* r = out.report_for("test")) {
                    row.test_mrr = r->mrr;
                    row.test_h1 = r->hits1;
                    row.test_h3 = r->hits3;
                    row.test_h10 = r->hits10;
                }
                if (const auto* r = out.report_for("train")) row.train_mrr = r->mrr;
                row.ok = true;
                std::lock_guard<std::mutex> lock(io_mutex);
                std::printf("done %-12s d=%-4d loss=%-3s seed=%llu  test MRR %.4f (params %lld)\n",
                            kkge::variant_name(row.variant), row.dim,
                            kkge::loss_name(row.loss.kind),
                            static_cast<unsigned long long>(row.seed), row.test_mrr,
                            static_cast<long long>(row.params));
            } catch (const std::exception& e) {
                row.error = e.what();
                std::lock_guard<std::mutex> lock(io_mutex);
                std::fprintf(stderr, "row failed (%s d=%d): %s\n",
                             kkge::variant_name(row.variant), row.dim, e.what());
            }
        }
    };
    {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::string csv = "model,dim,loss,alpha,seed,params,test_mrr,test_hits1,test_hits3,test_hits10,"
                      "train_mrr,error\n";
    for (const SweepRow& row : rows) {
        csv += std::string(kkge::variant_name(row.variant)) + ',' + std::to_string(row.dim) + ',' +
               kkge::loss_name(row.loss.kind) + ',' + kkge::format_metric(row.loss.alpha) + ',' +
               std::to_string(row.seed) + ',';
        if (row.ok) {
            csv += std::to_string(row.params) + ',' + kkge::format_metric(row.test_mrr) + ',' +
                   kkge::format_metric(row.test_h1) + ',' + kkge::format_metric(row.test_h3) +
                   ',' + kkge::format_metric(row.test_h10) + ',' +
                   (row.train_mrr >= 0 ? kkge::format_metric(row.train_mrr) : std::string("")) +
                   ",\n";
        } else {
            csv += ",,,,,," + row.error + "\n";
        }
    }
    // Averaged row per model, params truncated to an integer as in the tables.
    for (const std::string& m : model_names) {
        const kkge::Variant v = kkge::variant_from_name(m);
        std::int64_t p_sum = 0;
        double mrr = 0, h1 = 0, h3 = 0, h10 = 0;
        int n = 0;
        for (const SweepRow& row : rows)
            if (row.ok && row.variant == v) {
                p_sum += row.params;
                mrr += row.test_mrr;
                h1 += row.test_h1;
                h3 += row.test_h3;
                h10 += row.test_h10;
                ++n;
            }
        if (n == 0) continue;
        csv += std::string("avg-") + kkge::variant_name(v) + ",,,,," + std::to_string(p_sum / n) +
               ',' + kkge::format_metric(mrr / n) + ',' + kkge::format_metric(h1 / n) + ',' +
               kkge::format_metric(h3 / n) + ',' + kkge::format_metric(h10 / n) + ",,\n";
    }

    fs::create_directories(flags.out);
    {
        std::ofstream f(flags.out + "/sweep.csv", std::ios::binary);
        f << csv;
    }
    json run;
    run["command"] = "sweep";
    run["dataset"] = flags.dataset;
    run["dims"] = dims;
    run["models"] = model_names;
    run["losses"] = loss_tokens;
    run["seeds"] = seeds;
    run["fraction"] = flags.fraction;
    run["jobs"] = jobs;
    run["version"] = kkge::kVersion;
    run["rows_ok"] = static_cast<int>(std::count_if(rows.begin(), rows.end(),
                                                    [](const SweepRow& r) { return r.ok; }));
    std::ofstream(flags.out + "/run.json", std::ios::binary) << run.dump(2) << "\n";

    const bool any_ok = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok; });
    if (!any_ok) throw kkge::DataError("sweep: every row failed");
    std::printf("wrote %s/sweep.csv\n", flags.out.c_str());
    return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& ckpt_path,
             std::vector<std::string> splits, const std::string& expect_model, bool head_side) {
    kkge::Checkpoint ckpt = kkge::load_checkpoint(ckpt_path);
    if (!expect_model.empty() &&
        kkge::variant_from_name(expect_model) != ckpt.model.variant)
        throw kkge::DataError("checkpoint holds a " +
                              std::string(kkge::variant_name(ckpt.model.variant)) +
                              " model, not " + expect_model);

    CommonFlags rf = flags;
    rf.reciprocal = ckpt.reciprocal;
    rf.fraction = ckpt.noise_fraction;
    rf.seed = ckpt.seed;
    kkge::RunSpec spec = to_run_spec(rf);
    spec.resolve_paths();
    kkge::TripleStore store = kkge::load_run_store(spec);
    if (store.num_entities() != ckpt.model.num_entities() ||
        store.num_relations() != ckpt.model.num_relations())
        throw kkge::DataError("checkpoint vocabulary does not match the dataset");

    if (splits.empty()) splits = {"test"};
    kkge::EvalOptions eopt;
    eopt.tie = kkge::tie_from_name(flags.tie);
    eopt.head_side = head_side;
    std::vector<kkge::EvalReport> reports;
    for (const std::string& s : splits) reports.push_back(kkge::evaluate(ckpt.model, store, s, eopt));
    for (const auto& r : reports)
        std::printf("%-6s  params=%lld  MRR=%.4f  @1=%.4f  @3=%.4f  @10=%.4f  (n=%zu)\n",
                    r.split.c_str(), static_cast<long long>(r.params), r.mrr, r.hits1, r.hits3,
                    r.hits10, r.n_triples);
    if (!flags.out.empty()) {
        fs::create_directories(flags.out);
        std::ofstream(flags.out + "/report.csv", std::ios::binary)
            << kkge::reports_to_csv(reports);
        std::ofstream(flags.out + "/report.md", std::ios::binary)
            << kkge::reports_to_markdown(reports, "evaluation of " + ckpt_path);
        json run = {{"command", "eval"}, {"ckpt", ckpt_path}, {"version", kkge::kVersion}};
        std::ofstream(flags.out + "/run.json", std::ios::binary) << run.dump(2) << "\n";
    }
    return 0;
}

int cmd_gradcheck(int dim, int trials, const std::string& out_dir) {
    std::vector<int> dims = dim > 0 ? std::vector<int>{dim} : std::vector<int>{4, 16};
    const kkge::Variant variants[] = {kkge::Variant::distmult, kkge::Variant::kd_rel,
                                      kkge::Variant::kd_distmult};
    const kkge::LossSpec losses[] = {{kkge::LossKind::bce, 0.0},
                                     {kkge::LossKind::label_smoothing, 0.1},
                                     {kkge::LossKind::label_relaxation, 0.1},
                                     {kkge::LossKind::ce, 0.0},
                                     {kkge::LossKind::ce_ls, 0.1},
                                     {kkge::LossKind::ce_lr, 0.1}};
    bool all_ok = true;
    std::printf("%-14s %-6s  %-10s  %s\n", "model", "loss", "max rel err", "status");
    std::string table;
    for (kkge::Variant v : variants)
        for (const kkge::LossSpec& l : losses) {
            double worst = 0.0;
            for (int d : dims)
                worst = std::max(worst, kkge::gradcheck_pair(v, l, d, trials,
                                                             /*seed=*/1000 + d));
            const bool ok = worst < 1e-5;
            all_ok = all_ok && ok;
            std::printf("%-14s %-6s  %-10.3e  %s\n", kkge::variant_name(v),
                        kkge::loss_name(l.kind), worst, ok ? "ok" : "FAIL");
            table += std::string(kkge::variant_name(v)) + "," + kkge::loss_name(l.kind) + "," +
                     std::to_string(worst) + "," + (ok ? "ok" : "fail") + "\n";
        }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream(out_dir + "/gradcheck.csv", std::ios::binary)
            << "model,loss,max_rel_err,status\n" << table;
        json run = {{"command", "gradcheck"}, {"trials", trials}, {"version", kkge::kVersion}};
        std::ofstream(out_dir + "/run.json", std::ios::binary) << run.dump(2) << "\n";
    }
    if (!all_ok) throw kkge::NumericError("gradient check failed");
    return 0;
}

int cmd_preprocess(const CommonFlags& flags, const std::string& out_file) {
    CommonFlags rf = flags;
    kkge::RunSpec spec = to_run_spec(rf);
    spec.resolve_paths();
    kkge::TripleStore store = kkge::ingest(spec.train_path, spec.valid_path, spec.test_path);
    if (flags.reciprocal) store = kkge::add_reciprocals(store);
    kkge::save_store(store, out_file);
    std::printf("cached %d entities, %d relations, %zu/%zu/%zu triples -> %s\n",
                store.num_entities(), store.num_relations(), store.train.size(),
                store.valid.size(), store.test.size(), out_file.c_str());
    json run = {{"command", "preprocess"}, {"out", out_file}, {"version", kkge::kVersion}};
    std::ofstream(out_file + ".run.json", std::ios::binary) << run.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    kkge::tune_allocator();
    CLI::App app{"compressed knowledge graph embeddings: DistMult and its "
                 "Kronecker-decomposed variants"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kkge::kVersion);

    CommonFlags train_flags;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a model and evaluate it");
    add_run_flags(train_cmd, train_flags);

    CommonFlags noise_flags;
    CLI::App* noise_cmd =
        app.add_subcommand("noise", "Train with uniformly sampled noise triples added to train");
    add_run_flags(noise_cmd, noise_flags);
    noise_cmd->add_option("--fraction", noise_flags.fraction,
                          "Noise fraction of |train| to inject, in (0, 1)");

    CommonFlags sweep_flags;
    std::vector<int> sweep_dims;
    bool sweep_paper_grid = false;
    std::vector<std::string> sweep_models, sweep_losses;
    std::vector<std::uint64_t> sweep_seeds;
    int sweep_jobs = 1;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Grid of runs over embedding sizes");
    add_run_flags(sweep_cmd, sweep_flags);
    sweep_flags.eval_train = false;
    sweep_cmd->add_option("--dims", sweep_dims, "Embedding sizes to sweep");
    sweep_cmd->add_flag("--paper-grid", sweep_paper_grid,
                        "Use the perfect-square grid 4..400");
    sweep_cmd->add_option("--models", sweep_models, "Models to sweep (default: all three)");
    sweep_cmd->add_option("--losses", sweep_losses,
                          "Loss tokens: bce, ls:<alpha>, lr:<alpha>");
    sweep_cmd->add_option("--seeds", sweep_seeds, "Seeds (default: 1)");
    sweep_cmd->add_option("--fraction", sweep_flags.fraction,
                          "Optional noise fraction applied to every row");
    sweep_cmd->add_option("--jobs", sweep_jobs, "Parallel worker threads")->capture_default_str();

    CommonFlags eval_flags;
    std::string eval_ckpt, eval_model;
    std::vector<std::string> eval_splits;
    bool eval_head_side = false;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    add_dataset_flags(eval_cmd, eval_flags);
    eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint file")->required();
    eval_cmd->add_option("--model", eval_model, "Require the checkpoint to hold this model");
    eval_cmd->add_option("--split", eval_splits, "Splits to evaluate (default: test)");
    eval_cmd->add_option("--tie", eval_flags.tie, "Rank ties: optimistic or pessimistic");
    eval_cmd->add_flag("--head-side", eval_head_side,
                       "Also rank heads through the inverse relations (needs --reciprocal data)");
    eval_cmd->add_option("--out", eval_flags.out, "Output directory (optional)");
    eval_flags.out.clear();

    int gc_dim = 0, gc_trials = 20;
    std::string gc_out;
    CLI::App* gc_cmd = app.add_subcommand(
        "gradcheck", "Finite-difference verification of every model/loss pair");
    gc_cmd->add_option("--dim", gc_dim, "Single dimension to check (default: 4 and 16)");
    gc_cmd->add_option("--trials", gc_trials, "Random instances per pair")->capture_default_str();
    gc_cmd->add_option("--out", gc_out, "Output directory (optional)");

    CommonFlags pre_flags;
    std::string pre_out = "store.kkge";
    CLI::App* pre_cmd = app.add_subcommand("preprocess", "Ingest triples into a binary cache");
    add_dataset_flags(pre_cmd, pre_flags);
    pre_cmd->add_flag("--reciprocal", pre_flags.reciprocal, "Add inverse triples first");
    pre_cmd->add_option("--out", pre_out, "Cache file to write")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // flag problems are exit 1, help is success
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_flags);
        if (noise_cmd->parsed()) return cmd_noise(noise_flags);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_flags, sweep_dims, sweep_paper_grid, sweep_models,
                             sweep_losses, sweep_seeds, sweep_jobs);
        if (eval_cmd->parsed())
            return cmd_eval(eval_flags, eval_ckpt, eval_splits, eval_model, eval_head_side);
        if (gc_cmd->parsed()) return cmd_gradcheck(gc_dim, gc_trials, gc_out);
        if (pre_cmd->parsed()) return cmd_preprocess(pre_flags, pre_out);
    } catch (const kkge::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const kkge::NumericError& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return 3;
    } catch (const kkge::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
