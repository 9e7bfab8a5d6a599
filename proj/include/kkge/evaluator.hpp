#pragma once
// Filtered tail ranking: for each (h, r, t) the logits over all entities are
// computed in eval mode, every other known-true tail of (h, r) is removed
// from the competition, and the rank of t among the survivors gives MRR and
// Hits@{1,3,10}. Optimistic tie handling by default (only strictly greater
// scores outrank); the pessimistic variant is available for sensitivity runs.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "kkge/dataset.hpp"
#include "kkge/errors.hpp"
#include "kkge/model.hpp"

namespace kkge {

enum class TiePolicy { optimistic, pessimistic };

inline TiePolicy tie_from_name(const std::string& s) {
    if (s == "optimistic") return TiePolicy::optimistic;
    if (s == "pessimistic") return TiePolicy::pessimistic;
    throw ConfigError("unknown tie policy: " + s);
}

struct EvalReport {
    std::string split;
    double mrr = 0.0;
    double hits1 = 0.0;
    double hits3 = 0.0;
    double hits10 = 0.0;
    std::int64_t params = 0;
    std::size_t n_triples = 0;
    double wall_seconds = 0.0;
};

// Rank of `target` among entities not in `filter_out` (target itself always
// competes). filter_out must be sorted.
inline int filtered_rank(const Vec& scores, std::int32_t target,
                         const std::vector<std::int32_t>& filter_out,
                         TiePolicy tie = TiePolicy::optimistic) {
    if (target < 0 || static_cast<std::size_t>(target) >= scores.size())
        throw ConfigError("filtered_rank: target index out of range");
    const double s_target = scores[static_cast<std::size_t>(target)];
    int rank = 1;
    std::size_t f = 0;
    for (std::int32_t x = 0; x < static_cast<std::int32_t>(scores.size()); ++x) {
        while (f < filter_out.size() && filter_out[f] < x) ++f;
        if (x == target) continue;
        if (f < filter_out.size() && filter_out[f] == x) continue;
        const double s = scores[static_cast<std::size_t>(x)];
        if (s > s_target || (tie == TiePolicy::pessimistic && s == s_target)) ++rank;
    }
    return rank;
}

struct EvalOptions {
    TiePolicy tie = TiePolicy::optimistic;
    bool filtered = true;    // false: raw ranking, nothing removed
    bool head_side = false;  // also rank heads via the inverse relation
    int batch = 512;
};

inline EvalReport evaluate(ModelState& state, const TripleStore& store, const std::string& split,
                           const EvalOptions& opt = {}) {
    if (state.num_entities() != store.num_entities() ||
        state.num_relations() != store.num_relations())
        throw DataError("evaluate: model and store vocabulary sizes differ");
    if (opt.head_side && !store.reciprocals_added)
        throw ConfigError("head-side evaluation needs reciprocal augmentation");
    const std::vector<Triple>& triples = store.split(split);
    const auto t0 = std::chrono::steady_clock::now();

    // each query is a (head, rel) pair whose `answer` entity gets ranked
    std::vector<Triple> queries;
    queries.reserve(triples.size() * (opt.head_side ? 2 : 1));
    for (const Triple& t : triples) {
        queries.push_back(t);
        if (opt.head_side) queries.push_back({t.tail, store.inverse_relation(t.rel), t.head});
    }

    EvalReport rep;
    rep.split = split;
    rep.n_triples = queries.size();
    rep.params = param_count(state);

    double rr_sum = 0.0;
    std::size_t h1 = 0, h3 = 0, h10 = 0;
    static const std::vector<std::int32_t> kNoFilter;

    std::vector<std::int32_t> heads, rels;
    std::vector<std::int32_t> scratch;
    for (std::size_t base = 0; base < queries.size(); base += opt.batch) {
        const std::size_t end = std::min(queries.size(), base + opt.batch);
        heads.clear();
        rels.clear();
        for (std::size_t i = base; i < end; ++i) {
            heads.push_back(queries[i].head);
            rels.push_back(queries[i].rel);
        }
        ForwardCache cache;
        Mat logits = forward_batch(state, heads, rels, Mode::eval, false, cache);
        for (std::size_t i = base; i < end; ++i) {
            const Triple& t = queries[i];
            const double* row = logits.row(static_cast<int>(i - base));
            Vec scores(row, row + logits.cols);
            const std::vector<std::int32_t>* filt = &kNoFilter;
            if (opt.filtered) {
                if (const auto* tails = store.filtered_tails(t.head, t.rel)) {
                    scratch.clear();
                    for (std::int32_t x : *tails)
                        if (x != t.tail) scratch.push_back(x);
                    filt = &scratch;
                }
            }
            const int rank = filtered_rank(scores, t.tail, *filt, opt.tie);
            rr_sum += 1.0 / rank;
            h1 += rank <= 1;
            h3 += rank <= 3;
            h10 += rank <= 10;
        }
    }
    const double n = static_cast<double>(queries.size());
    if (!queries.empty()) {
        rep.mrr = rr_sum / n;
        rep.hits1 = h1 / n;
        rep.hits3 = h3 / n;
        rep.hits10 = h10 / n;
    }
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---- report serialization ---------------------------------------------------
// CSV and Markdown mirror the table layout |Theta|, MRR, @1, @3, @10. Timing
// lives in run.json, never in the CSV, so identical runs produce identical
// bytes.

inline std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string reports_to_csv(const std::vector<EvalReport>& reports) {
    std::string out = "split,n_triples,params,mrr,hits1,hits3,hits10\n";
    for (const EvalReport& r : reports) {
        out += r.split + ',' + std::to_string(r.n_triples) + ',' + std::to_string(r.params) + ',' +
               format_metric(r.mrr) + ',' + format_metric(r.hits1) + ',' + format_metric(r.hits3) +
               ',' + format_metric(r.hits10) + '\n';
    }
    return out;
}

inline std::string reports_to_markdown(const std::vector<EvalReport>& reports,
                                       const std::string& title) {
    std::string out = "### " + title + "\n\n";
    out += "| split | |Θ| | MRR | @1 | @3 | @10 |\n";
    out += "|---|---|---|---|---|---|\n";
    for (const EvalReport& r : reports) {
        out += "| " + r.split + " | " + std::to_string(r.params) + " | " + format_metric(r.mrr) +
               " | " + format_metric(r.hits1) + " | " + format_metric(r.hits3) + " | " +
               format_metric(r.hits10) + " |\n";
    }
    return out;
}

}  // namespace kkge
