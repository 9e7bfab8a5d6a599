#pragma once
// Independent oracles the test suites check the library against. Everything
// here is deliberately naive (explicit materialization, sorting, enumeration)
// and shares no code with the implementation paths it verifies.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "kkge/dataset.hpp"
#include "kkge/linalg.hpp"

namespace oracle {

// Dense block-matrix Kronecker product built entry by entry.
inline kkge::Mat kron_explicit(const kkge::Mat& x, const kkge::Mat& z) {
    kkge::Mat out(x.rows * z.rows, x.cols * z.cols);
    for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < out.cols; ++j)
            out.at(i, j) = x.at(i / z.rows, j / z.cols) * z.at(i % z.rows, j % z.cols);
    return out;
}

inline kkge::Vec matvec_explicit(const kkge::Mat& m, const kkge::Vec& v) {
    kkge::Vec out(m.rows, 0.0);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out[i] += m.at(i, j) * v[j];
    return out;
}

// Rank by sorting the unfiltered candidates, counting how many score strictly
// above the target (optimistic) or at least as high (pessimistic).
inline int rank_by_sorting(const kkge::Vec& scores, int target,
                           const std::vector<std::int32_t>& filter_out, bool pessimistic) {
    std::set<std::int32_t> removed(filter_out.begin(), filter_out.end());
    removed.erase(target);
    std::vector<double> kept;
    for (int x = 0; x < static_cast<int>(scores.size()); ++x)
        if (x != target && !removed.count(x)) kept.push_back(scores[x]);
    std::sort(kept.begin(), kept.end(), std::greater<>());
    const double s = scores[target];
    int above = 0;
    for (double v : kept)
        if (v > s || (pessimistic && v == s))
            ++above;
        else
            break;
    return 1 + above;
}

// Brute-force (head, rel) -> tails map over a list of triples.
inline std::set<std::pair<std::pair<int, int>, int>> triple_set(
    const std::vector<kkge::Triple>& ts) {
    std::set<std::pair<std::pair<int, int>, int>> out;
    for (const auto& t : ts) out.insert({{t.head, t.rel}, t.tail});
    return out;
}

// Expected MRR of a uniformly random ranking with n competing candidates
// (target included): E[1/rank] = H(n)/n.
inline double uniform_rank_mrr(int n_candidates) {
    double h = 0.0;
    for (int i = 1; i <= n_candidates; ++i) h += 1.0 / i;
    return h / n_candidates;
}

}  // namespace oracle
