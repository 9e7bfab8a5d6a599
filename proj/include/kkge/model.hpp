#pragma once
// The three scoring models over shared entity/relation embedding matrices:
//
//   distmult     score = bn2(bn0(h) o bn1(r)) . t           d-dim h, r, t
//   kd-rel       relation stored at sqrt(d), decompressed as r (x) r before
//                its batch norm; otherwise identical to distmult
//   kd-distmult  everything stored at m = sqrt(d); with w = (h'(x)h') o
//                (r'(x)r') reshaped to m x m, the score against t is the
//                column-sum vector of the reshape dotted with the stored t,
//                so scoring all tails costs O(m^2 B + m |E| B)
//
// Batch norm placement gives distmult / kd-rel exactly 6d extra trainable
// parameters (head, relation, product layers) and kd-distmult 4m (stored head
// and stored relation layers). Tails are always raw embedding rows.

#include <cstdint>
#include <string>
#include <vector>

#include "kkge/batchnorm.hpp"
#include "kkge/errors.hpp"
#include "kkge/linalg.hpp"
#include "kkge/rng.hpp"

namespace kkge {

enum class Variant { distmult, kd_rel, kd_distmult };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::distmult: return "distmult";
        case Variant::kd_rel: return "kd-rel";
        case Variant::kd_distmult: return "kd-distmult";
    }
    return "?";
}

inline Variant variant_from_name(const std::string& s) {
    if (s == "distmult") return Variant::distmult;
    if (s == "kd-rel") return Variant::kd_rel;
    if (s == "kd-distmult") return Variant::kd_distmult;
    throw ConfigError("unknown model: " + s);
}

inline int exact_sqrt(int d) {
    int m = static_cast<int>(std::sqrt(static_cast<double>(d)));
    while (m * m < d) ++m;
    while (m * m > d) --m;
    return m * m == d ? m : -1;
}

struct ModelState {
    Variant variant = Variant::distmult;
    int d = 0;         // configured dimension
    int ent_dim = 0;   // stored entity width
    int rel_dim = 0;   // stored relation width
    Mat E;             // |E| x ent_dim
    Mat R;             // |R| x rel_dim
    std::vector<BatchNorm> bn;  // distmult/kd-rel: head, rel, product; kd-distmult: head, rel

    std::int32_t num_entities() const { return E.rows; }
    std::int32_t num_relations() const { return R.rows; }
};

// Trainable parameter count from the closed formulas.
inline std::int64_t param_count(Variant variant, int d, std::int64_t num_entities,
                                std::int64_t num_relations) {
    switch (variant) {
        case Variant::distmult: return (num_entities + num_relations) * d + 6ll * d;
        case Variant::kd_rel: {
            const int root = exact_sqrt(d);
            if (root < 0) throw ConfigError("kd-rel needs a perfect-square dimension");
            return num_entities * static_cast<std::int64_t>(d) + num_relations * root + 6ll * d;
        }
        case Variant::kd_distmult: {
            const int m = exact_sqrt(d);
            if (m < 0) throw ConfigError("kd-distmult needs a perfect-square dimension");
            return (num_entities + num_relations) * static_cast<std::int64_t>(m) + 4ll * m;
        }
    }
    throw ConfigError("unreachable variant");
}

inline std::int64_t param_count(const ModelState& s) {
    return param_count(s.variant, s.d, s.num_entities(), s.num_relations());
}

namespace detail {

inline void glorot_fill(Mat& m, Rng& rng) {
    const double limit = std::sqrt(6.0 / (m.rows + m.cols));
    for (double& x : m.a) x = rng.uniform(-limit, limit);
}

}  // namespace detail

inline ModelState init(Variant variant, int d, std::int32_t num_entities,
                       std::int32_t num_relations, std::uint64_t seed) {
    if (d < 1) throw ConfigError("dimension must be positive");
    ModelState s;
    s.variant = variant;
    s.d = d;
    switch (variant) {
        case Variant::distmult:
            s.ent_dim = s.rel_dim = d;
            s.bn = {BatchNorm(d), BatchNorm(d), BatchNorm(d)};
            break;
        case Variant::kd_rel: {
            const int root = exact_sqrt(d);
            if (root < 0)
                throw ConfigError("kd-rel: dimension " + std::to_string(d) +
                                  " is not a perfect square");
            s.ent_dim = d;
            s.rel_dim = root;
            s.bn = {BatchNorm(d), BatchNorm(d), BatchNorm(d)};
            break;
        }
        case Variant::kd_distmult: {
            const int m = exact_sqrt(d);
            if (m < 0)
                throw ConfigError("kd-distmult: dimension " + std::to_string(d) +
                                  " is not a perfect square");
            s.ent_dim = s.rel_dim = m;
            s.bn = {BatchNorm(m), BatchNorm(m)};
            break;
        }
    }
    s.E = Mat(num_entities, s.ent_dim);
    s.R = Mat(num_relations, s.rel_dim);
    Rng rng = Rng::stream(seed, "init");
    detail::glorot_fill(s.E, rng);
    detail::glorot_fill(s.R, rng);
    return s;
}

// ---- scalar scores (batch-norm-free kernels) -------------------------------

inline double score_distmult(const Vec& h, const Vec& r, const Vec& t) {
    if (h.size() != r.size() || h.size() != t.size())
        throw ConfigError("score_distmult: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) acc += h[i] * r[i] * t[i];
    return acc;
}

inline double score_kd_rel(const Vec& h, const Vec& r_stored, const Vec& t) {
    if (h.size() != r_stored.size() * r_stored.size() || h.size() != t.size())
        throw ConfigError("score_kd_rel: dimension mismatch");
    return score_distmult(h, kron_vec(r_stored, r_stored), t);
}

inline double score_kd_full(const Vec& h_stored, const Vec& r_stored, const Vec& t_stored) {
    const std::size_t m = h_stored.size();
    if (r_stored.size() != m || t_stored.size() != m)
        throw ConfigError("score_kd_full: dimension mismatch");
    const Vec w = hadamard(kron_vec(h_stored, h_stored), kron_vec(r_stored, r_stored));
    const Mat mat = reshape(w, static_cast<int>(m), static_cast<int>(m));
    const Vec mt = matvec(mat, t_stored);
    double acc = 0.0;
    for (double x : mt) acc += x;
    return acc;
}

// Gradient of the self-Kronecker map x -> x (x) x: for upstream g of length
// n^2, out[k] = sum_j g[k n + j] x[j] + sum_i g[i n + k] x[i].
inline void self_kron_grad(const double* x, const double* g, double* out, int n) {
    for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        const double* row = g + static_cast<std::size_t>(k) * n;
        for (int j = 0; j < n; ++j) acc += row[j] * x[j];
        for (int i = 0; i < n; ++i) acc += g[static_cast<std::size_t>(i) * n + k] * x[i];
        out[k] = acc;
    }
}

// ---- batched forward / backward --------------------------------------------

struct Gradients {
    Mat dE;
    Mat dR;
    std::vector<Vec> dgamma;
    std::vector<Vec> dbeta;
};

struct ForwardCache {
    std::vector<std::int32_t> heads, rels;
    std::vector<BatchNorm::Cache> bn;
    Mat head_n, rel_n;  // post-batch-norm head / relation features
    Mat product;        // distmult, kd-rel: bn2 output W used for tail grads
    Mat kron_head, kron_rel;  // kd-distmult: per-row m^2 self-Kronecker factors
    Mat colsum;               // kd-distmult: per-row column sums (B x m)
};

// Logits for every entity, one row per (head, rel) in the batch. In train
// mode batch statistics are used (and optionally folded into the running
// estimates); a train-mode batch of one row uses running statistics.
inline Mat forward_batch(ModelState& state, const std::vector<std::int32_t>& heads,
                         const std::vector<std::int32_t>& rels, Mode mode, bool update_running,
                         ForwardCache& cache) {
    if (heads.size() != rels.size()) throw ConfigError("forward_batch: batch size mismatch");
    const int b = static_cast<int>(heads.size());
    cache.heads = heads;
    cache.rels = rels;
    cache.bn.assign(state.bn.size(), {});
    update_running = update_running && mode == Mode::train;

    if (state.variant == Variant::kd_distmult) {
        const int m = state.ent_dim;
        Mat hs(b, m), rs(b, m);
        for (int i = 0; i < b; ++i) {
            std::copy_n(state.E.row(heads[i]), m, hs.row(i));
            std::copy_n(state.R.row(rels[i]), m, rs.row(i));
        }
        cache.head_n = state.bn[0].forward(hs, mode, update_running, cache.bn[0]);
        cache.rel_n = state.bn[1].forward(rs, mode, update_running, cache.bn[1]);
        cache.kron_head = Mat(b, m * m);
        cache.kron_rel = Mat(b, m * m);
        cache.colsum = Mat(b, m);
        for (int i = 0; i < b; ++i) {
            const double* h = cache.head_n.row(i);
            const double* r = cache.rel_n.row(i);
            double* kh = cache.kron_head.row(i);
            double* kr = cache.kron_rel.row(i);
            double* q = cache.colsum.row(i);
            for (int p = 0; p < m; ++p)
                for (int j = 0; j < m; ++j) {
                    kh[p * m + j] = h[p] * h[j];
                    kr[p * m + j] = r[p] * r[j];
                }
            for (int j = 0; j < m; ++j) {
                double acc = 0.0;
                for (int p = 0; p < m; ++p) acc += kh[p * m + j] * kr[p * m + j];
                q[j] = acc;
            }
        }
        Mat logits;
        matmul_abt(cache.colsum, state.E, logits);
        return logits;
    }

    const int d = state.d;
    Mat hs(b, d), rv(b, d);
    for (int i = 0; i < b; ++i) std::copy_n(state.E.row(heads[i]), d, hs.row(i));
    if (state.variant == Variant::distmult) {
        for (int i = 0; i < b; ++i) std::copy_n(state.R.row(rels[i]), d, rv.row(i));
    } else {
        const int root = state.rel_dim;
        for (int i = 0; i < b; ++i) {
            const double* r = state.R.row(rels[i]);
            double* dst = rv.row(i);
            for (int p = 0; p < root; ++p)
                for (int j = 0; j < root; ++j) dst[p * root + j] = r[p] * r[j];
        }
    }
    cache.head_n = state.bn[0].forward(hs, mode, update_running, cache.bn[0]);
    cache.rel_n = state.bn[1].forward(rv, mode, update_running, cache.bn[1]);
    Mat prod(b, d);
    for (int i = 0; i < b; ++i) {
        const double* hn = cache.head_n.row(i);
        const double* rn = cache.rel_n.row(i);
        double* p = prod.row(i);
        for (int j = 0; j < d; ++j) p[j] = hn[j] * rn[j];
    }
    cache.product = state.bn[2].forward(prod, mode, update_running, cache.bn[2]);
    Mat logits;
    matmul_abt(cache.product, state.E, logits);
    return logits;
}

// Logits for a single (head, rel) pair. Eval mode is pure.
inline Vec score_all_tails(ModelState& state, std::int32_t head, std::int32_t rel, Mode mode) {
    ForwardCache cache;
    Mat logits = forward_batch(state, {head}, {rel}, mode, /*update_running=*/false, cache);
    return Vec(logits.row(0), logits.row(0) + logits.cols);
}

// Analytic gradients, accumulated over the batch. upstream is dLoss/dLogits.
inline Gradients backward(const ModelState& state, const ForwardCache& cache,
                          const Mat& upstream) {
    if (!all_finite(upstream)) throw NumericError("backward: non-finite upstream gradient");
    const int b = upstream.rows;
    if (upstream.cols != state.num_entities() || b != static_cast<int>(cache.heads.size()))
        throw ConfigError("backward: upstream shape mismatch");

    Gradients g;
    g.dE = Mat(state.E.rows, state.E.cols);
    g.dR = Mat(state.R.rows, state.R.cols);
    g.dgamma.resize(state.bn.size());
    g.dbeta.resize(state.bn.size());

    if (state.variant == Variant::kd_distmult) {
        const int m = state.ent_dim;
        // logits = colsum . E^T
        Mat dcolsum(b, m);
        matmul_acc(upstream, state.E, dcolsum);
        matmul_atb_acc(upstream, cache.colsum, g.dE);  // tail contributions

        Mat dhead_n(b, m), drel_n(b, m);
        Vec dkh(static_cast<std::size_t>(m) * m), dkr(static_cast<std::size_t>(m) * m);
        for (int i = 0; i < b; ++i) {
            const double* dq = dcolsum.row(i);
            const double* kh = cache.kron_head.row(i);
            const double* kr = cache.kron_rel.row(i);
            // colsum[j] = sum_p kh[p m + j] kr[p m + j]
            for (int p = 0; p < m; ++p)
                for (int j = 0; j < m; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(p) * m + j;
                    dkh[idx] = dq[j] * kr[idx];
                    dkr[idx] = dq[j] * kh[idx];
                }
            self_kron_grad(cache.head_n.row(i), dkh.data(), dhead_n.row(i), m);
            self_kron_grad(cache.rel_n.row(i), dkr.data(), drel_n.row(i), m);
        }
        Mat dhs, drs;
        state.bn[0].backward(cache.bn[0], dhead_n, dhs, g.dgamma[0], g.dbeta[0]);
        state.bn[1].backward(cache.bn[1], drel_n, drs, g.dgamma[1], g.dbeta[1]);
        for (int i = 0; i < b; ++i) {
            double* de = g.dE.row(cache.heads[i]);
            const double* src = dhs.row(i);
            for (int j = 0; j < m; ++j) de[j] += src[j];
            double* dr = g.dR.row(cache.rels[i]);
            const double* srcr = drs.row(i);
            for (int j = 0; j < m; ++j) dr[j] += srcr[j];
        }
        return g;
    }

    const int d = state.d;
    // logits = product . E^T
    Mat dproduct(b, d);
    matmul_acc(upstream, state.E, dproduct);
    matmul_atb_acc(upstream, cache.product, g.dE);  // tail contributions

    Mat dprod_in;
    state.bn[2].backward(cache.bn[2], dproduct, dprod_in, g.dgamma[2], g.dbeta[2]);
    Mat dhead_n(b, d), drel_n(b, d);
    for (int i = 0; i < b; ++i) {
        const double* dp = dprod_in.row(i);
        const double* hn = cache.head_n.row(i);
        const double* rn = cache.rel_n.row(i);
        double* dh = dhead_n.row(i);
        double* dr = drel_n.row(i);
        for (int j = 0; j < d; ++j) {
            dh[j] = dp[j] * rn[j];
            dr[j] = dp[j] * hn[j];
        }
    }
    Mat dhs, drv;
    state.bn[0].backward(cache.bn[0], dhead_n, dhs, g.dgamma[0], g.dbeta[0]);
    state.bn[1].backward(cache.bn[1], drel_n, drv, g.dgamma[1], g.dbeta[1]);
    for (int i = 0; i < b; ++i) {
        double* de = g.dE.row(cache.heads[i]);
        const double* src = dhs.row(i);
        for (int j = 0; j < d; ++j) de[j] += src[j];
    }
    if (state.variant == Variant::distmult) {
        for (int i = 0; i < b; ++i) {
            double* dr = g.dR.row(cache.rels[i]);
            const double* src = drv.row(i);
            for (int j = 0; j < d; ++j) dr[j] += src[j];
        }
    } else {
        const int root = state.rel_dim;
        Vec tmp(root);
        for (int i = 0; i < b; ++i) {
            self_kron_grad(state.R.row(cache.rels[i]), drv.row(i), tmp.data(), root);
            double* dr = g.dR.row(cache.rels[i]);
            for (int j = 0; j < root; ++j) dr[j] += tmp[j];
        }
    }
    return g;
}

}  // namespace kkge
