#pragma once
// Central finite-difference verification of the analytic gradients, over
// every trainable tensor (embeddings and batch-norm affine parameters).
// Instances falling too close to the label-relaxation credal boundary are
// redrawn: the loss is continuous but not differentiable there.

#include <cstdint>
#include <vector>

#include "kkge/losses.hpp"
#include "kkge/model.hpp"
#include "kkge/rng.hpp"

namespace kkge {

struct GradCheckCase {
    ModelState model;
    std::vector<std::int32_t> heads, rels, tails;
    LossSpec loss;
};

// Mean-over-rows batch loss in train mode, no state mutation.
inline double batch_loss(GradCheckCase& c) {
    ForwardCache cache;
    Mat logits = forward_batch(c.model, c.heads, c.rels, Mode::train, false, cache);
    const auto n_entities = static_cast<std::size_t>(c.model.num_entities());
    Vec row(n_entities), grad(n_entities);
    double total = 0.0;
    for (std::size_t i = 0; i < c.heads.size(); ++i) {
        std::copy_n(logits.row(static_cast<int>(i)), n_entities, row.begin());
        total += loss_value_grad(c.loss, row, static_cast<std::size_t>(c.tails[i]), grad);
    }
    return total / static_cast<double>(c.heads.size());
}

inline Gradients analytic_grads(GradCheckCase& c) {
    ForwardCache cache;
    Mat logits = forward_batch(c.model, c.heads, c.rels, Mode::train, false, cache);
    const auto n_entities = static_cast<std::size_t>(c.model.num_entities());
    const int b = static_cast<int>(c.heads.size());
    Mat dlogits(b, static_cast<int>(n_entities));
    Vec row(n_entities), grad(n_entities);
    for (int i = 0; i < b; ++i) {
        std::copy_n(logits.row(i), n_entities, row.begin());
        loss_value_grad(c.loss, row, static_cast<std::size_t>(c.tails[i]), grad);
        double* dst = dlogits.row(i);
        for (std::size_t j = 0; j < n_entities; ++j) dst[j] = grad[j] / b;
    }
    return backward(c.model, cache, dlogits);
}

namespace detail {

inline double rel_err(double a, double f) {
    const double diff = std::abs(a - f);
    if (diff <= 1e-8) return 0.0;  // absolute floor
    return diff / std::max(std::abs(a), std::abs(f));
}

// Collect (parameter, analytic-gradient) pointer pairs in a fixed order.
inline std::vector<std::pair<double*, const double*>> param_grad_pairs(ModelState& m,
                                                                       const Gradients& g) {
    std::vector<std::pair<double*, const double*>> out;
    for (std::size_t i = 0; i < m.E.a.size(); ++i) out.emplace_back(&m.E.a[i], &g.dE.a[i]);
    for (std::size_t i = 0; i < m.R.a.size(); ++i) out.emplace_back(&m.R.a[i], &g.dR.a[i]);
    for (std::size_t l = 0; l < m.bn.size(); ++l) {
        for (std::size_t i = 0; i < m.bn[l].gamma.size(); ++i)
            out.emplace_back(&m.bn[l].gamma[i], &g.dgamma[l][i]);
        for (std::size_t i = 0; i < m.bn[l].beta.size(); ++i)
            out.emplace_back(&m.bn[l].beta[i], &g.dbeta[l][i]);
    }
    return out;
}

}  // namespace detail

// Max relative error of `grads` against central finite differences of the
// batch loss. Taking grads as an argument lets the harness verify itself
// against a deliberately corrupted gradient.
inline double compare_with_fd(GradCheckCase& c, const Gradients& grads, double step = 1e-5) {
    auto pairs = detail::param_grad_pairs(c.model, grads);
    double worst = 0.0;
    for (auto& [theta, analytic] : pairs) {
        const double saved = *theta;
        *theta = saved + step;
        const double up = batch_loss(c);
        *theta = saved - step;
        const double down = batch_loss(c);
        *theta = saved;
        const double fd = (up - down) / (2.0 * step);
        worst = std::max(worst, detail::rel_err(*analytic, fd));
    }
    return worst;
}

// One random instance for a (variant, loss) pair at dimension d.
inline GradCheckCase make_case(Variant variant, LossSpec loss, int d, std::uint64_t seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng = Rng::stream(seed, "gradcheck", attempt);
        const auto n_entities = static_cast<std::int32_t>(5 + rng.next_below(4));
        const auto n_relations = static_cast<std::int32_t>(2 + rng.next_below(3));
        GradCheckCase c;
        c.loss = loss;
        c.model = init(variant, d, n_entities, n_relations, rng.next_u64());
        for (BatchNorm& bn : c.model.bn) {
            for (double& g : bn.gamma) g *= rng.uniform(0.75, 1.25);
            for (double& b : bn.beta) b += rng.uniform(-0.3, 0.3);
        }
        const int b = 3;
        for (int i = 0; i < b; ++i) {
            c.heads.push_back(static_cast<std::int32_t>(rng.next_below(n_entities)));
            c.rels.push_back(static_cast<std::int32_t>(rng.next_below(n_relations)));
            c.tails.push_back(static_cast<std::int32_t>(rng.next_below(n_entities)));
        }
        if (loss.kind != LossKind::label_relaxation && loss.kind != LossKind::ce_lr) return c;

        // Redraw if any predicted probability sits near the credal boundary,
        // where the relaxation losses kink and finite differences are invalid.
        ForwardCache cache;
        Mat logits = forward_batch(c.model, c.heads, c.rels, Mode::train, false, cache);
        bool safe = true;
        for (int i = 0; i < logits.rows && safe; ++i) {
            if (loss.kind == LossKind::label_relaxation) {
                for (int x = 0; x < logits.cols; ++x) {
                    const double p = sigmoid(logits.at(i, x));
                    const double boundary = x == c.tails[i] ? 1.0 - loss.alpha : loss.alpha;
                    if (std::abs(p - boundary) < 1e-3) {
                        safe = false;
                        break;
                    }
                }
            } else {
                Vec row(logits.row(i), logits.row(i) + logits.cols), p;
                detail::softmax_row(row, p);
                if (std::abs(p[static_cast<std::size_t>(c.tails[i])] - (1.0 - loss.alpha)) < 1e-3)
                    safe = false;
            }
        }
        if (safe) return c;
    }
}

// Max relative error over `trials` random instances.
inline double gradcheck_pair(Variant variant, LossSpec loss, int d, int trials,
                             std::uint64_t seed) {
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        GradCheckCase c = make_case(variant, loss, d, seed + static_cast<std::uint64_t>(t));
        Gradients g = analytic_grads(c);
        worst = std::max(worst, compare_with_fd(c, g));
    }
    return worst;
}

}  // namespace kkge
