#pragma once
// Per-(head, relation) losses over the |E|-length logit vector, each returning
// the scalar loss and the gradient w.r.t. the logits. All three normalize by
// 1/|E| so they are drop-in interchangeable in the trainer.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kkge/errors.hpp"
#include "kkge/linalg.hpp"

namespace kkge {

// Two loss families share one interface. The per-entity binary family (bce,
// ls, lr) treats each entity as an independent binary event, normalized by
// 1/|E|. The softmax family (ce, ce-ls, ce-lr) treats the 1vsAll prediction
// as a categorical distribution over entities; it is the objective that
// reproduces the published link-prediction numbers.
enum class LossKind { bce, label_smoothing, label_relaxation, ce, ce_ls, ce_lr };

struct LossSpec {
    LossKind kind = LossKind::ce;
    double alpha = 0.0;  // smoothing / relaxation strength where applicable
};

inline const char* loss_name(LossKind k) {
    switch (k) {
        case LossKind::bce: return "bce";
        case LossKind::label_smoothing: return "ls";
        case LossKind::label_relaxation: return "lr";
        case LossKind::ce: return "ce";
        case LossKind::ce_ls: return "ce-ls";
        case LossKind::ce_lr: return "ce-lr";
    }
    return "?";
}

inline LossKind loss_from_name(const std::string& s) {
    if (s == "bce") return LossKind::bce;
    if (s == "ls") return LossKind::label_smoothing;
    if (s == "lr") return LossKind::label_relaxation;
    if (s == "ce") return LossKind::ce;
    if (s == "ce-ls") return LossKind::ce_ls;
    if (s == "ce-lr") return LossKind::ce_lr;
    throw ConfigError("unknown loss: " + s);
}

inline bool loss_needs_alpha(LossKind k) {
    return k == LossKind::label_smoothing || k == LossKind::label_relaxation ||
           k == LossKind::ce_ls || k == LossKind::ce_lr;
}

inline double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// log(1 + e^z) without overflow.
inline double softplus(double z) {
    return (z > 0.0 ? z : 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// Mean binary cross-entropy over entities, evaluated in softplus form so
// large-magnitude logits stay finite. grad[i] = (sigmoid(z_i) - y_i) / |E|.
inline double bce(const Vec& logits, const Vec& targets, Vec& grad) {
    if (logits.size() != targets.size()) throw ConfigError("bce: length mismatch");
    const std::size_t n = logits.size();
    grad.assign(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = targets[i];
        if (!(y >= 0.0 && y <= 1.0)) throw ConfigError("bce: target outside [0, 1]");
        const double z = logits[i];
        // y*log(sigmoid) + (1-y)*log(1-sigmoid) = -(softplus(-z)*y + softplus(z)*(1-y))
        total += y * softplus(-z) + (1.0 - y) * softplus(z);
        grad[i] = (sigmoid(z) - y) / static_cast<double>(n);
    }
    return total / static_cast<double>(n);
}

// Label smoothing as a target transform: 1 -> 1 - alpha/2, 0 -> alpha/2.
inline Vec smooth_targets(const Vec& targets, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("smoothing alpha must be in (0, 1)");
    Vec out(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double y = targets[i];
        if (y != 0.0 && y != 1.0) throw ConfigError("smooth_targets: targets must be binary");
        out[i] = y == 1.0 ? 1.0 - alpha / 2.0 : alpha / 2.0;
    }
    return out;
}

// Label relaxation, applied independently per entity as a binary event.
// With p_obs the predicted probability of the observed event, the per-entity
// loss is 0 while p_obs >= 1 - alpha (the prediction sits inside the credal
// set) and otherwise the KL divergence from the boundary distribution
// (1 - alpha, alpha) placed on the observed event. The gradient at the
// boundary is taken as 0.
//
// Evaluated in logit space: with H(a) = (1-a) log(1-a) + a log a,
//   KL = H(a) + (1-a) softplus(-z_obs) + a softplus(z_obs),
// where z_obs is the logit of the observed event (z for a positive, -z for a
// negative). Membership in the credal set is the logit comparison
// z_obs >= log((1-a)/a). This keeps values and finite differences accurate
// even for strongly saturated logits.
inline double label_relaxation(const Vec& logits, const Vec& targets, double alpha, Vec& grad) {
    if (logits.size() != targets.size()) throw ConfigError("label_relaxation: length mismatch");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("label relaxation needs alpha in (0, 1]; use bce for alpha = 0");
    const std::size_t n = logits.size();
    grad.assign(n, 0.0);
    const double boundary_logit = std::log((1.0 - alpha) / alpha);
    const double entropy = (1.0 - alpha) * std::log(1.0 - alpha) + alpha * std::log(alpha);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = targets[i];
        if (y != 0.0 && y != 1.0) throw ConfigError("label_relaxation: targets must be binary");
        const double z_obs = y == 1.0 ? logits[i] : -logits[i];
        if (z_obs >= boundary_logit) continue;  // inside the credal set
        total += entropy + (1.0 - alpha) * softplus(-z_obs) + alpha * softplus(z_obs);
        // d/dz KL((1-a, a) || (p_obs, 1-p_obs)) reduces to p - boundary target.
        const double p = sigmoid(logits[i]);
        grad[i] = (y == 1.0 ? p - (1.0 - alpha) : p - alpha) / static_cast<double>(n);
    }
    return total / static_cast<double>(n);
}

// ---- softmax family ---------------------------------------------------------

namespace detail {

// Fills p with softmax(logits) and returns log of the partition function.
inline double softmax_row(const Vec& logits, Vec& p) {
    double m = logits[0];
    for (double z : logits) m = std::max(m, z);
    double sum = 0.0;
    p.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return m + std::log(sum);
}

}  // namespace detail

// Categorical cross-entropy against the target entity.
inline double softmax_ce(const Vec& logits, std::size_t target, Vec& grad) {
    if (target >= logits.size()) throw ConfigError("softmax_ce: target out of range");
    const double log_z = detail::softmax_row(logits, grad);
    const double loss = log_z - logits[target];
    grad[target] -= 1.0;  // grad = softmax - onehot
    return loss;
}

// Cross-entropy against smoothed targets y = (1 - alpha) onehot + alpha / C.
inline double softmax_ce_smoothed(const Vec& logits, std::size_t target, double alpha, Vec& grad) {
    if (target >= logits.size()) throw ConfigError("softmax_ce_smoothed: target out of range");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("smoothing alpha must be in (0, 1)");
    const double log_z = detail::softmax_row(logits, grad);
    const double uniform = alpha / static_cast<double>(logits.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double y = uniform + (i == target ? 1.0 - alpha : 0.0);
        loss += y * (log_z - logits[i]);
        grad[i] -= y;  // grad = softmax - y
    }
    return loss;
}

// Label relaxation over the softmax distribution. Inside the credal set
// (p_target >= 1 - alpha) the loss vanishes; outside it is the KL divergence
// to the boundary distribution p' with p'_target = 1 - alpha and the
// remaining alpha spread over the other entities proportionally to the
// prediction. The proportional spread collapses the KL to the binary form
//   (1-a) log((1-a)/p_t) + a log(a/(1-p_t)),
// and the gradient (with the minimizer p' held fixed) is softmax - p'.
inline double softmax_label_relaxation(const Vec& logits, std::size_t target, double alpha,
                                       Vec& grad) {
    if (target >= logits.size()) throw ConfigError("softmax_label_relaxation: target out of range");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("relaxation alpha must be in (0, 1)");
    Vec& p = grad;
    const double log_z = detail::softmax_row(logits, p);
    const double log_p_t = logits[target] - log_z;
    if (log_p_t >= std::log1p(-alpha)) {  // p_t >= 1 - alpha
        std::fill(grad.begin(), grad.end(), 0.0);
        return 0.0;
    }
    const double p_t = p[target];
    // log(1 - p_t) via the logits of the competitors, stable for p_t near 1
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (i != target) m = std::max(m, logits[i]);
    double rest = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (i != target) rest += std::exp(logits[i] - m);
    const double log_1m_p_t = m + std::log(rest) - log_z;

    const double loss = (1.0 - alpha) * (std::log1p(-alpha) - log_p_t) +
                        alpha * (std::log(alpha) - log_1m_p_t);
    const double denom = 1.0 - p_t;
    const double shrink = denom > 0.0 ? (denom - alpha) / denom : 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) grad[i] = p[i] * shrink;
    grad[target] = p_t - (1.0 - alpha);
    return loss;
}

// Dispatch used by the trainer: the 1vsAll target entity in, loss plus
// dLoss/dLogits out. The binary family expands the target into the dense
// 0/1 vector it is defined over.
inline double loss_value_grad(const LossSpec& spec, const Vec& logits, std::size_t target,
                              Vec& grad) {
    switch (spec.kind) {
        case LossKind::ce: return softmax_ce(logits, target, grad);
        case LossKind::ce_ls: return softmax_ce_smoothed(logits, target, spec.alpha, grad);
        case LossKind::ce_lr: return softmax_label_relaxation(logits, target, spec.alpha, grad);
        default: break;
    }
    Vec targets(logits.size(), 0.0);
    targets.at(target) = 1.0;
    switch (spec.kind) {
        case LossKind::bce: return bce(logits, targets, grad);
        case LossKind::label_smoothing: {
            const Vec smoothed = smooth_targets(targets, spec.alpha);
            return bce(logits, smoothed, grad);
        }
        case LossKind::label_relaxation:
            return label_relaxation(logits, targets, spec.alpha, grad);
        default: break;
    }
    throw ConfigError("unreachable loss kind");
}

}  // namespace kkge
