#pragma once
// Adam with bias correction over every trainable tensor (embeddings plus the
// batch-norm affine parameters). Dense updates; at these vocabulary sizes the
// full matrices are touched each step anyway under 1vsAll.

#include <cstdint>
#include <vector>

#include "kkge/errors.hpp"
#include "kkge/linalg.hpp"
#include "kkge/model.hpp"

namespace kkge {

struct AdamState {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;

    Mat mE, vE, mR, vR;
    std::vector<Vec> m_gamma, v_gamma, m_beta, v_beta;

    static AdamState for_model(const ModelState& s, double lr) {
        AdamState a;
        a.lr = lr;
        a.mE = Mat(s.E.rows, s.E.cols);
        a.vE = Mat(s.E.rows, s.E.cols);
        a.mR = Mat(s.R.rows, s.R.cols);
        a.vR = Mat(s.R.rows, s.R.cols);
        for (const BatchNorm& bn : s.bn) {
            a.m_gamma.emplace_back(bn.dim, 0.0);
            a.v_gamma.emplace_back(bn.dim, 0.0);
            a.m_beta.emplace_back(bn.dim, 0.0);
            a.v_beta.emplace_back(bn.dim, 0.0);
        }
        return a;
    }
};

namespace detail {

inline void adam_update(double* theta, const double* grad, double* m, double* v, std::size_t n,
                        const AdamState& a, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient");
        m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * g;
        v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        theta[i] -= a.lr * mhat / (std::sqrt(vhat) + a.epsilon);
    }
}

}  // namespace detail

inline void adam_step(ModelState& params, const Gradients& grads, AdamState& state) {
    if (!grads.dE.same_shape(params.E) || !grads.dR.same_shape(params.R) ||
        grads.dgamma.size() != params.bn.size())
        throw ConfigError("adam: gradient shapes do not mirror the model");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    detail::adam_update(params.E.a.data(), grads.dE.a.data(), state.mE.a.data(),
                        state.vE.a.data(), params.E.a.size(), state, bc1, bc2);
    detail::adam_update(params.R.a.data(), grads.dR.a.data(), state.mR.a.data(),
                        state.vR.a.data(), params.R.a.size(), state, bc1, bc2);
    for (std::size_t l = 0; l < params.bn.size(); ++l) {
        detail::adam_update(params.bn[l].gamma.data(), grads.dgamma[l].data(),
                            state.m_gamma[l].data(), state.v_gamma[l].data(),
                            params.bn[l].gamma.size(), state, bc1, bc2);
        detail::adam_update(params.bn[l].beta.data(), grads.dbeta[l].data(),
                            state.m_beta[l].data(), state.v_beta[l].data(),
                            params.bn[l].beta.size(), state, bc1, bc2);
    }
}

}  // namespace kkge
