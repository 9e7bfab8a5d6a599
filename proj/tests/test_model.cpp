#include <doctest.h>

#include <cmath>

#include "kkge/gradcheck.hpp"
#include "kkge/model.hpp"
#include "kkge/rng.hpp"
#include "oracles.hpp"

using kkge::Mat;
using kkge::ModelState;
using kkge::Variant;
using kkge::Vec;

namespace {

// Make every batch-norm layer an exact identity in eval mode.
void neutral_bn(ModelState& s) {
    for (kkge::BatchNorm& bn : s.bn) {
        bn.epsilon = 0.0;
        std::fill(bn.running_mean.begin(), bn.running_mean.end(), 0.0);
        std::fill(bn.running_var.begin(), bn.running_var.end(), 1.0);
    }
}

Vec random_vec(kkge::Rng& rng, int n, double lo = -1.5, double hi = 1.5) {
    Vec v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("parameter counts reproduce the published table values") {
    using kkge::param_count;
    // UMLS: 136 entities, 93 relations; KINSHIP: 105 entities, 51 relations
    CHECK(param_count(Variant::distmult, 289, 136, 93) == 67915);
    CHECK(param_count(Variant::distmult, 400, 136, 93) == 94000);
    CHECK(param_count(Variant::kd_rel, 289, 136, 93) == 42619);
    CHECK(param_count(Variant::kd_distmult, 256, 136, 93) == 3728);
    CHECK(param_count(Variant::distmult, 289, 105, 51) == 46818);
    CHECK(param_count(Variant::kd_rel, 400, 105, 51) == 45420);
    CHECK(param_count(Variant::kd_rel, 289, 105, 51) == 32946);
    CHECK(param_count(Variant::kd_distmult, 400, 105, 51) == 3200);
}

TEST_CASE("param_count matches the actual tensor sizes") {
    for (Variant v : {Variant::distmult, Variant::kd_rel, Variant::kd_distmult}) {
        ModelState s = kkge::init(v, 16, 23, 7, 1);
        std::int64_t actual = static_cast<std::int64_t>(s.E.a.size()) +
                              static_cast<std::int64_t>(s.R.a.size());
        for (const kkge::BatchNorm& bn : s.bn)
            actual += static_cast<std::int64_t>(bn.gamma.size() + bn.beta.size());
        CHECK(actual == kkge::param_count(s));
    }
}

TEST_CASE("init validates dimensions and respects Glorot bounds") {
    CHECK_THROWS_AS(kkge::init(Variant::kd_rel, 7, 10, 3, 1), kkge::ConfigError);
    CHECK_THROWS_AS(kkge::init(Variant::kd_distmult, 12, 10, 3, 1), kkge::ConfigError);

    ModelState s = kkge::init(Variant::distmult, 289, 136, 93, 1);
    CHECK(kkge::param_count(s) == 67915);
    const double lim_e = std::sqrt(6.0 / (136 + 289));
    for (double x : s.E.a) CHECK(std::abs(x) <= lim_e);
    const double lim_r = std::sqrt(6.0 / (93 + 289));
    for (double x : s.R.a) CHECK(std::abs(x) <= lim_r);
    for (const kkge::BatchNorm& bn : s.bn) {
        for (double g : bn.gamma) CHECK(g == 1.0);
        for (double b : bn.beta) CHECK(b == 0.0);
        for (double v : bn.running_var) CHECK(v == 1.0);
    }

    // same seed, same parameters
    ModelState t = kkge::init(Variant::distmult, 289, 136, 93, 1);
    CHECK(t.E.a == s.E.a);
    CHECK(t.R.a == s.R.a);
}

TEST_CASE("score_distmult") {
    CHECK(kkge::score_distmult({1, 2}, {3, 4}, {5, 6}) == 63.0);
    CHECK(kkge::score_distmult({1, 2}, {3, 4}, {0, 0}) == 0.0);
    kkge::Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), c = rng.uniform(-2, 2);
        const double d = rng.uniform(-2, 2), e = rng.uniform(-2, 2), f = rng.uniform(-2, 2);
        CHECK(kkge::score_distmult({a, b}, {c, d}, {e, f}) ==
              doctest::Approx(a * c * e + b * d * f).epsilon(1e-14));
    }
    CHECK_THROWS_AS(kkge::score_distmult({1, 2}, {3}, {5, 6}), kkge::ConfigError);
}

TEST_CASE("score_kd_rel") {
    CHECK(kkge::score_kd_rel({1, 1, 1, 1}, {1, 2}, {1, 1, 1, 1}) == 9.0);

    // zero block pattern: r = [1, 0] decompresses to [1, 0, 0, 0]
    CHECK(kkge::score_kd_rel({3, 5, 7, 9}, {1, 0}, {1, 1, 1, 1}) == 3.0);

    kkge::Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        Vec h = random_vec(rng, 9), t = random_vec(rng, 9), r = random_vec(rng, 3);
        const double got = kkge::score_kd_rel(h, r, t);
        const double want = kkge::score_distmult(h, kkge::kron_vec(r, r), t);
        CHECK(std::abs(got - want) < 1e-12);
    }
    CHECK_THROWS_AS(kkge::score_kd_rel({1, 2, 3}, {1, 2}, {1, 2, 3}), kkge::ConfigError);
}

TEST_CASE("score_kd_full") {
    CHECK(kkge::score_kd_full({1, 2}, {1, 1}, {1, 1}) == 9.0);

    kkge::Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const double a = rng.uniform(-2, 2), c = rng.uniform(-2, 2), e = rng.uniform(-2, 2);
        CHECK(kkge::score_kd_full({a}, {c}, {e}) ==
              doctest::Approx(a * a * c * c * e).epsilon(1e-14));
    }

    for (int trial = 0; trial < 100; ++trial) {
        Vec h = random_vec(rng, 3), r = random_vec(rng, 3), t = random_vec(rng, 3);
        // oracle: explicit decompression pipeline
        Vec w = kkge::hadamard(kkge::kron_vec(h, h), kkge::kron_vec(r, r));
        Mat m = kkge::reshape(w, 3, 3);
        Vec mt = oracle::matvec_explicit(m, t);
        double want = 0;
        for (double x : mt) want += x;
        CHECK(std::abs(kkge::score_kd_full(h, r, t) - want) < 1e-12);
    }
    CHECK_THROWS_AS(kkge::score_kd_full({1, 2}, {1}, {1, 2}), kkge::ConfigError);
}

TEST_CASE("self-Kronecker expansion identity") {
    kkge::Rng rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), c = rng.uniform(-2, 2);
        const double d = rng.uniform(-2, 2), e = rng.uniform(-2, 2), f = rng.uniform(-2, 2);
        Vec lhs = kkge::hadamard(kkge::kron_vec({a, b}, {a, b}), kkge::kron_vec({c, d}, {c, d}));
        Vec tt = kkge::kron_vec({e, f}, {e, f});
        double got = 0;
        for (std::size_t i = 0; i < lhs.size(); ++i) got += lhs[i] * tt[i];
        const double t1 = a * a * c * c * e * e;
        const double t2 = 2 * (a * b * c * d * e * f);
        const double t3 = b * b * d * d * f * f;
        const double want = t1 + t2 + t3;
        // relative to the term magnitudes; the sum itself can cancel to ~0
        const double scale = std::max(std::abs(t1) + std::abs(t2) + std::abs(t3), 1e-12);
        worst = std::max(worst, std::abs(got - want) / scale);
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("score_all_tails on the unit-relation toy model") {
    ModelState s = kkge::init(Variant::distmult, 2, 2, 1, 1);
    neutral_bn(s);
    s.E.a = {1, 0, 0, 1};  // e0 = [1, 0], e1 = [0, 1]
    s.R.a = {1, 1};
    for (int head : {0, 1}) {
        Vec z = kkge::score_all_tails(s, head, 0, kkge::Mode::eval);
        CHECK(z[0] == doctest::Approx(s.E.at(head, 0)).epsilon(1e-12));
        CHECK(z[1] == doctest::Approx(s.E.at(head, 1)).epsilon(1e-12));
    }
}

TEST_CASE("score_all_tails is pure in eval mode") {
    ModelState s = kkge::init(Variant::kd_rel, 16, 9, 4, 7);
    Vec first = kkge::score_all_tails(s, 3, 2, kkge::Mode::eval);
    Vec second = kkge::score_all_tails(s, 3, 2, kkge::Mode::eval);
    CHECK(first == second);
}

TEST_CASE("kd-distmult batch scoring equals the per-entity scalar loop") {
    kkge::Rng rng(6);
    ModelState s = kkge::init(Variant::kd_distmult, 4, 7, 3, 9);  // m = 2
    // non-trivial eval-mode batch norm
    for (kkge::BatchNorm& bn : s.bn) {
        for (double& g : bn.gamma) g = rng.uniform(0.5, 1.5);
        for (double& b : bn.beta) b = rng.uniform(-0.5, 0.5);
        for (double& m : bn.running_mean) m = rng.uniform(-0.3, 0.3);
        for (double& v : bn.running_var) v = rng.uniform(0.5, 2.0);
    }
    const int m = s.ent_dim;
    for (std::int32_t head = 0; head < 7; ++head)
        for (std::int32_t rel = 0; rel < 3; ++rel) {
            Vec z = kkge::score_all_tails(s, head, rel, kkge::Mode::eval);
            // oracle: normalize by hand, then the scalar kernel per tail
            Vec h(m), r(m);
            for (int j = 0; j < m; ++j) {
                h[j] = (s.E.at(head, j) - s.bn[0].running_mean[j]) /
                           std::sqrt(s.bn[0].running_var[j] + s.bn[0].epsilon) *
                           s.bn[0].gamma[j] +
                       s.bn[0].beta[j];
                r[j] = (s.R.at(rel, j) - s.bn[1].running_mean[j]) /
                           std::sqrt(s.bn[1].running_var[j] + s.bn[1].epsilon) *
                           s.bn[1].gamma[j] +
                       s.bn[1].beta[j];
            }
            for (std::int32_t x = 0; x < 7; ++x) {
                Vec t(m);
                for (int j = 0; j < m; ++j) t[j] = s.E.at(x, j);
                CHECK(std::abs(z[x] - kkge::score_kd_full(h, r, t)) < 1e-12);
            }
        }
}

TEST_CASE("batch norm maps identical rows to zero features") {
    kkge::BatchNorm bn(3);
    Mat x(4, 3);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) x.at(i, j) = 2.5 + j;
    kkge::BatchNorm::Cache cache;
    Mat y = bn.forward(x, kkge::Mode::train, false, cache);
    for (double v : y.a) CHECK(std::abs(v) <= 1e-3);
}

TEST_CASE("backward: zero upstream gives zero gradients") {
    for (Variant v : {Variant::distmult, Variant::kd_rel, Variant::kd_distmult}) {
        ModelState s = kkge::init(v, 9, 5, 3, 11);
        kkge::ForwardCache cache;
        kkge::forward_batch(s, {0, 1, 2}, {0, 1, 2}, kkge::Mode::train, false, cache);
        Mat upstream(3, 5);
        kkge::Gradients g = kkge::backward(s, cache, upstream);
        for (double x : g.dE.a) CHECK(x == 0.0);
        for (double x : g.dR.a) CHECK(x == 0.0);
        for (const Vec& gg : g.dgamma)
            for (double x : gg) CHECK(x == 0.0);
    }
}

TEST_CASE("product rule at d = 1: dscore/dh = r * t") {
    kkge::Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const double h = rng.uniform(-2, 2), r = rng.uniform(-2, 2), t = rng.uniform(-2, 2);
        const double step = 1e-6;
        const double fd =
            (kkge::score_distmult({h + step}, {r}, {t}) - kkge::score_distmult({h - step}, {r}, {t})) /
            (2 * step);
        CHECK(fd == doctest::Approx(r * t).epsilon(1e-6));
    }
}

TEST_CASE("backward rejects non-finite upstream gradients") {
    ModelState s = kkge::init(Variant::distmult, 4, 5, 2, 3);
    kkge::ForwardCache cache;
    kkge::forward_batch(s, {0, 1}, {0, 1}, kkge::Mode::train, false, cache);
    Mat upstream(2, 5);
    upstream.at(1, 3) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(kkge::backward(s, cache, upstream), kkge::NumericError);
}

TEST_CASE("analytic gradients agree with finite differences (smoke)") {
    for (Variant v : {Variant::distmult, Variant::kd_rel, Variant::kd_distmult})
        for (kkge::LossKind k :
             {kkge::LossKind::bce, kkge::LossKind::label_smoothing, kkge::LossKind::label_relaxation,
              kkge::LossKind::ce, kkge::LossKind::ce_ls, kkge::LossKind::ce_lr}) {
            kkge::LossSpec loss{k, kkge::loss_needs_alpha(k) ? 0.1 : 0.0};
            CHECK(kkge::gradcheck_pair(v, loss, 4, 3, /*seed=*/77) < 1e-5);
        }
}

TEST_SUITE_END();
