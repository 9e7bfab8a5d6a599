#include <doctest.h>

#include "kkge/gradcheck.hpp"

using kkge::Variant;

TEST_SUITE_BEGIN("gradcheck");

TEST_CASE("every model/loss pair passes at d = 4") {
    for (Variant v : {Variant::distmult, Variant::kd_rel, Variant::kd_distmult})
        for (kkge::LossKind k :
             {kkge::LossKind::bce, kkge::LossKind::label_smoothing, kkge::LossKind::label_relaxation,
              kkge::LossKind::ce, kkge::LossKind::ce_ls, kkge::LossKind::ce_lr}) {
            kkge::LossSpec loss{k, kkge::loss_needs_alpha(k) ? 0.2 : 0.0};
            const double err = kkge::gradcheck_pair(v, loss, 4, 5, 123);
            CAPTURE(kkge::variant_name(v));
            CAPTURE(kkge::loss_name(k));
            CHECK(err < 1e-5);
        }
}

TEST_CASE("the harness flags a corrupted gradient") {
    kkge::GradCheckCase c =
        kkge::make_case(Variant::distmult, {kkge::LossKind::bce, 0.0}, 4, 9);
    kkge::Gradients good = kkge::analytic_grads(c);
    CHECK(kkge::compare_with_fd(c, good) < 1e-5);

    kkge::Gradients bad = kkge::analytic_grads(c);
    // sign-flip one meaningfully sized entry
    std::size_t worst = 0;
    for (std::size_t i = 0; i < bad.dE.a.size(); ++i)
        if (std::abs(bad.dE.a[i]) > std::abs(bad.dE.a[worst])) worst = i;
    bad.dE.a[worst] = -bad.dE.a[worst];
    CHECK(kkge::compare_with_fd(c, bad) > 1e-5);
}

TEST_SUITE_END();
