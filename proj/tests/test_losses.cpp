#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "certlab/losses.hpp"
#include "certlab/random.hpp"

using namespace certlab;

namespace {

LossSpec seeded_loss(int which, Rng& rng, int n = 7, int p = 5) {
    DenseMatrix x = rng.normal_matrix(n, p);
    Vector y(n);
    for (auto& v : y) v = which == 2 ? std::abs(rng.normal()) : rng.normal();
    switch (which) {
        case 0:
            return QuadraticLoss{std::move(x), std::move(y)};
        case 1:
            return GlmLoss{std::move(x), GlmFamily::logistic, {}};
        case 2:
            return GlmLoss{std::move(x), GlmFamily::poisson, std::move(y)};
        default:
            return GlmLoss{std::move(x), GlmFamily::squared, std::move(y)};
    }
}

// Quadratic loss with identity design: gradient at beta is 2*(beta - y), so
// choosing y = anchor - g/2 plants an exact gradient g at the anchor.
LossSpec identity_loss_with_gradient(const Vector& anchor, const Vector& g) {
    const int p = static_cast<int>(anchor.size());
    Vector y(p);
    for (int i = 0; i < p; ++i) y[i] = anchor[i] - 0.5 * g[i];
    return QuadraticLoss{DenseMatrix::identity(p), std::move(y)};
}

}  // namespace

TEST_CASE("gradients match finite differences", "[losses]") {
    Rng rng(2024);
    for (int which = 0; which < 4; ++which) {
        const LossSpec L = seeded_loss(which, rng);
        const Vector beta = rng.normal_vector(5);
        const Vector g = gradient(L, beta);
        const double h = 1e-6;
        for (int i = 0; i < 5; ++i) {
            Vector bp = beta, bm = beta;
            bp[i] += h;
            bm[i] -= h;
            const double fd = (loss_value(L, bp) - loss_value(L, bm)) / (2.0 * h);
            CHECK(g[i] == Catch::Approx(fd).margin(1e-4).epsilon(1e-5));
        }
    }
}

TEST_CASE("quadratic Bregman divergence is exact", "[losses]") {
    Rng rng(7);
    const LossSpec L = seeded_loss(0, rng);
    const Vector a = rng.normal_vector(5), b = rng.normal_vector(5);
    Vector d(5);
    for (int i = 0; i < 5; ++i) d[i] = a[i] - b[i];
    const Vector xd = design(L).apply(d);
    const BregmanTriple t = bregman(L, a, b);
    CHECK(t.d_ab == Catch::Approx(norm2_sq(xd)).epsilon(1e-13));
    CHECK(t.d_sym == Catch::Approx(2.0 * norm2_sq(xd)).epsilon(1e-13));
}

TEST_CASE("Bregman three-point identity", "[losses]") {
    // D(a,b) + D(b,c) - D(a,c) = <grad L(c) - grad L(b), a - b>
    Rng rng(99);
    for (int which = 0; which < 4; ++which) {
        const LossSpec L = seeded_loss(which, rng);
        for (int rep = 0; rep < 25; ++rep) {
            const Vector a = rng.normal_vector(5), b = rng.normal_vector(5),
                         c = rng.normal_vector(5);
            const double lhs = bregman(L, a, b).d_ab + bregman(L, b, c).d_ab -
                               bregman(L, a, c).d_ab;
            const Vector gc = gradient(L, c), gb = gradient(L, b);
            double rhs = 0.0;
            for (int i = 0; i < 5; ++i) rhs += (gc[i] - gb[i]) * (a[i] - b[i]);
            CHECK(lhs == Catch::Approx(rhs).margin(1e-9 * (1.0 + std::abs(rhs))));
        }
    }
}

TEST_CASE("linear predictors saturate at +-500", "[losses]") {
    const LossSpec L = GlmLoss{DenseMatrix::identity(2), GlmFamily::poisson, {1.0, 1.0}};
    bool saturated = false;
    loss_value(L, {600.0, 0.0}, &saturated);
    CHECK(saturated);
    saturated = false;
    const double v = loss_value(L, {1000.0, 0.0}, &saturated);
    CHECK(saturated);
    CHECK(v == Catch::Approx(loss_value(L, {500.0, 0.0})));
    saturated = false;
    gradient(L, {1.0, -2.0}, &saturated);
    CHECK_FALSE(saturated);
}

TEST_CASE("kappa per family", "[losses]") {
    Rng rng(1);
    CHECK(kappa(seeded_loss(0, rng)) == 0.0);
    CHECK(kappa(seeded_loss(1, rng)) == 1.0);
    CHECK(kappa(seeded_loss(2, rng)) == 1.0);
    CHECK(kappa(seeded_loss(3, rng)) == 0.0);
}

TEST_CASE("convexity ratio gamma", "[losses]") {
    Rng rng(4);
    const LossSpec quad = seeded_loss(0, rng);
    CHECK(convexity_ratio_gamma(quad, 12.0) == 1.0);
    CHECK_THROWS_AS(convexity_ratio_gamma(quad, -1.0), ConfigError);

    const LossSpec logi = seeded_loss(1, rng, 30, 3);
    CHECK(convexity_ratio_gamma(logi, 0.0) == Catch::Approx(1.0));
    const double g1 = convexity_ratio_gamma(logi, 1.0);
    const double g3 = convexity_ratio_gamma(logi, 3.0);
    CHECK(g1 > g3);
    CHECK(g3 > 0.0);

    const LossSpec pois = seeded_loss(2, rng, 30, 3);
    CHECK(convexity_ratio_gamma(pois, 2.0) == Catch::Approx(std::exp(-4.0)));

    // defining property: D(a,b) >= gamma * D(b,a) when predictors stay in [-A,A]
    for (const LossSpec* L : {&logi, &pois}) {
        for (int rep = 0; rep < 40; ++rep) {
            Vector a = rng.normal_vector(3), b = rng.normal_vector(3);
            for (auto& v : a) v *= 0.3;
            for (auto& v : b) v *= 0.3;
            const double amp =
                std::max(norm_inf(design(*L).apply(a)), norm_inf(design(*L).apply(b)));
            const double gamma = convexity_ratio_gamma(*L, amp);
            const BregmanTriple t = bregman(*L, a, b);
            const double dba = t.d_sym - t.d_ab;
            CHECK(t.d_ab >= gamma * dba - 1e-10 * (1.0 + std::abs(dba)));
        }
    }
}

TEST_CASE("penalty level reference cases", "[losses]") {
    // lasso: lambda=1.3, anchor (1,0,-2,0), gradient (0.4,-1.9,0.7,0.9)
    {
        const Vector anchor{1.0, 0.0, -2.0, 0.0};
        const Vector g{0.4, -1.9, 0.7, 0.9};
        const LossSpec L = identity_loss_with_gradient(anchor, g);
        const RegularizerSpec r = LassoReg{1.3};
        CHECK(penalty_level_lambda(L, anchor, anchor, r, PenaltyNorm::l2) ==
              Catch::Approx(1.9000000000000001).epsilon(1e-12));
        CHECK(penalty_level_lambda(L, anchor, anchor, r, PenaltyNorm::l_inf) ==
              Catch::Approx(1.7000000000000002).epsilon(1e-12));
        CHECK_THROWS_AS(penalty_level_lambda(L, anchor, anchor, r, PenaltyNorm::group_inf),
                        UnsupportedNormError);
        CHECK(noise_level_eta(L, anchor, r) == Catch::Approx(1.9 / 1.3).epsilon(1e-12));
    }
    // group: q=2 groups of 2, anchor (3,4,0,0), lambda=1
    {
        const Vector anchor{3.0, 4.0, 0.0, 0.0};
        const Vector g{0.2, -0.5, 1.1, -0.3};
        const LossSpec L = identity_loss_with_gradient(anchor, g);
        const RegularizerSpec r = GroupReg{1.0, GroupStructure::contiguous(4, 2)};
        CHECK(penalty_level_lambda(L, anchor, anchor, r, PenaltyNorm::l2) ==
              Catch::Approx(0.8658228166326666).epsilon(1e-12));
        CHECK_THROWS_AS(penalty_level_lambda(L, anchor, anchor, r, PenaltyNorm::l_inf),
                        UnsupportedNormError);
    }
    // nuclear: anchor diag(2,0), gradient diag(0.5,0.9), lambda=0.4
    {
        const Vector anchor{2.0, 0.0, 0.0, 0.0};
        const Vector g{0.5, 0.0, 0.0, 0.9};
        const LossSpec L = identity_loss_with_gradient(anchor, g);
        const RegularizerSpec r = NuclearReg{0.4, 2, 2};
        CHECK(penalty_level_lambda(L, anchor, anchor, r, PenaltyNorm::l2) ==
              Catch::Approx(std::sqrt(1.06)).epsilon(1e-10));
        CHECK_THROWS_AS(penalty_level_lambda(L, anchor, anchor, r, PenaltyNorm::l_inf),
                        UnsupportedNormError);
    }
    // mixed: unsupported
    {
        const Vector anchor{1.0, 0.0, 0.0, 0.0};
        const LossSpec L = identity_loss_with_gradient(anchor, anchor);
        const RegularizerSpec r = MixedReg{1.0, 1.0, GroupStructure::contiguous(4, 2)};
        CHECK_THROWS_AS(penalty_level_lambda(L, anchor, anchor, r, PenaltyNorm::l2),
                        UnsupportedNormError);
    }
}

TEST_CASE("shifted loss", "[losses]") {
    Rng rng(123);
    const LossSpec L = seeded_loss(1, rng, 12, 4);
    const Vector bbar = rng.normal_vector(4), bstar = rng.normal_vector(4);
    CHECK_THROWS_AS(make_shifted(L, bbar, bstar, 0.0), ConfigError);
    CHECK_THROWS_AS(make_shifted(L, bbar, bstar, 1.2), ConfigError);

    const double gamma = 0.6;
    const ShiftedLoss sl = make_shifted(L, bbar, bstar, gamma);

    // grad Lbar(beta_bar) = grad L(beta_star)
    const Vector gs = gradient(L, bstar);
    const Vector gbar = gradient(sl, bbar);
    for (int i = 0; i < 4; ++i) CHECK(gbar[i] == Catch::Approx(gs[i]).margin(1e-12));

    // Bregman scales by gamma
    const Vector a = rng.normal_vector(4), b = rng.normal_vector(4);
    CHECK(bregman(sl, a, b).d_ab ==
          Catch::Approx(gamma * bregman(L, a, b).d_ab).epsilon(1e-12));

    // value is consistent with its own gradient (finite differences)
    const double h = 1e-6;
    Vector ap = a;
    ap[2] += h;
    Vector am = a;
    am[2] -= h;
    const double fd = (loss_value(sl, ap) - loss_value(sl, am)) / (2.0 * h);
    CHECK(gradient(sl, a)[2] == Catch::Approx(fd).margin(1e-5));
}

TEST_CASE("loss validation", "[losses]") {
    DenseMatrix x(3, 2);
    CHECK_THROWS_AS(validate(LossSpec{QuadraticLoss{x, {1.0, 2.0}}}), ConfigError);
    CHECK_THROWS_AS(validate(LossSpec{GlmLoss{x, GlmFamily::poisson, {1.0, -0.5, 2.0}}}),
                    ConfigError);
    CHECK_NOTHROW(validate(LossSpec{GlmLoss{x, GlmFamily::logistic, {}}}));
}
