#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "certlab/random.hpp"
#include "certlab/solvers.hpp"

using namespace certlab;

namespace {

// Identity design: the regularized solution is the prox of y at t = 1/2,
// since ||beta - y||^2 + R(beta) = 2 * (0.5||beta - y||^2 + 0.5 R(beta)).
LossSpec identity_quadratic(const Vector& y) {
    return QuadraticLoss{DenseMatrix::identity(static_cast<int>(y.size())), y};
}

}  // namespace

TEST_CASE("solve options validation", "[solvers]") {
    SolveOptions o;
    CHECK_NOTHROW(validate(o));
    o.max_iterations = 0;
    CHECK_THROWS_AS(validate(o), ConfigError);
    o = {};
    o.kkt_tol = 0.0;
    CHECK_THROWS_AS(validate(o), ConfigError);
    o = {};
    o.step_shrink = 1.0;
    CHECK_THROWS_AS(validate(o), ConfigError);
    o = {};
    o.ridge = -0.1;
    CHECK_THROWS_AS(validate(o), ConfigError);
}

TEST_CASE("identity-design closed forms", "[solvers]") {
    const Vector y{2.0, -0.3, 0.0, -4.0, 1.1, 0.7};
    // lasso: soft threshold at lambda/2
    {
        const RegularizerSpec r = LassoReg{1.0};
        const SolveResult res = solve_regularized(identity_quadratic(y), r, {});
        REQUIRE(res.status == SolveStatus::converged);
        for (std::size_t i = 0; i < y.size(); ++i)
            CHECK(res.beta[i] == Catch::Approx(soft_threshold(y[i], 0.5)).margin(1e-7));
    }
    // group: blockwise shrink by (1 - lambda/(2||y_g||))_+
    {
        const RegularizerSpec r = GroupReg{1.4, GroupStructure::contiguous(6, 3)};
        const SolveResult res = solve_regularized(identity_quadratic(y), r, {});
        REQUIRE(res.status == SolveStatus::converged);
        for (int j = 0; j < 2; ++j) {
            double g2 = 0.0;
            for (int i = 3 * j; i < 3 * j + 3; ++i) g2 += y[i] * y[i];
            const double shrink = std::max(1.0 - 0.7 / std::sqrt(g2), 0.0);
            for (int i = 3 * j; i < 3 * j + 3; ++i)
                CHECK(res.beta[i] == Catch::Approx(shrink * y[i]).margin(1e-7));
        }
    }
    // nuclear: singular value thresholding at lambda/2
    {
        const RegularizerSpec r = NuclearReg{0.9, 2, 3};
        const SolveResult res = solve_regularized(identity_quadratic(y), r, {});
        REQUIRE(res.status == SolveStatus::converged);
        const Vector expect = prox(r, y, 0.5);
        for (std::size_t i = 0; i < y.size(); ++i)
            CHECK(res.beta[i] == Catch::Approx(expect[i]).margin(1e-7));
    }
}

TEST_CASE("solver reaches kkt tolerance on seeded problems", "[solvers]") {
    Rng rng(321);
    const DenseMatrix x = rng.normal_matrix(40, 25);
    Vector beta0(25, 0.0);
    beta0[3] = 2.0;
    beta0[11] = -1.5;
    beta0[19] = 1.0;
    Vector y = x.apply(beta0);
    for (auto& v : y) v += 0.05 * rng.normal();
    const LossSpec L = QuadraticLoss{x, y};
    const RegularizerSpec r = LassoReg{0.8};
    const SolveResult res = solve_regularized(L, r, {});
    REQUIRE(res.status == SolveStatus::converged);
    CHECK(res.kkt_residual <= 1e-8);
    CHECK(kkt_residual(L, r, res.beta) <= 1e-8);

    // objective no worse than the truth or the origin
    const auto obj = [&](const Vector& b) { return loss_value(L, b) + value(r, b); };
    CHECK(res.objective <= obj(beta0) + 1e-9);
    CHECK(res.objective <= obj(Vector(25, 0.0)) + 1e-9);
}

TEST_CASE("basis pursuit on identity recovers y", "[solvers]") {
    const Vector y{1.0, 0.0, -2.0, 0.0, 0.5};
    const SolveResult res =
        solve_basis_pursuit(DenseMatrix::identity(5), y, LassoReg{1.0}, {});
    REQUIRE(res.status == SolveStatus::converged);
    for (int i = 0; i < 5; ++i) CHECK(res.beta[i] == Catch::Approx(y[i]).margin(1e-8));
}

TEST_CASE("basis pursuit recovers a sparse vector", "[solvers]") {
    Rng rng(17);
    const int n = 40, p = 80;
    const DenseMatrix x = rng.normal_matrix(n, p);
    Vector truth(p, 0.0);
    for (int k : {3, 17, 41, 66}) truth[k] = rng.sign() * (1.0 + rng.uniform());
    const Vector y = x.apply(truth);
    const SolveResult res = solve_basis_pursuit(x, y, LassoReg{1.0}, {});
    REQUIRE(res.status == SolveStatus::converged);
    double err = 0.0;
    for (int i = 0; i < p; ++i) err += (res.beta[i] - truth[i]) * (res.beta[i] - truth[i]);
    CHECK(std::sqrt(err) / norm2(truth) <= 1e-6);
}

TEST_CASE("basis pursuit detects infeasibility", "[solvers]") {
    DenseMatrix x(3, 4);  // zero matrix: only y=0 is feasible
    const SolveResult res = solve_basis_pursuit(x, {1.0, 0.0, 0.0}, LassoReg{1.0}, {});
    CHECK(res.status == SolveStatus::infeasible);

    DenseMatrix x2(3, 2);  // rank-1
    x2(0, 0) = 1.0;
    x2(0, 1) = 2.0;
    const SolveResult res2 = solve_basis_pursuit(x2, {0.0, 1.0, 0.0}, LassoReg{1.0}, {});
    CHECK(res2.status == SolveStatus::infeasible);
}

TEST_CASE("global certificate solve satisfies its optimality conditions", "[solvers]") {
    Rng rng(88);
    const int n = 30, p = 12;
    const DenseMatrix x = rng.normal_matrix(n, p);
    Vector anchor(p, 0.0);
    anchor[1] = 1.5;
    anchor[6] = -2.0;
    const Vector y = x.apply(anchor);
    const LossSpec L = QuadraticLoss{x, y};
    const CertificateFrame f = certificate_frame(LassoReg{1.0}, anchor, 0.5);

    const SolveResult res = solve_certificate_global(L, f, {});
    REQUIRE(res.status == SolveStatus::converged);
    CHECK(detail::certificate_kkt(L, f, res.beta) <= 1e-8);

    // premise: -grad L(Q) - e must lie inside the eta-scaled off-support ball
    Vector w = gradient(L, res.beta);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = -w[i] - f.e[i];
    const auto wperp = tangent_project(f.tangent, w).second;
    CHECK(b_dual_norm(f, wperp) <= f.eta + 1e-6);
}

TEST_CASE("certificate tangent solve matches the closed form", "[solvers]") {
    Rng rng(402);
    const int n = 20, p = 8;
    const DenseMatrix x = rng.normal_matrix(n, p);
    Vector anchor(p, 0.0);
    anchor[0] = 1.0;
    anchor[4] = -3.0;
    const LossSpec L = QuadraticLoss{x, x.apply(anchor)};
    const CertificateFrame f = certificate_frame(LassoReg{0.7}, anchor, 0.5);
    const Vector a_tilde(p, 0.0);
    const SolveResult res = solve_certificate_tangent(L, f, f.tangent, a_tilde);
    REQUIRE(res.status == SolveStatus::converged);

    // dense reference: Q = anchor - 0.5 * H_T^{-1} e on the support
    const DenseMatrix h = gram(x);
    DenseMatrix ht(2, 2);
    const int s0 = 0, s1 = 4;
    ht(0, 0) = h(s0, s0);
    ht(0, 1) = h(s0, s1);
    ht(1, 0) = h(s1, s0);
    ht(1, 1) = h(s1, s1);
    const Vector sol = solve_spd(ht, {f.e[s0], f.e[s1]});
    CHECK(res.beta[s0] == Catch::Approx(anchor[s0] - 0.5 * sol[0]).margin(1e-9));
    CHECK(res.beta[s1] == Catch::Approx(anchor[s1] - 0.5 * sol[1]).margin(1e-9));
    for (int i = 0; i < p; ++i)
        if (i != s0 && i != s1) CHECK(res.beta[i] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("mixed-regularizer solve agrees with prox closed form", "[solvers]") {
    const Vector y{1.2, -0.4, 2.5, 0.3, -1.8, 0.9};
    const RegularizerSpec r = MixedReg{0.9, 1.1, GroupStructure::contiguous(6, 3)};
    const SolveResult res = solve_regularized(identity_quadratic(y), r, {});
    REQUIRE(res.status == SolveStatus::converged);
    const Vector expect = prox(r, y, 0.5);
    for (int i = 0; i < 6; ++i) CHECK(res.beta[i] == Catch::Approx(expect[i]).margin(1e-6));
}
