#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "certlab/certificates.hpp"
#include "certlab/random.hpp"
#include "certlab/solvers.hpp"

using namespace certlab;

namespace {

// 8x12 reference design (row-major) with an independently computed interior
// certificate for support {1,7}, signs (+1,-1), lambda=1.
const std::vector<double> kX812 = {
    0.08937309554340667,   0.7941812754230927,   -1.5266507581422224,  -1.2814838301773412,
    -0.5202150248393184,   -1.23186943583593,    -1.0310330041513638,  0.3793659490551743,
    -1.7531451091935502,   -1.3913786210268402,  2.2880827576614515,   -1.8869448620617602,
    -1.223845298131477,    -0.025688254571906596, -0.856910805676928,  0.31144987490540965,
    -0.21642000060929523,  0.8194756922830457,   -0.22573569716748024, 1.0707227599695996,
    -0.06013414531585251,  -0.2423719698334643,  -0.44420549699440925, 0.06067046202245689,
    0.5485719488975198,    -0.12988052007956272, 0.7379521478792509,   0.5626378774459103,
    0.21875695250174976,   -0.19517741808342026, -0.9938349613568105,  -1.0681539514065332,
    0.7726736026957581,    1.1900881725038002,   -1.841031052915841,   2.015262064267297,
    -0.34359036348913896,  -0.7192363364703573,  -0.21600864975360928, -1.7875362239038566,
    -1.2608798980007256,   0.45606460025437473,  -0.4285965628002601,  0.5171768370767611,
    -0.16638289594722472,  1.1133520679585867,   -1.2485923914411636,  -0.16164367816719277,
    -1.0097760794494992,   -0.3773994103064649,  0.5265412215973393,   0.7626253008063927,
    -0.12833212095186033,  0.38809892924478107,  -1.5933066300727359,  -0.7642496057844792,
    0.7747179667958217,    0.80184969375846,     -1.2830897029089037,  0.334822171620211,
    -1.7755541777400659,   1.1923317948205263,   -1.0350143457530048,  -0.6295911913665448,
    0.6847123568484789,    0.4713376023213585,   -1.0423310215393813,  -0.36202697254898464,
    1.4274164211326288,    0.14366686093181577,  -1.637157611491995,   2.07419399609499,
    0.3305588437022641,    -0.829322786713937,   -2.3769257766391725,  -1.3948149039265778,
    -1.0796226287921689,   -0.35219272629707754, -1.334460990220564,   -0.17864434808005036,
    -0.24513240855437377,  2.4945798162675232,   1.1235306430887055,   -0.047653022200015056,
    -0.7738236162612498,   -2.5038426916161898,  -2.177208828060099,   0.1163601927409393,
    1.3009655216707672,    1.096313127700871,    -1.0088615465637754,  -0.3800390433760842,
    0.22733783930610088,   -1.3152177790043078,  0.6651482856870715,   0.3626774650571341};
const std::vector<double> kV0 = {
    0.15145638844200993,  1.0,
    1.030489082357278,    0.5799777560994079,
    0.4191760833137744,   -0.4640322586262285,
    -0.41137900438796693, -1.0000000000000002,
    0.8385200395398319,   0.5314986813913268,
    -1.0451553021348197,  1.2495578199887418};
const double kBDual812 = 1.2495578199887418;

DenseMatrix matrix_from(const std::vector<double>& flat, int rows, int cols) {
    DenseMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = flat[i * cols + j];
    return m;
}

}  // namespace

TEST_CASE("interior certificate on the 8x12 reference design", "[certificates]") {
    const DenseMatrix x = matrix_from(kX812, 8, 12);
    Vector anchor(12, 0.0);
    anchor[1] = 1.0;
    anchor[7] = -1.0;
    const CertificateFrame f = certificate_frame(LassoReg{1.0}, anchor, 1.0);
    const CertificateReport rep = build_interior_noisefree(x, f, f.tangent);

    CHECK(rep.kind == CertificateKind::interior);
    CHECK(rep.b_dual == Catch::Approx(kBDual812).epsilon(1e-12));
    for (int i = 0; i < 12; ++i)
        CHECK(rep.certificate[i] == Catch::Approx(kV0[i]).margin(1e-9));
    CHECK(rep.delta_residual <= 1e-9);  // tangent part of v0 - e vanishes
    CHECK_FALSE(rep.pass);              // 1.2495... > 1
    CHECK(rep.margin == Catch::Approx(1.0 - kBDual812).epsilon(1e-12));

    // in the noise-free case the irrepresentable lhs equals the interior b_dual
    const LossSpec L = QuadraticLoss{x, x.apply(anchor)};
    const TargetSplit split = target_projection(L, anchor, f);
    const CertificateReport irr = check_irrepresentable(L, f, f.tangent, split);
    CHECK(irr.b_dual == Catch::Approx(kBDual812).epsilon(1e-10));
    CHECK_FALSE(irr.pass);
}

TEST_CASE("target projection", "[certificates]") {
    Rng rng(2001);
    const int n = 30, p = 10;
    const DenseMatrix x = rng.normal_matrix(n, p);
    Vector anchor(p, 0.0);
    anchor[2] = 1.0;
    anchor[5] = -2.0;
    const CertificateFrame f = certificate_frame(LassoReg{1.0}, anchor, 0.5);

    // noise-free: beta* = anchor and the gradient vanishes entirely
    {
        const LossSpec L = QuadraticLoss{x, x.apply(anchor)};
        const TargetSplit split = target_projection(L, anchor, f);
        for (int i = 0; i < p; ++i)
            CHECK(split.beta_star[i] == Catch::Approx(anchor[i]).margin(1e-9));
        CHECK(split.eta_tilde <= 1e-9);
        CHECK(norm2(split.a_tilde) <= 1e-8);
    }
    // noisy: the tangent part of the gradient is annihilated, the complement
    // part generally is not
    {
        Vector y = x.apply(anchor);
        for (auto& v : y) v += 0.3 * rng.normal();
        const LossSpec L = QuadraticLoss{x, y};
        const TargetSplit split = target_projection(L, anchor, f);
        CHECK(norm2(split.a_tilde) <= 1e-8);
        CHECK(split.eta_tilde > 1e-3);
        CHECK(split.eta_tilde == Catch::Approx(b_dual_norm(f, split.b_tilde)));
        // beta* differs from the anchor only on the support
        for (int i = 0; i < p; ++i)
            if (i != 2 && i != 5)
                CHECK(split.beta_star[i] == Catch::Approx(anchor[i]).margin(1e-12));
    }
}

TEST_CASE("frame ball clip", "[certificates]") {
    Vector anchor(6, 0.0);
    anchor[0] = 1.0;
    const CertificateFrame f = certificate_frame(LassoReg{2.0}, anchor, 0.5);
    const Vector v{9.0, 3.0, -0.4, 0.1, -5.0, 0.0};
    const Vector c = detail::frame_ball_clip(f, v, 0.5);
    // off-support coordinates clip to radius*lambda = 1; support passes to 0
    CHECK(c[0] == 0.0);  // clip lives in the complement
    CHECK(c[1] == Catch::Approx(1.0));
    CHECK(c[2] == Catch::Approx(-0.4));
    CHECK(c[4] == Catch::Approx(-1.0));
    CHECK(b_dual_norm(f, c) <= 0.5 + 1e-12);

    // group frame: blockwise radial clip
    const RegularizerSpec gr = GroupReg{1.0, GroupStructure::contiguous(6, 3)};
    Vector ga(6, 0.0);
    ga[0] = 1.0;
    const CertificateFrame gf = certificate_frame(gr, ga, 0.5);
    const Vector gv{0.0, 0.0, 0.0, 3.0, 4.0, 0.0};
    const Vector gc = detail::frame_ball_clip(gf, gv, 0.5);
    CHECK(std::sqrt(gc[3] * gc[3] + gc[4] * gc[4]) == Catch::Approx(0.5));
    CHECK(gc[3] / gc[4] == Catch::Approx(0.75));
}

TEST_CASE("measured delta makes the certificate premise exact", "[certificates]") {
    Rng rng(31415);
    const int n = 25, p = 8;
    const DenseMatrix x = rng.normal_matrix(n, p);
    Vector anchor(p, 0.0);
    anchor[1] = 2.0;
    anchor[6] = -1.0;
    Vector y = x.apply(anchor);
    for (auto& v : y) v += 0.1 * rng.normal();
    const LossSpec L = QuadraticLoss{x, y};
    const CertificateFrame f = certificate_frame(LassoReg{1.0}, anchor, 0.5);

    const SolveResult q = solve_certificate_global(L, f, {});
    const Vector delta = measure_delta(L, f, q.beta);

    // -grad L(Q) + delta must equal e + u with u off-tangent, b_dual <= eta
    Vector w = gradient(L, q.beta);
    for (int i = 0; i < p; ++i) w[i] = -w[i] + delta[i] - f.e[i];
    const auto [wt, wperp] = tangent_project(f.tangent, w);
    CHECK(norm2(wt) <= 1e-12);
    CHECK(b_dual_norm(f, wperp) <= f.eta + 1e-12);
    // a converged solve leaves almost nothing to repair
    CHECK(norm2(delta) <= 1e-6);
}

TEST_CASE("noise-free lasso end to end: certificate, recovery, slacks", "[certificates]") {
    Rng rng(606);
    const int n = 60, p = 128, s = 4;
    int certified = 0;
    for (int rep = 0; rep < 5; ++rep) {
        Rng r(derive_seed(606, rep));
        const DenseMatrix x = r.normal_matrix(n, p);
        Vector anchor(p, 0.0);
        const std::vector<int> supp = r.sample_without_replacement(p, s);
        for (int k : supp) anchor[k] = r.sign() * (1.0 + r.uniform());
        const Vector y = x.apply(anchor);
        const LossSpec L = QuadraticLoss{x, y};
        const RegularizerSpec reg = LassoReg{1.0};
        const CertificateFrame f = certificate_frame(reg, anchor, 1.0);
        const CertificateReport cert = build_interior_noisefree(x, f, f.tangent);
        if (!(cert.pass && cert.margin > 0.1)) continue;
        ++certified;

        const SolveResult bp = solve_basis_pursuit(x, y, reg, {});
        REQUIRE(bp.status == SolveStatus::converged);
        double err = 0.0;
        for (int i = 0; i < p; ++i) err += (bp.beta[i] - anchor[i]) * (bp.beta[i] - anchor[i]);
        CHECK(std::sqrt(err) / norm2(anchor) <= 1e-6);

        // recovery slack with the measured residual
        const SolveResult qg = solve_certificate_global(L, f, {});
        const Vector delta = measure_delta(L, f, qg.beta);
        CHECK(recovery_bound_thm1(L, reg, f, bp.beta, qg.beta, delta) >= -1e-6);

        // oracle slack with the shifted loss (gamma = 1)
        const TargetSplit split = target_projection(L, anchor, f);
        const ShiftedLoss lbar = make_shifted(L, anchor, split.beta_star, 1.0);
        const SolveResult qg2 = solve_certificate_global(lbar, f, {});
        const Vector delta2 = measure_delta(lbar, f, qg2.beta);
        const OracleBound ob =
            oracle_bound_thm2(L, lbar, reg, f, split.beta_star, bp.beta, qg2.beta, delta2);
        CHECK(ob.slack >= -1e-6);
        CHECK(ob.gamma_condition_ok);

        // noise-free global bound: lambda^2 |S| / (2 gamma) = 2
        CHECK(recovery_bound_global(L, f, split, 1.0, PenaltyNorm::l2) ==
              Catch::Approx(2.0).margin(1e-9));
    }
    CHECK(certified >= 3);  // n=60 comfortably certifies s=4 most of the time
}

TEST_CASE("tangent bound identity on the identity design", "[certificates]") {
    // X = I: H_T = I, so the certificate term is ||e||^2/4 = lambda^2 s/4.
    const int p = 6;
    Vector anchor(p, 0.0);
    anchor[0] = 1.0;
    anchor[3] = -2.0;
    const LossSpec L = QuadraticLoss{DenseMatrix::identity(p), anchor};
    const CertificateFrame f = certificate_frame(LassoReg{0.8}, anchor, 0.5);
    const TargetSplit split = target_projection(L, anchor, f);
    const TangentBoundResult tb =
        oracle_bound_tangent_quadratic(f, f.tangent, split, DenseMatrix::identity(p));
    CHECK(tb.d_term == Catch::Approx(0.0).margin(1e-12));
    CHECK(tb.certificate_term == Catch::Approx(0.25 * 2.0 * 0.8 * 0.8).epsilon(1e-10));
    CHECK(tb.bound == Catch::Approx(tb.d_term + tb.certificate_term));

    // matches the tangent certificate solve: Q = anchor - e/2, and the bound
    // equals D_L(anchor, Q) + <e+a, Q - anchor> + ... collapsed to the display
    const SolveResult qt = solve_certificate_tangent(L, f, f.tangent, split.a_tilde);
    CHECK(qt.beta[0] == Catch::Approx(anchor[0] - 0.5 * 0.8).margin(1e-9));
    CHECK(qt.beta[3] == Catch::Approx(anchor[3] + 0.5 * 0.8).margin(1e-9));
}

TEST_CASE("r_g is a lower bound on R that matches on the model set", "[certificates]") {
    Rng rng(8);
    Vector anchor(10, 0.0);
    anchor[2] = 1.0;
    anchor[7] = -0.5;
    const RegularizerSpec reg = LassoReg{1.2};
    const CertificateFrame f = certificate_frame(reg, anchor, 1.0);
    CHECK(r_g(f, anchor) == Catch::Approx(value(reg, anchor)).epsilon(1e-12));
    for (int rep = 0; rep < 60; ++rep) {
        const Vector b = rng.normal_vector(10);
        CHECK(r_g(f, b) <= value(reg, b) + 1e-10);
    }
    // with eta < 1 the off-support part is scaled down accordingly
    const CertificateFrame fh = certificate_frame(reg, anchor, 0.5);
    Vector off(10, 0.0);
    off[0] = 3.0;
    CHECK(r_g(fh, off) == Catch::Approx(0.5 * 1.2 * 3.0).epsilon(1e-12));
}
