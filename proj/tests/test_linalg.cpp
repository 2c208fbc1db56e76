#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "certlab/linalg.hpp"
#include "certlab/random.hpp"

using namespace certlab;

namespace {

// 4x3 reference matrix with independently computed singular values.
const std::vector<double> kA43 = {
    -0.8475155145647386, 0.06854253280286053,  -1.2509259734323444, -1.5836366914181446,
    0.6324575844117477,  -0.4696753890279187,  1.1869153080481134,  0.37472156691094216,
    -2.141918401849568,  -0.42201634158029705, -1.1095875272656242, -0.36247725454161517};
const std::vector<double> kS43 = {2.6052959779406675, 2.162085958730699, 1.27741418648059};

DenseMatrix matrix_from(const std::vector<double>& flat, int rows, int cols) {
    DenseMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = flat[i * cols + j];
    return m;
}

}  // namespace

TEST_CASE("vector ops", "[linalg]") {
    Vector a{1.0, -2.0, 3.0}, b{0.5, 0.0, -1.0};
    CHECK(dot(a, b) == Catch::Approx(-2.5));
    CHECK(norm2_sq(a) == Catch::Approx(14.0));
    CHECK(norm2(a) == Catch::Approx(std::sqrt(14.0)));
    CHECK(norm1(a) == Catch::Approx(6.0));
    CHECK(norm_inf(a) == Catch::Approx(3.0));
    axpy(2.0, b, a);  // a += 2b
    CHECK(a[0] == Catch::Approx(2.0));
    CHECK(a[2] == Catch::Approx(1.0));
    CHECK(all_finite(a));
    a[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(all_finite(a));
}

TEST_CASE("svd reproduces reference singular values", "[linalg]") {
    const DenseMatrix a = matrix_from(kA43, 4, 3);
    const SvdFactors f = svd(a);
    REQUIRE(f.s.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(f.s[i] == Catch::Approx(kS43[i]).epsilon(1e-10));

    // reconstruction and orthogonality
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) {
            double v = 0.0;
            for (int k = 0; k < 3; ++k) v += f.U(i, k) * f.s[k] * f.V(j, k);
            CHECK(v == Catch::Approx(a(i, j)).margin(1e-10));
        }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double utu = 0.0, vtv = 0.0;
            for (int k = 0; k < 4; ++k) utu += f.U(k, i) * f.U(k, j);
            for (int k = 0; k < 3; ++k) vtv += f.V(k, i) * f.V(k, j);
            CHECK(utu == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-10));
            CHECK(vtv == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-10));
        }
    CHECK(spectral_norm(a) == Catch::Approx(kS43[0]).epsilon(1e-10));
}

TEST_CASE("eigen_sym on constructed spectrum", "[linalg]") {
    // Q diag(1,3,7) Q^T with a Householder Q
    Vector w{1.0, 2.0, -1.0};
    const double nw = norm2(w);
    for (auto& x : w) x /= nw;
    DenseMatrix q = DenseMatrix::identity(3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) q(i, j) -= 2.0 * w[i] * w[j];
    const Vector lam{1.0, 3.0, 7.0};
    DenseMatrix m(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double v = 0.0;
            for (int k = 0; k < 3; ++k) v += q(i, k) * lam[k] * q(j, k);
            m(i, j) = v;
        }
    const EigenSym es = eigen_sym(m);
    REQUIRE(es.values.size() == 3);
    CHECK(es.values[0] == Catch::Approx(1.0).margin(1e-10));
    CHECK(es.values[1] == Catch::Approx(3.0).margin(1e-10));
    CHECK(es.values[2] == Catch::Approx(7.0).margin(1e-10));
    CHECK(min_eigenvalue_sym(m) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("cholesky and solve_spd", "[linalg]") {
    Rng rng(5);
    const DenseMatrix x = rng.normal_matrix(8, 4);
    DenseMatrix h = gram(x);
    for (int i = 0; i < 4; ++i) h(i, i) += 0.5;
    const Vector sol{1.0, -2.0, 0.5, 3.0};
    const Vector rhs = h.apply(sol);
    const Vector got = solve_spd(h, rhs);
    for (int i = 0; i < 4; ++i) CHECK(got[i] == Catch::Approx(sol[i]).margin(1e-9));

    DenseMatrix singular(2, 2);
    singular(0, 0) = 1.0;
    singular(0, 1) = 1.0;
    singular(1, 0) = 1.0;
    singular(1, 1) = 1.0;
    CHECK_THROWS_AS(solve_spd(singular, Vector{1.0, 0.0}), SingularMatrixError);
}

TEST_CASE("cg_solve matches dense solve", "[linalg]") {
    Rng rng(11);
    const DenseMatrix x = rng.normal_matrix(10, 6);
    DenseMatrix h = gram(x);
    for (int i = 0; i < 6; ++i) h(i, i) += 1.0;
    const Vector rhs = rng.normal_vector(6);
    const Vector dense = solve_spd(h, rhs);
    const Vector cg = cg_solve([&](const Vector& v) { return h.apply(v); }, rhs, 1e-12);
    for (int i = 0; i < 6; ++i) CHECK(cg[i] == Catch::Approx(dense[i]).margin(1e-8));
}

TEST_CASE("spectral norm estimate", "[linalg]") {
    const DenseMatrix a = matrix_from(kA43, 4, 3);
    CHECK(spectral_norm_estimate(a) == Catch::Approx(kS43[0]).epsilon(1e-4));
}

TEST_CASE("matmul, gram, transpose, apply", "[linalg]") {
    Rng rng(3);
    const DenseMatrix a = rng.normal_matrix(3, 4);
    const DenseMatrix at = a.transposed();
    const DenseMatrix g = gram(a);  // A^T A
    const DenseMatrix g2 = matmul(at, a);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(g(i, j) == Catch::Approx(g2(i, j)).margin(1e-12));
    const Vector v = rng.normal_vector(4);
    const Vector av = a.apply(v);
    const Vector atav = a.apply_transposed(av);
    const Vector gv = g.apply(v);
    for (int i = 0; i < 4; ++i) CHECK(atav[i] == Catch::Approx(gv[i]).margin(1e-12));
}

TEST_CASE("seed derivation decorrelates trials", "[random]") {
    CHECK(derive_seed(7, 0) != derive_seed(7, 1));
    CHECK(derive_seed(7, 0) != derive_seed(8, 0));
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
    Rng a(derive_seed(7, 0)), b(derive_seed(7, 0));
    CHECK(a.normal() == b.normal());
}
