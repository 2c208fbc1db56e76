#pragma once

// Desk-scale dense linear algebra: one-sided Jacobi SVD, cyclic Jacobi
// symmetric eigensolver, Cholesky SPD solves, power iteration and CG.
// Everything operates on a flat row-major DenseMatrix and std::vector<double>.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "certlab/errors.hpp"

namespace certlab {

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

inline double dot(const Vector& a, const Vector& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2_sq(const Vector& a) { return dot(a, a); }
inline double norm2(const Vector& a) { return std::sqrt(norm2_sq(a)); }

inline double norm1(const Vector& a) {
    double s = 0.0;
    for (double x : a) s += std::abs(x);
    return s;
}

inline double norm_inf(const Vector& a) {
    double s = 0.0;
    for (double x : a) s = std::max(s, std::abs(x));
    return s;
}

inline Vector operator+(const Vector& a, const Vector& b) {
    assert(a.size() == b.size());
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vector operator-(const Vector& a, const Vector& b) {
    assert(a.size() == b.size());
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vector operator*(double c, const Vector& a) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
    return r;
}

// y += c*x
inline void axpy(double c, const Vector& x, Vector& y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline bool all_finite(const Vector& a) {
    for (double x : a) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// DenseMatrix
// ---------------------------------------------------------------------------

class DenseMatrix {
public:
    DenseMatrix() : rows_(0), cols_(0) {}

    DenseMatrix(int rows, int cols)
        : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, 0.0) {
        if (rows < 0 || cols < 0) throw ConfigError("DenseMatrix: negative dimension");
    }

    DenseMatrix(int rows, int cols, Vector data) : rows_(rows), cols_(cols), a_(std::move(data)) {
        if (rows < 0 || cols < 0) throw ConfigError("DenseMatrix: negative dimension");
        if (a_.size() != static_cast<std::size_t>(rows) * cols)
            throw ConfigError("DenseMatrix: data size " + std::to_string(a_.size()) +
                              " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
        if (!all_finite(a_)) throw ConfigError("DenseMatrix: non-finite entry");
    }

    static DenseMatrix identity(int n) {
        DenseMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

    const Vector& data() const { return a_; }
    Vector& data() { return a_; }

    DenseMatrix transposed() const {
        DenseMatrix t(cols_, rows_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    // r = A·x
    Vector apply(const Vector& x) const {
        assert(static_cast<int>(x.size()) == cols_);
        Vector r(rows_, 0.0);
        for (int i = 0; i < rows_; ++i) {
            double s = 0.0;
            const double* row = &a_[static_cast<std::size_t>(i) * cols_];
            for (int j = 0; j < cols_; ++j) s += row[j] * x[j];
            r[i] = s;
        }
        return r;
    }

    // r = Aᵀ·x
    Vector apply_transposed(const Vector& x) const {
        assert(static_cast<int>(x.size()) == rows_);
        Vector r(cols_, 0.0);
        for (int i = 0; i < rows_; ++i) {
            const double c = x[i];
            if (c == 0.0) continue;
            const double* row = &a_[static_cast<std::size_t>(i) * cols_];
            for (int j = 0; j < cols_; ++j) r[j] += c * row[j];
        }
        return r;
    }

    double frobenius_norm() const { return norm2(a_); }

    double max_abs() const { return norm_inf(a_); }

private:
    int rows_, cols_;
    Vector a_;
};

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    assert(a.cols() == b.rows());
    DenseMatrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

// Gram matrix AᵀA.
inline DenseMatrix gram(const DenseMatrix& a) {
    DenseMatrix g(a.cols(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) {
            const double v = a(i, j);
            if (v == 0.0) continue;
            for (int k = j; k < a.cols(); ++k) g(j, k) += v * a(i, k);
        }
    for (int j = 0; j < a.cols(); ++j)
        for (int k = 0; k < j; ++k) g(j, k) = g(k, j);
    return g;
}

// ---------------------------------------------------------------------------
// SVD via one-sided Jacobi
// ---------------------------------------------------------------------------

struct SvdFactors {
    DenseMatrix U;  // rows(A) x min(rows,cols), orthonormal columns
    Vector s;       // nonincreasing, nonnegative
    DenseMatrix V;  // cols(A) x min(rows,cols), orthonormal columns
};

namespace detail {

// One-sided Jacobi on a tall matrix B (rows >= cols): rotate column pairs of B
// (accumulating the rotations in V) until all pairs are numerically orthogonal.
inline void one_sided_jacobi(DenseMatrix& b, DenseMatrix& v) {
    const int n = b.cols();
    const int m = b.rows();
    const double tol = 1e-12;  // off-diagonal (relative) rotation threshold
    for (int sweep = 0; sweep < 64; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < m; ++i) {
                    app += b(i, p) * b(i, p);
                    aqq += b(i, q) * b(i, q);
                    apq += b(i, p) * b(i, q);
                }
                const double denom = std::sqrt(app * aqq);
                if (denom == 0.0 || std::abs(apq) <= tol * denom) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (int i = 0; i < m; ++i) {
                    const double bp = b(i, p), bq = b(i, q);
                    b(i, p) = cs * bp - sn * bq;
                    b(i, q) = sn * bp + cs * bq;
                }
                for (int i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = cs * vp - sn * vq;
                    v(i, q) = sn * vp + cs * vq;
                }
            }
        }
        if (!rotated) return;
    }
    // Not an error: columns are orthogonal to ~1e-12 relative after 64 sweeps
    // for any desk-scale input; fall through with what we have.
}

// Extend the first `r` orthonormal columns of u (m x k) to all k columns by
// Gram-Schmidt against unit-vector candidates (used for zero singular values).
inline void complete_orthonormal(DenseMatrix& u, int r) {
    const int m = u.rows();
    const int k = u.cols();
    int next = r;
    for (int cand = 0; cand < m && next < k; ++cand) {
        Vector w(m, 0.0);
        w[cand] = 1.0;
        for (int j = 0; j < next; ++j) {
            double proj = 0.0;
            for (int i = 0; i < m; ++i) proj += u(i, j) * w[i];
            for (int i = 0; i < m; ++i) w[i] -= proj * u(i, j);
        }
        const double nw = norm2(w);
        if (nw > 1e-8) {
            for (int i = 0; i < m; ++i) u(i, next) = w[i] / nw;
            ++next;
        }
    }
}

}  // namespace detail

// Thin SVD A = U·diag(s)·Vᵀ with s nonincreasing.  Handles wide matrices by
// transposing, and rank deficiency by completing U with an orthonormal basis.
inline SvdFactors svd(const DenseMatrix& a) {
    const bool wide = a.rows() < a.cols();
    DenseMatrix b = wide ? a.transposed() : a;
    const int m = b.rows(), n = b.cols();
    DenseMatrix v = DenseMatrix::identity(n);
    detail::one_sided_jacobi(b, v);

    Vector s(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double sq = 0.0;
        for (int i = 0; i < m; ++i) sq += b(i, j) * b(i, j);
        s[j] = std::sqrt(sq);
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return s[x] > s[y]; });

    DenseMatrix u(m, n), vs(n, n);
    Vector ss(n);
    const double smax = *std::max_element(s.begin(), s.end());
    int r = 0;
    for (int j = 0; j < n; ++j) {
        const int src = order[j];
        ss[j] = s[src];
        for (int i = 0; i < n; ++i) vs(i, j) = v(i, src);
        if (s[src] > smax * 1e-15 && s[src] > 0.0) {
            for (int i = 0; i < m; ++i) u(i, j) = b(i, src) / s[src];
            r = j + 1;
        }
    }
    for (int j = r; j < n; ++j) ss[j] = 0.0;
    detail::complete_orthonormal(u, r);

    if (wide) return {vs, ss, u};
    return {u, ss, vs};
}

// Spectral norm (largest singular value) — thin wrapper when only s₁ is needed.
inline double spectral_norm(const DenseMatrix& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    SvdFactors f = svd(a);
    return f.s.empty() ? 0.0 : f.s[0];
}

// ---------------------------------------------------------------------------
// Symmetric eigenvalues via cyclic Jacobi
// ---------------------------------------------------------------------------

struct EigenSym {
    Vector values;   // ascending
    DenseMatrix vectors;  // columns are eigenvectors, same order
};

inline void check_symmetric(const DenseMatrix& m, double tol = 1e-10) {
    if (m.rows() != m.cols()) throw ConfigError("symmetric op: matrix not square");
    const double scale = std::max(1.0, m.max_abs());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol * scale)
                throw ConfigError("symmetric op: asymmetry " +
                                  std::to_string(std::abs(m(i, j) - m(j, i))) + " at (" +
                                  std::to_string(i) + "," + std::to_string(j) + ")");
}

inline EigenSym eigen_sym(const DenseMatrix& m_in) {
    check_symmetric(m_in);
    const int n = m_in.rows();
    DenseMatrix a = m_in;
    DenseMatrix v = DenseMatrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off = std::max(off, std::abs(a(i, j)));
        const double scale = std::max(1.0, a.max_abs());
        if (off <= 1e-14 * scale) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) <= 1e-16 * scale) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    EigenSym e;
    e.values.resize(n);
    for (int i = 0; i < n; ++i) e.values[i] = a(i, i);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return e.values[x] < e.values[y]; });
    Vector sorted(n);
    DenseMatrix vs(n, n);
    for (int j = 0; j < n; ++j) {
        sorted[j] = e.values[order[j]];
        for (int i = 0; i < n; ++i) vs(i, j) = v(i, order[j]);
    }
    e.values = std::move(sorted);
    e.vectors = std::move(vs);
    return e;
}

inline double min_eigenvalue_sym(const DenseMatrix& m) {
    if (m.rows() == 0) throw ConfigError("min_eigenvalue_sym: empty matrix");
    return eigen_sym(m).values.front();
}

// ---------------------------------------------------------------------------
// Cholesky / SPD solve
// ---------------------------------------------------------------------------

// Lower-triangular Cholesky factor; returns false if a pivot drops below
// pivot_tol * trace (numerically not positive definite).
inline bool cholesky(const DenseMatrix& m, DenseMatrix& l, double pivot_tol = 1e-12) {
    const int n = m.rows();
    double trace = 0.0;
    for (int i = 0; i < n; ++i) trace += m(i, i);
    const double floor = pivot_tol * std::max(trace, 0.0);
    l = DenseMatrix(n, n);
    for (int j = 0; j < n; ++j) {
        double d = m(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= floor || !std::isfinite(d)) return false;
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return true;
}

// Solve M x = b for symmetric positive definite M via Cholesky with one round
// of iterative refinement.  Near-singular M raises SingularMatrixError carrying
// a min-eigenvalue estimate.
inline Vector solve_spd(const DenseMatrix& m, const Vector& b) {
    check_symmetric(m);
    if (static_cast<int>(b.size()) != m.rows())
        throw ConfigError("solve_spd: dimension mismatch");
    const int n = m.rows();
    DenseMatrix l;
    if (!cholesky(m, l)) {
        const double mineig = (n <= 400) ? min_eigenvalue_sym(m)
                                         : -std::numeric_limits<double>::infinity();
        throw SingularMatrixError(
            "solve_spd: matrix numerically singular (min eigenvalue estimate " +
                std::to_string(mineig) + ")",
            mineig);
    }
    auto solve_with_factor = [&](const Vector& rhs) {
        Vector y(n), x(n);
        for (int i = 0; i < n; ++i) {
            double s = rhs[i];
            for (int k = 0; k < i; ++k) s -= l(i, k) * y[k];
            y[i] = s / l(i, i);
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = y[i];
            for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
            x[i] = s / l(i, i);
        }
        return x;
    };
    Vector x = solve_with_factor(b);
    Vector r = b - m.apply(x);
    axpy(1.0, solve_with_factor(r), x);
    const double resid = norm2(b - m.apply(x));
    const double bound = 1e-8 * (m.frobenius_norm() * norm2(x) + norm2(b));
    if (resid > std::max(bound, 1e-300)) {
        const double mineig = (n <= 400) ? min_eigenvalue_sym(m)
                                         : -std::numeric_limits<double>::infinity();
        throw SingularMatrixError("solve_spd: residual " + std::to_string(resid) +
                                      " exceeds acceptance bound (ill-conditioned system)",
                                  mineig);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Power iteration and CG
// ---------------------------------------------------------------------------

// Estimate of ‖X‖_sp via `iters` power iterations on XᵀX with a deterministic
// start vector.  Used to seed solver step sizes; backtracking absorbs the
// estimation error.
inline double spectral_norm_estimate(const DenseMatrix& x, int iters = 20) {
    const int p = x.cols();
    if (p == 0 || x.rows() == 0) return 0.0;
    Vector v(p);
    for (int j = 0; j < p; ++j) v[j] = 1.0 + 1e-3 * std::cos(static_cast<double>(j));
    double nv = norm2(v);
    for (double& c : v) c /= nv;
    double lam = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vector w = x.apply_transposed(x.apply(v));
        lam = norm2(w);
        if (lam == 0.0) return 0.0;
        for (int j = 0; j < p; ++j) v[j] = w[j] / lam;
    }
    return std::sqrt(lam);
}

// Conjugate gradient on a symmetric PSD operator given as a callable
// Vector -> Vector.  Tolerance is relative to ‖b‖.
template <typename Op>
Vector cg_solve(Op&& apply, const Vector& b, double tol = 1e-10, int max_iters = -1) {
    const int n = static_cast<int>(b.size());
    if (max_iters < 0) max_iters = 10 * n;
    Vector x(n, 0.0), r = b, d = b;
    double rs = norm2_sq(r);
    const double stop = tol * std::max(norm2(b), 1e-300);
    for (int it = 0; it < max_iters && std::sqrt(rs) > stop; ++it) {
        Vector ad = apply(d);
        const double dad = dot(d, ad);
        if (dad <= 0.0) break;  // operator lost positive definiteness numerically
        const double alpha = rs / dad;
        axpy(alpha, d, x);
        axpy(-alpha, ad, r);
        const double rs2 = norm2_sq(r);
        const double beta = rs2 / rs;
        rs = rs2;
        for (int j = 0; j < n; ++j) d[j] = r[j] + beta * d[j];
    }
    return x;
}

}  // namespace certlab
