#pragma once

// Structured regularizers: weighted l1 (lasso), non-overlapping group l1,
// nuclear norm, and the mixed infimal-convolution penalty
//     R(beta) = inf_{beta' + beta'' = beta} lambda1*||beta'||_1
//                                         + lambdaG*||beta''||_{Gamma,1}.
// Alongside values / proxes / dual norms this header builds the certificate
// frame of a regularizer at an anchor point: support, e_S(W), tangent space,
// and the off-support seminorm ||.||_B with its dual.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "certlab/errors.hpp"
#include "certlab/linalg.hpp"

namespace certlab {

// Magnitudes below support_tolerance * (max magnitude) count as zero when
// detecting supports and ranks.
constexpr double kSupportTolerance = 1e-10;

// ---------------------------------------------------------------------------
// Group structure
// ---------------------------------------------------------------------------

// Disjoint groups covering {0..p-1}, all of common size m.
class GroupStructure {
public:
    GroupStructure() = default;

    GroupStructure(int p, std::vector<std::vector<int>> groups)
        : p_(p), groups_(std::move(groups)) {
        if (groups_.empty()) throw ConfigError("GroupStructure: no groups");
        std::vector<char> seen(p, 0);
        const std::size_t m = groups_.front().size();
        for (const auto& g : groups_) {
            if (g.size() != m) throw ConfigError("GroupStructure: groups must share a common size");
            for (int idx : g) {
                if (idx < 0 || idx >= p) throw ConfigError("GroupStructure: index out of range");
                if (seen[idx]) throw ConfigError("GroupStructure: overlapping groups");
                seen[idx] = 1;
            }
        }
        for (int i = 0; i < p; ++i)
            if (!seen[i]) throw ConfigError("GroupStructure: index " + std::to_string(i) + " uncovered");
    }

    // Contiguous blocks of size m.
    static GroupStructure contiguous(int p, int m) {
        if (m <= 0 || p % m != 0) throw ConfigError("GroupStructure: p not divisible by m");
        std::vector<std::vector<int>> gs;
        for (int start = 0; start < p; start += m) {
            std::vector<int> g(m);
            for (int i = 0; i < m; ++i) g[i] = start + i;
            gs.push_back(std::move(g));
        }
        return GroupStructure(p, std::move(gs));
    }

    int p() const { return p_; }
    int q() const { return static_cast<int>(groups_.size()); }
    int m() const { return static_cast<int>(groups_.front().size()); }
    const std::vector<int>& group(int j) const { return groups_[j]; }

private:
    int p_ = 0;
    std::vector<std::vector<int>> groups_;
};

// ---------------------------------------------------------------------------
// Regularizer variants
// ---------------------------------------------------------------------------

struct LassoReg {
    double lambda;
};

struct GroupReg {
    double lambda;
    GroupStructure gamma;
};

struct NuclearReg {
    double lambda;
    int rows, cols;  // beta is interpreted as a rows x cols matrix (row-major)
};

struct MixedReg {
    double lambda1;   // standard-l1 weight
    double lambdaG;   // group-l1 weight
    GroupStructure gamma;
};

using RegularizerSpec = std::variant<LassoReg, GroupReg, NuclearReg, MixedReg>;

inline double reg_lambda_positive(double lambda) {
    if (!(lambda > 0.0)) throw ConfigError("regularizer: lambda must be > 0");
    return lambda;
}

inline void validate(const RegularizerSpec& r, int p) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LassoReg>) {
                reg_lambda_positive(v.lambda);
            } else if constexpr (std::is_same_v<T, GroupReg>) {
                reg_lambda_positive(v.lambda);
                if (v.gamma.p() != p) throw ConfigError("group regularizer: dimension mismatch");
            } else if constexpr (std::is_same_v<T, NuclearReg>) {
                reg_lambda_positive(v.lambda);
                if (v.rows * v.cols != p) throw ConfigError("nuclear regularizer: shape mismatch");
            } else {
                reg_lambda_positive(v.lambda1);
                reg_lambda_positive(v.lambdaG);
                if (v.gamma.p() != p) throw ConfigError("mixed regularizer: dimension mismatch");
            }
        },
        r);
}

inline DenseMatrix as_matrix(const Vector& v, int rows, int cols) {
    return DenseMatrix(rows, cols, v);
}

// ---------------------------------------------------------------------------
// Elementwise / blockwise shrinkage
// ---------------------------------------------------------------------------

inline double soft_threshold(double x, double c) {
    if (x > c) return x - c;
    if (x < -c) return x + c;
    return 0.0;
}

// Blockwise normalized sign: beta_G / ||beta_G||_2 per group, 0 on zero groups.
inline Vector sign_generalized(const Vector& beta, const GroupStructure& gamma) {
    Vector s(beta.size(), 0.0);
    for (int j = 0; j < gamma.q(); ++j) {
        double nrm = 0.0;
        for (int idx : gamma.group(j)) nrm += beta[idx] * beta[idx];
        nrm = std::sqrt(nrm);
        if (nrm > 0.0)
            for (int idx : gamma.group(j)) s[idx] = beta[idx] / nrm;
    }
    return s;
}

namespace detail {

// max over u of <u,z> subject to |u_i| <= a, ||u||_2 <= radius  (support
// function of a box-ball intersection).  The maximizer is clip(c*z, +-a) with
// the scale c chosen so the ball constraint is tight when it binds.
inline double boxball_support(const std::vector<double>& z, double a, double radius) {
    double vbox = 0.0, nbox = 0.0;
    for (double x : z) {
        vbox += a * std::abs(x);
        nbox += a * a * (x != 0.0 ? 1.0 : 0.0);
    }
    // u = a*sgn(z) on supp(z) is optimal for the box alone
    double suppsz = 0.0;
    for (double x : z)
        if (x != 0.0) suppsz += 1.0;
    if (a * std::sqrt(suppsz) <= radius) return vbox;
    auto norm_at = [&](double c) {
        double s = 0.0;
        for (double x : z) {
            const double u = std::min(a, c * std::abs(x));
            s += u * u;
        }
        return std::sqrt(s);
    };
    double lo = 0.0, hi = 1.0;
    while (norm_at(hi) < radius) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (norm_at(mid) < radius ? lo : hi) = mid;
    }
    const double c = 0.5 * (lo + hi);
    double val = 0.0;
    for (double x : z) val += std::min(a, c * std::abs(x)) * std::abs(x);
    return val;
}

// Euclidean projection of v onto {|u_i| <= a} ∩ {||u||_2 <= radius}; with the
// ball multiplier mu the projection is clip(v/(1+2mu), +-a), mu found by
// bisection on the tight ball constraint.
inline std::vector<double> boxball_project(const std::vector<double>& v, double a, double radius) {
    std::vector<double> u(v.size());
    auto clipped = [&](double shrink) {
        double nrm = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            u[i] = std::clamp(v[i] * shrink, -a, a);
            nrm += u[i] * u[i];
        }
        return std::sqrt(nrm);
    };
    if (clipped(1.0) <= radius) return u;
    double lo = 0.0, hi = 1.0;  // shrink factor 1/(1+2mu) in (0,1]
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (clipped(mid) > radius ? hi : lo) = mid;
    }
    clipped(lo);
    return u;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Mixed decomposition (exact, per group)
// ---------------------------------------------------------------------------

struct MixedDecomposition {
    Vector beta1;  // standard-sparsity part beta'
    Vector beta2;  // group-sparsity part beta''
    double value;  // lambda1*||beta'||_1 + lambdaG*||beta''||_{Gamma,1}
};

namespace detail {

// Optimal split of one group z into z = x' + x'' minimizing
// l1*||x'||_1 + lG*||x''||_2.  The minimizer has the clip form
// x''_i = sgn(z_i)*min(|z_i|, c); the best clip level c is found exactly by
// scanning breakpoint intervals (the objective restricted to an interval has
// an explicit stationary point).  Ties prefer c = 0, i.e. x'' = 0.
inline double best_clip_level(const std::vector<double>& z, double l1, double lG) {
    std::vector<double> az(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) az[i] = std::abs(z[i]);
    std::vector<double> bp = az;
    bp.push_back(0.0);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());

    auto phi = [&](double c) {
        double ell1 = 0.0, sq = 0.0;
        for (double v : az) {
            ell1 += std::max(v - c, 0.0);
            const double w = std::min(v, c);
            sq += w * w;
        }
        return l1 * ell1 + lG * std::sqrt(sq);
    };

    double best_c = 0.0, best_val = phi(0.0);
    auto consider = [&](double c) {
        const double val = phi(c);
        if (val < best_val - 1e-14 * std::max(1.0, best_val)) {
            best_val = val;
            best_c = c;
        }
    };
    for (std::size_t k = 0; k < bp.size(); ++k) {
        const double lo = bp[k];
        const double hi = (k + 1 < bp.size()) ? bp[k + 1] : std::numeric_limits<double>::infinity();
        consider(lo);
        // on (lo, hi): active set A = {i: |z_i| > lo}
        double q = 0.0;
        int na = 0;
        for (double v : az) {
            if (v > lo)
                ++na;
            else
                q += v * v;
        }
        const double disc = lG * lG - l1 * l1 * na;
        if (disc > 0.0) {
            const double cstar = l1 * std::sqrt(q / disc);
            if (cstar > lo && cstar < hi) consider(cstar);
        }
    }
    return best_c;
}

}  // namespace detail

inline MixedDecomposition mixed_decompose(const MixedReg& r, const Vector& beta) {
    if (static_cast<int>(beta.size()) != r.gamma.p())
        throw ConfigError("mixed_decompose: dimension mismatch");
    MixedDecomposition d;
    d.beta1.assign(beta.size(), 0.0);
    d.beta2.assign(beta.size(), 0.0);
    d.value = 0.0;
    for (int j = 0; j < r.gamma.q(); ++j) {
        const auto& g = r.gamma.group(j);
        std::vector<double> z(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) z[i] = beta[g[i]];
        const double c = detail::best_clip_level(z, r.lambda1, r.lambdaG);
        double l1part = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double sgn = (z[i] > 0.0) ? 1.0 : (z[i] < 0.0 ? -1.0 : 0.0);
            const double b2 = sgn * std::min(std::abs(z[i]), c);
            d.beta2[g[i]] = b2;
            d.beta1[g[i]] = z[i] - b2;
            l1part += std::abs(z[i] - b2);
            sq += b2 * b2;
        }
        d.value += r.lambda1 * l1part + r.lambdaG * std::sqrt(sq);
    }
    return d;
}

// ---------------------------------------------------------------------------
// value / prox / dual_norm
// ---------------------------------------------------------------------------

inline double value(const RegularizerSpec& r, const Vector& beta) {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LassoReg>) {
                return v.lambda * norm1(beta);
            } else if constexpr (std::is_same_v<T, GroupReg>) {
                double s = 0.0;
                for (int j = 0; j < v.gamma.q(); ++j) {
                    double g2 = 0.0;
                    for (int idx : v.gamma.group(j)) g2 += beta[idx] * beta[idx];
                    s += std::sqrt(g2);
                }
                return v.lambda * s;
            } else if constexpr (std::is_same_v<T, NuclearReg>) {
                SvdFactors f = svd(as_matrix(beta, v.rows, v.cols));
                double s = 0.0;
                for (double x : f.s) s += x;
                return v.lambda * s;
            } else {
                return mixed_decompose(v, beta).value;
            }
        },
        r);
}

// prox_{t·R}(v) = argmin_beta 0.5*||beta−v||² + t·R(beta), exact for all four
// variants (mixed via the Moreau identity: v − projection onto the
// intersection of the t·lambda1 box and the t·lambdaG ball, per group).
inline Vector prox(const RegularizerSpec& r, const Vector& v, double t) {
    if (!(t > 0.0)) throw ConfigError("prox: step t must be > 0");
    return std::visit(
        [&](const auto& spec) -> Vector {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, LassoReg>) {
                Vector out(v.size());
                for (std::size_t i = 0; i < v.size(); ++i)
                    out[i] = soft_threshold(v[i], t * spec.lambda);
                return out;
            } else if constexpr (std::is_same_v<T, GroupReg>) {
                Vector out(v.size(), 0.0);
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    double g2 = 0.0;
                    for (int idx : spec.gamma.group(j)) g2 += v[idx] * v[idx];
                    const double nrm = std::sqrt(g2);
                    if (nrm > t * spec.lambda) {
                        const double shrink = 1.0 - t * spec.lambda / nrm;
                        for (int idx : spec.gamma.group(j)) out[idx] = shrink * v[idx];
                    }
                }
                return out;
            } else if constexpr (std::is_same_v<T, NuclearReg>) {
                SvdFactors f = svd(as_matrix(v, spec.rows, spec.cols));
                const int k = static_cast<int>(f.s.size());
                DenseMatrix out(spec.rows, spec.cols);
                for (int r_ = 0; r_ < k; ++r_) {
                    const double sv = std::max(f.s[r_] - t * spec.lambda, 0.0);
                    if (sv == 0.0) continue;
                    for (int i = 0; i < spec.rows; ++i)
                        for (int j = 0; j < spec.cols; ++j)
                            out(i, j) += sv * f.U(i, r_) * f.V(j, r_);
                }
                return out.data();
            } else {
                Vector out(v.size());
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    const auto& g = spec.gamma.group(j);
                    std::vector<double> z(g.size());
                    for (std::size_t i = 0; i < g.size(); ++i) z[i] = v[g[i]];
                    const auto proj =
                        detail::boxball_project(z, t * spec.lambda1, t * spec.lambdaG);
                    for (std::size_t i = 0; i < g.size(); ++i) out[g[i]] = z[i] - proj[i];
                }
                return out;
            }
        },
        r);
}

// Gauge of the dual-norm unit ball: dual_norm(R, u) <= 1 iff u lies in the
// subdifferential-scale ball {R*(u) bounded}, i.e. R(beta) >= <u,beta> for all
// beta.  Scaled so the regularizer weight is included.
inline double dual_norm(const RegularizerSpec& r, const Vector& u) {
    return std::visit(
        [&](const auto& spec) -> double {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, LassoReg>) {
                return norm_inf(u) / spec.lambda;
            } else if constexpr (std::is_same_v<T, GroupReg>) {
                double mx = 0.0;
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    double g2 = 0.0;
                    for (int idx : spec.gamma.group(j)) g2 += u[idx] * u[idx];
                    mx = std::max(mx, std::sqrt(g2));
                }
                return mx / spec.lambda;
            } else if constexpr (std::is_same_v<T, NuclearReg>) {
                return spectral_norm(as_matrix(u, spec.rows, spec.cols)) / spec.lambda;
            } else {
                double mx = norm_inf(u) / spec.lambda1;
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    double g2 = 0.0;
                    for (int idx : spec.gamma.group(j)) g2 += u[idx] * u[idx];
                    mx = std::max(mx, std::sqrt(g2) / spec.lambdaG);
                }
                return mx;
            }
        },
        r);
}

// u ∈ ∂R(beta) iff dual_norm(u) <= 1 and <u,beta> = R(beta) (both to tol).
inline bool is_subgradient(const RegularizerSpec& r, const Vector& beta, const Vector& u,
                           double tol = 1e-8) {
    if (dual_norm(r, u) > 1.0 + tol) return false;
    const double rv = value(r, beta);
    return std::abs(dot(u, beta) - rv) <= tol * std::max(1.0, rv);
}

// ---------------------------------------------------------------------------
// Tangent spaces
// ---------------------------------------------------------------------------

struct CoordinateTangent {
    std::vector<int> support;  // sorted index set S
    int dim = 0;               // ambient dimension p
};

struct GroupTangent {
    GroupStructure gamma;
    std::vector<int> groups;  // sorted support group indices
};

struct MatrixTangent {
    DenseMatrix U, V;  // thin orthonormal factors of the anchor
    int rows = 0, cols = 0;
};

using TangentSpace = std::variant<CoordinateTangent, GroupTangent, MatrixTangent>;

inline std::vector<int> tangent_indices(const GroupTangent& t) {
    std::vector<int> idx;
    for (int j : t.groups)
        for (int i : t.gamma.group(j)) idx.push_back(i);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// Orthogonal split beta = beta_T + beta_Tperp.
inline std::pair<Vector, Vector> tangent_project(const TangentSpace& t, const Vector& beta) {
    return std::visit(
        [&](const auto& tt) -> std::pair<Vector, Vector> {
            using T = std::decay_t<decltype(tt)>;
            if constexpr (std::is_same_v<T, MatrixTangent>) {
                const DenseMatrix b = as_matrix(beta, tt.rows, tt.cols);
                const DenseMatrix uut = matmul(tt.U, tt.U.transposed());
                const DenseMatrix vvt = matmul(tt.V, tt.V.transposed());
                const DenseMatrix ub = matmul(uut, b);
                DenseMatrix pt = ub;  // UUᵀB + BVVᵀ − UUᵀBVVᵀ
                const DenseMatrix bv = matmul(b, vvt);
                const DenseMatrix ubv = matmul(ub, vvt);
                for (std::size_t i = 0; i < pt.data().size(); ++i)
                    pt.data()[i] += bv.data()[i] - ubv.data()[i];
                Vector perp(beta.size());
                for (std::size_t i = 0; i < beta.size(); ++i) perp[i] = beta[i] - pt.data()[i];
                return {pt.data(), perp};
            } else {
                std::vector<int> idx;
                if constexpr (std::is_same_v<T, CoordinateTangent>)
                    idx = tt.support;
                else
                    idx = tangent_indices(tt);
                Vector in(beta.size(), 0.0), out = beta;
                for (int i : idx) {
                    in[i] = beta[i];
                    out[i] = 0.0;
                }
                return {in, out};
            }
        },
        t);
}

// ---------------------------------------------------------------------------
// Certificate frame
// ---------------------------------------------------------------------------

// The frame collects everything the certificate machinery needs at an anchor
// beta_bar: the structured subgradient e_S(W), the tangent space T, the level
// eta of the off-support dual ball, and (for mixed) the support bookkeeping
// S_Gamma / S1 that defines the seminorm ||.||_B.
struct CertificateFrame {
    RegularizerSpec reg;
    Vector anchor;
    Vector e;  // e_S(W)
    double eta = 0.5;
    TangentSpace tangent;
    std::vector<int> s_gamma;  // mixed only: group indices in S_Gamma
    std::vector<int> s1;       // mixed only: sorted index set S1
};

inline CertificateFrame certificate_frame(const RegularizerSpec& r, const Vector& beta_bar,
                                          double eta = 0.5) {
    if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("certificate_frame: eta must be in (0,1]");
    validate(r, static_cast<int>(beta_bar.size()));
    CertificateFrame f;
    f.reg = r;
    f.anchor = beta_bar;
    f.eta = eta;
    f.e.assign(beta_bar.size(), 0.0);

    std::visit(
        [&](const auto& spec) {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, LassoReg>) {
                const double tol = kSupportTolerance * norm_inf(beta_bar);
                CoordinateTangent t;
                t.dim = static_cast<int>(beta_bar.size());
                for (std::size_t i = 0; i < beta_bar.size(); ++i) {
                    if (std::abs(beta_bar[i]) > tol) {
                        t.support.push_back(static_cast<int>(i));
                        f.e[i] = spec.lambda * (beta_bar[i] > 0.0 ? 1.0 : -1.0);
                    }
                }
                f.tangent = std::move(t);
            } else if constexpr (std::is_same_v<T, GroupReg>) {
                double maxn = 0.0;
                std::vector<double> norms(spec.gamma.q(), 0.0);
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    double g2 = 0.0;
                    for (int idx : spec.gamma.group(j)) g2 += beta_bar[idx] * beta_bar[idx];
                    norms[j] = std::sqrt(g2);
                    maxn = std::max(maxn, norms[j]);
                }
                GroupTangent t;
                t.gamma = spec.gamma;
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    if (norms[j] > kSupportTolerance * maxn) {
                        t.groups.push_back(j);
                        for (int idx : spec.gamma.group(j))
                            f.e[idx] = spec.lambda * beta_bar[idx] / norms[j];
                    }
                }
                f.tangent = std::move(t);
            } else if constexpr (std::is_same_v<T, NuclearReg>) {
                SvdFactors fac = svd(as_matrix(beta_bar, spec.rows, spec.cols));
                const double smax = fac.s.empty() ? 0.0 : fac.s.front();
                int rank = 0;
                for (double s : fac.s)
                    if (s > kSupportTolerance * smax && s > 0.0) ++rank;
                MatrixTangent t;
                t.rows = spec.rows;
                t.cols = spec.cols;
                t.U = DenseMatrix(spec.rows, rank);
                t.V = DenseMatrix(spec.cols, rank);
                for (int k = 0; k < rank; ++k) {
                    for (int i = 0; i < spec.rows; ++i) t.U(i, k) = fac.U(i, k);
                    for (int i = 0; i < spec.cols; ++i) t.V(i, k) = fac.V(i, k);
                }
                // e_S(W) = lambda * U_r V_rᵀ
                DenseMatrix uv = matmul(t.U, t.V.transposed());
                for (std::size_t i = 0; i < f.e.size(); ++i) f.e[i] = spec.lambda * uv.data()[i];
                f.tangent = std::move(t);
            } else {
                const MixedDecomposition dec = mixed_decompose(spec, beta_bar);
                const double tol = kSupportTolerance * std::max(norm_inf(beta_bar), 1e-300);
                // S_Gamma rule: group j is group-sparse when
                //   lambdaG < 2*lambda1*||sgn(beta_bar)_{Gamma_j}||_2.
                std::vector<char> in_s1(beta_bar.size(), 0);
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    double nnz = 0.0;
                    for (int idx : spec.gamma.group(j))
                        if (std::abs(beta_bar[idx]) > tol) nnz += 1.0;
                    if (spec.lambdaG < 2.0 * spec.lambda1 * std::sqrt(nnz)) {
                        f.s_gamma.push_back(j);
                        for (int idx : spec.gamma.group(j)) in_s1[idx] = 1;
                    }
                }
                for (std::size_t i = 0; i < beta_bar.size(); ++i)
                    if (std::abs(beta_bar[i]) > tol) in_s1[i] = 1;
                for (std::size_t i = 0; i < beta_bar.size(); ++i)
                    if (in_s1[i]) f.s1.push_back(static_cast<int>(i));
                // e_S(W): lambda1*sgn(beta') where beta' is active, otherwise
                // the group-direction subgradient lambdaG*beta''/||beta''||.
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    double g2 = 0.0;
                    for (int idx : spec.gamma.group(j)) g2 += dec.beta2[idx] * dec.beta2[idx];
                    const double gn = std::sqrt(g2);
                    for (int idx : spec.gamma.group(j)) {
                        if (std::abs(dec.beta1[idx]) > tol)
                            f.e[idx] = spec.lambda1 * (dec.beta1[idx] > 0.0 ? 1.0 : -1.0);
                        else if (gn > tol)
                            f.e[idx] = spec.lambdaG * dec.beta2[idx] / gn;
                    }
                }
                CoordinateTangent t;
                t.dim = static_cast<int>(beta_bar.size());
                t.support = f.s1;
                f.tangent = std::move(t);
            }
        },
        r);
    return f;
}

// Degenerate frame with G = {0}: empty support, zero e, eta = 0.  Only used as
// the baseline in Gaussian-width estimation.
inline CertificateFrame empty_frame(const RegularizerSpec& r, int p) {
    CertificateFrame f;
    f.reg = r;
    f.anchor.assign(p, 0.0);
    f.e.assign(p, 0.0);
    f.eta = 0.0;
    std::visit(
        [&](const auto& spec) {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, NuclearReg>) {
                MatrixTangent t;
                t.rows = spec.rows;
                t.cols = spec.cols;
                t.U = DenseMatrix(spec.rows, 0);
                t.V = DenseMatrix(spec.cols, 0);
                f.tangent = std::move(t);
            } else {
                CoordinateTangent t;
                t.dim = p;
                f.tangent = std::move(t);
            }
        },
        r);
    return f;
}

namespace detail {

// Complement of the mixed frame's S1 within one group.
inline std::vector<double> mixed_off_slice(const CertificateFrame& f, const Vector& x, int j) {
    const auto& spec = std::get<MixedReg>(f.reg);
    std::vector<double> z;
    for (int idx : spec.gamma.group(j)) {
        if (!std::binary_search(f.s1.begin(), f.s1.end(), idx)) z.push_back(x[idx]);
    }
    return z;
}

}  // namespace detail

// Off-support seminorm ||beta||_B = sup_{u in e_{S^c}(B)} <u, beta>.
inline double b_norm(const CertificateFrame& f, const Vector& beta) {
    return std::visit(
        [&](const auto& spec) -> double {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, LassoReg>) {
                const auto& t = std::get<CoordinateTangent>(f.tangent);
                double s = 0.0;
                std::size_t k = 0;
                for (std::size_t i = 0; i < beta.size(); ++i) {
                    if (k < t.support.size() && static_cast<int>(i) == t.support[k]) {
                        ++k;
                        continue;
                    }
                    s += std::abs(beta[i]);
                }
                return spec.lambda * s;
            } else if constexpr (std::is_same_v<T, GroupReg>) {
                const auto& t = std::get<GroupTangent>(f.tangent);
                double s = 0.0;
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    if (std::binary_search(t.groups.begin(), t.groups.end(), j)) continue;
                    double g2 = 0.0;
                    for (int idx : spec.gamma.group(j)) g2 += beta[idx] * beta[idx];
                    s += std::sqrt(g2);
                }
                return spec.lambda * s;
            } else if constexpr (std::is_same_v<T, NuclearReg>) {
                const auto [in, out] = tangent_project(f.tangent, beta);
                SvdFactors fac = svd(as_matrix(out, spec.rows, spec.cols));
                double s = 0.0;
                for (double x : fac.s) s += x;
                return spec.lambda * s;
            } else {
                double s = 0.0;
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    if (std::binary_search(f.s_gamma.begin(), f.s_gamma.end(), j)) continue;
                    const auto z = detail::mixed_off_slice(f, beta, j);
                    if (!z.empty())
                        s += detail::boxball_support(z, spec.lambda1, 0.5 * spec.lambdaG);
                }
                return s;
            }
        },
        f.reg);
}

// Dual gauge of ||.||_B, evaluated on the off-tangent part of u:
// the smallest t >= 0 with P_{T^perp}(u) in t * e_{S^c}(B).
inline double b_dual_norm(const CertificateFrame& f, const Vector& u) {
    return std::visit(
        [&](const auto& spec) -> double {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, LassoReg>) {
                const auto& t = std::get<CoordinateTangent>(f.tangent);
                double mx = 0.0;
                std::size_t k = 0;
                for (std::size_t i = 0; i < u.size(); ++i) {
                    if (k < t.support.size() && static_cast<int>(i) == t.support[k]) {
                        ++k;
                        continue;
                    }
                    mx = std::max(mx, std::abs(u[i]));
                }
                return mx / spec.lambda;
            } else if constexpr (std::is_same_v<T, GroupReg>) {
                const auto& t = std::get<GroupTangent>(f.tangent);
                double mx = 0.0;
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    if (std::binary_search(t.groups.begin(), t.groups.end(), j)) continue;
                    double g2 = 0.0;
                    for (int idx : spec.gamma.group(j)) g2 += u[idx] * u[idx];
                    mx = std::max(mx, std::sqrt(g2));
                }
                return mx / spec.lambda;
            } else if constexpr (std::is_same_v<T, NuclearReg>) {
                const auto [in, out] = tangent_project(f.tangent, u);
                return spectral_norm(as_matrix(out, spec.rows, spec.cols)) / spec.lambda;
            } else {
                double mx = 0.0;
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    if (std::binary_search(f.s_gamma.begin(), f.s_gamma.end(), j)) continue;
                    const auto z = detail::mixed_off_slice(f, u, j);
                    if (z.empty()) continue;
                    double zi = 0.0, z2 = 0.0;
                    for (double x : z) {
                        zi = std::max(zi, std::abs(x));
                        z2 += x * x;
                    }
                    mx = std::max({mx, zi / spec.lambda1,
                                   std::sqrt(z2) / (0.5 * spec.lambdaG)});
                }
                return mx;
            }
        },
        f.reg);
}

}  // namespace certlab
