#pragma once

// Certificate construction and verification, plus the recovery / oracle
// inequalities evaluated as checkable numbers.  Everything here works with a
// CertificateFrame (anchor, e_S(W), tangent space, eta) and reports residuals
// instead of assuming exact certificates.

#include <cmath>
#include <utility>
#include <vector>

#include "certlab/errors.hpp"
#include "certlab/linalg.hpp"
#include "certlab/losses.hpp"
#include "certlab/regularizers.hpp"
#include "certlab/solvers.hpp"

namespace certlab {

// beta* = beta_bar* + argmin_{Delta in T} L(beta_bar* + Delta), together with
// the tangent/complement split of grad L(beta*).
struct TargetSplit {
    Vector beta_star;
    Vector a_tilde;          // tangent part of grad L(beta*)
    Vector b_tilde;          // complement part
    double eta_tilde = 0.0;  // b_dual_norm of b_tilde
};

enum class CertificateKind { global, tangent, interior };

struct CertificateReport {
    CertificateKind kind = CertificateKind::interior;
    Vector certificate;            // Q_G, Q_G^T, or v0
    double delta_residual = 0.0;   // l2 norm of the measured dual residual
    double b_dual = 0.0;           // b_dual_norm of the off-tangent dual part
    double eta = 0.0;
    bool pass = false;
    double margin = 0.0;
};

// R_G(beta) = <e_S(W), beta> + eta * b_norm(beta); satisfies R_G <= R.
inline double r_g(const CertificateFrame& F, const Vector& beta) {
    return dot(F.e, beta) + F.eta * b_norm(F, beta);
}

// ---------------------------------------------------------------------------
// Target projection
// ---------------------------------------------------------------------------

inline TargetSplit target_projection(const LossSpec& L, const Vector& beta_bar_star,
                                     const CertificateFrame& F) {
    const TangentSpace& T = F.tangent;
    Vector beta = beta_bar_star;

    if (const auto* q = std::get_if<QuadraticLoss>(&L)) {
        if (const auto* mt = std::get_if<MatrixTangent>(&T)) {
            (void)mt;
            auto op = [&](const Vector& v) {
                const Vector vt = tangent_project(T, v).first;
                return tangent_project(T, q->X.apply_transposed(q->X.apply(vt))).first;
            };
            Vector r = q->X.apply(beta);
            for (std::size_t i = 0; i < r.size(); ++i) r[i] = q->y[i] - r[i];
            const Vector rhs = tangent_project(T, q->X.apply_transposed(r)).first;
            const Vector sol = tangent_project(T, cg_solve(op, rhs, 1e-12)).first;
            Vector resid = op(sol);
            for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= rhs[i];
            if (norm2(resid) > 1e-6 * std::max(1.0, norm2(rhs)))
                throw SingularMatrixError("target_projection: tangent Hessian solve failed", 0.0);
            for (std::size_t i = 0; i < beta.size(); ++i) beta[i] += sol[i];
        } else {
            std::vector<int> idx;
            if (const auto* ct = std::get_if<CoordinateTangent>(&T))
                idx = ct->support;
            else
                idx = tangent_indices(std::get<GroupTangent>(T));
            if (!idx.empty()) {
                const DenseMatrix Xi = detail::select_columns(q->X, idx);
                Vector r = q->X.apply(beta);
                for (std::size_t i = 0; i < r.size(); ++i) r[i] = q->y[i] - r[i];
                const Vector rhs = Xi.apply_transposed(r);
                const Vector d = solve_spd(gram(Xi), rhs);
                for (std::size_t k = 0; k < idx.size(); ++k) beta[idx[k]] += d[k];
            }
        }
    } else {
        // GLM: damped Newton on the tangent coordinates.
        std::vector<int> idx;
        if (const auto* ct = std::get_if<CoordinateTangent>(&T))
            idx = ct->support;
        else if (const auto* gt = std::get_if<GroupTangent>(&T))
            idx = tangent_indices(*gt);
        else
            throw ConfigError("target_projection: GLM supports coordinate/group tangent spaces");
        const auto& gl = std::get<GlmLoss>(L);
        if (!idx.empty()) {
            const DenseMatrix Xi = detail::select_columns(gl.X, idx);
            const double scale = std::max(1.0, norm2(gradient(L, beta_bar_star)));
            for (int newton = 0; newton < 100; ++newton) {
                const Vector g = gradient(L, beta);
                Vector gi(idx.size());
                for (std::size_t k = 0; k < idx.size(); ++k) gi[k] = g[idx[k]];
                if (norm2(gi) <= 1e-11 * scale) break;
                const Vector w = curvature_weights(L, beta);
                // H_T = Xi^T diag(w) Xi
                DenseMatrix h(static_cast<int>(idx.size()), static_cast<int>(idx.size()));
                for (int a = 0; a < h.rows(); ++a)
                    for (int b = a; b < h.cols(); ++b) {
                        double s = 0.0;
                        for (int i = 0; i < Xi.rows(); ++i) s += w[i] * Xi(i, a) * Xi(i, b);
                        h(a, b) = s;
                        h(b, a) = s;
                    }
                const Vector d = solve_spd(h, gi);
                double t = 1.0;
                const double f0 = loss_value(L, beta);
                Vector cand = beta;
                for (int bt = 0; bt < 40; ++bt) {
                    cand = beta;
                    for (std::size_t k = 0; k < idx.size(); ++k) cand[idx[k]] -= t * d[k];
                    if (loss_value(L, cand) <= f0 + 1e-12 * (1.0 + std::abs(f0))) break;
                    t *= 0.5;
                }
                beta = std::move(cand);
            }
        }
    }

    TargetSplit split;
    split.beta_star = std::move(beta);
    const Vector g = gradient(L, split.beta_star);
    auto [a, b] = tangent_project(T, g);
    split.a_tilde = std::move(a);
    split.b_tilde = std::move(b);
    split.eta_tilde = b_dual_norm(F, split.b_tilde);
    return split;
}

// ---------------------------------------------------------------------------
// Interior noise-free certificate
// ---------------------------------------------------------------------------

// v0 = X^T ((X P_T)^*)^{-1} e_S(W): the minimum-norm dual vector whose tangent
// part equals e exactly.  Passes when its off-tangent part stays strictly
// inside the unit B-dual ball (and within eta).
inline CertificateReport build_interior_noisefree(const DenseMatrix& X, const CertificateFrame& F,
                                                  const TangentSpace& T) {
    CertificateReport rep;
    rep.kind = CertificateKind::interior;
    rep.eta = F.eta;

    Vector v0(F.e.size(), 0.0);
    if (const auto* mt = std::get_if<MatrixTangent>(&T)) {
        (void)mt;
        auto op = [&](const Vector& v) {
            const Vector vt = tangent_project(T, v).first;
            return tangent_project(T, X.apply_transposed(X.apply(vt))).first;
        };
        const Vector et = tangent_project(T, F.e).first;
        if (norm2(et) > 0.0) {
            const Vector w = tangent_project(T, cg_solve(op, et, 1e-10)).first;
            Vector resid = op(w);
            for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= et[i];
            if (norm2(resid) > 1e-6 * std::max(1.0, norm2(et)))
                throw SingularMatrixError(
                    "build_interior_noisefree: tangent design not injective", 0.0);
            v0 = X.apply_transposed(X.apply(w));
        }
    } else {
        std::vector<int> idx;
        if (const auto* ct = std::get_if<CoordinateTangent>(&T))
            idx = ct->support;
        else
            idx = tangent_indices(std::get<GroupTangent>(T));
        if (!idx.empty()) {
            const DenseMatrix Xi = detail::select_columns(X, idx);
            Vector ei(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k) ei[k] = F.e[idx[k]];
            const Vector w = solve_spd(gram(Xi), ei);  // (X_T^T X_T)^{-1} e_T
            v0 = X.apply_transposed(Xi.apply(w));
        }
    }

    Vector diff(v0.size());
    for (std::size_t i = 0; i < v0.size(); ++i) diff[i] = v0[i] - F.e[i];
    rep.delta_residual = norm2(tangent_project(T, diff).first);  // ~0 by construction
    rep.b_dual = b_dual_norm(F, diff);
    rep.pass = rep.b_dual <= F.eta && rep.b_dual < 1.0;
    rep.margin = F.eta - rep.b_dual;
    rep.certificate = std::move(v0);
    return rep;
}

// ---------------------------------------------------------------------------
// Irrepresentable condition (quadratic loss)
// ---------------------------------------------------------------------------

inline CertificateReport check_irrepresentable(const LossSpec& L, const CertificateFrame& F,
                                               const TangentSpace& T, const TargetSplit& split) {
    const auto* q = std::get_if<QuadraticLoss>(&L);
    if (!q) throw ConfigError("check_irrepresentable: quadratic loss required");
    const DenseMatrix& X = q->X;

    Vector ea(F.e.size());
    for (std::size_t i = 0; i < ea.size(); ++i) ea[i] = F.e[i] + split.a_tilde[i];

    Vector hw(F.e.size(), 0.0);
    if (const auto* mt = std::get_if<MatrixTangent>(&T)) {
        (void)mt;
        auto op = [&](const Vector& v) {
            const Vector vt = tangent_project(T, v).first;
            return tangent_project(T, X.apply_transposed(X.apply(vt))).first;
        };
        const Vector rhs = tangent_project(T, ea).first;
        const Vector w = tangent_project(T, cg_solve(op, rhs, 1e-10)).first;
        Vector resid = op(w);
        for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= rhs[i];
        if (norm2(resid) > 1e-6 * std::max(1.0, norm2(rhs)))
            throw SingularMatrixError("check_irrepresentable: singular tangent Hessian", 0.0);
        hw = X.apply_transposed(X.apply(w));
    } else {
        std::vector<int> idx;
        if (const auto* ct = std::get_if<CoordinateTangent>(&T))
            idx = ct->support;
        else
            idx = tangent_indices(std::get<GroupTangent>(T));
        if (!idx.empty()) {
            const DenseMatrix Xi = detail::select_columns(X, idx);
            Vector ri(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k) ri[k] = ea[idx[k]];
            const Vector w = solve_spd(gram(Xi), ri);
            hw = X.apply_transposed(Xi.apply(w));
        }
    }

    Vector u = tangent_project(T, hw).second;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] -= split.b_tilde[i];

    CertificateReport rep;
    rep.kind = CertificateKind::tangent;
    rep.eta = F.eta;
    rep.b_dual = b_dual_norm(F, u);
    rep.pass = rep.b_dual <= F.eta;
    rep.margin = F.eta - rep.b_dual;
    rep.certificate = std::move(hw);
    return rep;
}

// ---------------------------------------------------------------------------
// Measured dual residual
// ---------------------------------------------------------------------------

namespace detail {

// Euclidean projection of v onto {u off-tangent : b_dual_norm(u) <= radius}.
inline Vector frame_ball_clip(const CertificateFrame& F, const Vector& v, double radius) {
    return std::visit(
        [&](const auto& spec) -> Vector {
            using T = std::decay_t<decltype(spec)>;
            Vector out(v.size(), 0.0);
            if constexpr (std::is_same_v<T, LassoReg>) {
                const auto& tan = std::get<CoordinateTangent>(F.tangent);
                const double r = radius * spec.lambda;
                std::size_t k = 0;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (k < tan.support.size() && static_cast<int>(i) == tan.support[k]) {
                        ++k;
                        continue;
                    }
                    out[i] = std::clamp(v[i], -r, r);
                }
            } else if constexpr (std::is_same_v<T, GroupReg>) {
                const auto& tan = std::get<GroupTangent>(F.tangent);
                const double r = radius * spec.lambda;
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    if (std::binary_search(tan.groups.begin(), tan.groups.end(), j)) continue;
                    double g2 = 0.0;
                    for (int idx : spec.gamma.group(j)) g2 += v[idx] * v[idx];
                    const double nrm = std::sqrt(g2);
                    const double shrink = nrm > r ? r / nrm : 1.0;
                    for (int idx : spec.gamma.group(j)) out[idx] = shrink * v[idx];
                }
            } else if constexpr (std::is_same_v<T, NuclearReg>) {
                const Vector vperp = tangent_project(F.tangent, v).second;
                const SvdFactors f = svd(as_matrix(vperp, spec.rows, spec.cols));
                const double r = radius * spec.lambda;
                DenseMatrix acc(spec.rows, spec.cols);
                for (std::size_t k = 0; k < f.s.size(); ++k) {
                    const double sv = std::min(f.s[k], r);
                    if (sv == 0.0) continue;
                    for (int i = 0; i < spec.rows; ++i)
                        for (int j = 0; j < spec.cols; ++j)
                            acc(i, j) +=
                                sv * f.U(i, static_cast<int>(k)) * f.V(j, static_cast<int>(k));
                }
                out = acc.data();
            } else {
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    if (std::binary_search(F.s_gamma.begin(), F.s_gamma.end(), j)) continue;
                    std::vector<int> off;
                    for (int idx : spec.gamma.group(j))
                        if (!std::binary_search(F.s1.begin(), F.s1.end(), idx)) off.push_back(idx);
                    if (off.empty()) continue;
                    std::vector<double> z(off.size());
                    for (std::size_t i = 0; i < off.size(); ++i) z[i] = v[off[i]];
                    const auto proj = boxball_project(z, radius * spec.lambda1,
                                                      radius * 0.5 * spec.lambdaG);
                    for (std::size_t i = 0; i < off.size(); ++i) out[off[i]] = proj[i];
                }
            }
            return out;
        },
        F.reg);
}

}  // namespace detail

// delta such that -grad L(Q) + delta lies in G = e + eta*(off-tangent B-dual
// ball): the gap between -grad L(Q) and its nearest admissible dual vector.
template <typename LossLike>
inline Vector measure_delta(const LossLike& L, const CertificateFrame& F, const Vector& q) {
    Vector w = gradient(L, q);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = -w[i] - F.e[i];
    const Vector wperp = tangent_project(F.tangent, w).second;
    const Vector u = detail::frame_ball_clip(F, wperp, F.eta);
    Vector delta(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) delta[i] = u[i] - w[i];
    return delta;
}

// ---------------------------------------------------------------------------
// Recovery / oracle inequalities
// ---------------------------------------------------------------------------

// Recovery slack:  [D_L(bbar,bhat) + D_L(bhat,Q) + R(bhat) - R_G(bhat)]
// must not exceed D_L(bbar,Q) - <delta, bhat-bbar>.  Returns rhs - lhs.
inline double recovery_bound_thm1(const LossSpec& L, const RegularizerSpec& R,
                                  const CertificateFrame& F, const Vector& beta_hat,
                                  const Vector& q_g, const Vector& delta) {
    const Vector& bbar = F.anchor;
    const double lhs = bregman(L, bbar, beta_hat).d_ab + bregman(L, beta_hat, q_g).d_ab +
                       (value(R, beta_hat) - r_g(F, beta_hat));
    Vector dvec(beta_hat.size());
    for (std::size_t i = 0; i < dvec.size(); ++i) dvec[i] = beta_hat[i] - bbar[i];
    const double rhs = bregman(L, bbar, q_g).d_ab - dot(delta, dvec);
    return rhs - lhs;
}

struct OracleBound {
    double slack = 0.0;
    bool gamma_condition_ok = true;  // D_L(bbar,bhat) >= D_Lbar(bhat,bbar) held
};

// Oracle-inequality slack (generalized certificate):
//   D_L(bhat,b*) + [R - R_G](bhat)
//     <= D_L(bbar,b*) + D_{Lbar_*}(bbar,Q) - <delta, bhat-bbar>.
inline OracleBound oracle_bound_thm2(const LossSpec& L, const ShiftedLoss& lbar,
                                     const RegularizerSpec& R, const CertificateFrame& F,
                                     const Vector& beta_star, const Vector& beta_hat,
                                     const Vector& q_g, const Vector& delta) {
    const Vector& bbar = F.anchor;
    const double lhs =
        bregman(L, beta_hat, beta_star).d_ab + (value(R, beta_hat) - r_g(F, beta_hat));
    Vector dvec(beta_hat.size());
    for (std::size_t i = 0; i < dvec.size(); ++i) dvec[i] = beta_hat[i] - bbar[i];
    const double rhs = bregman(L, bbar, beta_star).d_ab + bregman(lbar, bbar, q_g).d_ab -
                       dot(delta, dvec);
    OracleBound out;
    out.slack = rhs - lhs;
    const double d_fwd = bregman(L, bbar, beta_hat).d_ab;
    const double d_rev = lbar.gamma * bregman(L, beta_hat, bbar).d_ab;
    out.gamma_condition_ok = d_fwd >= d_rev - 1e-8 * (1.0 + std::abs(d_rev));
    return out;
}

struct TangentBoundResult {
    double bound = 0.0;             // D_L(bbar, b*) + certificate term
    double certificate_term = 0.0;  // 0.25 <e+a, H_T^{-1}(e+a)>
    double d_term = 0.0;            // D_L(bbar, b*)
};

// Quadratic tangent-certificate bound 0.25 <e+a, H_T^{-1}(e+a)> with the
// D_L(bbar, beta*) offset; H is the (materialized) Gram matrix X^T X.
inline TangentBoundResult oracle_bound_tangent_quadratic(const CertificateFrame& F,
                                                         const TangentSpace& T,
                                                         const TargetSplit& split,
                                                         const DenseMatrix& H) {
    Vector ea(F.e.size());
    for (std::size_t i = 0; i < ea.size(); ++i) ea[i] = F.e[i] + split.a_tilde[i];

    double term = 0.0;
    if (std::holds_alternative<MatrixTangent>(T)) {
        auto op = [&](const Vector& v) {
            const Vector vt = tangent_project(T, v).first;
            return tangent_project(T, H.apply(vt)).first;
        };
        const Vector rhs = tangent_project(T, ea).first;
        if (norm2(rhs) > 0.0) {
            const Vector w = tangent_project(T, cg_solve(op, rhs, 1e-10)).first;
            Vector resid = op(w);
            for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= rhs[i];
            if (norm2(resid) > 1e-6 * std::max(1.0, norm2(rhs)))
                throw SingularMatrixError("oracle_bound_tangent_quadratic: singular H_T", 0.0);
            term = 0.25 * dot(rhs, w);
        }
    } else {
        std::vector<int> idx;
        if (const auto* ct = std::get_if<CoordinateTangent>(&T))
            idx = ct->support;
        else
            idx = tangent_indices(std::get<GroupTangent>(T));
        if (!idx.empty()) {
            DenseMatrix hi(static_cast<int>(idx.size()), static_cast<int>(idx.size()));
            for (std::size_t a = 0; a < idx.size(); ++a)
                for (std::size_t b = 0; b < idx.size(); ++b)
                    hi(static_cast<int>(a), static_cast<int>(b)) = H(idx[a], idx[b]);
            Vector ri(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k) ri[k] = ea[idx[k]];
            const Vector w = solve_spd(hi, ri);
            term = 0.25 * dot(ri, w);
        }
    }

    Vector d(F.anchor.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = F.anchor[i] - split.beta_star[i];
    TangentBoundResult out;
    out.d_term = dot(H.apply(d), d);
    out.certificate_term = term;
    out.bound = out.d_term + term;
    return out;
}

// Global-certificate bound  D_L(bbar, b*) + (2*gamma)^{-1} * inf_{u in G}
// ||u + grad L(beta*)||_D^2.  The infimum is closed-form: the tangent part is
// pinned at e + a_tilde, the off-tangent part clips b_tilde into the eta ball.
inline double recovery_bound_global(const LossSpec& L, const CertificateFrame& F,
                                    const TargetSplit& split, double gamma, PenaltyNorm norm) {
    if (!(gamma > 0.0)) throw ConfigError("recovery_bound_global: gamma must be > 0");
    const double d_l = bregman(L, F.anchor, split.beta_star).d_ab;

    Vector ea(F.e.size());
    for (std::size_t i = 0; i < ea.size(); ++i) ea[i] = F.e[i] + split.a_tilde[i];

    double inf_term = 0.0;
    std::visit(
        [&](const auto& spec) {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, LassoReg>) {
                if (norm == PenaltyNorm::group_inf)
                    throw UnsupportedNormError("recovery_bound_global: Gamma-inf needs groups");
                const auto& tan = std::get<CoordinateTangent>(F.tangent);
                const double r = F.eta * spec.lambda;
                double sq = 0.0, mx = 0.0;
                std::size_t k = 0;
                for (std::size_t i = 0; i < ea.size(); ++i) {
                    double v;
                    if (k < tan.support.size() && static_cast<int>(i) == tan.support[k]) {
                        ++k;
                        v = std::abs(ea[i]);
                    } else {
                        v = std::max(std::abs(split.b_tilde[i]) - r, 0.0);
                    }
                    sq += v * v;
                    mx = std::max(mx, v);
                }
                inf_term = norm == PenaltyNorm::l2 ? std::sqrt(sq) : mx;
            } else if constexpr (std::is_same_v<T, GroupReg>) {
                if (norm == PenaltyNorm::l_inf)
                    throw UnsupportedNormError("recovery_bound_global: use l2 or Gamma-inf for groups");
                const auto& tan = std::get<GroupTangent>(F.tangent);
                const double r = F.eta * spec.lambda;
                double sq = 0.0, mx = 0.0;
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    double g2 = 0.0;
                    const bool on = std::binary_search(tan.groups.begin(), tan.groups.end(), j);
                    for (int idx : spec.gamma.group(j)) {
                        const double z = on ? ea[idx] : split.b_tilde[idx];
                        g2 += z * z;
                    }
                    const double v = on ? std::sqrt(g2) : std::max(std::sqrt(g2) - r, 0.0);
                    sq += v * v;
                    mx = std::max(mx, v);
                }
                inf_term = norm == PenaltyNorm::l2 ? std::sqrt(sq) : mx;
            } else if constexpr (std::is_same_v<T, NuclearReg>) {
                if (norm != PenaltyNorm::l2)
                    throw UnsupportedNormError("recovery_bound_global: nuclear supports l2 only");
                const Vector et = tangent_project(F.tangent, ea).first;
                double sq = norm2_sq(et);
                const SvdFactors f =
                    svd(as_matrix(split.b_tilde, spec.rows, spec.cols));
                const double r = F.eta * spec.lambda;
                for (double s : f.s) sq += std::pow(std::max(s - r, 0.0), 2);
                inf_term = std::sqrt(sq);
            } else {
                throw UnsupportedNormError("recovery_bound_global: mixed regularizer not supported");
            }
        },
        F.reg);
    return d_l + inf_term * inf_term / (2.0 * gamma);
}

}  // namespace certlab
