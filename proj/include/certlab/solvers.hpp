#pragma once

// Convex solvers: the regularized estimator, noise-free basis pursuit via
// quadratic-penalty continuation, and the certificate optimization problems
// (global and tangent-space).  The work-horse is accelerated proximal
// gradient with backtracking line search and monotone restarts.

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "certlab/errors.hpp"
#include "certlab/linalg.hpp"
#include "certlab/losses.hpp"
#include "certlab/regularizers.hpp"

namespace certlab {

enum class SolveStatus { converged, max_iter, infeasible };

struct SolveOptions {
    int max_iterations = 20000;
    double objective_tol = 1e-12;   // relative stagnation tolerance
    double kkt_tol = 1e-8;
    double step_shrink = 0.5;       // backtracking halving factor
    int max_backtracks = 80;
    bool acceleration = true;
    double feasibility_tol = 1e-8;  // basis pursuit only
    double ridge = 0.0;             // optional L_Delta device, off by default
};

inline void validate(const SolveOptions& o) {
    if (o.max_iterations <= 0) throw ConfigError("SolveOptions: max_iterations must be > 0");
    if (!(o.objective_tol > 0.0) || !(o.kkt_tol > 0.0) || !(o.feasibility_tol > 0.0))
        throw ConfigError("SolveOptions: tolerances must be > 0");
    if (!(o.step_shrink > 0.0 && o.step_shrink < 1.0))
        throw ConfigError("SolveOptions: step_shrink must be in (0,1)");
    if (o.ridge < 0.0) throw ConfigError("SolveOptions: ridge must be >= 0");
}

struct SolveResult {
    Vector beta;
    int iterations = 0;
    double objective = 0.0;
    double kkt_residual = 0.0;
    SolveStatus status = SolveStatus::max_iter;
};

// Dual-norm distance of -grad L(beta) from dR(beta): the dual-ball violation
// plus the support-alignment gap (<u,beta> must equal R(beta)).
inline double kkt_residual(const LossSpec& L, const RegularizerSpec& R, const Vector& beta) {
    Vector u = gradient(L, beta);
    for (auto& v : u) v = -v;
    const double viol = std::max(0.0, dual_norm(R, u) - 1.0);
    const double rv = value(R, beta);
    const double align = std::max(0.0, rv - dot(u, beta)) / std::max(1.0, rv);
    return viol + align;
}

namespace detail {

struct ProxProblem {
    std::function<double(const Vector&)> f_value;         // smooth part
    std::function<Vector(const Vector&)> f_grad;
    std::function<double(const Vector&)> g_value;         // nonsmooth part
    std::function<Vector(const Vector&, double)> g_prox;  // prox_{t*g}
    std::function<double(const Vector&)> kkt;             // residual at beta
    double lipschitz_estimate = 1.0;
    bool detect_unbounded = false;
};

// Monotone FISTA with backtracking.  Accepted iterates never increase the
// objective: a non-monotone accelerated step restarts the momentum and falls
// back to a plain proximal step from the last accepted point.
inline SolveResult prox_gradient(const ProxProblem& pb, Vector beta0, const SolveOptions& opts) {
    validate(opts);
    Vector x = std::move(beta0);
    Vector x_prev = x;
    Vector y = x;
    double theta = 1.0;
    double step = 1.0 / std::max(pb.lipschitz_estimate, 1e-12);

    auto total = [&](const Vector& b) { return pb.f_value(b) + pb.g_value(b); };

    // One backtracked proximal step from the search point `at`.
    auto prox_step = [&](const Vector& at, Vector* out) {
        const Vector g = pb.f_grad(at);
        const double f_at = pb.f_value(at);
        for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
            Vector trial(at.size());
            for (std::size_t i = 0; i < at.size(); ++i) trial[i] = at[i] - step * g[i];
            trial = pb.g_prox(trial, step);
            double lin = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < at.size(); ++i) {
                const double d = trial[i] - at[i];
                lin += g[i] * d;
                sq += d * d;
            }
            if (pb.f_value(trial) <= f_at + lin + 0.5 * sq / step + 1e-12 * (1.0 + std::abs(f_at))) {
                *out = std::move(trial);
                return;
            }
            step *= opts.step_shrink;
        }
        // Step is now astronomically small; treat the last trial as the step.
        Vector trial(at.size());
        for (std::size_t i = 0; i < at.size(); ++i) trial[i] = at[i] - step * g[i];
        *out = pb.g_prox(trial, step);
    };

    SolveResult res;
    double obj = total(x);
    int stagnant = 0;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        Vector z;
        prox_step(y, &z);
        double obj_z = total(z);
        if (opts.acceleration && obj_z > obj) {
            // restart: plain step from the last accepted iterate
            theta = 1.0;
            prox_step(x, &z);
            obj_z = total(z);
        }
        if (obj_z > obj) {
            z = x;  // fully stalled; keep the monotone invariant
            obj_z = obj;
        }
        x_prev = std::move(x);
        x = std::move(z);

        if (pb.detect_unbounded && (obj_z < -1e12 || norm_inf(x) > 1e12))
            throw UnboundedError("objective decreases without bound");

        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        if (opts.acceleration) {
            const double mom = (theta - 1.0) / theta_next;
            y.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i)
                y[i] = x[i] + mom * (x[i] - x_prev[i]);
        } else {
            y = x;
        }
        theta = theta_next;

        res.iterations = it;
        const double kkt = pb.kkt(x);
        if (kkt <= opts.kkt_tol) {
            res.beta = std::move(x);
            res.objective = obj_z;
            res.kkt_residual = kkt;
            res.status = SolveStatus::converged;
            return res;
        }
        if (std::abs(obj - obj_z) <= opts.objective_tol * (1.0 + std::abs(obj_z)))
            ++stagnant;
        else
            stagnant = 0;
        obj = obj_z;
        if (stagnant >= 25) {
            // Objective differences are at the floating-point floor, which
            // blinds the monotone guard while the KKT residual is still above
            // tolerance.  Plain unaccelerated steps are analytically
            // non-increasing, so accept them unconditionally: the iterate
            // keeps contracting toward the minimizer at full precision.
            step = 1.0 / std::max(pb.lipschitz_estimate, 1e-12);
            for (int pol = 0; pol < 400 && it < opts.max_iterations; ++pol, ++it) {
                Vector z2;
                prox_step(x, &z2);
                x = std::move(z2);
                res.iterations = it;
                if (pb.kkt(x) <= opts.kkt_tol) break;
            }
            obj = total(x);
            break;
        }
    }
    res.beta = std::move(x);
    res.objective = obj;
    res.kkt_residual = pb.kkt(res.beta);
    res.status = res.kkt_residual <= opts.kkt_tol ? SolveStatus::converged : SolveStatus::max_iter;
    return res;
}

// 1 / ||X||_sp^2 is the canonical initial step; backtracking does the rest.
inline double lipschitz_estimate(const LossSpec& L) {
    const double s = spectral_norm_estimate(design(L));
    return std::max(s * s, 1e-12);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Regularized estimator:  min_beta L(beta) + R(beta)
// ---------------------------------------------------------------------------

inline SolveResult solve_regularized(const LossSpec& L, const RegularizerSpec& R,
                                     const SolveOptions& opts = {},
                                     const Vector* warm_start = nullptr) {
    validate(L);
    const int p = dimension(L);
    validate(R, p);
    detail::ProxProblem pb;
    const double ridge = opts.ridge;
    pb.f_value = [&L, ridge](const Vector& b) {
        double v = loss_value(L, b);
        if (ridge > 0.0) v += ridge * norm2_sq(b);
        return v;
    };
    pb.f_grad = [&L, ridge](const Vector& b) {
        Vector g = gradient(L, b);
        if (ridge > 0.0) axpy(2.0 * ridge, b, g);
        return g;
    };
    pb.g_value = [&R](const Vector& b) { return value(R, b); };
    pb.g_prox = [&R](const Vector& v, double t) { return prox(R, v, t); };
    pb.kkt = [&L, &R](const Vector& b) { return kkt_residual(L, R, b); };
    pb.lipschitz_estimate = detail::lipschitz_estimate(L) + 2.0 * ridge;
    Vector b0 = warm_start ? *warm_start : Vector(p, 0.0);
    return detail::prox_gradient(pb, std::move(b0), opts);
}

// ---------------------------------------------------------------------------
// Basis pursuit:  min R(beta)  s.t.  X beta = y
// ---------------------------------------------------------------------------

namespace detail {

// Minimum-norm least squares via SVD, truncating tiny singular values.
inline Vector least_squares(const DenseMatrix& X, const Vector& y) {
    const SvdFactors f = svd(X);
    const double smax = f.s.empty() ? 0.0 : f.s.front();
    Vector x(X.cols(), 0.0);
    for (std::size_t k = 0; k < f.s.size(); ++k) {
        if (f.s[k] <= 1e-12 * smax || f.s[k] == 0.0) continue;
        double uy = 0.0;
        for (int i = 0; i < X.rows(); ++i) uy += f.U(i, static_cast<int>(k)) * y[i];
        const double c = uy / f.s[k];
        for (int j = 0; j < X.cols(); ++j) x[j] += c * f.V(j, static_cast<int>(k));
    }
    return x;
}

inline DenseMatrix select_columns(const DenseMatrix& X, const std::vector<int>& idx) {
    DenseMatrix out(X.rows(), static_cast<int>(idx.size()));
    for (int i = 0; i < X.rows(); ++i)
        for (std::size_t k = 0; k < idx.size(); ++k) out(i, static_cast<int>(k)) = X(i, idx[k]);
    return out;
}

// Support/tangent detection on an approximate minimizer uses a looser
// threshold than the exact-frame tolerance.
constexpr double kDetectTolerance = 1e-6;

inline TangentSpace detect_tangent(const RegularizerSpec& R, const Vector& beta) {
    return std::visit(
        [&](const auto& spec) -> TangentSpace {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, NuclearReg>) {
                const SvdFactors f = svd(as_matrix(beta, spec.rows, spec.cols));
                const double smax = f.s.empty() ? 0.0 : f.s.front();
                int rank = 0;
                for (double s : f.s)
                    if (s > kDetectTolerance * smax && s > 0.0) ++rank;
                MatrixTangent t;
                t.rows = spec.rows;
                t.cols = spec.cols;
                t.U = DenseMatrix(spec.rows, rank);
                t.V = DenseMatrix(spec.cols, rank);
                for (int k = 0; k < rank; ++k) {
                    for (int i = 0; i < spec.rows; ++i) t.U(i, k) = f.U(i, k);
                    for (int i = 0; i < spec.cols; ++i) t.V(i, k) = f.V(i, k);
                }
                return t;
            } else if constexpr (std::is_same_v<T, GroupReg>) {
                double maxn = 0.0;
                std::vector<double> norms(spec.gamma.q(), 0.0);
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    double s = 0.0;
                    for (int idx : spec.gamma.group(j)) s += beta[idx] * beta[idx];
                    norms[j] = std::sqrt(s);
                    maxn = std::max(maxn, norms[j]);
                }
                GroupTangent t;
                t.gamma = spec.gamma;
                for (int j = 0; j < spec.gamma.q(); ++j)
                    if (norms[j] > kDetectTolerance * maxn && norms[j] > 0.0) t.groups.push_back(j);
                return t;
            } else {
                CoordinateTangent t;
                t.dim = static_cast<int>(beta.size());
                const double tol = kDetectTolerance * norm_inf(beta);
                for (std::size_t i = 0; i < beta.size(); ++i)
                    if (std::abs(beta[i]) > tol && beta[i] != 0.0)
                        t.support.push_back(static_cast<int>(i));
                return t;
            }
        },
        R);
}

}  // namespace detail

inline SolveResult solve_basis_pursuit(const DenseMatrix& X, const Vector& y,
                                       const RegularizerSpec& R, const SolveOptions& opts = {}) {
    validate(opts);
    if (static_cast<int>(y.size()) != X.rows())
        throw ConfigError("solve_basis_pursuit: y length must match row count");
    validate(R, X.cols());

    const double y_scale = 1.0 + norm2(y);
    auto feas_resid = [&](const Vector& b) {
        Vector r = X.apply(b);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
        return norm2(r);
    };

    // Feasibility precheck: project y onto the column space.
    const Vector b_ls = detail::least_squares(X, y);
    if (feas_resid(b_ls) > opts.feasibility_tol * y_scale) {
        SolveResult res;
        res.beta.assign(X.cols(), 0.0);
        res.status = SolveStatus::infeasible;
        res.kkt_residual = feas_resid(b_ls);
        return res;
    }

    // Quadratic-penalty continuation: min rho*||X beta - y||^2 + R(beta).
    Vector beta(X.cols(), 0.0);
    int iters_total = 0;
    for (int stage = 0; stage < 8; ++stage) {
        const double rho = std::pow(10.0, stage);
        const double sr = std::sqrt(rho);
        DenseMatrix Xs = X;
        for (auto& v : Xs.data()) v *= sr;
        Vector ys = y;
        for (auto& v : ys) v *= sr;
        LossSpec Ls{QuadraticLoss{std::move(Xs), std::move(ys)}};
        SolveOptions so = opts;
        so.kkt_tol = (stage + 1 < 8) ? std::max(opts.kkt_tol, 1e-6) : opts.kkt_tol;
        so.max_iterations = std::min(opts.max_iterations, 4000);
        SolveResult stage_res = solve_regularized(Ls, R, so, &beta);
        beta = std::move(stage_res.beta);
        iters_total += stage_res.iterations;
    }

    // Tangent-space polish: least squares on the detected support, accepted
    // only when it stays feasible and does not grow the regularizer.
    const TangentSpace t = detail::detect_tangent(R, beta);
    Vector polished = beta;
    bool polish_ok = false;
    if (const auto* mt = std::get_if<MatrixTangent>(&t)) {
        auto op = [&](const Vector& v) {
            const auto [vt, vperp] = tangent_project(t, v);
            (void)vperp;
            Vector w = X.apply_transposed(X.apply(vt));
            return tangent_project(t, w).first;
        };
        const Vector rhs = tangent_project(t, X.apply_transposed(y)).first;
        const Vector sol = cg_solve(op, rhs, 1e-12);
        polished = tangent_project(t, sol).first;
        polish_ok = true;
        (void)mt;
    } else {
        std::vector<int> idx;
        if (const auto* ct = std::get_if<CoordinateTangent>(&t))
            idx = ct->support;
        else
            idx = tangent_indices(std::get<GroupTangent>(t));
        if (!idx.empty() && static_cast<int>(idx.size()) <= X.rows()) {
            const DenseMatrix Xi = detail::select_columns(X, idx);
            const Vector bi = detail::least_squares(Xi, y);
            polished.assign(X.cols(), 0.0);
            for (std::size_t k = 0; k < idx.size(); ++k) polished[idx[k]] = bi[k];
            polish_ok = true;
        }
    }
    // The continuation iterate is slightly infeasible and therefore slightly
    // under-measures the constrained minimum; the polish is accepted whenever
    // it is feasible and within the documented 1e-6 relative band.
    if (polish_ok && feas_resid(polished) <= opts.feasibility_tol * y_scale &&
        value(R, polished) <= value(R, beta) + 1e-6 * (1.0 + value(R, beta))) {
        beta = std::move(polished);
    }

    SolveResult res;
    res.iterations = iters_total;
    res.objective = value(R, beta);
    const double fr = feas_resid(beta);
    res.kkt_residual = fr;
    res.status =
        fr <= opts.feasibility_tol * y_scale ? SolveStatus::converged : SolveStatus::max_iter;
    res.beta = std::move(beta);
    return res;
}

// ---------------------------------------------------------------------------
// Certificate problems
// ---------------------------------------------------------------------------

namespace detail {

// prox of t * eta * b_norm(F, .): closed form in every frame.  Tangent /
// S1-supported components pass through untouched.
inline Vector frame_b_prox(const CertificateFrame& F, const Vector& v, double t) {
    const double tl = t * F.eta;
    if (tl == 0.0) return v;
    return std::visit(
        [&](const auto& spec) -> Vector {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, LassoReg>) {
                const auto& tan = std::get<CoordinateTangent>(F.tangent);
                Vector out = v;
                std::size_t k = 0;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (k < tan.support.size() && static_cast<int>(i) == tan.support[k]) {
                        ++k;
                        continue;
                    }
                    out[i] = soft_threshold(v[i], tl * spec.lambda);
                }
                return out;
            } else if constexpr (std::is_same_v<T, GroupReg>) {
                const auto& tan = std::get<GroupTangent>(F.tangent);
                Vector out = v;
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    if (std::binary_search(tan.groups.begin(), tan.groups.end(), j)) continue;
                    double g2 = 0.0;
                    for (int idx : spec.gamma.group(j)) g2 += v[idx] * v[idx];
                    const double nrm = std::sqrt(g2);
                    const double shrink =
                        nrm > tl * spec.lambda ? 1.0 - tl * spec.lambda / nrm : 0.0;
                    for (int idx : spec.gamma.group(j)) out[idx] = shrink * v[idx];
                }
                return out;
            } else if constexpr (std::is_same_v<T, NuclearReg>) {
                const auto [vt, vperp] = tangent_project(F.tangent, v);
                // SVT of the complement part stays inside the complement, so
                // tangent + thresholded complement is the exact prox.
                const SvdFactors f = svd(as_matrix(vperp, spec.rows, spec.cols));
                DenseMatrix acc(spec.rows, spec.cols);
                for (std::size_t k = 0; k < f.s.size(); ++k) {
                    const double sv = std::max(f.s[k] - tl * spec.lambda, 0.0);
                    if (sv == 0.0) continue;
                    for (int i = 0; i < spec.rows; ++i)
                        for (int j = 0; j < spec.cols; ++j)
                            acc(i, j) += sv * f.U(i, static_cast<int>(k)) * f.V(j, static_cast<int>(k));
                }
                Vector out(v.size());
                for (std::size_t i = 0; i < v.size(); ++i) out[i] = vt[i] + acc.data()[i];
                return out;
            } else {
                Vector out = v;
                for (int j = 0; j < spec.gamma.q(); ++j) {
                    if (std::binary_search(F.s_gamma.begin(), F.s_gamma.end(), j)) continue;
                    std::vector<int> off;
                    for (int idx : spec.gamma.group(j))
                        if (!std::binary_search(F.s1.begin(), F.s1.end(), idx)) off.push_back(idx);
                    if (off.empty()) continue;
                    std::vector<double> z(off.size());
                    for (std::size_t i = 0; i < off.size(); ++i) z[i] = v[off[i]];
                    // Moreau: prox of the support function sigma_K is id - proj_K
                    const auto proj =
                        boxball_project(z, tl * spec.lambda1, tl * 0.5 * spec.lambdaG);
                    for (std::size_t i = 0; i < off.size(); ++i) out[off[i]] = z[i] - proj[i];
                }
                return out;
            }
        },
        F.reg);
}

// Stationarity residual of the certificate objective at Q: tangent-gradient
// norm + dual-ball violation + alignment gap of the off-tangent pairing.
template <typename LossLike>
inline double certificate_kkt(const LossLike& L, const CertificateFrame& F, const Vector& q) {
    Vector w = gradient(L, q);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = -w[i] - F.e[i];
    const auto [wt, wperp] = tangent_project(F.tangent, w);
    const double scale = std::max(1.0, norm2(F.e));
    const double tangent_part = norm2(wt) / scale;
    const double viol = std::max(0.0, b_dual_norm(F, wperp) - F.eta);
    const double bn = F.eta * b_norm(F, q);
    const auto [qt, qperp] = tangent_project(F.tangent, q);
    (void)qt;
    const double align = std::max(0.0, bn - dot(wperp, qperp)) / std::max(1.0, bn);
    return tangent_part + viol + align;
}

}  // namespace detail

// Global certificate:  min_beta L_eff(beta) + <e_S(W), beta> + eta*b_norm(beta).
// L_eff is the plain loss or the shifted generalized loss.  The dual report is
// the b_dual_norm of -grad L_eff(Q) - e, which must be <= eta + tolerance.
template <typename LossLike>
inline SolveResult solve_certificate_global(const LossLike& L_eff, const CertificateFrame& F,
                                            const SolveOptions& opts = {}) {
    detail::ProxProblem pb;
    const double ridge = opts.ridge;
    const Vector* e = &F.e;
    pb.f_value = [&L_eff, e, ridge](const Vector& b) {
        double v = loss_value(L_eff, b) + dot(*e, b);
        if (ridge > 0.0) v += ridge * norm2_sq(b);
        return v;
    };
    pb.f_grad = [&L_eff, e, ridge](const Vector& b) {
        Vector g = gradient(L_eff, b);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += (*e)[i];
        if (ridge > 0.0) axpy(2.0 * ridge, b, g);
        return g;
    };
    pb.g_value = [&F](const Vector& b) { return F.eta * b_norm(F, b); };
    pb.g_prox = [&F](const Vector& v, double t) { return detail::frame_b_prox(F, v, t); };
    pb.kkt = [&L_eff, &F](const Vector& b) { return detail::certificate_kkt(L_eff, F, b); };
    if constexpr (std::is_same_v<std::decay_t<LossLike>, ShiftedLoss>)
        pb.lipschitz_estimate = L_eff.gamma * detail::lipschitz_estimate(L_eff.base) + 2.0 * ridge;
    else
        pb.lipschitz_estimate = detail::lipschitz_estimate(L_eff) + 2.0 * ridge;
    pb.detect_unbounded = true;
    return detail::prox_gradient(pb, F.anchor, opts);
}

// Tangent-space certificate for quadratic loss:
//   Q = beta_bar - 0.5 * H_T^{-1} (e + a_tilde)   on T,
// solved densely on the tangent coordinates, or by conjugate gradient with
// the P_T H P_T operator for matrix tangent spaces.
inline SolveResult solve_certificate_tangent(const LossSpec& L, const CertificateFrame& F,
                                             const TangentSpace& T, const Vector& a_tilde) {
    const auto* q = std::get_if<QuadraticLoss>(&L);
    if (!q) throw ConfigError("solve_certificate_tangent: quadratic loss required");
    const DenseMatrix& X = q->X;
    Vector rhs(F.e.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = F.e[i] + a_tilde[i];

    Vector qvec = F.anchor;
    int iters = 0;
    if (const auto* mt = std::get_if<MatrixTangent>(&T)) {
        (void)mt;
        auto op = [&](const Vector& v) {
            const Vector vt = tangent_project(T, v).first;
            Vector w = X.apply_transposed(X.apply(vt));
            return tangent_project(T, w).first;
        };
        const Vector rt = tangent_project(T, rhs).first;
        const Vector sol = cg_solve(op, rt, 1e-12);
        const Vector st = tangent_project(T, sol).first;
        Vector resid = op(st);
        for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= rt[i];
        if (norm2(resid) > 1e-6 * std::max(1.0, norm2(rt)))
            throw SingularMatrixError("tangent Hessian solve did not converge", 0.0);
        for (std::size_t i = 0; i < qvec.size(); ++i) qvec[i] -= 0.5 * st[i];
    } else {
        std::vector<int> idx;
        if (const auto* ct = std::get_if<CoordinateTangent>(&T))
            idx = ct->support;
        else
            idx = tangent_indices(std::get<GroupTangent>(T));
        if (!idx.empty()) {
            const DenseMatrix Xi = detail::select_columns(X, idx);
            const DenseMatrix ht = gram(Xi);  // H_T = X_T^T X_T
            Vector ri(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k) ri[k] = rhs[idx[k]];
            const Vector w = solve_spd(ht, ri);
            for (std::size_t k = 0; k < idx.size(); ++k) qvec[idx[k]] -= 0.5 * w[k];
        }
    }

    // Residual of the tangent stationarity condition
    //   P_T( grad L(Q) - grad L(beta_bar) + (a_tilde + e) ) = 0.
    Vector g = gradient(L, qvec);
    const Vector gb = gradient(L, F.anchor);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = g[i] - gb[i] + rhs[i];
    const double resid = norm2(tangent_project(T, g).first);

    SolveResult res;
    res.beta = std::move(qvec);
    res.iterations = iters;
    res.objective = 0.0;
    res.kkt_residual = resid;
    res.status = resid <= 1e-8 * std::max(1.0, norm2(rhs)) ? SolveStatus::converged
                                                           : SolveStatus::max_iter;
    return res;
}

}  // namespace certlab
