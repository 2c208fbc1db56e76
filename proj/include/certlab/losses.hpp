#pragma once

// Loss functions (quadratic and GLM families), Bregman divergences, and the
// scalar loss constants used by the bound machinery: the log-curvature
// Lipschitz constant kappa, the convexity ratio gamma over an amplitude box,
// the noise level eta(beta*), and the penalty level lambda(beta_bar, beta*).

#include <cmath>
#include <variant>
#include <vector>

#include "certlab/errors.hpp"
#include "certlab/linalg.hpp"
#include "certlab/regularizers.hpp"

namespace certlab {

enum class GlmFamily { squared, logistic, poisson };

// L(beta) = ||X beta - y||_2^2.  H = X^T X and z = 2 X^T y are never
// materialized; products go through X.
struct QuadraticLoss {
    DenseMatrix X;
    Vector y;
};

// L(beta) = sum_i ell_i(<x_i, beta>).  For logistic the labels are absorbed
// into the rows x_i and y is ignored; for poisson y_i >= 0 is required.
struct GlmLoss {
    DenseMatrix X;
    GlmFamily family = GlmFamily::squared;
    Vector y;
};

using LossSpec = std::variant<QuadraticLoss, GlmLoss>;

inline void validate(const LossSpec& L) {
    std::visit(
        [](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if (static_cast<int>(l.y.size()) != l.X.rows() &&
                !(std::is_same_v<T, GlmLoss> && l.y.empty()))
                throw ConfigError("loss: response length must match row count");
            if (!all_finite(l.y)) throw ConfigError("loss: response not finite");
            if constexpr (std::is_same_v<T, GlmLoss>) {
                if (l.family == GlmFamily::poisson)
                    for (double v : l.y)
                        if (v < 0.0) throw ConfigError("poisson loss: responses must be >= 0");
            }
        },
        L);
}

inline int dimension(const LossSpec& L) {
    return std::visit([](const auto& l) { return l.X.cols(); }, L);
}

inline int sample_size(const LossSpec& L) {
    return std::visit([](const auto& l) { return l.X.rows(); }, L);
}

inline const DenseMatrix& design(const LossSpec& L) {
    return std::visit([](const auto& l) -> const DenseMatrix& { return l.X; }, L);
}

namespace detail {

// Overflow guard for the GLM exponentials.  Inputs past +-500 are clamped and
// the saturation flag (when provided) is raised.
inline double clamp_linear(double t, bool* saturated) {
    if (t > 500.0 || t < -500.0) {
        if (saturated) *saturated = true;
        return t > 0.0 ? 500.0 : -500.0;
    }
    return t;
}

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

inline double ell_value(GlmFamily f, double t, double y) {
    switch (f) {
        case GlmFamily::squared:
            return (t - y) * (t - y);
        case GlmFamily::logistic:
            // ln(1+e^{-t}), stable on both tails
            return t >= 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
        case GlmFamily::poisson:
            return std::exp(t) - y * t;
    }
    return 0.0;
}

inline double ell_prime(GlmFamily f, double t, double y) {
    switch (f) {
        case GlmFamily::squared:
            return 2.0 * (t - y);
        case GlmFamily::logistic:
            return -sigmoid(-t);
        case GlmFamily::poisson:
            return std::exp(t) - y;
    }
    return 0.0;
}

inline double ell_second(GlmFamily f, double t) {
    switch (f) {
        case GlmFamily::squared:
            return 2.0;
        case GlmFamily::logistic:
            return sigmoid(t) * sigmoid(-t);
        case GlmFamily::poisson:
            return std::exp(t);
    }
    return 0.0;
}

}  // namespace detail

inline double loss_value(const LossSpec& L, const Vector& beta, bool* saturated = nullptr) {
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            const Vector t = l.X.apply(beta);
            if constexpr (std::is_same_v<T, QuadraticLoss>) {
                double s = 0.0;
                for (std::size_t i = 0; i < t.size(); ++i) {
                    const double r = t[i] - l.y[i];
                    s += r * r;
                }
                return s;
            } else {
                double s = 0.0;
                for (std::size_t i = 0; i < t.size(); ++i) {
                    const double ti = detail::clamp_linear(t[i], saturated);
                    s += detail::ell_value(l.family, ti, l.y.empty() ? 0.0 : l.y[i]);
                }
                return s;
            }
        },
        L);
}

inline Vector gradient(const LossSpec& L, const Vector& beta, bool* saturated = nullptr) {
    return std::visit(
        [&](const auto& l) -> Vector {
            using T = std::decay_t<decltype(l)>;
            Vector t = l.X.apply(beta);
            if constexpr (std::is_same_v<T, QuadraticLoss>) {
                for (std::size_t i = 0; i < t.size(); ++i) t[i] = 2.0 * (t[i] - l.y[i]);
                return l.X.apply_transposed(t);
            } else {
                for (std::size_t i = 0; i < t.size(); ++i) {
                    const double ti = detail::clamp_linear(t[i], saturated);
                    t[i] = detail::ell_prime(l.family, ti, l.y.empty() ? 0.0 : l.y[i]);
                }
                return l.X.apply_transposed(t);
            }
        },
        L);
}

// Per-row second derivatives ell_i''(<x_i, beta>).
inline Vector curvature_weights(const LossSpec& L, const Vector& beta, bool* saturated = nullptr) {
    return std::visit(
        [&](const auto& l) -> Vector {
            using T = std::decay_t<decltype(l)>;
            Vector t = l.X.apply(beta);
            if constexpr (std::is_same_v<T, QuadraticLoss>) {
                for (auto& v : t) v = 2.0;
            } else {
                for (auto& v : t)
                    v = detail::ell_second(l.family, detail::clamp_linear(v, saturated));
            }
            return t;
        },
        L);
}

struct BregmanTriple {
    double d_ab = 0.0;   // D_L(a,b)
    double d_sym = 0.0;  // D_L(a,b) + D_L(b,a)
};

// D_L(a,b) = L(a) - L(b) - <grad L(b), a-b>.  The quadratic case is computed
// exactly as ||X(a-b)||^2 rather than by the subtraction formula.
inline BregmanTriple bregman(const LossSpec& L, const Vector& a, const Vector& b) {
    if (const auto* q = std::get_if<QuadraticLoss>(&L)) {
        Vector d(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
        const Vector xd = q->X.apply(d);
        const double v = dot(xd, xd);
        return {v, 2.0 * v};
    }
    const double la = loss_value(L, a), lb = loss_value(L, b);
    const Vector ga = gradient(L, a), gb = gradient(L, b);
    double gb_ab = 0.0, ga_ba = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        gb_ab += gb[i] * (a[i] - b[i]);
        ga_ba += ga[i] * (b[i] - a[i]);
    }
    const double dab = la - lb - gb_ab;
    const double dba = lb - la - ga_ba;
    return {dab, dab + dba};
}

// Lipschitz constant of log ell''(t): 0 for squared error, 1 for logistic and
// poisson.
inline double kappa(const LossSpec& L) {
    if (std::holds_alternative<QuadraticLoss>(L)) return 0.0;
    switch (std::get<GlmLoss>(L).family) {
        case GlmFamily::squared:
            return 0.0;
        case GlmFamily::logistic:
        case GlmFamily::poisson:
            return 1.0;
    }
    return 0.0;
}

// gamma in (0,1] such that D_L(a,b) >= gamma * D_L(b,a) whenever all linear
// predictors stay inside [-A, A].
inline double convexity_ratio_gamma(const LossSpec& L, double amplitude) {
    if (!(amplitude >= 0.0)) throw ConfigError("convexity_ratio_gamma: A must be >= 0");
    if (std::holds_alternative<QuadraticLoss>(L)) return 1.0;
    switch (std::get<GlmLoss>(L).family) {
        case GlmFamily::squared:
            return 1.0;
        case GlmFamily::logistic:
            return 4.0 / (2.0 + std::exp(-amplitude) + std::exp(amplitude));
        case GlmFamily::poisson:
            return std::exp(-2.0 * amplitude);
    }
    return 1.0;
}

// eta(beta*) = dual_norm(R, grad L(beta*)).
inline double noise_level_eta(const LossSpec& L, const Vector& beta_star,
                              const RegularizerSpec& R) {
    return dual_norm(R, gradient(L, beta_star));
}

enum class PenaltyNorm { l2, l_inf, group_inf };

// inf over u in dR(beta_bar) of ||grad L(beta*) + u||_D, in closed form: the
// on-support part of the subgradient is pinned, the off-support part clips
// the gradient into the dual box/ball.  Supported (regularizer, norm) pairs:
// lasso x {l2, l_inf}, group x {l2, group_inf}, nuclear x {l2}.
inline double penalty_level_lambda(const LossSpec& L, const Vector& beta_bar,
                                   const Vector& beta_star, const RegularizerSpec& R,
                                   PenaltyNorm norm) {
    const Vector g = gradient(L, beta_star);
    if (const auto* lasso = std::get_if<LassoReg>(&R)) {
        if (norm == PenaltyNorm::group_inf)
            throw UnsupportedNormError("penalty_level_lambda: Gamma-inf norm needs a group regularizer");
        const double tol = kSupportTolerance * norm_inf(beta_bar);
        double sq = 0.0, mx = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double r;
            if (std::abs(beta_bar[i]) > tol)
                r = std::abs(g[i] + lasso->lambda * (beta_bar[i] > 0.0 ? 1.0 : -1.0));
            else
                r = std::max(std::abs(g[i]) - lasso->lambda, 0.0);
            sq += r * r;
            mx = std::max(mx, r);
        }
        return norm == PenaltyNorm::l2 ? std::sqrt(sq) : mx;
    }
    if (const auto* grp = std::get_if<GroupReg>(&R)) {
        if (norm == PenaltyNorm::l_inf)
            throw UnsupportedNormError("penalty_level_lambda: elementwise l_inf not closed-form for group");
        double maxn = 0.0;
        std::vector<double> bn(grp->gamma.q(), 0.0);
        for (int j = 0; j < grp->gamma.q(); ++j) {
            double s = 0.0;
            for (int idx : grp->gamma.group(j)) s += beta_bar[idx] * beta_bar[idx];
            bn[j] = std::sqrt(s);
            maxn = std::max(maxn, bn[j]);
        }
        double sq = 0.0, mx = 0.0;
        for (int j = 0; j < grp->gamma.q(); ++j) {
            double r;
            if (bn[j] > kSupportTolerance * maxn && bn[j] > 0.0) {
                double s = 0.0;
                for (int idx : grp->gamma.group(j)) {
                    const double v = g[idx] + grp->lambda * beta_bar[idx] / bn[j];
                    s += v * v;
                }
                r = std::sqrt(s);
            } else {
                double s = 0.0;
                for (int idx : grp->gamma.group(j)) s += g[idx] * g[idx];
                r = std::max(std::sqrt(s) - grp->lambda, 0.0);
            }
            sq += r * r;
            mx = std::max(mx, r);
        }
        return norm == PenaltyNorm::l2 ? std::sqrt(sq) : mx;
    }
    if (const auto* nuc = std::get_if<NuclearReg>(&R)) {
        if (norm != PenaltyNorm::l2)
            throw UnsupportedNormError("penalty_level_lambda: nuclear supports the l2 (Frobenius) norm only");
        const CertificateFrame f = certificate_frame(R, beta_bar, 1.0);
        const auto& t = std::get<MatrixTangent>(f.tangent);
        const auto [g_t, g_perp] = tangent_project(f.tangent, g);
        double sq = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double r = g_t[i] + f.e[i];  // e = lambda * U V^T lives in T
            sq += r * r;
        }
        const SvdFactors fac = svd(as_matrix(g_perp, nuc->rows, nuc->cols));
        for (double s : fac.s) sq += std::pow(std::max(s - nuc->lambda, 0.0), 2);
        (void)t;
        return std::sqrt(sq);
    }
    throw UnsupportedNormError("penalty_level_lambda: mixed regularizer not supported");
}

// ---------------------------------------------------------------------------
// Shifted loss  Lbar_*(beta) = gamma*L(beta) - <gamma*grad L(beta_bar) -
// grad L(beta*), beta - beta_bar>, the effective objective of the generalized
// certificate problem.  The linear shift leaves Bregman divergences at
// gamma * D_L.
// ---------------------------------------------------------------------------

struct ShiftedLoss {
    LossSpec base;
    double gamma = 1.0;
    Vector shift;   // gamma*grad L(beta_bar) - grad L(beta*)
    Vector anchor;  // beta_bar
};

inline ShiftedLoss make_shifted(const LossSpec& L, const Vector& beta_bar,
                                const Vector& beta_star, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("make_shifted: gamma must be in (0,1]");
    ShiftedLoss s;
    s.base = L;
    s.gamma = gamma;
    const Vector gb = gradient(L, beta_bar);
    const Vector gs = gradient(L, beta_star);
    s.shift.resize(gb.size());
    for (std::size_t i = 0; i < gb.size(); ++i) s.shift[i] = gamma * gb[i] - gs[i];
    s.anchor = beta_bar;
    return s;
}

inline double loss_value(const ShiftedLoss& L, const Vector& beta) {
    double lin = 0.0;
    for (std::size_t i = 0; i < beta.size(); ++i) lin += L.shift[i] * (beta[i] - L.anchor[i]);
    return L.gamma * loss_value(L.base, beta) - lin;
}

inline Vector gradient(const ShiftedLoss& L, const Vector& beta) {
    Vector g = gradient(L.base, beta);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = L.gamma * g[i] - L.shift[i];
    return g;
}

inline BregmanTriple bregman(const ShiftedLoss& L, const Vector& a, const Vector& b) {
    BregmanTriple t = bregman(L.base, a, b);
    t.d_ab *= L.gamma;
    t.d_sym *= L.gamma;
    return t;
}

}  // namespace certlab
