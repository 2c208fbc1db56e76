#pragma once

// Gaussian-width calculations: the mean-length constant lambda_n, Monte Carlo
// estimation of the distance width E dist(eps, cone(G)), closed-form width
// bounds for lasso/group frames, Gordon-style tail predictions, and the
// implied sample-complexity threshold.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "certlab/certificates.hpp"
#include "certlab/errors.hpp"
#include "certlab/linalg.hpp"
#include "certlab/random.hpp"
#include "certlab/regularizers.hpp"

namespace certlab {

// E ||N(0, I_n)||_2 = sqrt(2) * Gamma((n+1)/2) / Gamma(n/2), computed in log
// space; satisfies n/sqrt(n+1) <= lambda_n <= sqrt(n).
inline double lambda_n(int n) {
    if (n < 1) throw ConfigError("lambda_n: n must be >= 1");
    return std::sqrt(2.0) * std::exp(std::lgamma((n + 1) / 2.0) - std::lgamma(n / 2.0));
}

struct WidthEstimate {
    double mean = 0.0;     // E dist(eps, cone(G))
    double se = 0.0;
    double mean_sq = 0.0;  // E dist^2, the form the closed-form bounds control
    double se_sq = 0.0;
    long trials = 0;
    std::uint64_t seed = 0;
    std::string method;
};

namespace detail {

// dist^2(eps, gamma * G) where G = { e + a_tilde + b_tilde + u :
// ||b_tilde + u||_B* <= eta }: the tangent part is pinned at gamma*(e+a),
// the complement part ranges over the gamma*eta dual ball around gamma*b.
inline double width_phi(const CertificateFrame& f, const Vector& ea, const Vector& bt,
                        const Vector& eps_t, const Vector& eps_p, double gamma) {
    const int p = static_cast<int>(ea.size());
    double tangent = 0.0;
    Vector resid(p);
    for (int i = 0; i < p; ++i) {
        const double dt = gamma * ea[i] - eps_t[i];
        tangent += dt * dt;
        resid[i] = eps_p[i] - gamma * bt[i];
    }
    const Vector clip = frame_ball_clip(f, resid, gamma * f.eta);
    double comp = 0.0;
    for (int i = 0; i < p; ++i) {
        const double d = resid[i] - clip[i];
        comp += d * d;
    }
    return tangent + comp;
}

}  // namespace detail

// Monte Carlo width of the cone generated by the certificate set G.  Each
// trial minimizes dist(eps, gamma*G) over gamma >= 0 by golden section.
inline WidthEstimate width_mc(const CertificateFrame& F, const TargetSplit& split, long trials,
                              std::uint64_t seed) {
    if (trials < 1) throw ConfigError("width_mc: trials must be >= 1");
    const int p = static_cast<int>(F.e.size());
    Vector ea(p);
    for (int i = 0; i < p; ++i) ea[i] = F.e[i] + split.a_tilde[i];

    double sum = 0.0, sum2 = 0.0, sum_sq = 0.0, sum_sq2 = 0.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (long t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        const Vector eps = rng.normal_vector(p);
        const auto [eps_t, eps_p] = tangent_project(F.tangent, eps);
        auto phi = [&](double g) {
            return detail::width_phi(F, ea, split.b_tilde, eps_t, eps_p, g);
        };
        // golden section on [0, 1e6]; phi is convex in gamma
        double lo = 0.0, hi = 1e6;
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = phi(x1), f2 = phi(x2);
        while (hi - lo > 1e-10 * (1.0 + hi)) {
            if (f1 <= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = phi(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = phi(x2);
            }
        }
        const double d2 = std::min({phi(0.0), f1, f2});
        const double d = std::sqrt(std::max(0.0, d2));
        sum += d;
        sum2 += d * d;
        sum_sq += d2;
        sum_sq2 += d2 * d2;
    }
    WidthEstimate est;
    est.trials = trials;
    est.seed = seed;
    est.method = "mc-golden-section";
    est.mean = sum / trials;
    est.mean_sq = sum_sq / trials;
    if (trials > 1) {
        const double var = std::max(0.0, (sum2 - trials * est.mean * est.mean) / (trials - 1));
        const double var_sq =
            std::max(0.0, (sum_sq2 - trials * est.mean_sq * est.mean_sq) / (trials - 1));
        est.se = std::sqrt(var / trials);
        est.se_sq = std::sqrt(var_sq / trials);
    }
    return est;
}

inline WidthEstimate width_mc(const CertificateFrame& F, long trials, std::uint64_t seed) {
    TargetSplit split;
    const int p = static_cast<int>(F.e.size());
    split.beta_star = F.anchor;
    split.a_tilde = Vector(p, 0.0);
    split.b_tilde = Vector(p, 0.0);
    split.eta_tilde = 0.0;
    return width_mc(F, split, trials, seed);
}

// Closed-form bound on E dist^2 for a sign-consistent lasso frame:
//   2|S| + 2 ln(p/|S| - 1) * |S| / (eta - eta_tilde)^2.
inline double width_bound_lasso(int s, int p, double eta, double eta_tilde) {
    if (s < 1 || p < 1) throw ConfigError("width_bound_lasso: s and p must be >= 1");
    if (!(eta_tilde < eta)) throw ConfigError("width_bound_lasso: requires eta_tilde < eta");
    if (p < 2 * s) throw ConfigError("width_bound_lasso: requires p >= 2|S|");
    const double gap = eta - eta_tilde;
    return 2.0 * s + 2.0 * std::log(static_cast<double>(p) / s - 1.0) * s / (gap * gap);
}

// Group analogue over q groups of size m:
//   |S|(m+1) + (sqrt(2 ln(q/|S| - 1)) + sqrt(m))^2 * |S| / (eta - eta_tilde)^2.
inline double width_bound_group(int s, int q, int m, double eta, double eta_tilde) {
    if (s < 1 || q < 1 || m < 1)
        throw ConfigError("width_bound_group: s, q, m must be >= 1");
    if (!(eta_tilde < eta)) throw ConfigError("width_bound_group: requires eta_tilde < eta");
    if (q < 2 * s) throw ConfigError("width_bound_group: requires q >= 2|S|");
    const double gap = eta - eta_tilde;
    const double a = std::sqrt(2.0 * std::log(static_cast<double>(q) / s - 1.0)) + std::sqrt(m);
    return s * (m + 1.0) + a * a * s / (gap * gap);
}

struct GordonPrediction {
    double g = 0.0;            // width of the descent cone (length units)
    double delta = 0.0;        // slack
    int n = 0;                 // sample size
    double probability = 0.5;  // failure-probability bound
    bool precondition_ok = false;
};

// P(escape fails) <= 1/2 exp(-1/2 (n/sqrt(n+1) - g - delta)^2) when
// g + delta <= n/sqrt(n+1); otherwise the trivial bound 1/2 applies.
inline GordonPrediction gordon_tail(int n, double g, double delta) {
    if (n < 1) throw ConfigError("gordon_tail: n must be >= 1");
    if (g < 0.0 || delta < 0.0) throw ConfigError("gordon_tail: g and delta must be >= 0");
    GordonPrediction out;
    out.g = g;
    out.delta = delta;
    out.n = n;
    const double thresh = n / std::sqrt(n + 1.0);
    out.precondition_ok = g + delta <= thresh;
    if (out.precondition_ok) {
        const double x = thresh - g - delta;
        out.probability = 0.5 * std::exp(-0.5 * x * x);
    } else {
        out.probability = 0.5;
    }
    return out;
}

// Smallest n with n/sqrt(n+1) >= g + delta(alpha), delta(alpha) =
// sqrt(2 ln(1/(2 alpha))); delta_override >= 0 replaces the alpha-based slack.
inline int sample_complexity(double g, double alpha, double delta_override = -1.0) {
    if (g < 0.0) throw ConfigError("sample_complexity: g must be >= 0");
    double delta;
    if (delta_override >= 0.0) {
        delta = delta_override;
    } else {
        if (!(alpha > 0.0 && alpha < 0.5))
            throw ConfigError("sample_complexity: alpha must be in (0, 0.5)");
        delta = std::sqrt(2.0 * std::log(1.0 / (2.0 * alpha)));
    }
    const double target = g + delta;
    int n = std::max(1, static_cast<int>(target * target) - 2);
    while (n / std::sqrt(n + 1.0) < target) {
        if (n > 1000000000) throw BudgetError("sample_complexity: threshold exceeds 1e9");
        ++n;
    }
    return n;
}

}  // namespace certlab
