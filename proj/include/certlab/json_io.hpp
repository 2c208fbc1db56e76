#pragma once

// JSON serialization for report types (nlohmann::json ADL hooks).

#include <cmath>
#include <limits>

#include "json.hpp"

#include "certlab/certificates.hpp"
#include "certlab/gaussian.hpp"
#include "certlab/rsc.hpp"
#include "certlab/solvers.hpp"

namespace certlab {

namespace detail {

inline nlohmann::json json_number(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const CertificateReport& r) {
    const char* kind = r.kind == CertificateKind::global
                           ? "global"
                           : (r.kind == CertificateKind::tangent ? "tangent" : "interior");
    j = nlohmann::json{{"kind", kind},
                       {"delta_residual", detail::json_number(r.delta_residual)},
                       {"b_dual", detail::json_number(r.b_dual)},
                       {"eta", r.eta},
                       {"pass", r.pass},
                       {"margin", detail::json_number(r.margin)}};
}

inline void to_json(nlohmann::json& j, const WidthEstimate& w) {
    j = nlohmann::json{{"mean", w.mean},       {"se", w.se},       {"mean_sq", w.mean_sq},
                       {"se_sq", w.se_sq},     {"trials", w.trials}, {"seed", w.seed},
                       {"method", w.method}};
}

inline void to_json(nlohmann::json& j, const GordonPrediction& g) {
    j = nlohmann::json{{"g", g.g},
                       {"delta", g.delta},
                       {"n", g.n},
                       {"probability", g.probability},
                       {"precondition_ok", g.precondition_ok}};
}

inline void to_json(nlohmann::json& j, const CurvatureEstimate& c) {
    j = nlohmann::json{{"lower", detail::json_number(c.lower)},
                       {"upper", detail::json_number(c.upper)},
                       {"budget", c.budget},
                       {"method", c.method},
                       {"certified", c.certified},
                       {"empty_cone", c.empty_cone},
                       {"crude", detail::json_number(c.crude)}};
}

inline void to_json(nlohmann::json& j, const SolveResult& r) {
    const char* status = r.status == SolveStatus::converged
                             ? "converged"
                             : (r.status == SolveStatus::max_iter ? "max_iter" : "infeasible");
    j = nlohmann::json{{"iterations", r.iterations},
                       {"objective", detail::json_number(r.objective)},
                       {"kkt_residual", detail::json_number(r.kkt_residual)},
                       {"status", status}};
}

inline void to_json(nlohmann::json& j, const GlmOracleBound& b) {
    j = nlohmann::json{{"bound", b.bound},
                       {"lambda", b.lambda},
                       {"gamma2", b.gamma2},
                       {"eta_star", b.eta_star},
                       {"radius_ok", b.radius_ok},
                       {"gamma2_estimate", b.gamma2_estimate}};
}

}  // namespace certlab
