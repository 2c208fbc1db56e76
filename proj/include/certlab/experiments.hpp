#pragma once

// Seeded experiment harness: phase-transition sweeps, oracle-inequality
// audits, the mixed-norm adaptivity demo, and the matrix-completion demo,
// with deterministic CSV/JSON persistence.
//
// Determinism contract: trial k uses Rng(derive_seed(cfg.seed, k)) and writes
// its record into slot k of a preallocated vector, so output is byte-identical
// at any thread count.  Wall-clock timings are measured but written as 0 in
// the CSV (they go to the .meta.json sidecar, which is outside the replay
// contract).

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "certlab/certificates.hpp"
#include "certlab/errors.hpp"
#include "certlab/gaussian.hpp"
#include "certlab/linalg.hpp"
#include "certlab/losses.hpp"
#include "certlab/random.hpp"
#include "certlab/regularizers.hpp"
#include "certlab/solvers.hpp"

namespace certlab {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string kind = "phase";          // phase | oracle_audit | mixed_demo | matcomp_demo |
                                         // solve | certify | width | glm_bound
    std::string regularizer = "lasso";   // lasso | group | nuclear | mixed
    std::string loss = "quadratic";      // quadratic | logistic | poisson
    std::vector<int> n_grid;             // sample-size sweep (phase)
    int n = 0;                           // single sample size (0 = kind default)
    int p = 256;                         // ambient dimension (rows for matcomp)
    int q = 0;                           // group count / matcomp columns
    int m = 0;                           // group size
    int s = 8;                           // support size (groups for group reg)
    int rank = 1;                        // matcomp rank
    double sigma = 0.0;                  // noise level
    double eta = 0.5;                    // frame eta (noise-free checks use 1)
    double lambda = 1.0;                 // penalty level (absolute)
    double c1 = 2.0;                     // penalty constants for the sigma>0
    double c2 = 2.0;                     // lambda policies; see README
    double obs_fraction = 0.8;           // matcomp observation fraction
    double alpha = 0.05;                 // Gordon tail level
    long trials = 100;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string format = "csv";          // csv | json
};

namespace detail {

template <typename T>
T json_require(const nlohmann::json& j, const char* field) {
    if (!j.contains(field)) throw ConfigError(std::string("missing field: ") + field);
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("field has wrong type: ") + field);
    }
}

template <typename T>
T json_get(const nlohmann::json& j, const char* field, const T& def) {
    if (!j.contains(field)) return def;
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("field has wrong type: ") + field);
    }
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = nlohmann::json{{"schema_version", 1},
                       {"kind", c.kind},
                       {"regularizer", c.regularizer},
                       {"loss", c.loss},
                       {"n_grid", c.n_grid},
                       {"n", c.n},
                       {"p", c.p},
                       {"q", c.q},
                       {"m", c.m},
                       {"s", c.s},
                       {"rank", c.rank},
                       {"sigma", c.sigma},
                       {"eta", c.eta},
                       {"lambda", c.lambda},
                       {"c1", c.c1},
                       {"c2", c.c2},
                       {"obs_fraction", c.obs_fraction},
                       {"alpha", c.alpha},
                       {"trials", c.trials},
                       {"seed", c.seed},
                       {"out_dir", c.out_dir},
                       {"format", c.format}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    const int version = detail::json_require<int>(j, "schema_version");
    if (version != 1) throw ConfigError("unsupported schema_version (expected 1)");
    const ExperimentConfig d;
    c.kind = detail::json_get(j, "kind", d.kind);
    c.regularizer = detail::json_get(j, "regularizer", d.regularizer);
    c.loss = detail::json_get(j, "loss", d.loss);
    c.n_grid = detail::json_get(j, "n_grid", d.n_grid);
    c.n = detail::json_get(j, "n", d.n);
    c.p = detail::json_get(j, "p", d.p);
    c.q = detail::json_get(j, "q", d.q);
    c.m = detail::json_get(j, "m", d.m);
    c.s = detail::json_get(j, "s", d.s);
    c.rank = detail::json_get(j, "rank", d.rank);
    c.sigma = detail::json_get(j, "sigma", d.sigma);
    c.eta = detail::json_get(j, "eta", d.eta);
    c.lambda = detail::json_get(j, "lambda", d.lambda);
    c.c1 = detail::json_get(j, "c1", d.c1);
    c.c2 = detail::json_get(j, "c2", d.c2);
    c.obs_fraction = detail::json_get(j, "obs_fraction", d.obs_fraction);
    c.alpha = detail::json_get(j, "alpha", d.alpha);
    c.trials = detail::json_get(j, "trials", d.trials);
    c.seed = detail::json_get(j, "seed", d.seed);
    c.out_dir = detail::json_get(j, "out_dir", d.out_dir);
    c.format = detail::json_get(j, "format", d.format);
}

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed config JSON: ") + e.what());
    }
    return j.get<ExperimentConfig>();
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

inline void validate(const ExperimentConfig& c) {
    if (c.trials < 1) throw ConfigError("config: trials must be positive");
    if (c.p < 1) throw ConfigError("config: p must be positive");
    if (c.s < 0) throw ConfigError("config: s must be nonnegative");
    if (c.sigma < 0.0) throw ConfigError("config: sigma must be nonnegative");
    if (c.format != "csv" && c.format != "json")
        throw ConfigError("config: format must be csv or json");
    for (int n : c.n_grid)
        if (n < 1) throw ConfigError("config: n_grid entries must be positive");
}

// ---------------------------------------------------------------------------
// Trial records and CSV
// ---------------------------------------------------------------------------

struct TrialRecord {
    long trial = 0;
    std::uint64_t seed = 0;
    int n = 0;
    int p = 0;
    std::string status = "ok";
    double rel_err_l2 = 0.0;
    double b_norm_err = 0.0;
    bool cert_pass = false;
    double cert_margin = 0.0;
    double slack_thm1 = std::numeric_limits<double>::quiet_NaN();   // nan = not evaluated
    double slack_oracle = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;  // measured, but serialized as 0 for determinism
};

namespace detail {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace detail

inline const char* trial_csv_header() {
    return "trial,seed,n,p,status,rel_err_l2,b_norm_err,cert_pass,cert_margin,slack_thm1,"
           "slack_oracle,wall_ms";
}

inline std::string to_csv_row(const TrialRecord& r) {
    std::string row;
    row += std::to_string(r.trial);
    row += ',';
    row += std::to_string(r.seed);
    row += ',';
    row += std::to_string(r.n);
    row += ',';
    row += std::to_string(r.p);
    row += ',';
    row += r.status;
    row += ',';
    row += detail::format_double(r.rel_err_l2);
    row += ',';
    row += detail::format_double(r.b_norm_err);
    row += ',';
    row += r.cert_pass ? "1" : "0";
    row += ',';
    row += detail::format_double(r.cert_margin);
    row += ',';
    row += detail::format_double(r.slack_thm1);
    row += ',';
    row += detail::format_double(r.slack_oracle);
    row += ",0";  // wall_ms pinned to 0 in the replayable CSV
    return row;
}

inline std::string trials_to_csv(const std::vector<TrialRecord>& rows) {
    std::string out = trial_csv_header();
    out += '\n';
    for (const TrialRecord& r : rows) {
        out += to_csv_row(r);
        out += '\n';
    }
    return out;
}

inline nlohmann::json trial_to_json(const TrialRecord& r) {
    auto num = [](double v) -> nlohmann::json {
        if (std::isnan(v)) return nullptr;
        return v;
    };
    return nlohmann::json{{"trial", r.trial},
                          {"seed", r.seed},
                          {"n", r.n},
                          {"p", r.p},
                          {"status", r.status},
                          {"rel_err_l2", num(r.rel_err_l2)},
                          {"b_norm_err", num(r.b_norm_err)},
                          {"cert_pass", r.cert_pass},
                          {"cert_margin", num(r.cert_margin)},
                          {"slack_thm1", num(r.slack_thm1)},
                          {"slack_oracle", num(r.slack_oracle)},
                          {"wall_ms", 0.0}};
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << content;
    if (!out) throw ConfigError("failed writing output file: " + path);
}

// ---------------------------------------------------------------------------
// Trial-level parallelism
// ---------------------------------------------------------------------------

inline int resolve_threads() {
    const char* env = std::getenv("CERTLAB_THREADS");
    if (!env || !*env) return std::max(1u, std::thread::hardware_concurrency());
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 0)
        throw ConfigError("CERTLAB_THREADS must be a nonnegative integer");
    if (v == 0) return std::max(1u, std::thread::hardware_concurrency());
    return static_cast<int>(v);
}

// Runs fn(k) for k in [0, count); work-steals over an atomic counter, so the
// assignment of trials to threads is arbitrary but each trial is a pure
// function of its index.
template <typename Fn>
inline void run_parallel(long count, Fn&& fn) {
    const int threads = static_cast<int>(std::min<long>(resolve_threads(), count));
    if (threads <= 1) {
        for (long k = 0; k < count; ++k) fn(k);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const long k = next.fetch_add(1);
                if (k >= count) return;
                try {
                    fn(k);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Planted instances
// ---------------------------------------------------------------------------

struct PlantedInstance {
    DenseMatrix X;
    Vector y;
    Vector beta_bar;
    RegularizerSpec reg;
};

// Gaussian design, +-1 signs on a random support.  Draw order (X, support,
// signs, noise) is part of the replay contract.
inline PlantedInstance make_lasso_instance(int n, int p, int s, double sigma, double lambda,
                                           Rng& rng) {
    PlantedInstance inst;
    inst.X = rng.normal_matrix(n, p);
    inst.beta_bar.assign(p, 0.0);
    std::vector<int> supp = rng.sample_without_replacement(p, s);
    for (int i : supp) inst.beta_bar[i] = rng.sign();
    inst.y = inst.X.apply(inst.beta_bar);
    if (sigma > 0.0)
        for (double& v : inst.y) v += sigma * rng.normal();
    inst.reg = LassoReg{lambda};
    return inst;
}

// Group design: s active groups of size m, entries +-1/sqrt(m).
inline PlantedInstance make_group_instance(int n, int q, int m, int s, double sigma,
                                           double lambda, Rng& rng) {
    const int p = q * m;
    PlantedInstance inst;
    inst.X = rng.normal_matrix(n, p);
    inst.beta_bar.assign(p, 0.0);
    std::vector<int> groups = rng.sample_without_replacement(q, s);
    for (int g : groups)
        for (int i = 0; i < m; ++i) inst.beta_bar[g * m + i] = rng.sign() / std::sqrt(m);
    inst.y = inst.X.apply(inst.beta_bar);
    if (sigma > 0.0)
        for (double& v : inst.y) v += sigma * rng.normal();
    inst.reg = GroupReg{lambda, GroupStructure::contiguous(p, m)};
    return inst;
}

// Matrix completion: rank-r planted matrix, one-hot design rows for a random
// subset of entries (row-major vectorization).
inline PlantedInstance make_matcomp_instance(int rows, int cols, int rank, double obs_fraction,
                                             double sigma, double lambda, Rng& rng) {
    const int d = rows * cols;
    const int n = std::max(1, static_cast<int>(std::lround(obs_fraction * d)));
    PlantedInstance inst;
    const DenseMatrix a = rng.normal_matrix(rows, rank);
    const DenseMatrix b = rng.normal_matrix(cols, rank);
    inst.beta_bar.assign(d, 0.0);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            double v = 0.0;
            for (int k = 0; k < rank; ++k) v += a(i, k) * b(j, k);
            inst.beta_bar[i * cols + j] = v;
        }
    const std::vector<int> obs = rng.sample_without_replacement(d, n);
    inst.X = DenseMatrix(n, d);
    inst.y.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        inst.X(i, obs[i]) = 1.0;
        inst.y[i] = inst.beta_bar[obs[i]];
    }
    if (sigma > 0.0)
        for (double& v : inst.y) v += sigma * rng.normal();
    inst.reg = NuclearReg{lambda, rows, cols};
    return inst;
}

// Logistic instance: Bernoulli responses from the planted linear predictor.
inline PlantedInstance make_logistic_instance(int n, int p, int s, double lambda, Rng& rng) {
    PlantedInstance inst;
    inst.X = rng.normal_matrix(n, p);
    inst.beta_bar.assign(p, 0.0);
    std::vector<int> supp = rng.sample_without_replacement(p, s);
    for (int i : supp) inst.beta_bar[i] = rng.sign();
    const Vector t = inst.X.apply(inst.beta_bar);
    inst.y.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-t[i]));
        inst.y[i] = rng.uniform() < prob ? 1.0 : 0.0;
    }
    inst.reg = LassoReg{lambda};
    return inst;
}

// ---------------------------------------------------------------------------
// Slack evaluation shared by the audits
// ---------------------------------------------------------------------------

struct SlackEvaluation {
    double thm1 = std::numeric_limits<double>::quiet_NaN();
    double oracle = std::numeric_limits<double>::quiet_NaN();
    double gamma = 1.0;
    bool gamma_ok = true;
    std::string status = "ok";  // ok | no_guarantee | unbounded
};

// Builds the measured-delta certificates for both the plain-loss recovery
// inequality and the shifted-loss oracle inequality, and evaluates their
// slacks.
inline SlackEvaluation evaluate_slacks(const LossSpec& L, const RegularizerSpec& R,
                                       const CertificateFrame& F, const TargetSplit& split,
                                       const Vector& beta_hat,
                                       const SolveOptions& opts = SolveOptions{}) {
    SlackEvaluation out;
    if (split.eta_tilde >= F.eta) {
        out.status = "no_guarantee";  // the trichotomy's eta_tilde >= eta branch
        return out;
    }
    if (std::holds_alternative<QuadraticLoss>(L)) {
        out.gamma = 1.0;
    } else {
        const DenseMatrix& X = design(L);
        const double amp = std::max(norm_inf(X.apply(F.anchor)),
                                    std::max(norm_inf(X.apply(beta_hat)),
                                             norm_inf(X.apply(split.beta_star))));
        out.gamma = convexity_ratio_gamma(L, amp);
    }
    try {
        const SolveResult q1 = solve_certificate_global(L, F, opts);
        const Vector d1 = measure_delta(L, F, q1.beta);
        out.thm1 = recovery_bound_thm1(L, R, F, beta_hat, q1.beta, d1);

        const ShiftedLoss lbar = make_shifted(L, F.anchor, split.beta_star, out.gamma);
        const SolveResult q2 = solve_certificate_global(lbar, F, opts);
        const Vector d2 = measure_delta(lbar, F, q2.beta);
        const OracleBound ob =
            oracle_bound_thm2(L, lbar, R, F, split.beta_star, beta_hat, q2.beta, d2);
        out.oracle = ob.slack;
        out.gamma_ok = ob.gamma_condition_ok;
    } catch (const UnboundedError&) {
        out.status = "unbounded";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Phase transition
// ---------------------------------------------------------------------------

struct PhaseRow {
    int n = 0;
    double recovery_rate = 0.0;
    double cert_rate = 0.0;       // interior certificate passes
    double certified_rate = 0.0;  // pass with margin >= 0.1 AND recovery
    double gordon_success_lb = 0.0;
    double width_bound = 0.0;
};

struct PhaseResult {
    std::vector<PhaseRow> table;
    std::vector<TrialRecord> trials;
    double g = 0.0;              // sqrt of the width bound
    double delta = 0.0;          // Gordon slack at cfg.alpha
    int predicted_n = 0;         // sample_complexity(g, alpha)
    double crossing_recovery = 0.0;
    double crossing_certified = 0.0;
};

namespace detail {

// Linear interpolation of the n at which a monotone-ish rate curve crosses 1/2:
// last grid interval moving from below to >= 0.5.
inline double rate_crossing(const std::vector<PhaseRow>& table,
                            double PhaseRow::*field) {
    for (std::size_t i = 1; i < table.size(); ++i) {
        const double lo = table[i - 1].*field, hi = table[i].*field;
        if (lo < 0.5 && hi >= 0.5) {
            const double t = (0.5 - lo) / (hi - lo);
            return table[i - 1].n + t * (table[i].n - table[i - 1].n);
        }
    }
    if (!table.empty() && table.front().*field >= 0.5) return table.front().n;
    return 0.0;  // never crossed
}

}  // namespace detail

inline PhaseResult run_phase_transition(const ExperimentConfig& cfg) {
    validate(cfg);
    if (cfg.regularizer != "lasso" && cfg.regularizer != "group")
        throw ConfigError("phase: regularizer must be lasso or group");
    const bool group = cfg.regularizer == "group";
    if (group && (cfg.q < 1 || cfg.m < 1))
        throw ConfigError("phase: group mode needs positive q and m");
    const int p = group ? cfg.q * cfg.m : cfg.p;
    std::vector<int> grid = cfg.n_grid;
    if (grid.empty())
        for (int n = 40; n <= 160; n += 8) grid.push_back(n);

    PhaseResult res;
    res.g = group ? std::sqrt(width_bound_group(cfg.s, cfg.q, cfg.m, 1.0, 0.0))
                  : std::sqrt(width_bound_lasso(cfg.s, cfg.p, 1.0, 0.0));
    res.delta = std::sqrt(2.0 * std::log(1.0 / (2.0 * cfg.alpha)));
    res.predicted_n = sample_complexity(res.g, cfg.alpha);

    const long total = static_cast<long>(grid.size()) * cfg.trials;
    res.trials.assign(total, TrialRecord{});
    run_parallel(total, [&](long k) {
        const auto t0 = std::chrono::steady_clock::now();
        TrialRecord rec;
        rec.trial = k;
        rec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
        rec.n = grid[static_cast<std::size_t>(k / cfg.trials)];
        rec.p = p;
        Rng rng(rec.seed);
        const PlantedInstance inst =
            group ? make_group_instance(rec.n, cfg.q, cfg.m, cfg.s, cfg.sigma, 1.0, rng)
                  : make_lasso_instance(rec.n, cfg.p, cfg.s, cfg.sigma, 1.0, rng);
        const CertificateFrame F = certificate_frame(inst.reg, inst.beta_bar, 1.0);
        try {
            const CertificateReport cert = build_interior_noisefree(inst.X, F, F.tangent);
            rec.cert_pass = cert.pass;
            rec.cert_margin = cert.margin;
        } catch (const std::exception&) {
            rec.status = "cert_error";
            rec.cert_margin = -1.0;
        }
        try {
            Vector beta_hat;
            if (cfg.sigma == 0.0) {
                beta_hat = solve_basis_pursuit(inst.X, inst.y, inst.reg).beta;
            } else {
                const double lam =
                    cfg.c1 * cfg.sigma * std::sqrt(rec.n * std::log(static_cast<double>(p)));
                RegularizerSpec reg = inst.reg;
                if (auto* lr = std::get_if<LassoReg>(&reg)) lr->lambda = lam;
                if (auto* gr = std::get_if<GroupReg>(&reg)) gr->lambda = lam;
                const LossSpec L = QuadraticLoss{inst.X, inst.y};
                beta_hat = solve_regularized(L, reg).beta;
            }
            Vector diff(beta_hat.size());
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = beta_hat[i] - inst.beta_bar[i];
            rec.rel_err_l2 = norm2(diff) / std::max(norm2(inst.beta_bar), 1e-300);
            rec.b_norm_err = b_norm(F, diff);
        } catch (const std::exception&) {
            rec.status = rec.status == "ok" ? "solver_error" : rec.status;
            rec.rel_err_l2 = std::numeric_limits<double>::infinity();
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        res.trials[k] = std::move(rec);
    });

    const double wb = res.g * res.g;
    for (std::size_t ni = 0; ni < grid.size(); ++ni) {
        PhaseRow row;
        row.n = grid[ni];
        long rec_ct = 0, cert_ct = 0, both_ct = 0;
        for (long t = 0; t < cfg.trials; ++t) {
            const TrialRecord& r = res.trials[static_cast<long>(ni) * cfg.trials + t];
            const bool recovered = r.rel_err_l2 <= 1e-4;
            rec_ct += recovered;
            cert_ct += r.cert_pass;
            both_ct += (r.cert_pass && r.cert_margin >= 0.1 && recovered);
        }
        row.recovery_rate = static_cast<double>(rec_ct) / cfg.trials;
        row.cert_rate = static_cast<double>(cert_ct) / cfg.trials;
        row.certified_rate = static_cast<double>(both_ct) / cfg.trials;
        row.gordon_success_lb = 1.0 - gordon_tail(row.n, res.g, res.delta).probability;
        row.width_bound = wb;
        res.table.push_back(row);
    }
    res.crossing_recovery = detail::rate_crossing(res.table, &PhaseRow::recovery_rate);
    res.crossing_certified = detail::rate_crossing(res.table, &PhaseRow::certified_rate);
    return res;
}

inline std::string phase_summary_csv(const PhaseResult& res) {
    std::string out = "n,recovery_rate,cert_rate,certified_rate,gordon_success_lb,width_bound\n";
    for (const PhaseRow& r : res.table) {
        out += std::to_string(r.n);
        out += ',';
        out += detail::format_double(r.recovery_rate);
        out += ',';
        out += detail::format_double(r.cert_rate);
        out += ',';
        out += detail::format_double(r.certified_rate);
        out += ',';
        out += detail::format_double(r.gordon_success_lb);
        out += ',';
        out += detail::format_double(r.width_bound);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Oracle audit
// ---------------------------------------------------------------------------

struct OracleAuditResult {
    std::vector<TrialRecord> trials;
    double min_slack = std::numeric_limits<double>::infinity();
    long no_guarantee = 0;
    long failures = 0;  // solver/certificate errors
    std::vector<double> tangent_bounds;  // quadratic trials, per successful trial
    std::vector<double> global_bounds;
};

inline OracleAuditResult run_oracle_audit(const ExperimentConfig& cfg) {
    validate(cfg);
    if (cfg.loss != "quadratic" && cfg.loss != "logistic")
        throw ConfigError("oracle_audit: loss must be quadratic or logistic");
    const bool logistic = cfg.loss == "logistic";
    const int p = cfg.p;
    const int n = cfg.n > 0 ? cfg.n : 4 * p;

    OracleAuditResult res;
    res.trials.assign(cfg.trials, TrialRecord{});
    std::vector<double> tangent_b(cfg.trials, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> global_b(cfg.trials, std::numeric_limits<double>::quiet_NaN());

    run_parallel(cfg.trials, [&](long k) {
        const auto t0 = std::chrono::steady_clock::now();
        TrialRecord rec;
        rec.trial = k;
        rec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
        rec.n = n;
        rec.p = p;
        Rng rng(rec.seed);
        try {
            PlantedInstance inst;
            LossSpec L = QuadraticLoss{DenseMatrix(1, 1), Vector{0.0}};
            if (logistic) {
                inst = make_logistic_instance(n, p, cfg.s, 1.0, rng);
                L = GlmLoss{inst.X, GlmFamily::logistic, inst.y};
            } else {
                inst = make_lasso_instance(n, p, cfg.s, cfg.sigma, 1.0, rng);
                L = QuadraticLoss{inst.X, inst.y};
            }
            // lambda <= 0 requests per-trial calibration: pick lambda so the
            // measured eta_tilde lands at 0.8*eta (the split is lambda-free,
            // eta_tilde scales as 1/lambda).
            double lambda = cfg.lambda;
            const CertificateFrame f1 = certificate_frame(inst.reg, inst.beta_bar, cfg.eta);
            const TargetSplit split = target_projection(L, inst.beta_bar, f1);
            if (lambda <= 0.0) {
                const double eta1 = split.eta_tilde;  // at lambda = 1
                lambda = eta1 > 1e-12 ? eta1 / (0.8 * cfg.eta) : 1.0;
            }
            std::get<LassoReg>(inst.reg).lambda = lambda;
            // the Thm-1 slack floor is set by the estimator's stationarity, so
            // solve the fit tighter than the certificate problems
            SolveOptions fit_opts;
            fit_opts.kkt_tol = 1e-11;
            fit_opts.max_iterations = 100000;
            const SolveResult fit = solve_regularized(L, inst.reg, fit_opts);
            const CertificateFrame F = certificate_frame(inst.reg, inst.beta_bar, cfg.eta);
            TargetSplit scaled = split;
            scaled.eta_tilde = b_dual_norm(F, scaled.b_tilde);

            Vector diff(fit.beta.size());
            for (std::size_t i = 0; i < diff.size(); ++i)
                diff[i] = fit.beta[i] - inst.beta_bar[i];
            rec.rel_err_l2 = norm2(diff) / std::max(norm2(inst.beta_bar), 1e-300);
            rec.b_norm_err = b_norm(F, diff);

            const SlackEvaluation sl = evaluate_slacks(L, inst.reg, F, scaled, fit.beta);
            rec.status = sl.status;
            rec.slack_thm1 = sl.thm1;
            rec.slack_oracle = sl.oracle;
            rec.cert_pass = sl.status == "ok";
            rec.cert_margin = F.eta - scaled.eta_tilde;

            if (!logistic && sl.status == "ok") {
                const DenseMatrix h = gram(inst.X);
                tangent_b[k] =
                    oracle_bound_tangent_quadratic(F, F.tangent, scaled, h).bound;
                global_b[k] = recovery_bound_global(L, F, scaled, 1.0, PenaltyNorm::l2);
            }
        } catch (const SingularMatrixError&) {
            rec.status = "cert_error";
        } catch (const UnboundedError&) {
            rec.status = "unbounded";
        } catch (const NumericalError&) {
            rec.status = "numerical_error";
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        res.trials[k] = std::move(rec);
    });

    for (long k = 0; k < cfg.trials; ++k) {
        const TrialRecord& r = res.trials[k];
        if (r.status == "no_guarantee") ++res.no_guarantee;
        if (r.status != "ok" && r.status != "no_guarantee") ++res.failures;
        if (!std::isnan(r.slack_thm1)) res.min_slack = std::min(res.min_slack, r.slack_thm1);
        if (!std::isnan(r.slack_oracle)) res.min_slack = std::min(res.min_slack, r.slack_oracle);
        if (!std::isnan(tangent_b[k])) res.tangent_bounds.push_back(tangent_b[k]);
        if (!std::isnan(global_b[k])) res.global_bounds.push_back(global_b[k]);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Mixed-norm adaptivity demo
// ---------------------------------------------------------------------------

struct MixedDemoResult {
    std::vector<TrialRecord> trials;
    double mean_pred_lasso = 0.0;
    double mean_pred_group = 0.0;
    double mean_pred_mixed = 0.0;
    bool s_gamma_rule_ok = true;  // supp(beta'') in S_Gamma on every trial
};

inline MixedDemoResult run_mixed_demo(const ExperimentConfig& cfg) {
    validate(cfg);
    if (cfg.q < 2 || cfg.m < 1) throw ConfigError("mixed_demo: needs q >= 2 and m >= 1");
    if (!(cfg.sigma > 0.0))
        throw ConfigError("mixed_demo: sigma must be > 0 (penalty policy degenerates)");
    const int p = cfg.q * cfg.m;
    const int n = cfg.n > 0 ? cfg.n : 4 * p;
    const int full_groups = 2;
    if (cfg.s + full_groups * cfg.m > p)
        throw ConfigError("mixed_demo: support does not fit the dimension");

    const double lam1 = cfg.c1 * cfg.sigma * std::sqrt(n * std::log(static_cast<double>(p)));
    const double lam_g =
        cfg.c2 * cfg.sigma * std::sqrt(n * (cfg.m + std::log(static_cast<double>(cfg.q))));

    MixedDemoResult res;
    res.trials.assign(cfg.trials, TrialRecord{});
    std::vector<double> pl(cfg.trials, 0.0), pg(cfg.trials, 0.0), pm(cfg.trials, 0.0);
    std::vector<char> rule_ok(cfg.trials, 1);

    run_parallel(cfg.trials, [&](long k) {
        const auto t0 = std::chrono::steady_clock::now();
        TrialRecord rec;
        rec.trial = k;
        rec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
        rec.n = n;
        rec.p = p;
        Rng rng(rec.seed);

        // planted signal: two full groups plus scattered singletons elsewhere
        const DenseMatrix X = rng.normal_matrix(n, p);
        Vector beta(p, 0.0);
        const std::vector<int> gsel = rng.sample_without_replacement(cfg.q, full_groups);
        for (int g : gsel)
            for (int i = 0; i < cfg.m; ++i) beta[g * cfg.m + i] = rng.sign();
        std::vector<int> free_coords;
        for (int i = 0; i < p; ++i) {
            const int g = i / cfg.m;
            if (g != gsel[0] && g != gsel[1]) free_coords.push_back(i);
        }
        const std::vector<int> pick =
            rng.sample_without_replacement(static_cast<int>(free_coords.size()), cfg.s);
        for (int i : pick) beta[free_coords[i]] = rng.sign();
        Vector y = X.apply(beta);
        for (double& v : y) v += cfg.sigma * rng.normal();
        const LossSpec L = QuadraticLoss{X, y};

        const GroupStructure gamma = GroupStructure::contiguous(p, cfg.m);
        const RegularizerSpec mixed = MixedReg{lam1, lam_g, gamma};
        try {
            const Vector bl = solve_regularized(L, RegularizerSpec{LassoReg{lam1}}).beta;
            const Vector bg = solve_regularized(L, RegularizerSpec{GroupReg{lam_g, gamma}}).beta;
            const Vector bm = solve_regularized(L, mixed).beta;
            auto pred = [&](const Vector& b) {
                Vector d(b.size());
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = b[i] - beta[i];
                return norm2_sq(X.apply(d)) / n;
            };
            pl[k] = pred(bl);
            pg[k] = pred(bg);
            pm[k] = pred(bm);

            const CertificateFrame F = certificate_frame(mixed, beta, cfg.eta);
            const MixedDecomposition dec =
                mixed_decompose(std::get<MixedReg>(mixed), beta);
            bool ok = true;
            for (int g = 0; g < cfg.q; ++g) {
                bool active2 = false;
                for (int i = 0; i < cfg.m; ++i)
                    if (std::abs(dec.beta2[g * cfg.m + i]) > kSupportTolerance) active2 = true;
                if (active2 &&
                    !std::binary_search(F.s_gamma.begin(), F.s_gamma.end(), g))
                    ok = false;
            }
            rule_ok[k] = ok;
            rec.cert_pass = ok;
            // rule separation: distance of every group to the S_Gamma threshold
            double margin = std::numeric_limits<double>::infinity();
            for (int g = 0; g < cfg.q; ++g) {
                double nnz = 0.0;
                for (int i = 0; i < cfg.m; ++i)
                    if (std::abs(beta[g * cfg.m + i]) > kSupportTolerance) nnz += 1.0;
                const double lhs = 2.0 * lam1 * std::sqrt(nnz);
                const bool in_sg = std::binary_search(F.s_gamma.begin(), F.s_gamma.end(), g);
                margin = std::min(margin, in_sg ? lhs - lam_g : lam_g - lhs);
            }
            rec.cert_margin = margin / lam_g;

            Vector diff(bm.size());
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = bm[i] - beta[i];
            rec.rel_err_l2 = norm2(diff) / std::max(norm2(beta), 1e-300);
            rec.b_norm_err = b_norm(F, diff);
        } catch (const std::exception&) {
            rec.status = "solver_error";
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        res.trials[k] = std::move(rec);
    });

    for (long k = 0; k < cfg.trials; ++k) {
        res.mean_pred_lasso += pl[k] / cfg.trials;
        res.mean_pred_group += pg[k] / cfg.trials;
        res.mean_pred_mixed += pm[k] / cfg.trials;
        if (!rule_ok[k]) res.s_gamma_rule_ok = false;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Matrix-completion demo
// ---------------------------------------------------------------------------

struct MatcompDemoResult {
    std::vector<TrialRecord> trials;
    long recovered = 0;      // noise-free trials within 1e-4 relative Frobenius
    long cert_passes = 0;
    double min_slack = std::numeric_limits<double>::infinity();
};

inline MatcompDemoResult run_matcomp_demo(const ExperimentConfig& cfg) {
    validate(cfg);
    const int rows = cfg.p, cols = cfg.q > 0 ? cfg.q : cfg.p;
    if (rows > 30 || cols > 30) throw ConfigError("matcomp_demo: p, q must be <= 30");
    if (cfg.rank < 1 || cfg.rank > 3) throw ConfigError("matcomp_demo: rank must be in 1..3");
    if (cfg.obs_fraction < 0.5) throw ConfigError("matcomp_demo: obs_fraction must be >= 0.5");

    MatcompDemoResult res;
    res.trials.assign(cfg.trials, TrialRecord{});
    std::vector<char> rec_flag(cfg.trials, 0), pass_flag(cfg.trials, 0);
    std::vector<double> min_slack(cfg.trials, std::numeric_limits<double>::infinity());

    run_parallel(cfg.trials, [&](long k) {
        const auto t0 = std::chrono::steady_clock::now();
        TrialRecord rec;
        rec.trial = k;
        rec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
        rec.p = rows * cols;
        Rng rng(rec.seed);
        const bool noisefree = cfg.sigma == 0.0;
        const PlantedInstance inst = make_matcomp_instance(
            rows, cols, cfg.rank, cfg.obs_fraction, cfg.sigma, noisefree ? 1.0 : cfg.lambda, rng);
        rec.n = inst.X.rows();
        const LossSpec L = QuadraticLoss{inst.X, inst.y};
        const double eta = noisefree ? 1.0 : cfg.eta;
        const CertificateFrame F = certificate_frame(inst.reg, inst.beta_bar, eta);
        try {
            const TargetSplit split = target_projection(L, inst.beta_bar, F);
            CertificateReport cert;
            if (noisefree)
                cert = build_interior_noisefree(inst.X, F, F.tangent);
            else
                cert = check_irrepresentable(L, F, F.tangent, split);
            rec.cert_pass = cert.pass;
            rec.cert_margin = cert.margin;
            pass_flag[k] = cert.pass;

            Vector beta_hat;
            if (noisefree)
                beta_hat = solve_basis_pursuit(inst.X, inst.y, inst.reg).beta;
            else
                beta_hat = solve_regularized(L, inst.reg).beta;
            Vector diff(beta_hat.size());
            for (std::size_t i = 0; i < diff.size(); ++i)
                diff[i] = beta_hat[i] - inst.beta_bar[i];
            rec.rel_err_l2 = norm2(diff) / std::max(norm2(inst.beta_bar), 1e-300);
            rec.b_norm_err = b_norm(F, diff);
            rec_flag[k] = rec.rel_err_l2 <= 1e-4;

            if (!noisefree) {
                // section-6.2 oracle display: D_L(bhat,b*) + (1-eta) lambda
                // ||P_Tperp bhat||_*  <=  D_L(bbar,b*) + delta, with delta the
                // measured certificate slack D_{Lbar}(bbar,Q) - <dvec, bhat-bbar>.
                const ShiftedLoss lbar = make_shifted(L, inst.beta_bar, split.beta_star, 1.0);
                const SolveResult q = solve_certificate_global(lbar, F);
                const Vector dvec = measure_delta(lbar, F, q.beta);
                const double lhs = bregman(L, beta_hat, split.beta_star).d_ab +
                                   (1.0 - eta) * b_norm(F, beta_hat);
                const double rhs = bregman(L, inst.beta_bar, split.beta_star).d_ab +
                                   bregman(lbar, inst.beta_bar, q.beta).d_ab - dot(dvec, diff);
                rec.slack_oracle = rhs - lhs;

                const SolveResult q1 = solve_certificate_global(L, F);
                const Vector d1 = measure_delta(L, F, q1.beta);
                rec.slack_thm1 =
                    recovery_bound_thm1(L, inst.reg, F, beta_hat, q1.beta, d1);
                min_slack[k] = std::min(rec.slack_oracle, rec.slack_thm1);
            }
        } catch (const SingularMatrixError&) {
            rec.status = "cert_error";
        } catch (const UnboundedError&) {
            rec.status = "unbounded";
        } catch (const NumericalError&) {
            rec.status = "numerical_error";
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        res.trials[k] = std::move(rec);
    });

    for (long k = 0; k < cfg.trials; ++k) {
        res.recovered += rec_flag[k];
        res.cert_passes += pass_flag[k];
        res.min_slack = std::min(res.min_slack, min_slack[k]);
    }
    return res;
}

}  // namespace certlab
