// End-to-end tests for the certlab command-line tool.  Invoked by ctest as
//   test_cli <path-to-certlab-binary>
// and exercises the documented contract: artifact names, CSV schemas,
// byte-identical replay, and the 0/2/3 exit-code mapping.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (!ok) {
        ++failures;
        std::cerr << "FAIL: " << what << "\n";
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string first_line(const std::string& text) {
    return text.substr(0, text.find('\n'));
}

struct RunResult {
    int code = -1;
    std::string err;
};

// Runs `env_prefix binary args` under the shell, capturing stderr.
RunResult run(const std::string& binary, const std::string& args, const fs::path& scratch,
              const std::string& env_prefix = "") {
    const fs::path err_path = scratch / "stderr.txt";
    std::string cmd;
    if (!env_prefix.empty()) cmd += env_prefix + " ";
    cmd += "\"" + binary + "\" " + args + " 2> \"" + err_path.string() + "\"";
    const int rc = std::system(cmd.c_str());
    RunResult res;
    if (rc != -1 && WIFEXITED(rc)) res.code = WEXITSTATUS(rc);
    res.err = read_file(err_path);
    return res;
}

constexpr const char* kTrialHeader =
    "trial,seed,n,p,status,rel_err_l2,b_norm_err,cert_pass,cert_margin,slack_thm1,"
    "slack_oracle,wall_ms";

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: test_cli <certlab-binary>\n";
        return 2;
    }
    const std::string bin = argv[1];
    const fs::path scratch =
        fs::temp_directory_path() / ("certlab_cli_" + std::to_string(::getpid()));
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    // --- help and argument errors -----------------------------------------
    check(run(bin, "--help", scratch).code == 0, "--help exits 0");
    check(run(bin, "", scratch).code == 2, "missing subcommand exits 2");
    check(run(bin, "frobnicate", scratch).code == 2, "unknown subcommand exits 2");
    check(run(bin, "phase --format xml", scratch).code == 2, "bad --format exits 2");

    // --- config file errors ------------------------------------------------
    const fs::path no_version = scratch / "no_version.json";
    write_file(no_version, "{\"p\": 16}\n");
    {
        const RunResult r = run(bin, "phase --config \"" + no_version.string() + "\"", scratch);
        check(r.code == 2, "config without schema_version exits 2");
        check(r.err.find("missing field: schema_version") != std::string::npos,
              "missing-field message names the field (got: " + r.err + ")");
    }
    const fs::path malformed = scratch / "malformed.json";
    write_file(malformed, "{ this is not json\n");
    {
        const RunResult r = run(bin, "phase --config \"" + malformed.string() + "\"", scratch);
        check(r.code == 2, "malformed config exits 2");
        check(r.err.find("malformed config JSON") != std::string::npos,
              "malformed-config message (got: " + r.err + ")");
    }
    const fs::path big_matcomp = scratch / "big_matcomp.json";
    write_file(big_matcomp, "{\"schema_version\": 1, \"p\": 40}\n");
    check(run(bin, "matcomp-demo --config \"" + big_matcomp.string() + "\"", scratch).code == 2,
          "matcomp-demo with p=40 exits 2");

    // --- deterministic numerical failure: |S| > n --------------------------
    const fs::path singular = scratch / "singular.json";
    write_file(singular, "{\"schema_version\": 1, \"p\": 8, \"s\": 6, \"n\": 4, \"trials\": 1}\n");
    {
        const RunResult r = run(bin, "certify --config \"" + singular.string() + "\"", scratch);
        check(r.code == 3, "certify with |S| > n exits 3 (got " + std::to_string(r.code) + ")");
        check(r.err.find("numerical failure") != std::string::npos,
              "numerical-failure message on stderr (got: " + r.err + ")");
    }

    // --- phase artifacts and replay ----------------------------------------
    const fs::path phase_cfg = scratch / "phase.json";
    write_file(phase_cfg,
               "{\"schema_version\": 1, \"p\": 48, \"s\": 2, \"trials\": 5,"
               " \"n_grid\": [12, 40]}\n");
    const fs::path out_a = scratch / "out_a";
    const fs::path out_b = scratch / "out_b";
    const fs::path out_c = scratch / "out_c";
    const std::string phase_args = "phase --config \"" + phase_cfg.string() + "\" --seed 7 ";
    check(run(bin, phase_args + "--out \"" + out_a.string() + "\"", scratch).code == 0,
          "phase run exits 0");
    check(fs::exists(out_a / "phase.csv"), "phase.csv written");
    check(fs::exists(out_a / "phase.meta.json"), "phase.meta.json written");
    check(fs::exists(out_a / "phase_summary.csv"), "phase_summary.csv written");

    const std::string csv_a = read_file(out_a / "phase.csv");
    check(first_line(csv_a) == kTrialHeader, "phase.csv trial header");
    check(first_line(read_file(out_a / "phase_summary.csv")) ==
              "n,recovery_rate,cert_rate,certified_rate,gordon_success_lb,width_bound",
          "phase_summary.csv header");
    {
        nlohmann::json meta = nlohmann::json::parse(read_file(out_a / "phase.meta.json"));
        check(meta.at("schema_version") == 1, "meta schema_version");
        check(meta.at("kind") == "phase", "meta kind");
        check(meta.at("config").at("seed") == 7, "meta echoes the resolved seed");
        check(meta.at("summary").at("predicted_n").get<int>() > 0, "meta summary predicted_n");
    }

    // same seed, fresh directory: the trial CSV replays byte-identically
    check(run(bin, phase_args + "--out \"" + out_b.string() + "\"", scratch).code == 0,
          "phase replay exits 0");
    check(read_file(out_b / "phase.csv") == csv_a, "phase.csv byte-identical on replay");
    check(read_file(out_b / "phase_summary.csv") == read_file(out_a / "phase_summary.csv"),
          "phase_summary.csv byte-identical on replay");

    // and independent of the worker count
    check(run(bin, phase_args + "--out \"" + out_c.string() + "\"", scratch,
              "CERTLAB_THREADS=4")
                  .code == 0,
          "phase with CERTLAB_THREADS=4 exits 0");
    check(read_file(out_c / "phase.csv") == csv_a, "phase.csv identical at 4 threads");
    check(run(bin, "phase --config \"" + phase_cfg.string() + "\"", scratch,
              "CERTLAB_THREADS=banana")
                  .code == 2,
          "invalid CERTLAB_THREADS exits 2");

    // --- solve (basis-pursuit path) ----------------------------------------
    const fs::path solve_cfg = scratch / "solve.json";
    write_file(solve_cfg,
               "{\"schema_version\": 1, \"p\": 16, \"s\": 2, \"n\": 20, \"trials\": 2,"
               " \"lambda\": 0}\n");
    const fs::path out_solve = scratch / "out_solve";
    check(run(bin,
              "solve --config \"" + solve_cfg.string() + "\" --seed 5 --out \"" +
                  out_solve.string() + "\"",
              scratch)
                  .code == 0,
          "solve run exits 0");
    {
        const std::string csv = read_file(out_solve / "solve.csv");
        check(first_line(csv) == kTrialHeader, "solve.csv trial header");
        check(csv.find(",ok,") != std::string::npos, "solve.csv has ok rows");
    }

    // --- width with --format json ------------------------------------------
    const fs::path width_cfg = scratch / "width.json";
    write_file(width_cfg, "{\"schema_version\": 1, \"p\": 16, \"s\": 2}\n");
    const fs::path out_width = scratch / "out_width";
    check(run(bin,
              "width --config \"" + width_cfg.string() +
                  "\" --trials 50 --seed 3 --format json --out \"" + out_width.string() + "\"",
              scratch)
                  .code == 0,
          "width json run exits 0");
    check(fs::exists(out_width / "width.json"), "width.json written");
    check(!fs::exists(out_width / "width.csv"), "no width.csv in json mode");
    {
        nlohmann::json doc = nlohmann::json::parse(read_file(out_width / "width.json"));
        check(doc.at("schema_version") == 1, "width.json schema_version");
        check(doc.at("records").size() == 1, "width.json single record");
        check(doc.at("records")[0].at("mean").get<double>() > 0.0, "width mean positive");
        check(doc.at("records")[0].at("width_bound").get<double>() > 0.0,
              "width bound positive");
    }

    // --- glm-bound ----------------------------------------------------------
    const fs::path glm_cfg = scratch / "glm.json";
    write_file(glm_cfg,
               "{\"schema_version\": 1, \"p\": 3, \"s\": 1, \"n\": 40, \"trials\": 2,"
               " \"loss\": \"logistic\", \"lambda\": 0}\n");
    const fs::path out_glm = scratch / "out_glm";
    check(run(bin,
              "glm-bound --config \"" + glm_cfg.string() + "\" --seed 11 --out \"" +
                  out_glm.string() + "\"",
              scratch)
                  .code == 0,
          "glm-bound run exits 0");
    {
        const std::string csv = read_file(out_glm / "glm_bound.csv");
        check(first_line(csv) == "trial,seed,bound,lambda,gamma2,eta_star,radius_ok",
              "glm_bound.csv header");
    }

    fs::remove_all(scratch);
    if (failures == 0) {
        std::cout << "test_cli: all checks passed\n";
        return 0;
    }
    std::cerr << "test_cli: " << failures << " check(s) failed\n";
    return 1;
}
