#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ntbea/search_space.hpp"
#include "ntbea/text.hpp"

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "ntbea-cli-XXXXXX").string();
        path = mkdtemp(tmpl.data());
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name, const std::string& content) const {
        std::string p = (path / name).string();
        std::ofstream(p) << content;
        return p;
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

struct CliResult {
    int status = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static TempDir io;
    std::string out_path = (io.path / "out.txt").string();
    std::string err_path = (io.path / "err.txt").string();
    std::string cmd = env_prefix + (env_prefix.empty() ? "" : " ") + NTBEA_CLI_PATH + " " +
                      args + " >" + out_path + " 2>" + err_path;
    int rc = std::system(cmd.c_str());
    CliResult res;
    res.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    res.out = slurp(out_path);
    res.err = slurp(err_path);
    return res;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

const std::string kSpaceDoc =
    R"({"dimensions": [{"name": "a", "values": [0, 1]},
                       {"name": "b", "values": ["x", "y", "z"]}]})";

}  // namespace

TEST_CASE("a subcommand is required and --help works") {
    CHECK(run_cli("").status != 0);
    CHECK(run_cli("--help").status == 0);
    CHECK(run_cli("frobnicate").status != 0);
}

TEST_CASE("optimize runs a benchmark and writes a one-row csv") {
    TempDir tmp;
    std::string out = (tmp.path / "row.csv").string();
    CliResult res = run_cli("optimize --benchmark hartmann3 --iterations 50 --seed 1 --out " + out);
    REQUIRE(res.status == 0);
    CHECK(res.out.find("recommended: ") != std::string::npos);
    CHECK(res.out.find("model_estimate: ") != std::string::npos);
    CHECK(res.out.find("true_value: ") != std::string::npos);
    CHECK(res.out.find("delta: ") != std::string::npos);

    std::string csv = slurp(out);
    REQUIRE(count_lines(csv) == 2);
    CHECK(csv.rfind("benchmark,scheme,T,iterations,k,run_id,seed,", 0) == 0);
    CHECK(csv.find("\nhartmann3,std,15,50,1,0,1,") != std::string::npos);

    // true_value must be a probability below the benchmark's known optimum.
    auto pos = res.out.find("true_value: ");
    double tv = std::stod(res.out.substr(pos + 12));
    CHECK(tv >= 0.0);
    CHECK(tv <= 0.8967301537447203);
}

TEST_CASE("optimize accepts every scheme name") {
    for (const char* scheme : {"std", "lin", "sqrt", "inv", "exp"}) {
        CliResult res = run_cli(std::string("optimize --benchmark branin --iterations 20 ") +
                                "--scheme " + scheme + " --seed 2");
        CHECK(res.status == 0);
    }
    CliResult bad = run_cli("optimize --benchmark branin --iterations 20 --scheme bogus");
    CHECK(bad.status == 1);
    CHECK(bad.err.find("error:") != std::string::npos);
}

TEST_CASE("optimize argument validation") {
    CHECK(run_cli("optimize --benchmark hartmann3").status != 0);  // no budget
    CHECK(run_cli("optimize --iterations 10").status == 1);        // no target
    CHECK(run_cli("optimize --benchmark nope --iterations 10").status == 1);
    TempDir tmp;
    std::string space = tmp.file("space.json", kSpaceDoc);
    // --space and --benchmark are mutually exclusive (CLI-level).
    CHECK(run_cli("optimize --space " + space +
                  " --benchmark hartmann3 --iterations 10").status != 0);
    // --space without --evaluator-cmd is rejected.
    CliResult res = run_cli("optimize --space " + space + " --iterations 10");
    CHECK(res.status == 1);
    CHECK(res.err.find("--evaluator-cmd") != std::string::npos);
}

TEST_CASE("optimize drives an external evaluator") {
    TempDir tmp;
    std::string space = tmp.file("space.json", kSpaceDoc);
    CliResult res = run_cli("optimize --space " + space + " --evaluator-cmd '" +
                            REFERENCE_EVALUATOR_PATH + " --mode sum' --iterations 40 --seed 3");
    REQUIRE(res.status == 0);
    CHECK(res.out.find("recommended: 1 z") != std::string::npos);
    CHECK(res.out.find("true_value:") == std::string::npos);  // no oracle outside benchmarks
}

TEST_CASE("seeding is reproducible and falls back to NTBEA_SEED") {
    const std::string args = "optimize --benchmark goldsteinprice --iterations 60";
    CliResult a = run_cli(args + " --seed 9");
    CliResult b = run_cli(args + " --seed 9");
    CHECK(a.status == 0);
    CHECK(a.out == b.out);

    CliResult c = run_cli(args, "NTBEA_SEED=7");
    CliResult d = run_cli(args, "NTBEA_SEED=7");
    CHECK(c.status == 0);
    CHECK(c.out == d.out);

    // An explicit --seed beats the environment.
    CliResult e = run_cli(args + " --seed 9", "NTBEA_SEED=7");
    CHECK(e.out == a.out);

    CliResult bad = run_cli(args, "NTBEA_SEED=abc");
    CHECK(bad.status == 1);
    CHECK(bad.err.find("NTBEA_SEED") != std::string::npos);
}

TEST_CASE("oracle prints the frozen ground truth") {
    CliResult gp = run_cli("oracle --benchmark goldsteinprice --top 2");
    REQUIRE(gp.status == 0);
    CHECK(gp.out.rfind("maxP: 0.794\nnonzeroFraction: 0.1325\ntop 2:\n  0 -1  0.794\n", 0) == 0);
    CHECK(count_lines(gp.out) == 5);

    CliResult h6 = run_cli("oracle --benchmark hartmann6 --top 1");
    REQUIRE(h6.status == 0);
    CHECK(h6.out.find("maxP: 0.73723") != std::string::npos);
    CHECK(h6.out.find("0.4 0.8 0.8 0.6 0.2 0") != std::string::npos);

    CHECK(run_cli("oracle --benchmark nope").status == 1);
    CHECK(run_cli("oracle").status != 0);
}

TEST_CASE("oracle --out dumps the whole sorted grid") {
    TempDir tmp;
    std::string out = (tmp.path / "oracle.csv").string();
    CliResult res = run_cli("oracle --benchmark branin --top 1 --out " + out);
    REQUIRE(res.status == 0);
    std::string csv = slurp(out);
    CHECK(count_lines(csv) == 401);
    CHECK(csv.rfind("point_labels,true_p\n\"3.25;2.25\",0.7951981928776758\n", 0) == 0);
}

TEST_CASE("experiment writes results and summary and is deterministic") {
    TempDir tmp;
    std::string cfg = tmp.file("exp.json", R"({
        "benchmark": "hartmann3",
        "schemes": ["std", "lin"],
        "iterations": [20],
        "runs_per_cell": 2,
        "master_seed": 5,
        "bootstrap_resamples": 1000
    })");
    std::string out_a = (tmp.path / "a").string();
    std::string out_b = (tmp.path / "b").string();
    CliResult a = run_cli("experiment --config " + cfg + " --out " + out_a);
    REQUIRE(a.status == 0);
    CHECK(a.out.find("benchmark") != std::string::npos);  // table header
    CHECK(a.out.find("hartmann3") != std::string::npos);

    std::string results = slurp(out_a + "/results.csv");
    std::string summary = slurp(out_a + "/summary.csv");
    CHECK(count_lines(results) == 5);  // header + 2 schemes x 2 runs
    CHECK(count_lines(summary) == 3);  // header + 2 cells

    CliResult b = run_cli("experiment --config " + cfg + " --out " + out_b +
                          " --parallel 2");
    REQUIRE(b.status == 0);
    CHECK(slurp(out_b + "/results.csv") == results);
    CHECK(slurp(out_b + "/summary.csv") == summary);
}

TEST_CASE("experiment rejects an empty scheme list") {
    TempDir tmp;
    std::string cfg = tmp.file("bad.json", R"({
        "benchmark": "hartmann3", "schemes": [], "iterations": [10]
    })");
    CliResult res = run_cli("experiment --config " + cfg);
    CHECK(res.status == 1);
    CHECK(res.err.find("scheme list") != std::string::npos);
}

TEST_CASE("experiment reports failed runs and exits nonzero") {
    TempDir tmp;
    std::string space = tmp.file("space.json", kSpaceDoc);
    std::string cfg = tmp.file("exp.json", std::string(R"({
        "space": "space.json",
        "evaluator_cmd": ")") + MISBEHAVING_EVALUATOR_PATH + R"( garbage",
        "schemes": ["std"], "iterations": [5], "runs_per_cell": 1,
        "master_seed": 1, "bootstrap_resamples": 1000
    })");
    CliResult res = run_cli("experiment --config " + cfg + " --out " +
                            (tmp.path / "out").string());
    CHECK(res.status == 1);
    CHECK(res.err.find("run(s) failed") != std::string::npos);
    CHECK(res.err.find("non-numeric") != std::string::npos);
}

TEST_CASE("budget-split reports the chosen candidate and its audit trail") {
    TempDir tmp;
    std::string cfg = tmp.file("split.json", R"({
        "benchmark": "branin",
        "total_budget": 100,
        "runs": 2,
        "iterations_per_run": 30,
        "verification": 10,
        "master_seed": 4
    })");
    CliResult res = run_cli("budget-split --config " + cfg + " --out " + tmp.path.string());
    REQUIRE(res.status == 0);
    CHECK(res.out.find("chosen: ") != std::string::npos);
    CHECK(res.out.find("evaluations_used: 70") != std::string::npos);

    std::string csv = slurp((tmp.path / "candidates.csv").string());
    CHECK(csv.rfind("candidate_labels,recommending_runs,provisional_estimate,"
                    "verification_count,verification_mean,chosen\n", 0) == 0);
    int chosen_rows = 0;
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line))
        if (line.size() >= 2 && line.compare(line.size() - 2, 2, ",1") == 0) ++chosen_rows;
    CHECK(chosen_rows == 1);
}

TEST_CASE("protocol-check prints OK or the violation list") {
    TempDir tmp;
    std::string space = tmp.file("space.json", kSpaceDoc);
    CliResult ok = run_cli("protocol-check --evaluator-cmd '" +
                           std::string(REFERENCE_EVALUATOR_PATH) + "' --space " + space);
    CHECK(ok.status == 0);
    CHECK(ok.out == "OK\n");

    CliResult bad = run_cli("protocol-check --evaluator-cmd '" +
                            std::string(MISBEHAVING_EVALUATOR_PATH) + " garbage' --space " +
                            space);
    CHECK(bad.status == 1);
    CHECK(bad.out.find("protocol violations:") != std::string::npos);
    CHECK(bad.out.find("non-numeric") != std::string::npos);
}

TEST_CASE("shipped space configs enumerate the documented design spaces") {
    using ntbea::SearchSpace;
    auto load = [](const char* name) {
        return SearchSpace::from_config_file(std::string(CONFIG_DIR) + "/" + name);
    };
    SearchSpace pw1 = load("planet_wars_i.json");
    CHECK(pw1.num_dims() == 5);
    CHECK(pw1.point_count() == 288);
    SearchSpace ast1 = load("asteroids_i.json");
    CHECK(ast1.num_dims() == 5);
    CHECK(ast1.point_count() == 336);
    SearchSpace pw2 = load("planet_wars_ii.json");
    CHECK(pw2.num_dims() == 8);
    CHECK(pw2.point_count() == 23520);
    SearchSpace ast2 = load("asteroids_ii.json");
    CHECK(ast2.num_dims() == 8);
    CHECK(ast2.point_count() == 23040);
}
