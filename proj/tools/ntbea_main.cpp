#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ntbea/benchmarks.hpp"
#include "ntbea/errors.hpp"
#include "ntbea/experiments.hpp"
#include "ntbea/external_eval.hpp"
#include "ntbea/optimizer.hpp"
#include "ntbea/text.hpp"

namespace {

using namespace ntbea;

std::uint64_t env_seed_or(std::uint64_t fallback) {
    const char* env = std::getenv("NTBEA_SEED");
    if (!env || !*env) return fallback;
    char* end = nullptr;
    std::uint64_t v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
        throw ConfigError(std::string("NTBEA_SEED is not an integer: ") + env);
    return v;
}

struct OptimizeArgs {
    std::string space_path;
    std::string benchmark;
    std::uint64_t iterations = 0;
    std::string scheme = "std";
    double k = 1.0;
    double T = 15.0;
    double eps = 0.5;
    int neighbourhood = 50;
    std::optional<std::uint64_t> seed;
    std::string evaluator_cmd;
    std::string out_path;
};

int run_optimize(const OptimizeArgs& args) {
    WeightingScheme scheme = WeightingScheme::parse(args.scheme, args.T);

    std::optional<BenchmarkInstance> inst;
    std::optional<SearchSpace> ext_space;
    std::string bench_name;
    if (!args.benchmark.empty()) {
        auto id = parse_benchmark_id(args.benchmark);
        if (!id) throw ConfigError("unknown benchmark '" + args.benchmark + "'");
        inst = BenchmarkInstance::build(*id);
        bench_name = benchmark_name(*id);
    } else {
        ext_space = SearchSpace::from_config_file(args.space_path);
        bench_name = "external";
        if (args.evaluator_cmd.empty())
            throw ConfigError("--evaluator-cmd is required with --space");
    }
    const SearchSpace& space = inst ? inst->space() : *ext_space;

    NtbeaSettings settings;
    settings.iterations = args.iterations;
    settings.k = args.k;
    settings.eps = args.eps;
    settings.neighbourhood_size = args.neighbourhood;
    settings.scheme = scheme;
    settings.seed = args.seed ? *args.seed : env_seed_or(0);

    std::optional<ExternalEvaluator> external;
    Evaluator evaluator;
    if (inst) {
        evaluator = inst->evaluator();
    } else {
        ExternalEvaluatorConfig ecfg;
        ecfg.command = args.evaluator_cmd;
        external.emplace(std::move(ecfg), space);
        evaluator = external->as_evaluator();
    }

    RunResult result = run(space, evaluator, settings);
    if (external) external->shutdown();

    RunRow row;
    row.benchmark = bench_name;
    row.scheme = scheme;
    row.iterations = args.iterations;
    row.k = args.k;
    row.run_id = 0;
    row.seed = settings.seed;
    row.ok = true;
    row.recommended = result.record.recommended;
    row.recommended_labels = space.labels(row.recommended);
    if (inst) {
        row.model_estimate = (result.record.model_estimate + 1.0) / 2.0;
        row.true_value = inst->true_p(row.recommended);
        row.delta = row.model_estimate - *row.true_value;
    } else {
        row.model_estimate = result.record.model_estimate;
    }

    std::cout << "recommended: " << join(row.recommended_labels, ' ') << "\n";
    std::cout << "model_estimate: " << format_double(row.model_estimate) << "\n";
    if (row.true_value) {
        std::cout << "true_value: " << format_double(*row.true_value) << "\n";
        std::cout << "delta: " << format_double(*row.delta) << "\n";
    }
    if (!args.out_path.empty())
        write_text_file(args.out_path, results_csv_text({&row, 1}));
    return 0;
}

struct OracleArgs {
    std::string benchmark;
    int top = 6;
    std::string out_path;
};

int run_oracle(const OracleArgs& args) {
    auto id = parse_benchmark_id(args.benchmark);
    if (!id) throw ConfigError("unknown benchmark '" + args.benchmark + "'");
    BenchmarkInstance inst = BenchmarkInstance::build(*id);
    OracleReport report = grid_oracle(inst, args.top);
    std::cout << "maxP: " << format_double(report.max_p) << "\n";
    std::cout << "nonzeroFraction: " << format_double(report.nonzero_fraction) << "\n";
    std::cout << "top " << args.top << ":\n";
    for (const auto& entry : report.top_k)
        std::cout << "  " << join(inst.space().labels(entry.point), ' ') << "  "
                  << format_double(entry.p) << "\n";
    if (!args.out_path.empty()) write_text_file(args.out_path, oracle_csv_text(inst));
    return 0;
}

struct BatchArgs {
    std::string config_path;
    int parallel = 0;  // 0: take the config's value
    std::string out_dir = ".";
};

int run_experiment(const BatchArgs& args) {
    ExperimentConfig cfg = ExperimentConfig::from_json_file(args.config_path);
    if (!cfg.master_seed) cfg.master_seed = env_seed_or(0);
    if (args.parallel > 0) cfg.parallelism = args.parallel;

    BatchResult batch = repeated_runs(cfg);
    write_text_file(args.out_dir + "/results.csv", results_csv_text(batch.rows));
    write_text_file(args.out_dir + "/summary.csv", summary_csv_text(batch.summaries));
    std::cout << summary_table_text(batch.summaries);
    if (batch.failures > 0) {
        std::cerr << batch.failures << " run(s) failed:\n";
        for (const auto& row : batch.rows)
            if (!row.ok)
                std::cerr << "  " << row.scheme.name() << "/" << row.iterations
                          << " run " << row.run_id << ": " << row.error << "\n";
        return 1;
    }
    return 0;
}

int run_budget_split(const BatchArgs& args) {
    BudgetSplitFileConfig cfg = BudgetSplitFileConfig::from_json_file(args.config_path);
    std::uint64_t master_seed = cfg.master_seed ? *cfg.master_seed : env_seed_or(0);

    std::optional<BenchmarkInstance> inst;
    std::optional<SearchSpace> ext_space;
    if (cfg.benchmark) {
        inst = BenchmarkInstance::build(*cfg.benchmark);
    } else {
        ext_space = SearchSpace::from_config_file(*cfg.space_path);
    }
    const SearchSpace& space = inst ? inst->space() : *ext_space;

    std::optional<ExternalEvaluator> external;
    Evaluator evaluator;
    if (inst) {
        evaluator = inst->evaluator();
    } else {
        ExternalEvaluatorConfig ecfg;
        ecfg.command = *cfg.evaluator_cmd;
        ecfg.per_eval_timeout = cfg.per_eval_timeout;
        ecfg.restart_on_crash = cfg.restart_on_crash;
        ecfg.max_restarts = cfg.max_restarts;
        external.emplace(std::move(ecfg), space);
        evaluator = external->as_evaluator();
    }

    NtbeaSettings base;
    base.k = cfg.k;
    base.eps = cfg.eps;
    base.neighbourhood_size = cfg.neighbourhood;
    base.scheme = cfg.scheme;
    base.iterations = cfg.split.iterations_per_run;  // validated below anyway

    BudgetSplitResult result = budget_split(space, evaluator, cfg.split, base, master_seed);
    if (external) external->shutdown();

    std::cout << "chosen: " << join(result.chosen_labels, ' ') << "\n";
    std::cout << "evaluations_used: " << result.evaluations_used << "\n";
    std::cout << "candidates (best first):\n";
    std::ostringstream csv;
    csv << "candidate_labels,recommending_runs,provisional_estimate,"
           "verification_count,verification_mean,chosen\n";
    for (const auto& cand : result.candidates) {
        std::string mean_str =
            cand.verification_mean ? format_double(*cand.verification_mean) : std::string();
        std::cout << "  " << join(cand.labels, ' ') << "  runs=" << cand.recommending_runs
                  << " provisional=" << format_double(cand.provisional_estimate)
                  << " verif_n=" << cand.verification_count << " verif_mean="
                  << (mean_str.empty() ? "-" : mean_str) << "\n";
        csv << csv_field(join(cand.labels, ';')) << ',' << cand.recommending_runs << ','
            << format_double(cand.provisional_estimate) << ',' << cand.verification_count
            << ',' << mean_str << ',' << (cand.point == result.chosen ? 1 : 0) << '\n';
    }
    write_text_file(args.out_dir + "/candidates.csv", csv.str());
    return 0;
}

struct ProtocolArgs {
    std::string evaluator_cmd;
    std::string space_path;
};

int run_protocol_check(const ProtocolArgs& args) {
    SearchSpace space = SearchSpace::from_config_file(args.space_path);
    ExternalEvaluatorConfig cfg;
    cfg.command = args.evaluator_cmd;
    ProtocolCheckResult result = protocol_check(cfg, space);
    if (result.ok) {
        std::cout << "OK\n";
        return 0;
    }
    std::cout << "protocol violations:\n";
    for (const auto& v : result.violations) std::cout << "  " << v << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NTBEA: n-tuple bandit evolutionary algorithm optimizer"};
    app.require_subcommand(1);

    OptimizeArgs opt;
    auto* optimize = app.add_subcommand("optimize", "run one optimization");
    auto* space_opt = optimize->add_option("--space", opt.space_path,
                                           "space config file (external evaluator)");
    auto* bench_opt = optimize->add_option("--benchmark", opt.benchmark,
                                           "benchmark id (hartmann3|hartmann6|branin|goldsteinprice)");
    space_opt->excludes(bench_opt);
    bench_opt->excludes(space_opt);
    optimize->add_option("--iterations", opt.iterations, "evaluation budget")->required();
    optimize->add_option("--scheme", opt.scheme, "std|lin|inv|sqrt|exp");
    optimize->add_option("--k", opt.k, "exploration constant");
    optimize->add_option("--T", opt.T, "weighting decay scale");
    optimize->add_option("--eps", opt.eps, "exploration epsilon");
    optimize->add_option("--neighbourhood", opt.neighbourhood, "mutants per step");
    optimize->add_option("--seed", opt.seed, "rng seed (default: NTBEA_SEED or 0)");
    optimize->add_option("--evaluator-cmd", opt.evaluator_cmd, "external evaluator command");
    optimize->add_option("--out", opt.out_path, "write a one-row results CSV here");

    OracleArgs ora;
    auto* oracle = app.add_subcommand("oracle", "exhaustive benchmark ground truth");
    oracle->add_option("--benchmark", ora.benchmark, "benchmark id")->required();
    oracle->add_option("--top", ora.top, "top-K table size");
    oracle->add_option("--out", ora.out_path, "write the full oracle CSV here");

    BatchArgs exp;
    auto* experiment = app.add_subcommand("experiment", "batch of repeated runs");
    experiment->add_option("--config", exp.config_path, "experiment config file")->required();
    experiment->add_option("--parallel", exp.parallel, "worker threads");
    experiment->add_option("--out", exp.out_dir, "output directory");

    BatchArgs split;
    auto* budget = app.add_subcommand("budget-split", "M runs + verification budget");
    budget->add_option("--config", split.config_path, "budget-split config file")->required();
    budget->add_option("--out", split.out_dir, "output directory");

    ProtocolArgs proto;
    auto* check = app.add_subcommand("protocol-check", "probe an external evaluator");
    check->add_option("--evaluator-cmd", proto.evaluator_cmd, "command to probe")->required();
    check->add_option("--space", proto.space_path, "space config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*optimize) return run_optimize(opt);
        if (*oracle) return run_oracle(ora);
        if (*experiment) return run_experiment(exp);
        if (*budget) return run_budget_split(split);
        if (*check) return run_protocol_check(proto);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
