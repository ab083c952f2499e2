#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ntbea/benchmarks.hpp"
#include "ntbea/external_eval.hpp"
#include "ntbea/ntuple_model.hpp"
#include "ntbea/optimizer.hpp"
#include "ntbea/stats.hpp"

namespace ntbea {

// A batch: one evaluator target x schemes x iteration budgets x runs.
struct ExperimentConfig {
    // Exactly one of benchmark / (space_path + evaluator_cmd).
    std::optional<BenchmarkId> benchmark;
    std::optional<std::string> space_path;
    std::optional<std::string> evaluator_cmd;
    std::chrono::milliseconds per_eval_timeout{10000};
    bool restart_on_crash = false;
    int max_restarts = 0;

    std::vector<WeightingScheme> schemes;
    std::vector<std::uint64_t> iterations_list;
    int runs_per_cell = 1;
    std::optional<std::uint64_t> master_seed;  // unset: CLI applies NTBEA_SEED / 0
    int parallelism = 1;
    double k = 1.0;
    double eps = 0.5;
    int neighbourhood = 50;
    double T = 15.0;
    int top_k = 6;
    int bootstrap_resamples = 10000;
    double ci_level = 0.95;

    static ExperimentConfig from_json_file(const std::string& path);
    // base_dir resolves a relative space_path.
    static ExperimentConfig from_json_text(const std::string& text,
                                           const std::string& base_dir);
    void validate() const;  // throws ConfigError listing every problem
};

// One results-CSV row. For benchmarks model_estimate/delta are on the p
// scale (the reward scale maps to p via p = (v+1)/2); true_value/delta are
// absent for oracle-less (external) evaluators, as are rows' delta.
struct RunRow {
    std::string benchmark;  // benchmark name, or "external"
    WeightingScheme scheme;
    std::uint64_t iterations = 0;
    double k = 1.0;
    int run_id = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    Point recommended;
    std::vector<std::string> recommended_labels;
    double model_estimate = 0.0;
    std::optional<double> true_value;
    std::optional<double> delta;
};

struct SummaryStats {
    int runs = 0;  // successful runs summarized
    std::optional<double> mean;
    std::optional<double> sd;
    std::optional<Ci> ci;
    std::optional<double> delta_mean;
    std::optional<Ci> delta_ci;
    std::optional<double> topk_fraction;
};

struct CellSummary {
    std::string benchmark;
    WeightingScheme scheme;
    std::uint64_t iterations = 0;
    int failures = 0;
    SummaryStats stats;
};

struct BatchResult {
    std::vector<RunRow> rows;  // ordered by (scheme, iterations, run_id)
    std::vector<CellSummary> summaries;
    int failures = 0;
};

BatchResult repeated_runs(const ExperimentConfig& cfg);

// Mean/sd/CI over true_value, delta stats (estimate - actual) and the
// top-K fraction when an oracle is present; CIs need >= 2 usable rows.
SummaryStats summarize(std::span<const RunRow> rows, const OracleReport* oracle,
                       int bootstrap_resamples, double ci_level,
                       std::uint64_t ci_seed);

// Budget splitting (M runs of B iterations + V verification evaluations).
struct BudgetSplitConfig {
    std::uint64_t total_budget = 0;
    int run_count = 1;                   // M
    std::uint64_t iterations_per_run = 1;  // B
    std::uint64_t verification_budget = 0;  // V

    void validate() const;
};

struct CandidateReport {
    Point point;
    std::vector<std::string> labels;
    int recommending_runs = 0;
    double provisional_estimate = 0.0;  // best model estimate among its runs
    std::uint64_t verification_count = 0;
    std::optional<double> verification_mean;
};

struct BudgetSplitResult {
    Point chosen;
    std::vector<std::string> chosen_labels;
    // Sorted best-first (verification mean, then count, then point order).
    std::vector<CandidateReport> candidates;
    std::uint64_t evaluations_used = 0;
};

// Runs M independent B-iteration optimizations, deduplicates their
// recommendations, spends V evaluations as evenly as possible across the
// candidates (remainder to the highest provisional estimates), and picks
// the best verification mean. Never exceeds M*B + V evaluator calls.
BudgetSplitResult budget_split(const SearchSpace& space, const Evaluator& evaluator,
                               const BudgetSplitConfig& cfg,
                               const NtbeaSettings& base_settings,
                               std::uint64_t master_seed);

// File-level budget-split configuration (CLI `budget-split --config`).
struct BudgetSplitFileConfig {
    std::optional<BenchmarkId> benchmark;
    std::optional<std::string> space_path;
    std::optional<std::string> evaluator_cmd;
    std::chrono::milliseconds per_eval_timeout{10000};
    bool restart_on_crash = false;
    int max_restarts = 0;

    BudgetSplitConfig split;
    WeightingScheme scheme{};
    double k = 1.0;
    double eps = 0.5;
    int neighbourhood = 50;
    std::optional<std::uint64_t> master_seed;

    static BudgetSplitFileConfig from_json_file(const std::string& path);
    static BudgetSplitFileConfig from_json_text(const std::string& text,
                                                const std::string& base_dir);
    void validate() const;
};

// CSV emission. Column layouts:
//   results: benchmark,scheme,T,iterations,k,run_id,seed,recommended_labels,
//            model_estimate,true_value,delta
//   summary: benchmark,scheme,iterations,runs,mean,sd,ci_lo,ci_hi,
//            delta_mean,delta_ci_lo,delta_ci_hi,topk_fraction
//   oracle:  point_labels,true_p   (full grid, descending p)
std::string results_csv_text(std::span<const RunRow> rows);
std::string summary_csv_text(std::span<const CellSummary> cells);
std::string oracle_csv_text(const BenchmarkInstance& inst);
std::string summary_table_text(std::span<const CellSummary> cells);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ntbea
