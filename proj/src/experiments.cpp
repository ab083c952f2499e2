#include "ntbea/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ntbea/errors.hpp"
#include "ntbea/seeding.hpp"
#include "ntbea/text.hpp"

namespace ntbea {

namespace {

using nlohmann::json;

json parse_json_doc(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(origin + " is not valid JSON: " + e.what());
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Field access that accumulates problems instead of stopping at the first.
class Reader {
public:
    explicit Reader(const json& doc) : doc_(doc) {
        if (!doc.is_object()) errors.push_back("config must be a JSON object");
    }

    template <typename T>
    std::optional<T> opt(const char* key) {
        seen_.push_back(key);
        if (!doc_.is_object() || !doc_.contains(key)) return std::nullopt;
        try {
            return doc_.at(key).get<T>();
        } catch (const json::exception&) {
            errors.push_back(std::string("field '") + key + "' has the wrong type");
            return std::nullopt;
        }
    }

    template <typename T>
    T get_or(const char* key, T fallback) {
        auto v = opt<T>(key);
        return v ? *v : fallback;
    }

    void reject_unknown() {
        if (!doc_.is_object()) return;
        for (const auto& item : doc_.items())
            if (std::find(seen_.begin(), seen_.end(), item.key()) == seen_.end())
                errors.push_back("unknown field '" + item.key() + "'");
    }

    std::vector<std::string> errors;

private:
    const json& doc_;
    std::vector<std::string> seen_;
};

void throw_if_errors(const std::vector<std::string>& errors, const char* what) {
    if (errors.empty()) return;
    std::string msg = std::string("invalid ") + what + ":";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
}

struct TargetFields {
    std::optional<BenchmarkId> benchmark;
    std::optional<std::string> space_path;
    std::optional<std::string> evaluator_cmd;
    std::chrono::milliseconds per_eval_timeout{10000};
    bool restart_on_crash = false;
    int max_restarts = 0;
};

TargetFields read_target(Reader& r, const std::string& base_dir) {
    TargetFields t;
    if (auto b = r.opt<std::string>("benchmark")) {
        auto id = parse_benchmark_id(*b);
        if (id) t.benchmark = id;
        else r.errors.push_back("unknown benchmark '" + *b + "'");
    }
    if (auto s = r.opt<std::string>("space")) {
        std::filesystem::path p = *s;
        if (p.is_relative() && !base_dir.empty())
            p = std::filesystem::path(base_dir) / p;
        t.space_path = p.string();
    }
    t.evaluator_cmd = r.opt<std::string>("evaluator_cmd");
    t.per_eval_timeout =
        std::chrono::milliseconds(r.get_or<std::int64_t>("per_eval_timeout_ms", 10000));
    t.restart_on_crash = r.get_or<bool>("restart_on_crash", false);
    t.max_restarts = r.get_or<int>("max_restarts", 0);
    return t;
}

void validate_target(const std::optional<BenchmarkId>& benchmark,
                     const std::optional<std::string>& space_path,
                     const std::optional<std::string>& evaluator_cmd,
                     std::chrono::milliseconds timeout, int max_restarts,
                     std::vector<std::string>& errors) {
    if (benchmark) {
        if (space_path || evaluator_cmd)
            errors.push_back("'benchmark' and 'space'/'evaluator_cmd' are mutually exclusive");
    } else {
        if (!space_path) errors.push_back("either 'benchmark' or 'space' is required");
        if (space_path && !evaluator_cmd)
            errors.push_back("an external space needs 'evaluator_cmd'");
        if (evaluator_cmd && evaluator_cmd->empty())
            errors.push_back("'evaluator_cmd' must not be empty");
    }
    if (timeout.count() <= 0) errors.push_back("per-eval timeout must be > 0");
    if (max_restarts < 0) errors.push_back("max_restarts must be >= 0");
}

std::string empty_or(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    return from_json_text(slurp(path),
                          std::filesystem::path(path).parent_path().string());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::string& base_dir) {
    json doc = parse_json_doc(text, "experiment config");
    Reader r(doc);
    ExperimentConfig cfg;

    TargetFields t = read_target(r, base_dir);
    cfg.benchmark = t.benchmark;
    cfg.space_path = t.space_path;
    cfg.evaluator_cmd = t.evaluator_cmd;
    cfg.per_eval_timeout = t.per_eval_timeout;
    cfg.restart_on_crash = t.restart_on_crash;
    cfg.max_restarts = t.max_restarts;

    cfg.T = r.get_or<double>("T", 15.0);
    if (auto schemes = r.opt<std::vector<std::string>>("schemes")) {
        for (const auto& name : *schemes) {
            try {
                cfg.schemes.push_back(WeightingScheme::parse(name, cfg.T));
            } catch (const ConfigError& e) {
                r.errors.push_back(e.what());
            }
        }
    }
    if (auto iters = r.opt<std::vector<std::int64_t>>("iterations")) {
        for (auto i : *iters) {
            if (i < 1) r.errors.push_back("iterations entries must be >= 1");
            else cfg.iterations_list.push_back(static_cast<std::uint64_t>(i));
        }
    }
    cfg.runs_per_cell = r.get_or<int>("runs_per_cell", 1);
    if (auto seed = r.opt<std::uint64_t>("master_seed")) cfg.master_seed = *seed;
    cfg.parallelism = r.get_or<int>("parallelism", 1);
    cfg.k = r.get_or<double>("k", 1.0);
    cfg.eps = r.get_or<double>("eps", 0.5);
    cfg.neighbourhood = r.get_or<int>("neighbourhood", 50);
    cfg.top_k = r.get_or<int>("top_k", 6);
    cfg.bootstrap_resamples = r.get_or<int>("bootstrap_resamples", 10000);
    cfg.ci_level = r.get_or<double>("ci_level", 0.95);
    r.reject_unknown();
    throw_if_errors(r.errors, "experiment config");
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    std::vector<std::string> errors;
    validate_target(benchmark, space_path, evaluator_cmd, per_eval_timeout,
                    max_restarts, errors);
    if (schemes.empty()) errors.push_back("scheme list must not be empty");
    if (iterations_list.empty()) errors.push_back("iterations list must not be empty");
    if (runs_per_cell < 1) errors.push_back("runs_per_cell must be >= 1");
    if (parallelism < 1) errors.push_back("parallelism must be >= 1");
    if (k < 0) errors.push_back("k must be >= 0");
    if (eps <= 0) errors.push_back("eps must be > 0");
    if (neighbourhood < 1) errors.push_back("neighbourhood must be >= 1");
    if (T <= 0) errors.push_back("T must be > 0");
    if (top_k < 1) errors.push_back("top_k must be >= 1");
    if (bootstrap_resamples < 1000) errors.push_back("bootstrap_resamples must be >= 1000");
    if (!(ci_level > 0.0 && ci_level < 1.0)) errors.push_back("ci_level must lie in (0,1)");
    throw_if_errors(errors, "experiment config");
}

namespace {

struct Cell {
    WeightingScheme scheme;
    std::uint64_t iterations = 0;
    std::uint64_t key = 0;
};

RunRow execute_one(const ExperimentConfig& cfg, const SearchSpace& space,
                   const BenchmarkInstance* inst, const std::string& bench_name,
                   const Cell& cell, int run_id, std::uint64_t master_seed) {
    RunRow row;
    row.benchmark = bench_name;
    row.scheme = cell.scheme;
    row.iterations = cell.iterations;
    row.k = cfg.k;
    row.run_id = run_id;
    row.seed = derive_seed(master_seed, cell.key, static_cast<std::uint64_t>(run_id));
    try {
        NtbeaSettings settings;
        settings.iterations = cell.iterations;
        settings.k = cfg.k;
        settings.eps = cfg.eps;
        settings.neighbourhood_size = cfg.neighbourhood;
        settings.scheme = cell.scheme;
        settings.seed = row.seed;

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

        RunResult result = run(space, evaluator, settings);
        if (external) external->shutdown();

        row.recommended = result.record.recommended;
        row.recommended_labels = space.labels(row.recommended);
        if (inst) {
            // Rewards are +/-1 with E = 2p-1; report estimates on the p scale.
            row.model_estimate = (result.record.model_estimate + 1.0) / 2.0;
            row.true_value = inst->true_p(row.recommended);
            row.delta = row.model_estimate - *row.true_value;
        } else {
            row.model_estimate = result.record.model_estimate;
        }
        row.ok = true;
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

}  // namespace

BatchResult repeated_runs(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::uint64_t master_seed = cfg.master_seed.value_or(0);

    std::optional<BenchmarkInstance> inst;
    std::optional<SearchSpace> external_space;
    std::string bench_name;
    if (cfg.benchmark) {
        inst = BenchmarkInstance::build(*cfg.benchmark);
        bench_name = benchmark_name(*cfg.benchmark);
    } else {
        external_space = SearchSpace::from_config_file(*cfg.space_path);
        bench_name = "external";
    }
    const SearchSpace& space = inst ? inst->space() : *external_space;

    std::vector<Cell> cells;
    for (const auto& scheme : cfg.schemes)
        for (std::uint64_t iters : cfg.iterations_list)
            cells.push_back({scheme, iters,
                             hash_label(bench_name + "|" + std::string(scheme.name()) +
                                        "|" + std::to_string(iters))});

    const int total = static_cast<int>(cells.size()) * cfg.runs_per_cell;
    std::vector<RunRow> rows(total);
    std::atomic<int> next{0};
    auto worker = [&] {
        while (true) {
            int idx = next.fetch_add(1);
            if (idx >= total) return;
            const Cell& cell = cells[idx / cfg.runs_per_cell];
            rows[idx] = execute_one(cfg, space, inst ? &*inst : nullptr, bench_name,
                                    cell, idx % cfg.runs_per_cell, master_seed);
        }
    };
    int threads = std::min(cfg.parallelism, total);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    std::optional<OracleReport> oracle;
    if (inst) oracle = grid_oracle(*inst, cfg.top_k);

    BatchResult batch;
    batch.rows = std::move(rows);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::span<const RunRow> cell_rows(batch.rows.data() + c * cfg.runs_per_cell,
                                          cfg.runs_per_cell);
        CellSummary summary;
        summary.benchmark = bench_name;
        summary.scheme = cells[c].scheme;
        summary.iterations = cells[c].iterations;
        for (const auto& row : cell_rows)
            if (!row.ok) ++summary.failures;
        std::uint64_t ci_seed =
            derive_seed(master_seed, splitmix64(cells[c].key ^ hash_label("bootstrap-ci")), 0);
        summary.stats = summarize(cell_rows, oracle ? &*oracle : nullptr,
                                  cfg.bootstrap_resamples, cfg.ci_level, ci_seed);
        batch.failures += summary.failures;
        batch.summaries.push_back(std::move(summary));
    }
    return batch;
}

SummaryStats summarize(std::span<const RunRow> rows, const OracleReport* oracle,
                       int bootstrap_resamples, double ci_level,
                       std::uint64_t ci_seed) {
    if (rows.empty()) throw Error("summarize needs at least one record");
    SummaryStats stats;
    std::vector<double> truths, deltas;
    int in_top = 0;
    for (const auto& row : rows) {
        if (!row.ok) continue;
        ++stats.runs;
        if (row.true_value) truths.push_back(*row.true_value);
        if (row.delta) deltas.push_back(*row.delta);
        if (oracle)
            for (const auto& entry : oracle->top_k)
                if (entry.point == row.recommended) {
                    ++in_top;
                    break;
                }
    }
    if (stats.runs == 0) return stats;  // all failed: nothing to aggregate

    if (!truths.empty()) {
        stats.mean = mean(truths);
        stats.sd = sample_sd(truths);
        if (truths.size() >= 2) {
            Rng rng = make_rng(derive_seed(ci_seed, hash_label("value"), 0));
            stats.ci = basic_bootstrap_ci(truths, ci_level, bootstrap_resamples, rng);
        }
    }
    if (!deltas.empty()) {
        stats.delta_mean = mean(deltas);
        if (deltas.size() >= 2) {
            Rng rng = make_rng(derive_seed(ci_seed, hash_label("delta"), 0));
            stats.delta_ci = basic_bootstrap_ci(deltas, ci_level, bootstrap_resamples, rng);
        }
    }
    if (oracle)
        stats.topk_fraction = static_cast<double>(in_top) / stats.runs;
    return stats;
}

void BudgetSplitConfig::validate() const {
    std::vector<std::string> errors;
    if (run_count < 1) errors.push_back("M (run_count) must be >= 1");
    if (iterations_per_run < 1) errors.push_back("B (iterations_per_run) must be >= 1");
    if (run_count > 1 && verification_budget < static_cast<std::uint64_t>(run_count))
        errors.push_back("V must be >= M when M > 1 (each candidate needs a verification)");
    std::uint64_t m = static_cast<std::uint64_t>(run_count);
    if (m != 0 && iterations_per_run > UINT64_MAX / m)
        errors.push_back("M*B overflows");
    else if (m * iterations_per_run > UINT64_MAX - verification_budget)
        errors.push_back("M*B + V overflows");
    else if (m * iterations_per_run + verification_budget > total_budget)
        errors.push_back("M*B + V exceeds the total budget");
    throw_if_errors(errors, "budget-split config");
}

BudgetSplitResult budget_split(const SearchSpace& space, const Evaluator& evaluator,
                               const BudgetSplitConfig& cfg,
                               const NtbeaSettings& base_settings,
                               std::uint64_t master_seed) {
    cfg.validate();

    struct Cand {
        int runs = 0;
        double provisional = 0.0;
    };
    std::map<Point, Cand> cands;  // lexicographic: deterministic everywhere below
    for (int i = 0; i < cfg.run_count; ++i) {
        NtbeaSettings settings = base_settings;
        settings.iterations = cfg.iterations_per_run;
        settings.seed = derive_seed(master_seed, hash_label("split-run"),
                                    static_cast<std::uint64_t>(i));
        RunResult result = run(space, evaluator, settings);
        auto [it, fresh] = cands.try_emplace(result.record.recommended);
        it->second.runs += 1;
        it->second.provisional = fresh ? result.record.model_estimate
                                       : std::max(it->second.provisional,
                                                  result.record.model_estimate);
    }

    // Verification counts: even split, remainder to the best provisionals.
    const std::uint64_t c = cands.size();
    const std::uint64_t base_n = cfg.verification_budget / c;
    std::uint64_t rem = cfg.verification_budget % c;
    std::vector<const Point*> by_provisional;
    for (const auto& [point, cand] : cands) by_provisional.push_back(&point);
    std::stable_sort(by_provisional.begin(), by_provisional.end(),
                     [&](const Point* a, const Point* b) {
                         return cands.at(*a).provisional > cands.at(*b).provisional;
                     });
    std::map<Point, std::uint64_t> counts;
    for (const auto& [point, cand] : cands) counts[point] = base_n;
    for (std::uint64_t i = 0; i < rem; ++i) counts[*by_provisional[i]] += 1;

    Rng vrng = make_rng(derive_seed(master_seed, hash_label("verification"), 0));
    BudgetSplitResult result;
    result.evaluations_used =
        static_cast<std::uint64_t>(cfg.run_count) * cfg.iterations_per_run;
    for (const auto& [point, cand] : cands) {
        CandidateReport report;
        report.point = point;
        report.labels = space.labels(point);
        report.recommending_runs = cand.runs;
        report.provisional_estimate = cand.provisional;
        report.verification_count = counts[point];
        if (report.verification_count > 0) {
            double acc = 0.0;
            for (std::uint64_t i = 0; i < report.verification_count; ++i)
                acc += evaluator(point, vrng);
            report.verification_mean = acc / static_cast<double>(report.verification_count);
            result.evaluations_used += report.verification_count;
        }
        result.candidates.push_back(std::move(report));
    }

    // Winner: verification mean, then more verification, then point order.
    std::stable_sort(result.candidates.begin(), result.candidates.end(),
                     [](const CandidateReport& a, const CandidateReport& b) {
                         double av = a.verification_mean.value_or(
                             -std::numeric_limits<double>::infinity());
                         double bv = b.verification_mean.value_or(
                             -std::numeric_limits<double>::infinity());
                         if (av != bv) return av > bv;
                         return a.verification_count > b.verification_count;
                     });
    result.chosen = result.candidates.front().point;
    result.chosen_labels = result.candidates.front().labels;
    return result;
}

BudgetSplitFileConfig BudgetSplitFileConfig::from_json_file(const std::string& path) {
    return from_json_text(slurp(path),
                          std::filesystem::path(path).parent_path().string());
}

BudgetSplitFileConfig BudgetSplitFileConfig::from_json_text(const std::string& text,
                                                            const std::string& base_dir) {
    json doc = parse_json_doc(text, "budget-split config");
    Reader r(doc);
    BudgetSplitFileConfig cfg;

    TargetFields t = read_target(r, base_dir);
    cfg.benchmark = t.benchmark;
    cfg.space_path = t.space_path;
    cfg.evaluator_cmd = t.evaluator_cmd;
    cfg.per_eval_timeout = t.per_eval_timeout;
    cfg.restart_on_crash = t.restart_on_crash;
    cfg.max_restarts = t.max_restarts;

    cfg.split.total_budget = r.get_or<std::uint64_t>("total_budget", 0);
    cfg.split.run_count = r.get_or<int>("runs", 1);
    cfg.split.iterations_per_run = r.get_or<std::uint64_t>("iterations_per_run", 1);
    cfg.split.verification_budget = r.get_or<std::uint64_t>("verification", 0);

    double T = r.get_or<double>("T", 15.0);
    std::string scheme_name = r.get_or<std::string>("scheme", "std");
    try {
        cfg.scheme = WeightingScheme::parse(scheme_name, T);
    } catch (const ConfigError& e) {
        r.errors.push_back(e.what());
    }
    cfg.k = r.get_or<double>("k", 1.0);
    cfg.eps = r.get_or<double>("eps", 0.5);
    cfg.neighbourhood = r.get_or<int>("neighbourhood", 50);
    if (auto seed = r.opt<std::uint64_t>("master_seed")) cfg.master_seed = *seed;
    r.reject_unknown();
    throw_if_errors(r.errors, "budget-split config");
    cfg.validate();
    return cfg;
}

void BudgetSplitFileConfig::validate() const {
    std::vector<std::string> errors;
    validate_target(benchmark, space_path, evaluator_cmd, per_eval_timeout,
                    max_restarts, errors);
    if (k < 0) errors.push_back("k must be >= 0");
    if (eps <= 0) errors.push_back("eps must be > 0");
    if (neighbourhood < 1) errors.push_back("neighbourhood must be >= 1");
    throw_if_errors(errors, "budget-split config");
    split.validate();
}

std::string results_csv_text(std::span<const RunRow> rows) {
    std::ostringstream out;
    out << "benchmark,scheme,T,iterations,k,run_id,seed,recommended_labels,"
           "model_estimate,true_value,delta\n";
    for (const auto& row : rows) {
        if (!row.ok) continue;
        out << csv_field(row.benchmark) << ',' << row.scheme.name() << ','
            << format_double(row.scheme.T) << ',' << row.iterations << ','
            << format_double(row.k) << ',' << row.run_id << ',' << row.seed << ','
            << csv_field(join(row.recommended_labels, ';')) << ','
            << format_double(row.model_estimate) << ',' << empty_or(row.true_value)
            << ',' << empty_or(row.delta) << '\n';
    }
    return out.str();
}

std::string summary_csv_text(std::span<const CellSummary> cells) {
    std::ostringstream out;
    out << "benchmark,scheme,iterations,runs,mean,sd,ci_lo,ci_hi,delta_mean,"
           "delta_ci_lo,delta_ci_hi,topk_fraction\n";
    for (const auto& cell : cells) {
        const SummaryStats& s = cell.stats;
        out << csv_field(cell.benchmark) << ',' << cell.scheme.name() << ','
            << cell.iterations << ',' << s.runs << ',' << empty_or(s.mean) << ','
            << empty_or(s.sd) << ','
            << (s.ci ? format_double(s.ci->lo) : std::string()) << ','
            << (s.ci ? format_double(s.ci->hi) : std::string()) << ','
            << empty_or(s.delta_mean) << ','
            << (s.delta_ci ? format_double(s.delta_ci->lo) : std::string()) << ','
            << (s.delta_ci ? format_double(s.delta_ci->hi) : std::string()) << ','
            << empty_or(s.topk_fraction) << '\n';
    }
    return out.str();
}

std::string oracle_csv_text(const BenchmarkInstance& inst) {
    // top_k = whole grid: the report's top list is then the full sorted table.
    OracleReport full = grid_oracle(inst, static_cast<int>(inst.space().point_count()));
    std::ostringstream out;
    out << "point_labels,true_p\n";
    for (const auto& entry : full.top_k)
        out << csv_field(join(inst.space().labels(entry.point), ';')) << ','
            << format_double(entry.p) << '\n';
    return out.str();
}

std::string summary_table_text(std::span<const CellSummary> cells) {
    std::ostringstream out;
    auto num = [](const std::optional<double>& v) {
        if (!v) return std::string("-");
        std::ostringstream s;
        s << std::fixed << std::setprecision(4) << *v;
        return s.str();
    };
    auto ci = [&](const std::optional<Ci>& v) {
        if (!v) return std::string("-");
        std::ostringstream s;
        s << std::fixed << std::setprecision(4) << '[' << v->lo << ", " << v->hi << ']';
        return s.str();
    };
    out << std::left << std::setw(16) << "benchmark" << std::setw(7) << "scheme"
        << std::setw(8) << "iters" << std::setw(6) << "runs" << std::setw(9) << "mean"
        << std::setw(9) << "sd" << std::setw(20) << "ci95" << std::setw(10) << "delta"
        << std::setw(20) << "delta_ci95" << std::setw(8) << "topk" << "fail\n";
    for (const auto& cell : cells) {
        const SummaryStats& s = cell.stats;
        out << std::left << std::setw(16) << cell.benchmark << std::setw(7)
            << cell.scheme.name() << std::setw(8) << cell.iterations << std::setw(6)
            << s.runs << std::setw(9) << num(s.mean) << std::setw(9) << num(s.sd)
            << std::setw(20) << ci(s.ci) << std::setw(10) << num(s.delta_mean)
            << std::setw(20) << ci(s.delta_ci) << std::setw(8) << num(s.topk_fraction)
            << cell.failures << '\n';
    }
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << content;
    if (!out) throw Error("write failed: " + path);
}

}  // namespace ntbea
