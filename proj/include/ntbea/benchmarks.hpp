#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "ntbea/optimizer.hpp"
#include "ntbea/search_space.hpp"
#include "ntbea/seeding.hpp"

namespace ntbea {

enum class BenchmarkId { Hartmann3, Hartmann6, Branin, GoldsteinPrice };

std::optional<BenchmarkId> parse_benchmark_id(std::string_view name);
std::string_view benchmark_name(BenchmarkId id);

// Standard minimization-form value; throws on a domain violation
// (Hartmann: [0,1]^d; Branin: [-5,10]x[0,15]; Goldstein-Price: [-2,2]^2).
double continuous_value(BenchmarkId id, const std::vector<double>& x);

// Sign flip plus shift/scale to a win probability:
//   Hartmann-3/6: clamp(-raw/4, 0, 1)
//   Branin:       max(0, (-raw+10)/12)
//   GP:           max(0, (-raw+400)/500)
double to_probability(BenchmarkId id, double raw);

// +1 with probability p, else -1.
double bernoulli_pm1(double p, Rng& rng);

// A discretized benchmark: the grid space plus a precomputed true-p table.
class BenchmarkInstance {
public:
    static BenchmarkInstance build(BenchmarkId id);

    BenchmarkId id() const { return id_; }
    const SearchSpace& space() const { return space_; }
    double true_p(const Point& p) const;
    std::vector<double> coordinates(const Point& p) const;
    double noisy_evaluate(const Point& p, Rng& rng) const;

    // Binds *this; the instance must outlive the returned callable.
    Evaluator evaluator() const;

private:
    BenchmarkInstance(BenchmarkId id, SearchSpace space, std::vector<double> p_table);

    BenchmarkId id_;
    SearchSpace space_;
    std::vector<double> p_table_;  // indexed by space_.rank(point)
};

struct OracleEntry {
    Point point;
    double p;
};

struct OracleReport {
    double max_p = 0.0;
    std::vector<Point> argmax;
    double nonzero_fraction = 0.0;
    std::vector<OracleEntry> top_k;  // descending p; ties in enumeration order
};

OracleReport grid_oracle(const BenchmarkInstance& inst, int top_k);

}  // namespace ntbea
