#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <utility>
#include <vector>

#include "ntbea/ntuple_model.hpp"
#include "ntbea/search_space.hpp"

namespace ntbea {

struct NtbeaSettings {
    std::uint64_t iterations = 0;
    double k = 1.0;
    double eps = 0.5;
    int neighbourhood_size = 50;
    WeightingScheme scheme{};
    std::uint64_t seed = 0;
    bool keep_trace = false;

    void validate() const;  // throws ConfigError listing every violation
};

// Expensive, possibly stochastic fitness oracle. Must terminate; any finite
// real is a legal fitness. Throwing aborts the run (wrapped in RunError).
using Evaluator = std::function<double(const Point&, Rng&)>;

struct TraceEntry {
    std::uint64_t iteration;
    Point point;
    double fitness;
};

struct RunRecord {
    Point recommended;
    double model_estimate = 0.0;  // scheme-consistent estimate at termination
    std::uint64_t evaluations_used = 0;
    std::vector<TraceEntry> trace;  // populated only with keep_trace
};

struct RunResult {
    NTupleModel model;
    RunRecord record;
};

// One NTBEA run: random start, then repeatedly evaluate, update the model,
// and move to the UCB-argmax of a fresh X-point mutation neighbourhood.
// Calls the evaluator exactly settings.iterations times.
RunResult run(const SearchSpace& space, const Evaluator& evaluator,
              const NtbeaSettings& settings);

// Exploit-only recommendation: the visited point with the highest
// scheme-consistent estimate; ties prefer the higher d-tuple count, then
// the lexicographically smaller point. Returns (point, estimate).
std::pair<Point, double> recommend(const NTupleModel& model,
                                   const std::set<Point>& visited,
                                   const WeightingScheme& scheme);

}  // namespace ntbea
