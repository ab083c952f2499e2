#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ntbea/search_space.hpp"

namespace ntbea {

struct TupleStats {
    std::uint64_t count = 0;
    double sum = 0.0;
    double mean() const { return sum / static_cast<double>(count); }
};

struct WeightingScheme {
    enum class Kind { Vanilla, Linear, InverseRoot, Inverse, Exponential };
    Kind kind = Kind::Vanilla;
    double T = 15.0;  // decay scale; unused by Vanilla

    // Table abbreviations: std, lin, sqrt (inverse-root), inv, exp.
    static WeightingScheme parse(std::string_view name, double T = 15.0);
    std::string_view name() const;

    bool operator==(const WeightingScheme&) const = default;
};

// w(n) per the scheme; 0 at n=0 and monotonically approaching 1.
// Undefined (throws) for Vanilla.
double weight(const WeightingScheme& scheme, std::uint64_t n);

// Sparse statistics over all 1-tuples, 2-tuples and the d-tuple (plus a
// 0-tuple holding the global mean). Patterns materialize on first
// observation, so memory scales with evaluations, not with the space.
class NTupleModel {
public:
    explicit NTupleModel(const SearchSpace& space);

    void add_evaluation(const Point& p, double value);

    // Mean of means over matching patterns with data; 0 when none has any.
    double vanilla_estimate(const Point& p) const;

    // Recursive weighted value: V(S) = w*mean(S) + (1-w)*avg V(children),
    // descending full tuple -> pairs -> singles -> global mean.
    double weighted_estimate(const Point& p, const WeightingScheme& scheme) const;

    // Dispatch: Vanilla -> vanilla_estimate, otherwise weighted_estimate.
    double estimate(const Point& p, const WeightingScheme& scheme) const;

    // Mean over all matching non-empty patterns of k*sqrt(log N / (n+eps)),
    // zero-count patterns included. Requires N >= 1.
    double exploration_bonus(const Point& p, double k, double eps) const;

    double ucb(const Point& p, double k, double eps, const WeightingScheme& scheme) const;

    std::uint64_t total_iterations() const { return global_.count; }

    // Stats of the pattern `p` instantiates over dimension subset `dims`
    // (strictly increasing indices); nullopt when never observed.
    std::optional<TupleStats> stats_for(const std::vector<int>& dims, const Point& p) const;
    std::uint64_t full_tuple_count(const Point& p) const;

    // All non-empty dimension sets in use, in stored (level-major) order.
    std::vector<std::vector<int>> dimension_sets() const;
    std::uint64_t count_sum(const std::vector<int>& dims) const;

    // Debug snapshot, one record per pattern:
    //   dims=[...] vals=[...] n=<int> sum=<real>
    std::string dump() const;

    const SearchSpace& space() const { return *space_; }

private:
    struct DimSet {
        std::vector<int> dims;
        std::vector<std::uint64_t> strides;
        std::vector<int> children;  // dimset indices at the next stored level
        std::unordered_map<std::uint64_t, TupleStats> stats;
    };

    std::uint64_t key_for(const DimSet& ds, const Point& p) const;
    double weighted_value(int dimset_index, const Point& p,
                          const WeightingScheme& scheme) const;
    int find_dimset(const std::vector<int>& dims) const;

    const SearchSpace* space_;
    std::vector<DimSet> dimsets_;        // level-major: full set, pairs, singles
    std::size_t first_leaf_ = 0;         // index of the first smallest-level set
    TupleStats global_;                  // the 0-tuple
};

}  // namespace ntbea
