#include "ntbea/ntuple_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ntbea/errors.hpp"
#include "ntbea/text.hpp"

namespace ntbea {

WeightingScheme WeightingScheme::parse(std::string_view name, double T) {
    Kind kind;
    if (name == "std") kind = Kind::Vanilla;
    else if (name == "lin") kind = Kind::Linear;
    else if (name == "sqrt") kind = Kind::InverseRoot;
    else if (name == "inv") kind = Kind::Inverse;
    else if (name == "exp") kind = Kind::Exponential;
    else throw ConfigError("unknown scheme '" + std::string(name) +
                           "' (expected std|lin|inv|sqrt|exp)");
    if (kind != Kind::Vanilla && T <= 0)
        throw ConfigError("scheme decay scale T must be > 0");
    return WeightingScheme{kind, T};
}

std::string_view WeightingScheme::name() const {
    switch (kind) {
        case Kind::Vanilla: return "std";
        case Kind::Linear: return "lin";
        case Kind::InverseRoot: return "sqrt";
        case Kind::Inverse: return "inv";
        case Kind::Exponential: return "exp";
    }
    return "?";
}

double weight(const WeightingScheme& scheme, std::uint64_t n) {
    const double nd = static_cast<double>(n);
    const double T = scheme.T;
    switch (scheme.kind) {
        case WeightingScheme::Kind::Linear:
            return std::min(nd / T, 1.0);
        case WeightingScheme::Kind::InverseRoot:
            return 1.0 - std::sqrt(T / (nd + T));
        case WeightingScheme::Kind::Inverse:
            return 1.0 - T / (nd + T);
        case WeightingScheme::Kind::Exponential:
            return 1.0 - std::exp(-nd / T);
        case WeightingScheme::Kind::Vanilla:
            break;
    }
    throw Error("weight is undefined for the vanilla scheme");
}

NTupleModel::NTupleModel(const SearchSpace& space) : space_(&space) {
    const int d = space.num_dims();
    // Level-major construction: full set, then 2-subsets, then 1-subsets,
    // deduplicated (d=2: the pair IS the full set; d=1: the singleton is).
    std::vector<std::vector<int>> sets;
    std::vector<int> full(d);
    for (int i = 0; i < d; ++i) full[i] = i;
    sets.push_back(full);
    if (d > 2)
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) sets.push_back({i, j});
    if (d > 1)
        for (int i = 0; i < d; ++i) sets.push_back({i});

    dimsets_.resize(sets.size());
    for (std::size_t s = 0; s < sets.size(); ++s) {
        dimsets_[s].dims = sets[s];
        auto& strides = dimsets_[s].strides;
        strides.assign(sets[s].size(), 1);
        for (int i = static_cast<int>(sets[s].size()) - 2; i >= 0; --i)
            strides[i] = strides[i + 1] *
                         static_cast<std::uint64_t>(space.cardinality(sets[s][i + 1]));
    }

    // children = dimsets at the next stored level whose dims are subsets.
    std::size_t smallest = dimsets_.back().dims.size();
    first_leaf_ = dimsets_.size();
    while (first_leaf_ > 0 && dimsets_[first_leaf_ - 1].dims.size() == smallest)
        --first_leaf_;
    for (std::size_t s = 0; s < dimsets_.size(); ++s) {
        if (s >= first_leaf_) continue;  // leaves recurse to the 0-tuple
        // Stored sizes are {d,2,1} (d>2), {2,1} (d=2) or {1} (d=1); the next
        // stored level below the full set is the pairs when they exist.
        std::size_t next_size = (dimsets_[s].dims.size() > 2) ? 2 : 1;
        for (std::size_t t = 0; t < dimsets_.size(); ++t) {
            if (dimsets_[t].dims.size() != next_size) continue;
            if (std::includes(dimsets_[s].dims.begin(), dimsets_[s].dims.end(),
                              dimsets_[t].dims.begin(), dimsets_[t].dims.end()))
                dimsets_[s].children.push_back(static_cast<int>(t));
        }
    }
}

std::uint64_t NTupleModel::key_for(const DimSet& ds, const Point& p) const {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < ds.dims.size(); ++i)
        key += ds.strides[i] * static_cast<std::uint64_t>(p.indices[ds.dims[i]]);
    return key;
}

void NTupleModel::add_evaluation(const Point& p, double value) {
    if (!space_->contains(p)) throw Error("point does not belong to the model's space");
    for (auto& ds : dimsets_) {
        auto& st = ds.stats[key_for(ds, p)];
        st.count += 1;
        st.sum += value;
    }
    global_.count += 1;
    global_.sum += value;
}

double NTupleModel::vanilla_estimate(const Point& p) const {
    double acc = 0.0;
    int matched = 0;
    for (const auto& ds : dimsets_) {
        auto it = ds.stats.find(key_for(ds, p));
        if (it != ds.stats.end() && it->second.count > 0) {
            acc += it->second.mean();
            ++matched;
        }
    }
    return matched ? acc / matched : 0.0;
}

double NTupleModel::weighted_value(int dimset_index, const Point& p,
                                   const WeightingScheme& scheme) const {
    const DimSet& ds = dimsets_[dimset_index];
    auto it = ds.stats.find(key_for(ds, p));
    const std::uint64_t n = (it != ds.stats.end()) ? it->second.count : 0;

    double below;
    if (ds.children.empty()) {
        below = global_.count ? global_.mean() : 0.0;
    } else {
        double acc = 0.0;
        for (int child : ds.children) acc += weighted_value(child, p, scheme);
        below = acc / static_cast<double>(ds.children.size());
    }
    if (n == 0) return below;  // w(0) = 0: pure pass-through
    const double w = weight(scheme, n);
    return w * it->second.mean() + (1.0 - w) * below;
}

double NTupleModel::weighted_estimate(const Point& p, const WeightingScheme& scheme) const {
    if (scheme.kind == WeightingScheme::Kind::Vanilla) return vanilla_estimate(p);
    if (!space_->contains(p)) throw Error("point does not belong to the model's space");
    return weighted_value(0, p, scheme);
}

double NTupleModel::estimate(const Point& p, const WeightingScheme& scheme) const {
    return scheme.kind == WeightingScheme::Kind::Vanilla ? vanilla_estimate(p)
                                                         : weighted_estimate(p, scheme);
}

double NTupleModel::exploration_bonus(const Point& p, double k, double eps) const {
    const std::uint64_t N = global_.count;
    if (N < 1) throw Error("exploration bonus undefined before any evaluation (N = 0)");
    const double log_n = std::log(static_cast<double>(N));
    double acc = 0.0;
    for (const auto& ds : dimsets_) {
        auto it = ds.stats.find(key_for(ds, p));
        const std::uint64_t n = (it != ds.stats.end()) ? it->second.count : 0;
        acc += k * std::sqrt(log_n / (static_cast<double>(n) + eps));
    }
    return acc / static_cast<double>(dimsets_.size());
}

double NTupleModel::ucb(const Point& p, double k, double eps,
                        const WeightingScheme& scheme) const {
    return estimate(p, scheme) + exploration_bonus(p, k, eps);
}

int NTupleModel::find_dimset(const std::vector<int>& dims) const {
    for (std::size_t s = 0; s < dimsets_.size(); ++s)
        if (dimsets_[s].dims == dims) return static_cast<int>(s);
    return -1;
}

std::optional<TupleStats> NTupleModel::stats_for(const std::vector<int>& dims,
                                                 const Point& p) const {
    int s = find_dimset(dims);
    if (s < 0) throw Error("dimension set not stored in this model");
    const DimSet& ds = dimsets_[s];
    auto it = ds.stats.find(key_for(ds, p));
    if (it == ds.stats.end()) return std::nullopt;
    return it->second;
}

std::uint64_t NTupleModel::full_tuple_count(const Point& p) const {
    const DimSet& ds = dimsets_[0];
    auto it = ds.stats.find(key_for(ds, p));
    return it != ds.stats.end() ? it->second.count : 0;
}

std::vector<std::vector<int>> NTupleModel::dimension_sets() const {
    std::vector<std::vector<int>> out;
    out.reserve(dimsets_.size());
    for (const auto& ds : dimsets_) out.push_back(ds.dims);
    return out;
}

std::uint64_t NTupleModel::count_sum(const std::vector<int>& dims) const {
    int s = find_dimset(dims);
    if (s < 0) throw Error("dimension set not stored in this model");
    std::uint64_t total = 0;
    for (const auto& [key, st] : dimsets_[s].stats) total += st.count;
    return total;
}

std::string NTupleModel::dump() const {
    std::ostringstream out;
    auto list = [](const std::vector<int>& xs) {
        std::string s = "[";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(xs[i]);
        }
        return s + "]";
    };
    out << "dims=[] vals=[] n=" << global_.count << " sum=" << format_double(global_.sum)
        << "\n";
    for (const auto& ds : dimsets_) {
        std::vector<std::pair<std::uint64_t, TupleStats>> entries(ds.stats.begin(),
                                                                  ds.stats.end());
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [key, st] : entries) {
            // Decode the mixed-radix key back into value indices.
            std::vector<int> vals(ds.dims.size());
            std::uint64_t rem = key;
            for (std::size_t i = 0; i < ds.dims.size(); ++i) {
                vals[i] = static_cast<int>(rem / ds.strides[i]);
                rem %= ds.strides[i];
            }
            out << "dims=" << list(ds.dims) << " vals=" << list(vals) << " n=" << st.count
                << " sum=" << format_double(st.sum) << "\n";
        }
    }
    return out.str();
}

}  // namespace ntbea
