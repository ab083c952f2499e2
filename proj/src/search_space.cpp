#include "ntbea/search_space.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "ntbea/errors.hpp"

namespace ntbea {

namespace {

bool has_whitespace(const std::string& s) {
    return s.find_first_of(" \t\n\r") != std::string::npos;
}

std::string scalar_to_label(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean() || v.is_number()) return v.dump();
    throw ConfigError("dimension values must be scalars (string/number/bool), got: " + v.dump());
}

}  // namespace

SearchSpace::SearchSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw ConfigError("search space needs at least one dimension");
    std::unordered_set<std::string> names;
    for (const auto& d : dims_) {
        if (d.name.empty()) throw ConfigError("dimension with empty name");
        if (!names.insert(d.name).second)
            throw ConfigError("duplicate dimension name: " + d.name);
        if (d.values.size() < 2)
            throw ConfigError("dimension '" + d.name + "' has fewer than 2 values");
        std::unordered_set<std::string> vals;
        for (const auto& v : d.values) {
            if (v.empty())
                throw ConfigError("dimension '" + d.name + "' has an empty value label");
            if (has_whitespace(v))
                throw ConfigError("dimension '" + d.name + "' value '" + v +
                                  "' contains whitespace (labels travel on a space-delimited wire)");
            if (!vals.insert(v).second)
                throw ConfigError("dimension '" + d.name + "' has duplicate value: " + v);
        }
    }
    point_count_ = 1;
    for (const auto& d : dims_) {
        std::uint64_t card = d.values.size();
        if (point_count_ > UINT64_MAX / card)
            throw ConfigError("point count overflows 64-bit range");
        point_count_ *= card;
    }
}

SearchSpace SearchSpace::from_config_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("space config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("dimensions") || !doc["dimensions"].is_array())
        throw ConfigError("space config must be an object with a 'dimensions' array");
    std::vector<Dimension> dims;
    for (const auto& entry : doc["dimensions"]) {
        if (!entry.is_object() || !entry.contains("name") || !entry.contains("values") ||
            !entry["name"].is_string() || !entry["values"].is_array())
            throw ConfigError("each dimension needs a string 'name' and a 'values' array");
        Dimension d;
        d.name = entry["name"].get<std::string>();
        for (const auto& v : entry["values"]) d.values.push_back(scalar_to_label(v));
        dims.push_back(std::move(d));
    }
    return SearchSpace(std::move(dims));
}

SearchSpace SearchSpace::from_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open space config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_config_text(ss.str());
}

bool SearchSpace::contains(const Point& p) const {
    if (static_cast<int>(p.indices.size()) != num_dims()) return false;
    for (int i = 0; i < num_dims(); ++i)
        if (p.indices[i] < 0 || p.indices[i] >= cardinality(i)) return false;
    return true;
}

std::vector<std::string> SearchSpace::labels(const Point& p) const {
    if (!contains(p)) throw Error("point does not belong to this space");
    std::vector<std::string> out;
    out.reserve(dims_.size());
    for (int i = 0; i < num_dims(); ++i) out.push_back(dims_[i].values[p.indices[i]]);
    return out;
}

Point SearchSpace::point_from_labels(const std::vector<std::string>& labels) const {
    if (static_cast<int>(labels.size()) != num_dims())
        throw Error("label vector length does not match dimension count");
    Point p{std::vector<int>(dims_.size())};
    for (int i = 0; i < num_dims(); ++i) {
        const auto& vals = dims_[i].values;
        auto it = std::find(vals.begin(), vals.end(), labels[i]);
        if (it == vals.end())
            throw Error("unknown value '" + labels[i] + "' for dimension '" + dims_[i].name + "'");
        p.indices[i] = static_cast<int>(it - vals.begin());
    }
    return p;
}

std::string SearchSpace::doc_line() const {
    nlohmann::json doc;
    doc["dimensions"] = nlohmann::json::array();
    for (const auto& d : dims_) {
        nlohmann::json entry;
        entry["name"] = d.name;
        entry["values"] = d.values;
        doc["dimensions"].push_back(std::move(entry));
    }
    return doc.dump();
}

Point SearchSpace::random_point(Rng& rng) const {
    Point p{std::vector<int>(dims_.size())};
    for (int i = 0; i < num_dims(); ++i)
        p.indices[i] = std::uniform_int_distribution<int>(0, cardinality(i) - 1)(rng);
    return p;
}

Point SearchSpace::mutate(const Point& p, Rng& rng) const {
    if (!contains(p)) throw Error("point does not belong to this space");
    const int d = num_dims();
    Point q = p;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < d; ++i) {
        if (unit(rng) < 1.0 / d)
            q.indices[i] = std::uniform_int_distribution<int>(0, cardinality(i) - 1)(rng);
    }
    // Forced gene: uniform choice, resampled over the values other than its
    // value in p (not in q), so the result always differs from p.
    int forced = std::uniform_int_distribution<int>(0, d - 1)(rng);
    int r = std::uniform_int_distribution<int>(0, cardinality(forced) - 2)(rng);
    if (r >= p.indices[forced]) ++r;
    q.indices[forced] = r;
    return q;
}

std::vector<Point> SearchSpace::neighbourhood(const Point& p, int x, Rng& rng) const {
    if (x < 1) throw Error("neighbourhood size must be >= 1");
    std::vector<Point> out;
    out.reserve(x);
    for (int i = 0; i < x; ++i) out.push_back(mutate(p, rng));
    return out;
}

std::vector<Point> SearchSpace::all_points(std::uint64_t cap) const {
    std::vector<Point> out;
    out.reserve(point_count_);
    for_each_point([&](const Point& p) { out.push_back(p); }, cap);
    return out;
}

std::uint64_t SearchSpace::rank(const Point& p) const {
    std::uint64_t r = 0;
    for (int i = 0; i < num_dims(); ++i)
        r = r * static_cast<std::uint64_t>(cardinality(i)) + p.indices[i];
    return r;
}

void SearchSpace::check_enumerable(std::uint64_t cap) const {
    if (point_count_ > cap)
        throw Error("point count " + std::to_string(point_count_) +
                    " exceeds enumeration cap " + std::to_string(cap));
}

}  // namespace ntbea
