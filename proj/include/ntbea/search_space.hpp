#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "ntbea/seeding.hpp"

namespace ntbea {

struct Dimension {
    std::string name;
    std::vector<std::string> values;  // ordered labels; opaque to the algorithm
};

// One parameter setting theta, as value indices into its space's dimensions.
struct Point {
    std::vector<int> indices;
    auto operator<=>(const Point&) const = default;
};

class SearchSpace {
public:
    explicit SearchSpace(std::vector<Dimension> dims);

    // JSON document: {"dimensions":[{"name":"x","values":[...]}]}.
    // Scalar values (numbers/bools/strings) become their text labels.
    static SearchSpace from_config_text(const std::string& text);
    static SearchSpace from_config_file(const std::string& path);

    int num_dims() const { return static_cast<int>(dims_.size()); }
    int cardinality(int dim) const { return static_cast<int>(dims_[dim].values.size()); }
    std::uint64_t point_count() const { return point_count_; }
    const Dimension& dim(int i) const { return dims_[i]; }
    const std::vector<Dimension>& dims() const { return dims_; }

    bool contains(const Point& p) const;
    std::vector<std::string> labels(const Point& p) const;
    Point point_from_labels(const std::vector<std::string>& labels) const;

    // The whole space as one line of JSON (the wire-protocol space document).
    std::string doc_line() const;

    Point random_point(Rng& rng) const;

    // Each gene independently resampled over its full value set with
    // probability 1/d, then one uniformly chosen gene forced to a value
    // different from its value in `p`. Never returns `p`.
    Point mutate(const Point& p, Rng& rng) const;

    std::vector<Point> neighbourhood(const Point& p, int x, Rng& rng) const;

    // Lexicographic order, leftmost dimension slowest. Throws when
    // point_count() exceeds `cap`.
    template <typename F>
    void for_each_point(F&& fn, std::uint64_t cap = kDefaultEnumerationCap) const {
        check_enumerable(cap);
        Point p{std::vector<int>(dims_.size(), 0)};
        while (true) {
            fn(static_cast<const Point&>(p));
            int i = num_dims() - 1;
            while (i >= 0 && ++p.indices[i] == cardinality(i)) p.indices[i--] = 0;
            if (i < 0) return;
        }
    }
    std::vector<Point> all_points(std::uint64_t cap = kDefaultEnumerationCap) const;

    // Rank of a point in enumeration order (mixed-radix value of its indices).
    std::uint64_t rank(const Point& p) const;

    static constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

private:
    void check_enumerable(std::uint64_t cap) const;

    std::vector<Dimension> dims_;
    std::uint64_t point_count_ = 1;
};

}  // namespace ntbea
