#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "ntbea/errors.hpp"
#include "ntbea/ntuple_model.hpp"
#include "ntbea/search_space.hpp"

using namespace ntbea;

namespace {

SearchSpace make_space(const std::vector<int>& cards) {
    std::vector<Dimension> dims;
    for (std::size_t i = 0; i < cards.size(); ++i) {
        Dimension d;
        d.name = "d" + std::to_string(i);
        for (int v = 0; v < cards[i]; ++v) d.values.push_back("v" + std::to_string(v));
        dims.push_back(std::move(d));
    }
    return SearchSpace(std::move(dims));
}

// A from-scratch re-derivation of the model semantics on plain ordered maps,
// structured differently from NTupleModel on purpose: patterns are keyed by
// (dimension subset, value tuple) pairs and children are recomputed on the
// fly. Used to cross-check estimates to 1e-12.
struct ReferenceModel {
    int d;
    std::vector<std::vector<int>> sets;
    std::map<std::pair<std::vector<int>, std::vector<int>>, TupleStats> table;
    TupleStats global;

    explicit ReferenceModel(int dims) : d(dims) {
        std::set<std::vector<int>> uniq;
        std::vector<int> full(d);
        std::iota(full.begin(), full.end(), 0);
        uniq.insert(full);
        for (int a = 0; a < d; ++a) {
            uniq.insert({a});
            for (int b = a + 1; b < d; ++b) uniq.insert({a, b});
        }
        sets.assign(uniq.begin(), uniq.end());
    }

    static std::vector<int> project(const std::vector<int>& s, const Point& p) {
        std::vector<int> vals;
        for (int dim : s) vals.push_back(p.indices[dim]);
        return vals;
    }

    void add(const Point& p, double v) {
        ++global.count;
        global.sum += v;
        for (const auto& s : sets) {
            auto& st = table[{s, project(s, p)}];
            ++st.count;
            st.sum += v;
        }
    }

    TupleStats at(const std::vector<int>& s, const Point& p) const {
        auto it = table.find({s, project(s, p)});
        return it == table.end() ? TupleStats{} : it->second;
    }

    double vanilla(const Point& p) const {
        double total = 0.0;
        int nonempty = 0;
        for (const auto& s : sets) {
            TupleStats st = at(s, p);
            if (st.count > 0) {
                total += st.mean();
                ++nonempty;
            }
        }
        return nonempty == 0 ? 0.0 : total / nonempty;
    }

    static double w(const WeightingScheme& sch, std::uint64_t n) {
        const double x = static_cast<double>(n);
        switch (sch.kind) {
            case WeightingScheme::Kind::Linear: return std::min(x / sch.T, 1.0);
            case WeightingScheme::Kind::InverseRoot:
                return 1.0 - std::sqrt(sch.T / (x + sch.T));
            case WeightingScheme::Kind::Inverse: return 1.0 - sch.T / (x + sch.T);
            case WeightingScheme::Kind::Exponential: return 1.0 - std::exp(-x / sch.T);
            default: throw std::logic_error("vanilla has no weight");
        }
    }

    std::vector<std::vector<int>> children(const std::vector<int>& s) const {
        const std::size_t next = s.size() > 2 ? 2 : s.size() - 1;
        std::vector<std::vector<int>> out;
        if (next == 0) return out;
        for (const auto& c : sets)
            if (c.size() == next && std::includes(s.begin(), s.end(), c.begin(), c.end()))
                out.push_back(c);
        return out;
    }

    double value(const std::vector<int>& s, const Point& p, const WeightingScheme& sch) const {
        auto kids = children(s);
        double below;
        if (kids.empty()) {
            below = global.count > 0 ? global.mean() : 0.0;
        } else {
            below = 0.0;
            for (const auto& c : kids) below += value(c, p, sch);
            below /= static_cast<double>(kids.size());
        }
        TupleStats st = at(s, p);
        if (st.count == 0) return below;
        const double wn = w(sch, st.count);
        return wn * st.mean() + (1.0 - wn) * below;
    }

    double weighted(const Point& p, const WeightingScheme& sch) const {
        std::vector<int> full(d);
        std::iota(full.begin(), full.end(), 0);
        return value(full, p, sch);
    }

    double bonus(const Point& p, double k, double eps) const {
        const double n_total = static_cast<double>(global.count);
        double total = 0.0;
        for (const auto& s : sets) {
            TupleStats st = at(s, p);
            total += k * std::sqrt(std::log(n_total) /
                                   (static_cast<double>(st.count) + eps));
        }
        return total / static_cast<double>(sets.size());
    }
};

}  // namespace

TEST_CASE("dimension sets cover the full tuple, pairs and singles") {
    SearchSpace s5 = make_space({2, 2, 2, 2, 2});
    NTupleModel m5(s5);
    auto sets = m5.dimension_sets();
    CHECK(sets.size() == 1 + 10 + 5);
    CHECK(sets.front() == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(sets.back() == std::vector<int>{4});

    // d=2: the full tuple IS the only pair; d=1: it is the only single.
    CHECK(NTupleModel(make_space({2, 2})).dimension_sets().size() == 3);
    CHECK(NTupleModel(make_space({4})).dimension_sets().size() == 1);
}

TEST_CASE("add_evaluation accumulates counts and sums per pattern") {
    SearchSpace sp = make_space({2, 2});
    NTupleModel m(sp);
    m.add_evaluation(Point{{0, 0}}, 1.0);
    m.add_evaluation(Point{{0, 1}}, -1.0);

    CHECK(m.total_iterations() == 2);
    auto d0 = m.stats_for({0}, Point{{0, 0}});
    REQUIRE(d0.has_value());
    CHECK(d0->count == 2);
    CHECK(d0->sum == 0.0);
    auto d1 = m.stats_for({1}, Point{{0, 0}});
    REQUIRE(d1.has_value());
    CHECK(d1->count == 1);
    CHECK(d1->sum == 1.0);
    auto pair = m.stats_for({0, 1}, Point{{0, 1}});
    REQUIRE(pair.has_value());
    CHECK(pair->count == 1);
    CHECK(pair->sum == -1.0);
    CHECK_FALSE(m.stats_for({0}, Point{{1, 0}}).has_value());
    CHECK(m.full_tuple_count(Point{{0, 0}}) == 1);
    CHECK(m.full_tuple_count(Point{{1, 1}}) == 0);
}

TEST_CASE("count sums per dimension set equal the number of evaluations") {
    SearchSpace sp = make_space({3, 3, 3});
    NTupleModel m(sp);
    Rng rng = make_rng(42);
    for (int i = 0; i < 30; ++i) m.add_evaluation(sp.random_point(rng), 0.25 * (i % 5));
    for (const auto& dims : m.dimension_sets()) CHECK(m.count_sum(dims) == 30);
    CHECK(m.total_iterations() == 30);
}

TEST_CASE("vanilla estimate is the mean of matching pattern means") {
    SearchSpace sp = make_space({2, 2});
    NTupleModel m(sp);
    CHECK(m.vanilla_estimate(Point{{0, 0}}) == 0.0);  // empty model

    m.add_evaluation(Point{{0, 0}}, 1.0);
    m.add_evaluation(Point{{0, 1}}, -1.0);
    // (0,0): pair mean 1, d0 mean 0, d1 mean 1 -> 2/3.
    CHECK(m.vanilla_estimate(Point{{0, 0}}) == doctest::Approx(2.0 / 3).epsilon(1e-15));
    // (1,1): only d1 matches (mean -1); zero-count patterns are skipped.
    CHECK(m.vanilla_estimate(Point{{1, 1}}) == doctest::Approx(-1.0).epsilon(1e-15));
    // (1,0) matches nothing with data except d1 value 0 (mean 1).
    CHECK(m.vanilla_estimate(Point{{1, 0}}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("weight functions hit their exact anchor values") {
    const double T = 15.0;
    auto lin = WeightingScheme::parse("lin", T);
    auto inv = WeightingScheme::parse("inv", T);
    auto sqr = WeightingScheme::parse("sqrt", T);
    auto expo = WeightingScheme::parse("exp", T);

    for (const auto& s : {lin, inv, sqr, expo}) CHECK(weight(s, 0) == 0.0);

    CHECK(weight(lin, 15) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(weight(lin, 30) == 1.0);  // clamped
    CHECK(weight(lin, 3) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(weight(inv, 15) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(weight(inv, 45) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(weight(sqr, 15) == doctest::Approx(1.0 - std::sqrt(0.5)).epsilon(1e-15));
    CHECK(weight(expo, 15) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));

    for (const auto& s : {lin, inv, sqr, expo}) {
        double prev = -1.0;
        for (std::uint64_t n = 0; n <= 150; ++n) {
            double w = weight(s, n);
            CHECK(w >= prev);
            CHECK(w <= 1.0);
            prev = w;
        }
    }
    CHECK_THROWS_AS(weight(WeightingScheme{}, 5), Error);
}

TEST_CASE("scheme names parse and print") {
    CHECK(WeightingScheme::parse("std").kind == WeightingScheme::Kind::Vanilla);
    CHECK(WeightingScheme::parse("lin").kind == WeightingScheme::Kind::Linear);
    CHECK(WeightingScheme::parse("sqrt").kind == WeightingScheme::Kind::InverseRoot);
    CHECK(WeightingScheme::parse("inv").kind == WeightingScheme::Kind::Inverse);
    CHECK(WeightingScheme::parse("exp").kind == WeightingScheme::Kind::Exponential);
    CHECK_THROWS_AS(WeightingScheme::parse("bogus"), ConfigError);
    for (const char* n : {"std", "lin", "sqrt", "inv", "exp"})
        CHECK(WeightingScheme::parse(n).name() == n);
}

TEST_CASE("weighted estimate saturates to the tuple mean once trusted") {
    SearchSpace sp = make_space({2, 2});
    NTupleModel m(sp);
    auto lin = WeightingScheme::parse("lin", 15.0);
    CHECK(m.weighted_estimate(Point{{0, 0}}, lin) == 0.0);  // empty model
    for (int i = 0; i < 15; ++i) m.add_evaluation(Point{{0, 0}}, 1.0);
    // n=15 at every matching pattern -> w=1 -> the recursion truncates.
    CHECK(m.weighted_estimate(Point{{0, 0}}, lin) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("weighted estimate hand example including zero-count pass-through") {
    SearchSpace sp = make_space({2, 2});
    NTupleModel m(sp);
    m.add_evaluation(Point{{0, 0}}, 1.0);
    m.add_evaluation(Point{{0, 1}}, -1.0);
    auto lin = WeightingScheme::parse("lin", 15.0);

    // V(pair(0,1)): w=1/15, mean -1; children V({0}=0)=0, V({1}=1)=-1/15.
    //   => (1/15)(-1) + (14/15) * (-1/30) = -22/225.
    CHECK(m.weighted_estimate(Point{{0, 1}}, lin) ==
          doctest::Approx(-22.0 / 225).epsilon(1e-12));
    // (1,0): full and {0}=1 have no data -> pure pass-through to
    //   avg(V({0}=1)=global-chain=0... , V({1}=0)=1/15)/... = 1/30.
    CHECK(m.weighted_estimate(Point{{1, 0}}, lin) == doctest::Approx(1.0 / 30).epsilon(1e-12));
    CHECK(m.estimate(Point{{1, 0}}, lin) == m.weighted_estimate(Point{{1, 0}}, lin));
    CHECK(m.estimate(Point{{1, 0}}, WeightingScheme{}) == m.vanilla_estimate(Point{{1, 0}}));
}

TEST_CASE("exploration bonus averages per-pattern uncertainty terms") {
    SearchSpace sp = make_space({2, 2});
    NTupleModel m(sp);
    CHECK_THROWS_AS(m.exploration_bonus(Point{{0, 0}}, 1.0, 0.5), Error);  // N=0

    m.add_evaluation(Point{{0, 0}}, 1.0);
    CHECK(m.exploration_bonus(Point{{0, 0}}, 1.0, 0.5) == 0.0);  // log 1 = 0

    m.add_evaluation(Point{{0, 1}}, -1.0);
    const double ln2 = std::log(2.0);
    // (0,0): pair count 1, {0} count 2, {1} count 1.
    double expected = (std::sqrt(ln2 / 1.5) + std::sqrt(ln2 / 2.5) + std::sqrt(ln2 / 1.5)) / 3;
    CHECK(m.exploration_bonus(Point{{0, 0}}, 1.0, 0.5) ==
          doctest::Approx(expected).epsilon(1e-12));
    // (1,0): the pair and {0}=1 are unseen (n=0 terms are still counted);
    // {1}=0 was seen once via (0,0).
    CHECK(m.exploration_bonus(Point{{1, 0}}, 1.0, 0.5) ==
          doctest::Approx((2 * std::sqrt(ln2 / 0.5) + std::sqrt(ln2 / 1.5)) / 3)
              .epsilon(1e-12));
    CHECK(m.exploration_bonus(Point{{0, 0}}, 0.0, 0.5) == 0.0);
    // k scales linearly.
    CHECK(m.exploration_bonus(Point{{0, 0}}, 2.0, 0.5) ==
          doctest::Approx(2 * expected).epsilon(1e-12));
}

TEST_CASE("ucb adds the same bonus regardless of scheme") {
    SearchSpace sp = make_space({3, 3});
    NTupleModel m(sp);
    Rng rng = make_rng(7);
    for (int i = 0; i < 20; ++i) m.add_evaluation(sp.random_point(rng), (i % 3) - 1.0);

    Point p{{1, 2}};
    auto vanilla = WeightingScheme{};
    auto inv = WeightingScheme::parse("inv");
    CHECK(m.ucb(p, 0.0, 0.5, vanilla) == m.estimate(p, vanilla));
    CHECK(m.ucb(p, 0.0, 0.5, inv) == m.estimate(p, inv));
    const double bonus_v = m.ucb(p, 1.0, 0.5, vanilla) - m.estimate(p, vanilla);
    const double bonus_i = m.ucb(p, 1.0, 0.5, inv) - m.estimate(p, inv);
    CHECK(bonus_v == doctest::Approx(bonus_i).epsilon(1e-12));
}

TEST_CASE("estimates match an independent re-derivation on a 3^3 space") {
    SearchSpace sp = make_space({3, 3, 3});
    NTupleModel model(sp);
    ReferenceModel ref(3);

    // Deterministic scripted evaluations from a raw LCG (independent of Rng).
    std::uint64_t s = 0x243F6A8885A308D3ULL;
    auto next = [&s]() {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        return s;
    };
    for (int i = 0; i < 50; ++i) {
        Point p{{static_cast<int>((next() >> 33) % 3), static_cast<int>((next() >> 33) % 3),
                 static_cast<int>((next() >> 33) % 3)}};
        double v = static_cast<double>((next() >> 20) % 2001) / 1000.0 - 1.0;
        model.add_evaluation(p, v);
        ref.add(p, v);
    }

    std::vector<WeightingScheme> schemes;
    for (const char* n : {"lin", "sqrt", "inv", "exp"}) {
        schemes.push_back(WeightingScheme::parse(n, 15.0));
        schemes.push_back(WeightingScheme::parse(n, 7.5));
    }
    int checked = 0;
    for (const Point& p : sp.all_points()) {
        CHECK(model.vanilla_estimate(p) == doctest::Approx(ref.vanilla(p)).epsilon(1e-12));
        CHECK(model.exploration_bonus(p, 1.25, 0.5) ==
              doctest::Approx(ref.bonus(p, 1.25, 0.5)).epsilon(1e-12));
        for (const auto& sch : schemes) {
            CHECK(model.weighted_estimate(p, sch) ==
                  doctest::Approx(ref.weighted(p, sch)).epsilon(1e-12));
        }
        ++checked;
    }
    CHECK(checked == 27);
}

TEST_CASE("weighted estimates stay inside the span of observed means") {
    SearchSpace sp = make_space({3, 3});
    NTupleModel m(sp);
    Rng rng = make_rng(99);
    for (int i = 0; i < 40; ++i)
        m.add_evaluation(sp.random_point(rng), std::sin(static_cast<double>(i)));
    for (const Point& p : sp.all_points()) {
        for (const char* n : {"lin", "sqrt", "inv", "exp"}) {
            double v = m.weighted_estimate(p, WeightingScheme::parse(n));
            CHECK(v <= 1.0 + 1e-12);
            CHECK(v >= -1.0 - 1e-12);
        }
    }
}

TEST_CASE("dump lists the global tuple then patterns in stored order") {
    SearchSpace sp = make_space({2, 2});
    NTupleModel m(sp);
    m.add_evaluation(Point{{0, 0}}, 1.0);
    m.add_evaluation(Point{{0, 1}}, -1.0);
    CHECK(m.dump() ==
          "dims=[] vals=[] n=2 sum=0\n"
          "dims=[0,1] vals=[0,0] n=1 sum=1\n"
          "dims=[0,1] vals=[0,1] n=1 sum=-1\n"
          "dims=[0] vals=[0] n=2 sum=0\n"
          "dims=[1] vals=[0] n=1 sum=1\n"
          "dims=[1] vals=[1] n=1 sum=-1\n");
}
