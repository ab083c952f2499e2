#include "ntbea/benchmarks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "ntbea/errors.hpp"
#include "ntbea/text.hpp"

namespace ntbea {

namespace {

// Dixon & Szego constant tables (the standard published values).
constexpr std::array<double, 4> kHartAlpha = {1.0, 1.2, 3.0, 3.2};

constexpr double kH3A[4][3] = {
    {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
constexpr double kH3P[4][3] = {{0.3689, 0.1170, 0.2673},
                               {0.4699, 0.4387, 0.7470},
                               {0.1091, 0.8732, 0.5547},
                               {0.0381, 0.5743, 0.8828}};

constexpr double kH6A[4][6] = {{10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
                               {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
                               {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
                               {17.0, 8.0, 0.05, 10.0, 0.1, 14.0}};
constexpr double kH6P[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                               {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                               {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                               {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};

template <int D, typename A, typename P>
double hartmann(const std::vector<double>& x, const A& a, const P& p) {
    double outer = 0.0;
    for (int i = 0; i < 4; ++i) {
        double inner = 0.0;
        for (int j = 0; j < D; ++j) {
            double diff = x[j] - p[i][j];
            inner += a[i][j] * diff * diff;
        }
        outer += kHartAlpha[i] * std::exp(-inner);
    }
    return -outer;
}

double branin(double x, double y) {
    constexpr double a = 1.0;
    const double b = 5.1 / (4.0 * std::numbers::pi * std::numbers::pi);
    const double c = 5.0 / std::numbers::pi;
    constexpr double r = 6.0;
    constexpr double s = 10.0;
    const double t = 1.0 / (8.0 * std::numbers::pi);
    double u = y - b * x * x + c * x - r;
    return a * u * u + s * (1.0 - t) * std::cos(x) + s;
}

double goldstein_price(double x, double y) {
    double u = x + y + 1.0;
    double f1 = 1.0 + u * u *
                          (19.0 - 14.0 * x + 3.0 * x * x - 14.0 * y + 6.0 * x * y +
                           3.0 * y * y);
    double v = 2.0 * x - 3.0 * y;
    double f2 = 30.0 + v * v *
                           (18.0 - 32.0 * x + 12.0 * x * x + 48.0 * y -
                            36.0 * x * y + 27.0 * y * y);
    return f1 * f2;
}

struct Box {
    double lo, hi;
};

std::vector<Box> domain_of(BenchmarkId id) {
    switch (id) {
        case BenchmarkId::Hartmann3: return std::vector<Box>(3, {0.0, 1.0});
        case BenchmarkId::Hartmann6: return std::vector<Box>(6, {0.0, 1.0});
        case BenchmarkId::Branin: return {{-5.0, 10.0}, {0.0, 15.0}};
        case BenchmarkId::GoldsteinPrice: return {{-2.0, 2.0}, {-2.0, 2.0}};
    }
    throw Error("unknown benchmark id");
}

int divisions_of(BenchmarkId id) {
    switch (id) {
        case BenchmarkId::Hartmann3: return 10;
        case BenchmarkId::Hartmann6: return 5;
        case BenchmarkId::Branin:
        case BenchmarkId::GoldsteinPrice: return 20;
    }
    throw Error("unknown benchmark id");
}

}  // namespace

std::optional<BenchmarkId> parse_benchmark_id(std::string_view name) {
    if (name == "hartmann3") return BenchmarkId::Hartmann3;
    if (name == "hartmann6") return BenchmarkId::Hartmann6;
    if (name == "branin") return BenchmarkId::Branin;
    if (name == "goldsteinprice") return BenchmarkId::GoldsteinPrice;
    return std::nullopt;
}

std::string_view benchmark_name(BenchmarkId id) {
    switch (id) {
        case BenchmarkId::Hartmann3: return "hartmann3";
        case BenchmarkId::Hartmann6: return "hartmann6";
        case BenchmarkId::Branin: return "branin";
        case BenchmarkId::GoldsteinPrice: return "goldsteinprice";
    }
    return "?";
}

double continuous_value(BenchmarkId id, const std::vector<double>& x) {
    auto dom = domain_of(id);
    if (x.size() != dom.size())
        throw Error("benchmark input has wrong dimension count");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < dom[i].lo || x[i] > dom[i].hi)
            throw Error("benchmark input outside the standard domain");
    switch (id) {
        case BenchmarkId::Hartmann3: return hartmann<3>(x, kH3A, kH3P);
        case BenchmarkId::Hartmann6: return hartmann<6>(x, kH6A, kH6P);
        case BenchmarkId::Branin: return branin(x[0], x[1]);
        case BenchmarkId::GoldsteinPrice: return goldstein_price(x[0], x[1]);
    }
    throw Error("unknown benchmark id");
}

double to_probability(BenchmarkId id, double raw) {
    switch (id) {
        case BenchmarkId::Hartmann3:
        case BenchmarkId::Hartmann6:
            return std::clamp(-raw / 4.0, 0.0, 1.0);
        case BenchmarkId::Branin:
            return std::max(0.0, (-raw + 10.0) / 12.0);
        case BenchmarkId::GoldsteinPrice:
            return std::max(0.0, (-raw + 400.0) / 500.0);
    }
    throw Error("unknown benchmark id");
}

double bernoulli_pm1(double p, Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p ? 1.0 : -1.0;
}

BenchmarkInstance::BenchmarkInstance(BenchmarkId id, SearchSpace space,
                                     std::vector<double> p_table)
    : id_(id), space_(std::move(space)), p_table_(std::move(p_table)) {}

BenchmarkInstance BenchmarkInstance::build(BenchmarkId id) {
    auto dom = domain_of(id);
    const int k = divisions_of(id);
    std::vector<Dimension> dims;
    for (std::size_t j = 0; j < dom.size(); ++j) {
        Dimension d;
        d.name = "x" + std::to_string(j + 1);
        for (int i = 0; i < k; ++i) {
            // Left edge of each of the k equal intervals spanning [lo, hi].
            double v = dom[j].lo + (dom[j].hi - dom[j].lo) * i / k;
            d.values.push_back(format_double(v));
        }
        dims.push_back(std::move(d));
    }
    SearchSpace space(std::move(dims));

    std::vector<double> table(space.point_count());
    std::vector<double> coords(dom.size());
    space.for_each_point([&](const Point& p) {
        for (std::size_t j = 0; j < dom.size(); ++j)
            coords[j] = dom[j].lo + (dom[j].hi - dom[j].lo) * p.indices[j] / k;
        table[space.rank(p)] = to_probability(id, continuous_value(id, coords));
    });
    return BenchmarkInstance(id, std::move(space), std::move(table));
}

double BenchmarkInstance::true_p(const Point& p) const {
    if (!space_.contains(p)) throw Error("point does not belong to this benchmark's space");
    return p_table_[space_.rank(p)];
}

std::vector<double> BenchmarkInstance::coordinates(const Point& p) const {
    if (!space_.contains(p)) throw Error("point does not belong to this benchmark's space");
    auto dom = domain_of(id_);
    const int k = divisions_of(id_);
    std::vector<double> coords(dom.size());
    for (std::size_t j = 0; j < dom.size(); ++j)
        coords[j] = dom[j].lo + (dom[j].hi - dom[j].lo) * p.indices[j] / k;
    return coords;
}

double BenchmarkInstance::noisy_evaluate(const Point& p, Rng& rng) const {
    return bernoulli_pm1(true_p(p), rng);
}

Evaluator BenchmarkInstance::evaluator() const {
    return [this](const Point& p, Rng& rng) { return noisy_evaluate(p, rng); };
}

OracleReport grid_oracle(const BenchmarkInstance& inst, int top_k) {
    if (top_k < 1) throw Error("top_k must be >= 1");
    OracleReport report;
    std::vector<OracleEntry> all;
    all.reserve(inst.space().point_count());
    std::uint64_t nonzero = 0;
    inst.space().for_each_point([&](const Point& p) {
        double v = inst.true_p(p);
        all.push_back({p, v});
        if (v > 0.0) ++nonzero;
    });
    std::stable_sort(all.begin(), all.end(),
                     [](const OracleEntry& a, const OracleEntry& b) { return a.p > b.p; });
    report.max_p = all.front().p;
    for (const auto& e : all) {
        if (e.p == report.max_p) report.argmax.push_back(e.point);
        else break;
    }
    report.nonzero_fraction =
        static_cast<double>(nonzero) / static_cast<double>(all.size());
    std::size_t n = std::min<std::size_t>(top_k, all.size());
    report.top_k.assign(all.begin(), all.begin() + n);
    return report;
}

}  // namespace ntbea
