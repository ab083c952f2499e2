#include "ntbea/optimizer.hpp"

#include <string>

#include "ntbea/errors.hpp"

namespace ntbea {

void NtbeaSettings::validate() const {
    std::string problems;
    auto add = [&](const char* msg) {
        if (!problems.empty()) problems += "; ";
        problems += msg;
    };
    if (iterations < 1) add("iterations must be >= 1");
    if (k < 0) add("k must be >= 0");
    if (eps <= 0) add("eps must be > 0");
    if (neighbourhood_size < 1) add("neighbourhood size must be >= 1");
    if (scheme.kind != WeightingScheme::Kind::Vanilla && scheme.T <= 0)
        add("T must be > 0");
    if (!problems.empty()) throw ConfigError("invalid settings: " + problems);
}

RunResult run(const SearchSpace& space, const Evaluator& evaluator,
              const NtbeaSettings& settings) {
    settings.validate();
    Rng rng = make_rng(settings.seed);
    NTupleModel model(space);
    std::set<Point> visited;
    RunRecord record;

    Point theta = space.random_point(rng);
    for (std::uint64_t iter = 0; iter < settings.iterations; ++iter) {
        double fitness;
        try {
            fitness = evaluator(theta, rng);
        } catch (const std::exception& e) {
            throw RunError("evaluator failed at iteration " + std::to_string(iter) +
                               ": " + e.what(),
                           iter);
        }
        model.add_evaluation(theta, fitness);
        visited.insert(theta);
        if (settings.keep_trace) record.trace.push_back({iter, theta, fitness});

        if (iter + 1 == settings.iterations) break;  // budget spent; no move needed
        auto neighbours =
            space.neighbourhood(theta, settings.neighbourhood_size, rng);
        // argmax of UCB; exact ties resolved uniformly at random (reservoir).
        double best = 0.0;
        int ties = 0;
        for (const auto& q : neighbours) {
            double u = model.ucb(q, settings.k, settings.eps, settings.scheme);
            if (ties == 0 || u > best) {
                best = u;
                ties = 1;
                theta = q;
            } else if (u == best) {
                ++ties;
                if (std::uniform_int_distribution<int>(0, ties - 1)(rng) == 0) theta = q;
            }
        }
    }

    auto [rec, est] = recommend(model, visited, settings.scheme);
    record.recommended = rec;
    record.model_estimate = est;
    record.evaluations_used = settings.iterations;
    return RunResult{std::move(model), std::move(record)};
}

std::pair<Point, double> recommend(const NTupleModel& model,
                                   const std::set<Point>& visited,
                                   const WeightingScheme& scheme) {
    if (visited.empty()) throw Error("cannot recommend from an empty visited set");
    const Point* best_point = nullptr;
    double best_est = 0.0;
    std::uint64_t best_count = 0;
    for (const auto& p : visited) {  // lexicographic order; first win keeps the smaller
        double est = model.estimate(p, scheme);
        std::uint64_t count = model.full_tuple_count(p);
        if (!best_point || est > best_est || (est == best_est && count > best_count)) {
            best_point = &p;
            best_est = est;
            best_count = count;
        }
    }
    return {*best_point, best_est};
}

}  // namespace ntbea
