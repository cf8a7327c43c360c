#include "qwyc/oracle.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "qwyc/errors.hpp"
#include "qwyc/optimizer.hpp"

namespace qwyc {

std::string OracleResult::to_json() const {
    nlohmann::ordered_json j;
    j["best_order"] = best_order;
    j["best_cost"] = best_cost;
    j["search_space_size"] = search_space_size;
    j["n_minimizers"] = n_minimizers;
    j["minimizers"] = minimizers;
    j["policy"] = nlohmann::ordered_json::parse(policy.to_json());
    return j.dump(2) + "\n";
}

OracleResult brute_force_optimal(const ScoreMatrix& sm, const CostVector& costs, double alpha,
                                 int max_models) {
    sm.validate();
    costs.validate(sm.n_models);
    if (alpha != 0.0)
        throw validation_error("brute-force search is defined for alpha = 0 only");
    if (max_models < 1 || max_models > 10)
        throw validation_error("max_models must lie in [1, 10]");
    if (sm.n_models > static_cast<std::size_t>(max_models))
        throw validation_error("refusing factorial enumeration: matrix has " +
                               std::to_string(sm.n_models) + " models, guard is " +
                               std::to_string(max_models));
    if (sm.n_examples > 10000)
        throw validation_error("brute-force search is guarded to at most 10000 examples");

    DecisionConfig config;
    config.alpha = 0.0;
    config.mode = Mode::two_sided;

    OracleResult res;
    std::vector<int> order(sm.n_models);
    std::iota(order.begin(), order.end(), 0);
    bool first = true;
    do {
        ++res.search_space_size;
        OptimizeTrace trace;
        CascadePolicy policy = thresholds_for_fixed_order(sm, costs, config, order, &trace);
        const double cost = trace.train_mean_cost;
        if (first || cost < res.best_cost) {
            res.best_cost = cost;
            res.best_order = order;
            res.policy = std::move(policy);
            res.minimizers.clear();
            res.minimizers.push_back(order);
            res.n_minimizers = 1;
            first = false;
        } else if (cost == res.best_cost) {
            ++res.n_minimizers;
            if (res.minimizers.size() < OracleResult::kMaxStoredMinimizers)
                res.minimizers.push_back(order);
        }
    } while (std::next_permutation(order.begin(), order.end()));
    return res;
}

PipelineInstance gen_pipeline_instance(std::uint64_t seed, std::size_t n_models,
                                       std::size_t n_examples) {
    if (n_models < 1 || n_models > 6)
        throw validation_error("pipeline generator is guarded to 1..6 models");
    if (n_examples > 48)
        throw validation_error("pipeline generator is guarded to at most 48 examples");
    if (n_examples < n_models + 2)
        throw validation_error("pipeline generator needs at least n_models + 2 examples");

    std::mt19937_64 rng(seed);
    const auto draw = [&](std::size_t k) { return static_cast<std::size_t>(rng() % k); };
    // Magnitudes come from a small grid so that ties between partial
    // scores occur regularly.
    const double magnitudes[] = {0.5, 1.0, 1.5, 2.0};

    // One negative example per model keeps accept-everything thresholds
    // infeasible at every stage; one unassigned all-zero example (a
    // full-score tie, hence positive) keeps reject-everything thresholds
    // infeasible. Together they pin each model's early-classifiable set
    // to exactly its assigned examples.
    std::vector<std::vector<int>> models_of(n_examples);
    std::vector<double> value(n_examples, 0.0);  // per-model share, same sign
    for (std::size_t t = 0; t < n_models; ++t) {
        models_of[t] = {static_cast<int>(t)};
        value[t] = -magnitudes[draw(4)];
    }
    // Row n_models stays unassigned: the guaranteed all-zero example.
    for (std::size_t i = n_models + 1; i < n_examples; ++i) {
        if (draw(8) == 0) continue;  // leave a few more rows unassigned
        const int first = static_cast<int>(draw(n_models));
        models_of[i] = {first};
        const double mag = magnitudes[draw(4)];
        value[i] = (draw(2) == 0) ? mag : -mag;
        // Occasionally share the example with a second model (same-sign
        // share): the cover sets then overlap.
        if (n_models >= 2 && draw(4) == 0) {
            int second = static_cast<int>(draw(n_models));
            while (second == first) second = static_cast<int>(draw(n_models));
            models_of[i].push_back(second);
        }
    }

    // Shuffle example order so assignment structure is not positional.
    std::vector<std::size_t> perm(n_examples);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n_examples - 1; i > 0; --i)
        std::swap(perm[i], perm[draw(i + 1)]);

    PipelineInstance inst;
    ScoreMatrix& sm = inst.matrix;
    sm.n_examples = n_examples;
    sm.n_models = n_models;
    sm.scores.assign(n_examples * n_models, 0.0);
    sm.example_ids.emplace();
    inst.assigned_models.resize(n_examples);
    for (std::size_t i = 0; i < n_examples; ++i) {
        const std::size_t src = perm[i];
        inst.assigned_models[i] = models_of[src];
        for (int m : inst.assigned_models[i])
            sm.scores[i * n_models + static_cast<std::size_t>(m)] = value[src];
        sm.example_ids->push_back("e" + std::to_string(i));
    }
    sm.validate();
    return inst;
}

ScoreMatrix tiny_pipeline_instance() {
    ScoreMatrix sm;
    sm.n_examples = 8;
    sm.n_models = 3;
    sm.scores = {
        1,  0,  0,   // e1
        -1, 0,  0,   // e2
        0,  1,  0,   // e3
        0,  1,  0,   // e4
        0,  -1, -1,  // e5
        0,  0,  1,   // e6
        0,  0,  -1,  // e7
        0,  0,  -1,  // e8
    };
    sm.example_ids = std::vector<std::string>{"e1", "e2", "e3", "e4", "e5", "e6", "e7", "e8"};
    sm.validate();
    return sm;
}

double approximation_ratio(const ScoreMatrix& sm, const CostVector& costs) {
    DecisionConfig config;  // alpha = 0, beta = 0, two-sided
    OptimizeTrace greedy_trace;
    optimize_order(sm, costs, config, &greedy_trace);
    OracleResult oracle = brute_force_optimal(sm, costs);
    return greedy_trace.train_mean_cost / oracle.best_cost;
}

}  // namespace qwyc
