#pragma once

#include <cstdint>
#include <vector>

#include "qwyc/cascade.hpp"
#include "qwyc/ensemble.hpp"

namespace qwyc {

/// Result of the exhaustive order search. `best_order` is the
/// lexicographically first order achieving `best_cost`; `minimizers`
/// lists every cost-tied order (capped at `kMaxStoredMinimizers`, with
/// the true count in `n_minimizers`).
struct OracleResult {
    static constexpr std::size_t kMaxStoredMinimizers = 64;

    std::vector<int> best_order;
    double best_cost = 0.0;
    CascadePolicy policy;
    std::uint64_t search_space_size = 0;  // T!
    std::vector<std::vector<int>> minimizers;
    std::uint64_t n_minimizers = 0;

    std::string to_json() const;
};

/// Enumerates every order (T! of them) and fits per-stage thresholds with
/// the same maximal/minimal-feasible rule the greedy optimizer uses, then
/// returns the cheapest. Only alpha = 0 is supported; T is capped by
/// `max_models` to keep the factorial enumeration tractable.
OracleResult brute_force_optimal(const ScoreMatrix& sm, const CostVector& costs,
                                 double alpha = 0.0, int max_models = 8);

/// A position-independent instance: every example is assigned to a small
/// set of models (usually one, sometimes two) that share its full score
/// with a common sign; all other models output 0. The matrix always
/// contains at least one unassigned example and at least one negative
/// example per model, which pins each model's early-classifiable set to
/// exactly its assigned examples regardless of where it sits in the
/// order. Shared examples make the cover sets overlap, so the greedy
/// order can be genuinely suboptimal.
struct PipelineInstance {
    ScoreMatrix matrix;
    std::vector<std::vector<int>> assigned_models;  // empty = all-zero row
};

PipelineInstance gen_pipeline_instance(std::uint64_t seed, std::size_t n_models,
                                       std::size_t n_examples);

/// The worked 8-example / 3-model instance shipped under data/: model 0
/// classifies {e1,e2}, model 1 {e3,e4,e5}, model 2 {e5,...,e8}; the
/// optimal cascade costs 7/4 with unit costs.
ScoreMatrix tiny_pipeline_instance();

/// Greedy cost divided by brute-force cost at alpha = 0 (>= 1 because the
/// oracle enumerates the greedy order too).
double approximation_ratio(const ScoreMatrix& sm, const CostVector& costs);

}  // namespace qwyc
