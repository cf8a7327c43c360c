#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qwyc/ensemble.hpp"

namespace qwyc {

/// A threshold cascade: evaluate models in `order`; after stage r the
/// running sum g classifies positive if g > eps_pos[r-1], negative if
/// g < eps_neg[r-1], and otherwise continues. The last stage always
/// decides by the full score against beta, so its thresholds are stored
/// as -inf/+inf sentinels. Model indices are 0-based columns of the
/// score matrix.
struct CascadePolicy {
    std::vector<int> order;
    std::vector<double> eps_neg;
    std::vector<double> eps_pos;
    double beta = 0.0;

    std::size_t n_stages() const { return order.size(); }
    void validate() const;

    std::string to_json() const;
    static CascadePolicy from_json(const std::string& text);
};

struct EvalOutcome {
    bool positive = false;
    int stop_stage = 0;       // 1-based
    double partial_score = 0.0;
    double cost_paid = 0.0;
};

struct Metrics {
    double mean_cost = 0.0;
    double mean_models = 0.0;
    double pct_diff = 0.0;
    std::optional<double> accuracy;
    std::vector<long long> stop_histogram;  // index r -> count stopping at stage r+1
    long long n_diff = 0;                   // integer disagreement count
    std::size_t n_examples = 0;

    std::string to_json() const;
};

EvalOutcome evaluate_example(const CascadePolicy& policy, std::span<const double> row,
                             const CostVector& costs);

Metrics evaluate_matrix(const CascadePolicy& policy, const ScoreMatrix& sm,
                        const CostVector& costs, const FullReference& ref);

/// Counts of the threshold partition after stage r (over all examples):
/// positive / negative / uncertain by the stage-r thresholds, and the
/// examples still uncertain at every stage <= r. r = 0 is allowed and
/// returns (0, 0, N, N).
struct StagePartition {
    std::size_t n_positive = 0;
    std::size_t n_negative = 0;
    std::size_t n_uncertain = 0;
    std::size_t n_cascade_uncertain = 0;  // |C_r|
};

StagePartition stage_partition(const CascadePolicy& policy, const ScoreMatrix& sm, int r);

}  // namespace qwyc
