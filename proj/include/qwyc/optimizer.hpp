#pragma once

#include <cstdint>
#include <vector>

#include "qwyc/cascade.hpp"
#include "qwyc/ensemble.hpp"

namespace qwyc {

/// Cumulative disagreement budget: floor(alpha * N) total, of which
/// `committed` has already been spent by committed stages.
struct BudgetState {
    long long total_budget = 0;
    long long committed = 0;

    void validate() const;
};

long long budget_from_alpha(double alpha, std::size_t n_examples);

/// One committed stage of a cascade under construction.
struct StageSpec {
    int model = 0;
    double eps_neg = 0.0;
    double eps_pos = 0.0;
};

struct StageOptResult {
    double eps_neg = 0.0;
    double eps_pos = 0.0;
    long long committed_after = 0;  // budget.committed + disagreements added here
    long long n_newly = 0;          // examples this stage classifies early
};

/// Optimizes the stage-r thresholds for `candidate_model` given the fixed
/// prefix. eps_neg is the maximal candidate value (data values of the
/// still-uncertain partial scores, plus reject-all max+1 and reject-none
/// -inf) whose cumulative disagreements fit the budget; eps_pos is then
/// the minimal candidate >= eps_neg under the same budget (always +inf in
/// filter mode). Thresholds that classify no training example are stored
/// as -inf/+inf sentinels.
StageOptResult optimize_stage_thresholds(const ScoreMatrix& sm, const FullReference& ref,
                                         const std::vector<StageSpec>& prefix,
                                         int candidate_model, const BudgetState& budget,
                                         Mode mode);

/// Evaluation-time ratio: cost of running the stage on everything still
/// uncertain, per example it newly classifies. +inf when nothing is
/// classified.
double evaluation_time_ratio(double cost, long long size_c_prev, long long n_newly);

struct StageTraceEntry {
    int model = 0;
    double time_ratio = 0.0;
    long long c_prev = 0;  // |C_{r-1}|
    long long n_newly = 0;
    long long committed_after = 0;
    double eps_neg = 0.0;
    double eps_pos = 0.0;
    // Scan record for the greedy step (empty for fixed orders / final stage).
    std::vector<int> candidate_models;
    std::vector<double> candidate_ratios;
};

struct OptimizeTrace {
    std::vector<StageTraceEntry> stages;
    double train_mean_cost = 0.0;
    long long total_budget = 0;
    long long committed = 0;
};

/// Greedy joint optimization of the model order and per-stage thresholds:
/// at each stage every remaining candidate's thresholds are optimized and
/// the one with the strictly smallest evaluation-time ratio is committed
/// (ties keep the earliest-scanned candidate). The emitted policy's
/// training disagreements never exceed floor(alpha * N).
CascadePolicy optimize_order(const ScoreMatrix& sm, const CostVector& costs,
                             const DecisionConfig& config, OptimizeTrace* trace = nullptr);

/// Stage loop of optimize_order without the candidate scan, for a caller
/// supplied order.
CascadePolicy thresholds_for_fixed_order(const ScoreMatrix& sm, const CostVector& costs,
                                         const DecisionConfig& config,
                                         const std::vector<int>& order,
                                         OptimizeTrace* trace = nullptr);

}  // namespace qwyc
