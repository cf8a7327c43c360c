#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "qwyc/cascade.hpp"
#include "qwyc/ensemble.hpp"

namespace qwyc {

/// Binned early-stopping policy: per stage, a hash map from the bin of
/// the running sum to the mean/standard deviation of the gap between the
/// running sum and the full score on the fit set. An example whose bin
/// was never seen during fitting is evaluated in full.
struct FanPolicy {
    struct BinStats {
        double mu = 0.0;
        double sigma = 0.0;
        long long count = 0;
    };

    std::vector<int> order;
    double gamma = 0.0;
    double lambda = 0.0;
    double beta = 0.0;
    std::vector<std::unordered_map<long long, BinStats>> stages;

    std::size_t n_stages() const { return order.size(); }
    void validate() const;

    std::string to_json() const;
    static FanPolicy from_json(const std::string& text);
};

/// Bin index of a partial score: floor division by the bin width.
long long bin_of(double partial_score, double lambda);

/// Sign convention for the fitted gaps. The default accumulates
/// running-sum minus full-score, which makes the decision rule coherent;
/// the flipped variant exists for replication studies.
enum class FanDiffSign { g_minus_f, f_minus_g };

FanPolicy fit_fan(const ScoreMatrix& sm, const std::vector<int>& order, double gamma,
                  double lambda, double beta, FanDiffSign sign = FanDiffSign::g_minus_f);

EvalOutcome evaluate_fan(const FanPolicy& policy, std::span<const double> row,
                         const CostVector& costs);

Metrics evaluate_fan_matrix(const FanPolicy& policy, const ScoreMatrix& sm,
                            const CostVector& costs, const FullReference& ref);

}  // namespace qwyc
