#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qwyc/ensemble.hpp"

namespace qwyc {

enum class OrderingKind { training_order, random_order, individual_mse, greedy_mse };

enum class MseTargetSource { labels, full_score };

/// Which fixed ordering to produce. `seed` is required for random
/// orderings; `target_source` selects the regression target for the MSE
/// orderings (labels as 0/1 reals, or the full ensemble score, which
/// needs no labels).
struct OrderingSpec {
    OrderingKind kind = OrderingKind::training_order;
    std::optional<std::uint64_t> seed;
    MseTargetSource target_source = MseTargetSource::labels;

    void validate() const;
};

/// Identity permutation: the order the base models were trained in.
std::vector<int> order_training(std::size_t n_models);

/// Seeded uniform permutation (Fisher–Yates over a fixed PRNG, so the
/// same seed always gives the same order).
std::vector<int> order_random(std::size_t n_models, std::uint64_t seed);

/// Models sorted by ascending mean squared error of their column against
/// `targets`; ties keep the lower model index.
std::vector<int> order_individual_mse(const ScoreMatrix& sm, const std::vector<double>& targets);

/// First model by individual MSE, then greedily the model whose addition
/// to the partial ensemble sum minimizes the MSE against `targets`.
std::vector<int> order_greedy_mse(const ScoreMatrix& sm, const std::vector<double>& targets);

/// Regression targets for the MSE orderings: labels as 0/1 reals when
/// requested (error if absent), otherwise the full ensemble scores.
std::vector<double> mse_targets(const ScoreMatrix& sm, const FullReference& ref,
                                MseTargetSource source);

/// Resolves an OrderingSpec to a permutation.
std::vector<int> make_order(const OrderingSpec& spec, const ScoreMatrix& sm,
                            const FullReference& ref);

}  // namespace qwyc
