#pragma once

#include <cstdint>
#include <utility>

#include "qwyc/gbt.hpp"

namespace qwyc {

/// Synthetic binary income-style classification data: 12 numeric
/// features, roughly one quarter positive, a nonlinear latent score with
/// logistic label noise. Most of the mass sits far from the decision
/// boundary, so a well-trained additive model produces many confidently
/// classifiable examples. Fully deterministic in (n, seed).
TabularData synthetic_income_dataset(std::size_t n_rows, std::uint64_t seed);

/// Seeded shuffle split into (train, test) with an 80/20 ratio.
std::pair<TabularData, TabularData> split_tabular(const TabularData& data, std::uint64_t seed);

}  // namespace qwyc
