#include "qwyc/datagen.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "qwyc/errors.hpp"

namespace qwyc {

namespace {

// Uniform in [0, 1) from the top 53 bits; avoids the distribution
// classes, whose output is not pinned by the standard.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal(std::mt19937_64& rng) {
    // Box-Muller; one draw per call keeps the stream simple.
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace

TabularData synthetic_income_dataset(std::size_t n_rows, std::uint64_t seed) {
    if (n_rows < 10) throw validation_error("synthetic dataset needs at least 10 rows");
    std::mt19937_64 rng(seed);

    TabularData data;
    data.n_rows = n_rows;
    data.n_features = 12;
    data.features.resize(n_rows * data.n_features);
    data.labels.resize(n_rows);

    constexpr double kCut = 4.6;

    // The log-odds is a sum of ten axis-aligned step effects, so a small
    // tree ensemble can represent it exactly and its margins calibrate.
    // Repeated weights create ties in the margin lattice, which keeps a
    // genuine population of borderline rows.
    constexpr double kWeights[10] = {1.3, 1.1, 0.9, 0.8, 0.7, 0.6, 0.6, 0.5, 0.45, 0.4};
    constexpr double kSplits[10] = {0.6, -0.2, 0.4, 0.0, 0.8, -0.5, 0.3, 0.1, -0.8, 0.5};

    const auto draw_example = [&](double* x) {
        for (std::size_t f = 0; f < 12; ++f) x[f] = normal(rng);
        double s = 0.0;
        for (std::size_t f = 0; f < 10; ++f)
            if (x[f] > kSplits[f]) s += kWeights[f];
        return s;
    };

    for (std::size_t i = 0; i < n_rows; ++i) {
        double* x = data.features.data() + i * data.n_features;
        double s = draw_example(x);
        if (uniform01(rng) < 0.25) {
            // Over-sample lattice cells near the cut: a solid population
            // of rows whose labels are close to coin flips.
            while (std::abs(s - kCut) >= 0.35) s = draw_example(x);
        }

        // Unit-scale logistic noise: the true log-odds of a positive
        // label is exactly s - kCut.
        double u = uniform01(rng);
        while (u <= 0.0 || u >= 1.0) u = uniform01(rng);
        const double noise = std::log(u / (1.0 - u));
        data.labels[i] = (s + noise > kCut) ? 1 : 0;
    }
    data.validate();
    return data;
}

std::pair<TabularData, TabularData> split_tabular(const TabularData& data, std::uint64_t seed) {
    data.validate();
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> perm(data.n_rows);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = data.n_rows - 1; i > 0; --i)
        std::swap(perm[i], perm[static_cast<std::size_t>(rng() % (i + 1))]);

    const std::size_t n_train = (data.n_rows * 8) / 10;
    TabularData train, test;
    train.n_features = test.n_features = data.n_features;
    for (std::size_t k = 0; k < data.n_rows; ++k) {
        TabularData& dst = (k < n_train) ? train : test;
        const std::size_t i = perm[k];
        const auto row = data.row(i);
        dst.features.insert(dst.features.end(), row.begin(), row.end());
        dst.labels.push_back(data.labels[i]);
        ++dst.n_rows;
    }
    return {std::move(train), std::move(test)};
}

}  // namespace qwyc
