#include "qwyc/orderings.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "qwyc/errors.hpp"

namespace qwyc {

namespace {

double column_mse(const ScoreMatrix& sm, std::size_t t, const std::vector<double>& targets,
                  const std::vector<double>* partial) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sm.n_examples; ++i) {
        const double base = partial ? (*partial)[i] : 0.0;
        const double d = base + sm.score(i, t) - targets[i];
        acc += d * d;
    }
    return acc / static_cast<double>(sm.n_examples);
}

}  // namespace

void OrderingSpec::validate() const {
    if (kind == OrderingKind::random_order && !seed)
        throw validation_error("random ordering requires a seed");
}

std::vector<int> order_training(std::size_t n_models) {
    if (n_models == 0) throw validation_error("need at least one model");
    std::vector<int> order(n_models);
    std::iota(order.begin(), order.end(), 0);
    return order;
}

std::vector<int> order_random(std::size_t n_models, std::uint64_t seed) {
    std::vector<int> order = order_training(n_models);
    // Hand-rolled Fisher-Yates; mt19937_64's output sequence is pinned by
    // the standard, so permutations are reproducible across toolchains.
    std::mt19937_64 rng(seed);
    for (std::size_t i = n_models - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }
    return order;
}

std::vector<int> order_individual_mse(const ScoreMatrix& sm,
                                      const std::vector<double>& targets) {
    sm.validate();
    if (targets.size() != sm.n_examples)
        throw validation_error("target vector length does not match example count");
    std::vector<double> mse(sm.n_models);
    for (std::size_t t = 0; t < sm.n_models; ++t) mse[t] = column_mse(sm, t, targets, nullptr);
    std::vector<int> order = order_training(sm.n_models);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return mse[static_cast<std::size_t>(a)] <
                                                mse[static_cast<std::size_t>(b)]; });
    return order;
}

std::vector<int> order_greedy_mse(const ScoreMatrix& sm, const std::vector<double>& targets) {
    sm.validate();
    if (targets.size() != sm.n_examples)
        throw validation_error("target vector length does not match example count");
    const std::size_t t = sm.n_models;
    std::vector<char> used(t, 0);
    std::vector<int> order;
    order.reserve(t);
    std::vector<double> partial(sm.n_examples, 0.0);
    for (std::size_t r = 0; r < t; ++r) {
        int best = -1;
        double best_mse = 0.0;
        for (std::size_t k = 0; k < t; ++k) {
            if (used[k]) continue;
            const double m = column_mse(sm, k, targets, &partial);
            if (best < 0 || m < best_mse) {
                best = static_cast<int>(k);
                best_mse = m;
            }
        }
        used[static_cast<std::size_t>(best)] = 1;
        order.push_back(best);
        for (std::size_t i = 0; i < sm.n_examples; ++i)
            partial[i] += sm.score(i, static_cast<std::size_t>(best));
    }
    return order;
}

std::vector<double> mse_targets(const ScoreMatrix& sm, const FullReference& ref,
                                MseTargetSource source) {
    if (source == MseTargetSource::labels) {
        if (!sm.labels)
            throw validation_error("label MSE target requested but the matrix has no labels");
        std::vector<double> t(sm.n_examples);
        for (std::size_t i = 0; i < sm.n_examples; ++i)
            t[i] = static_cast<double>((*sm.labels)[i]);
        return t;
    }
    return ref.full_scores;
}

std::vector<int> make_order(const OrderingSpec& spec, const ScoreMatrix& sm,
                            const FullReference& ref) {
    spec.validate();
    switch (spec.kind) {
        case OrderingKind::training_order:
            return order_training(sm.n_models);
        case OrderingKind::random_order:
            return order_random(sm.n_models, *spec.seed);
        case OrderingKind::individual_mse:
            return order_individual_mse(sm, mse_targets(sm, ref, spec.target_source));
        case OrderingKind::greedy_mse:
            return order_greedy_mse(sm, mse_targets(sm, ref, spec.target_source));
    }
    throw validation_error("unknown ordering kind");
}

}  // namespace qwyc
