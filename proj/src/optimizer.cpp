#include "qwyc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qwyc/errors.hpp"

namespace qwyc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Partial score + full-ensemble decision of one still-uncertain example.
struct Item {
    double g = 0.0;
    std::uint8_t full_pos = 0;
};

struct CoreResult {
    double eps_neg = -kInf;
    double eps_pos = kInf;
    long long n_newly = 0;
    long long new_disagreements = 0;
};

// Threshold search over the uncertain set at one stage. `items` is sorted
// in place by partial score. Costs and constraint counts are step
// functions whose breakpoints are the data values, so the discrete search
// over sorted unique values (plus the reject-all / accept-all sentinels)
// is exhaustive; both counts are monotone in the threshold, which the
// binary searches rely on.
CoreResult optimize_thresholds_over(std::vector<Item>& items, long long remaining_budget,
                                    Mode mode) {
    CoreResult res;
    if (items.empty()) return res;

    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return a.g < b.g; });
    const std::size_t m = items.size();

    std::vector<double> gs(m);
    for (std::size_t i = 0; i < m; ++i) gs[i] = items[i].g;

    // prefix_pos[k]: full-positives among the k smallest partial scores;
    // suffix_neg[k]: full-negatives among items[k..m).
    std::vector<long long> prefix_pos(m + 1, 0), suffix_neg(m + 1, 0);
    for (std::size_t i = 0; i < m; ++i)
        prefix_pos[i + 1] = prefix_pos[i] + (items[i].full_pos ? 1 : 0);
    for (std::size_t i = m; i-- > 0;)
        suffix_neg[i] = suffix_neg[i + 1] + (items[i].full_pos ? 0 : 1);

    std::vector<double> uniq;
    uniq.reserve(m);
    for (double v : gs)
        if (uniq.empty() || uniq.back() != v) uniq.push_back(v);
    const std::size_t q = uniq.size();

    const auto reject_count = [&](double c) {
        return static_cast<std::size_t>(std::lower_bound(gs.begin(), gs.end(), c) - gs.begin());
    };
    const auto admit_from = [&](double c) {
        return static_cast<std::size_t>(std::upper_bound(gs.begin(), gs.end(), c) - gs.begin());
    };

    // eps_neg candidates in ascending order: -inf, unique values, max+1.
    const auto neg_candidate = [&](std::size_t idx) {
        if (idx == 0) return -kInf;
        if (idx <= q) return uniq[idx - 1];
        return uniq[q - 1] + 1.0;
    };
    const auto neg_feasible = [&](std::size_t idx) {
        return prefix_pos[reject_count(neg_candidate(idx))] <= remaining_budget;
    };
    std::size_t lo = 0, hi = q + 1;  // idx 0 (-inf) is always feasible
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo + 1) / 2;
        if (neg_feasible(mid))
            lo = mid;
        else
            hi = mid - 1;
    }
    double chosen_neg = neg_candidate(lo);
    const std::size_t n_rejected = reject_count(chosen_neg);
    const long long d_neg = prefix_pos[n_rejected];
    if (n_rejected == 0) chosen_neg = -kInf;

    double chosen_pos = kInf;
    std::size_t n_admitted = 0;
    long long d_pos = 0;
    if (mode == Mode::two_sided) {
        // eps_pos candidates ascending: min-1, unique values, +inf; only
        // those >= the chosen eps_neg remain available.
        std::vector<double> cand;
        cand.reserve(q + 2);
        if (uniq[0] - 1.0 >= chosen_neg) cand.push_back(uniq[0] - 1.0);
        for (double v : uniq)
            if (v >= chosen_neg) cand.push_back(v);
        cand.push_back(kInf);
        const auto pos_feasible = [&](std::size_t idx) {
            return d_neg + suffix_neg[admit_from(cand[idx])] <= remaining_budget;
        };
        std::size_t plo = 0, phi = cand.size() - 1;  // +inf is always feasible
        while (plo < phi) {
            std::size_t mid = plo + (phi - plo) / 2;
            if (pos_feasible(mid))
                phi = mid;
            else
                plo = mid + 1;
        }
        chosen_pos = cand[plo];
        const std::size_t from = admit_from(chosen_pos);
        n_admitted = m - from;
        d_pos = suffix_neg[from];
        if (n_admitted == 0) chosen_pos = kInf;
    }

    res.eps_neg = chosen_neg;
    res.eps_pos = chosen_pos;
    res.n_newly = static_cast<long long>(n_rejected + n_admitted);
    res.new_disagreements = d_neg + d_pos;
    return res;
}

// Mutable optimizer state: the uncertain set and its running sums.
struct LiveState {
    std::vector<std::size_t> idx;  // example indices still uncertain
    std::vector<double> g;         // aligned running sums
};

void fill_items(const ScoreMatrix& sm, const FullReference& ref, const LiveState& live,
                int model, std::vector<Item>& items) {
    items.clear();
    items.reserve(live.idx.size());
    for (std::size_t j = 0; j < live.idx.size(); ++j) {
        const std::size_t i = live.idx[j];
        items.push_back(Item{live.g[j] + sm.score(i, static_cast<std::size_t>(model)),
                             ref.full_decisions[i]});
    }
}

// Removes newly classified examples and advances the running sums.
void commit_stage(const ScoreMatrix& sm, LiveState& live, int model, double eps_neg,
                  double eps_pos) {
    std::size_t keep = 0;
    for (std::size_t j = 0; j < live.idx.size(); ++j) {
        const std::size_t i = live.idx[j];
        const double g = live.g[j] + sm.score(i, static_cast<std::size_t>(model));
        if (g >= eps_neg && g <= eps_pos) {
            live.idx[keep] = i;
            live.g[keep] = g;
            ++keep;
        }
    }
    live.idx.resize(keep);
    live.g.resize(keep);
}

CascadePolicy run_optimizer(const ScoreMatrix& sm, const CostVector& costs,
                            const DecisionConfig& config, const std::vector<int>* fixed_order,
                            OptimizeTrace* trace) {
    sm.validate();
    costs.validate(sm.n_models);
    config.validate();
    const std::size_t t = sm.n_models;
    const std::size_t n = sm.n_examples;

    std::vector<int> pi(t);
    if (fixed_order) {
        if (fixed_order->size() != t)
            throw validation_error("order length does not match model count");
        std::vector<char> seen(t, 0);
        for (int m : *fixed_order) {
            if (m < 0 || static_cast<std::size_t>(m) >= t || seen[m])
                throw validation_error("order is not a permutation of 0.." + std::to_string(t - 1));
            seen[m] = 1;
        }
        pi = *fixed_order;
    } else {
        for (std::size_t k = 0; k < t; ++k) pi[k] = static_cast<int>(k);
    }

    const FullReference ref = full_reference(sm, config.beta);
    const long long total_budget = budget_from_alpha(config.alpha, n);
    long long committed = 0;

    LiveState live;
    live.idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) live.idx[i] = i;
    live.g.assign(n, 0.0);

    CascadePolicy policy;
    policy.order.resize(t);
    policy.eps_neg.assign(t, -kInf);
    policy.eps_pos.assign(t, kInf);
    policy.beta = config.beta;

    if (trace) {
        trace->stages.clear();
        trace->total_budget = total_budget;
    }

    double total_cost = 0.0;
    std::vector<Item> items;

    for (std::size_t r = 0; r < t; ++r) {
        const long long c_prev = static_cast<long long>(live.idx.size());
        StageTraceEntry entry;
        entry.c_prev = c_prev;

        if (r + 1 == t) {
            // Final stage classifies every remaining example by the full
            // score, so thresholds stay at their sentinels.
            const int model = pi[r];
            policy.order[r] = model;
            total_cost += costs.values[static_cast<std::size_t>(model)] *
                          static_cast<double>(c_prev);
            if (trace) {
                entry.model = model;
                entry.n_newly = c_prev;
                entry.time_ratio = evaluation_time_ratio(
                    costs.values[static_cast<std::size_t>(model)], c_prev, c_prev);
                entry.committed_after = committed;
                entry.eps_neg = -kInf;
                entry.eps_pos = kInf;
                trace->stages.push_back(std::move(entry));
            }
            break;
        }

        std::size_t best_k = r;
        CoreResult best_core;
        double best_ratio = kInf;
        const std::size_t scan_end = fixed_order ? r + 1 : t;
        for (std::size_t k = r; k < scan_end; ++k) {
            const int cand = pi[k];
            fill_items(sm, ref, live, cand, items);
            CoreResult core = optimize_thresholds_over(items, total_budget - committed,
                                                       config.mode);
            const double ratio = evaluation_time_ratio(
                costs.values[static_cast<std::size_t>(cand)], c_prev, core.n_newly);
            if (trace) {
                entry.candidate_models.push_back(cand);
                entry.candidate_ratios.push_back(ratio);
            }
            // First candidate is committed unconditionally; later ones
            // must strictly improve the ratio.
            if (k == r || ratio < best_ratio) {
                best_k = k;
                best_core = core;
                best_ratio = ratio;
            }
        }

        std::swap(pi[r], pi[best_k]);
        const int model = pi[r];
        policy.order[r] = model;
        policy.eps_neg[r] = best_core.eps_neg;
        policy.eps_pos[r] = best_core.eps_pos;
        committed += best_core.new_disagreements;
        total_cost += costs.values[static_cast<std::size_t>(model)] *
                      static_cast<double>(c_prev);
        commit_stage(sm, live, model, best_core.eps_neg, best_core.eps_pos);

        if (trace) {
            entry.model = model;
            entry.n_newly = best_core.n_newly;
            entry.time_ratio = best_ratio;
            entry.committed_after = committed;
            entry.eps_neg = best_core.eps_neg;
            entry.eps_pos = best_core.eps_pos;
            trace->stages.push_back(std::move(entry));
        }
    }

    if (trace) {
        trace->train_mean_cost = total_cost / static_cast<double>(n);
        trace->committed = committed;
    }
    policy.validate();
    return policy;
}

}  // namespace

void BudgetState::validate() const {
    if (total_budget < 0) throw validation_error("budget must be non-negative");
    if (committed < 0 || committed > total_budget)
        throw validation_error("committed disagreements must lie in [0, total_budget]");
}

long long budget_from_alpha(double alpha, std::size_t n_examples) {
    return static_cast<long long>(std::floor(alpha * static_cast<double>(n_examples)));
}

StageOptResult optimize_stage_thresholds(const ScoreMatrix& sm, const FullReference& ref,
                                         const std::vector<StageSpec>& prefix,
                                         int candidate_model, const BudgetState& budget,
                                         Mode mode) {
    sm.validate();
    budget.validate();
    if (candidate_model < 0 || static_cast<std::size_t>(candidate_model) >= sm.n_models)
        throw validation_error("candidate model index out of range");
    for (const auto& s : prefix)
        if (s.model == candidate_model)
            throw validation_error("candidate model already appears in the prefix");
    if (ref.full_decisions.size() != sm.n_examples)
        throw validation_error("full reference size does not match matrix");

    LiveState live;
    for (std::size_t i = 0; i < sm.n_examples; ++i) {
        double g = 0.0;
        bool uncertain = true;
        for (const auto& s : prefix) {
            g += sm.score(i, static_cast<std::size_t>(s.model));
            if (g > s.eps_pos || g < s.eps_neg) {
                uncertain = false;
                break;
            }
        }
        if (uncertain) {
            live.idx.push_back(i);
            live.g.push_back(g);
        }
    }

    std::vector<Item> items;
    fill_items(sm, ref, live, candidate_model, items);
    CoreResult core =
        optimize_thresholds_over(items, budget.total_budget - budget.committed, mode);
    return StageOptResult{core.eps_neg, core.eps_pos,
                          budget.committed + core.new_disagreements, core.n_newly};
}

double evaluation_time_ratio(double cost, long long size_c_prev, long long n_newly) {
    if (n_newly == 0) return kInf;
    return cost * static_cast<double>(size_c_prev) / static_cast<double>(n_newly);
}

CascadePolicy optimize_order(const ScoreMatrix& sm, const CostVector& costs,
                             const DecisionConfig& config, OptimizeTrace* trace) {
    return run_optimizer(sm, costs, config, nullptr, trace);
}

CascadePolicy thresholds_for_fixed_order(const ScoreMatrix& sm, const CostVector& costs,
                                         const DecisionConfig& config,
                                         const std::vector<int>& order, OptimizeTrace* trace) {
    return run_optimizer(sm, costs, config, &order, trace);
}

}  // namespace qwyc
