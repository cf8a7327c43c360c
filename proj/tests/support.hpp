#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "qwyc/cascade.hpp"
#include "qwyc/ensemble.hpp"

namespace testsupport {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double normal(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Random matrix with a mix of smooth and quantized columns; quantized
// columns produce tied partial scores, which stress the strict-threshold
// boundaries.
inline qwyc::ScoreMatrix random_score_matrix(std::mt19937_64& rng, std::size_t n, std::size_t t,
                                             bool with_labels = false) {
    qwyc::ScoreMatrix sm;
    sm.n_examples = n;
    sm.n_models = t;
    sm.scores.resize(n * t);
    std::vector<char> quantized(t);
    for (std::size_t k = 0; k < t; ++k) quantized[k] = (rng() % 2 == 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < t; ++k) {
            double v = normal(rng);
            if (quantized[k]) v = std::round(v * 2.0) / 2.0;
            sm.scores[i * t + k] = v;
        }
    if (with_labels) {
        sm.labels.emplace();
        for (std::size_t i = 0; i < n; ++i) sm.labels->push_back(rng() % 2 == 0 ? 1 : 0);
    }
    return sm;
}

inline std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "qwyc_unit";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

inline std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = temp_path(name);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    return path;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------
// Independent reference implementation of the per-stage threshold rule,
// written as plain linear scans over the candidate values. Used to check
// the production binary search stage by stage.
// ---------------------------------------------------------------------

struct RefItem {
    double g = 0.0;
    bool full_pos = false;
};

struct RefThresholds {
    double eps_neg = -kInf;
    double eps_pos = kInf;
    long long new_disagreements = 0;
};

inline RefThresholds reference_stage_thresholds(const std::vector<RefItem>& items,
                                                long long remaining_budget,
                                                qwyc::Mode mode) {
    RefThresholds ref;
    if (items.empty()) return ref;

    std::vector<double> values;
    values.reserve(items.size());
    for (const auto& it : items) values.push_back(it.g);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());

    const auto neg_disagreements = [&](double c) {
        long long d = 0;
        for (const auto& it : items)
            if (it.g < c && it.full_pos) ++d;
        return d;
    };
    const auto neg_count = [&](double c) {
        long long d = 0;
        for (const auto& it : items)
            if (it.g < c) ++d;
        return d;
    };

    std::vector<double> neg_candidates;
    neg_candidates.push_back(-kInf);
    for (double v : values) neg_candidates.push_back(v);
    neg_candidates.push_back(values.back() + 1.0);
    double chosen_neg = -kInf;
    for (double c : neg_candidates)
        if (neg_disagreements(c) <= remaining_budget && c >= chosen_neg) chosen_neg = c;
    const long long d_neg = neg_disagreements(chosen_neg);
    if (neg_count(chosen_neg) == 0) chosen_neg = -kInf;

    double chosen_pos = kInf;
    long long d_pos = 0;
    if (mode == qwyc::Mode::two_sided) {
        const auto pos_disagreements = [&](double c) {
            long long d = 0;
            for (const auto& it : items)
                if (it.g > c && !it.full_pos) ++d;
            return d;
        };
        const auto pos_count = [&](double c) {
            long long d = 0;
            for (const auto& it : items)
                if (it.g > c) ++d;
            return d;
        };
        std::vector<double> pos_candidates;
        pos_candidates.push_back(values.front() - 1.0);
        for (double v : values) pos_candidates.push_back(v);
        pos_candidates.push_back(kInf);
        for (double c : pos_candidates) {
            if (c < chosen_neg) continue;
            if (d_neg + pos_disagreements(c) <= remaining_budget && c <= chosen_pos)
                chosen_pos = c;
        }
        d_pos = pos_disagreements(chosen_pos);
        if (pos_count(chosen_pos) == 0) chosen_pos = kInf;
    }

    ref.eps_neg = chosen_neg;
    ref.eps_pos = chosen_pos;
    ref.new_disagreements = d_neg + d_pos;
    return ref;
}

struct ReplayResult {
    bool ok = true;
    std::string detail;
    long long disagreements = 0;
};

// Replays an emitted policy stage by stage, recomputing the thresholds
// with the linear-scan reference and checking exact equality, then
// verifies the cumulative disagreement budget.
inline ReplayResult replay_and_check(const qwyc::ScoreMatrix& sm,
                                     const qwyc::DecisionConfig& config,
                                     const qwyc::CascadePolicy& policy) {
    ReplayResult res;
    const std::size_t n = sm.n_examples;
    const std::size_t t = sm.n_models;

    // Full scores, independently: ascending-value summation.
    std::vector<bool> full_pos(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(sm.row(i).begin(), sm.row(i).end());
        std::sort(row.begin(), row.end());
        double s = 0.0;
        for (double v : row) s += v;
        full_pos[i] = s >= config.beta;
    }

    const long long budget =
        static_cast<long long>(std::floor(config.alpha * static_cast<double>(n)));
    long long committed = 0;

    std::vector<double> g(n, 0.0);
    std::vector<char> alive(n, 1);

    for (std::size_t r = 0; r < t; ++r) {
        for (std::size_t i = 0; i < n; ++i)
            if (alive[i]) g[i] += sm.score(i, static_cast<std::size_t>(policy.order[r]));

        if (r + 1 == t) {
            if (policy.eps_neg[r] != -kInf || policy.eps_pos[r] != kInf) {
                res.ok = false;
                res.detail = "final stage thresholds are not sentinels";
            }
            break;  // final stage agrees with the full ensemble by construction
        }

        std::vector<RefItem> items;
        for (std::size_t i = 0; i < n; ++i)
            if (alive[i]) items.push_back(RefItem{g[i], full_pos[i]});
        const RefThresholds ref =
            reference_stage_thresholds(items, budget - committed, config.mode);
        if (ref.eps_neg != policy.eps_neg[r] || ref.eps_pos != policy.eps_pos[r]) {
            res.ok = false;
            res.detail = "stage " + std::to_string(r + 1) + ": expected (" +
                         std::to_string(ref.eps_neg) + ", " + std::to_string(ref.eps_pos) +
                         ") got (" + std::to_string(policy.eps_neg[r]) + ", " +
                         std::to_string(policy.eps_pos[r]) + ")";
            return res;
        }

        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            if (g[i] > policy.eps_pos[r]) {
                alive[i] = 0;
                if (!full_pos[i]) ++res.disagreements;
            } else if (g[i] < policy.eps_neg[r]) {
                alive[i] = 0;
                if (full_pos[i]) ++res.disagreements;
            }
        }
        committed = res.disagreements;
        if (committed > budget) {
            res.ok = false;
            res.detail = "budget exceeded at stage " + std::to_string(r + 1);
            return res;
        }
    }
    return res;
}

}  // namespace testsupport
