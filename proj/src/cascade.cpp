#include "qwyc/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "qwyc/errors.hpp"
#include "qwyc/util.hpp"

namespace qwyc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::ordered_json eps_to_json(const std::vector<double>& eps) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (double v : eps) {
        if (v == kInf)
            arr.push_back("+inf");
        else if (v == -kInf)
            arr.push_back("-inf");
        else
            arr.push_back(v);
    }
    return arr;
}

std::vector<double> eps_from_json(const nlohmann::json& arr, const char* name) {
    if (!arr.is_array()) throw validation_error(std::string(name) + " must be an array");
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (v.is_string()) {
            const auto s = v.get<std::string>();
            if (s == "+inf")
                out.push_back(kInf);
            else if (s == "-inf")
                out.push_back(-kInf);
            else
                throw validation_error(std::string(name) + ": unknown sentinel '" + s + "'");
        } else if (v.is_number()) {
            out.push_back(v.get<double>());
        } else {
            throw validation_error(std::string(name) + ": entries must be numbers or inf sentinels");
        }
    }
    return out;
}

}  // namespace

void CascadePolicy::validate() const {
    const std::size_t t = order.size();
    if (t == 0) throw validation_error("policy has no stages");
    std::vector<char> seen(t, 0);
    for (int m : order) {
        if (m < 0 || static_cast<std::size_t>(m) >= t || seen[m])
            throw validation_error("policy order is not a permutation of 0.." +
                                   std::to_string(t - 1));
        seen[m] = 1;
    }
    if (eps_neg.size() != t || eps_pos.size() != t)
        throw validation_error("threshold vectors must have one entry per stage");
    for (std::size_t r = 0; r < t; ++r) {
        if (std::isnan(eps_neg[r]) || std::isnan(eps_pos[r]))
            throw validation_error("thresholds must not be NaN");
        if (!(eps_neg[r] <= eps_pos[r]))
            throw validation_error("eps_neg must not exceed eps_pos at stage " +
                                   std::to_string(r + 1));
    }
    if (!std::isfinite(beta)) throw validation_error("policy beta must be finite");
}

std::string CascadePolicy::to_json() const {
    nlohmann::ordered_json j;
    j["type"] = "qwyc";
    j["order"] = order;
    j["eps_neg"] = eps_to_json(eps_neg);
    j["eps_pos"] = eps_to_json(eps_pos);
    j["beta"] = beta;
    return j.dump(2) + "\n";
}

CascadePolicy CascadePolicy::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("invalid policy JSON: ") + e.what());
    }
    if (!j.contains("type") || j["type"] != "qwyc")
        throw validation_error("policy JSON must have type \"qwyc\"");
    CascadePolicy p;
    p.order = j.at("order").get<std::vector<int>>();
    p.eps_neg = eps_from_json(j.at("eps_neg"), "eps_neg");
    p.eps_pos = eps_from_json(j.at("eps_pos"), "eps_pos");
    p.beta = j.at("beta").get<double>();
    p.validate();
    return p;
}

EvalOutcome evaluate_example(const CascadePolicy& policy, std::span<const double> row,
                             const CostVector& costs) {
    const std::size_t t = policy.n_stages();
    EvalOutcome out;
    double g = 0.0;
    for (std::size_t r = 0; r < t; ++r) {
        const int model = policy.order[r];
        g += row[static_cast<std::size_t>(model)];
        out.cost_paid += costs.values[static_cast<std::size_t>(model)];
        out.stop_stage = static_cast<int>(r + 1);
        if (r + 1 == t) {
            // Final stage: decide by the full score, which makes fully
            // evaluated examples agree with the full ensemble exactly.
            out.positive = canonical_row_sum(row) >= policy.beta;
            out.partial_score = g;
            return out;
        }
        if (g > policy.eps_pos[r]) {
            out.positive = true;
            out.partial_score = g;
            return out;
        }
        if (g < policy.eps_neg[r]) {
            out.positive = false;
            out.partial_score = g;
            return out;
        }
    }
    return out;  // unreachable: t >= 1
}

Metrics evaluate_matrix(const CascadePolicy& policy, const ScoreMatrix& sm,
                        const CostVector& costs, const FullReference& ref) {
    policy.validate();
    if (policy.n_stages() != sm.n_models)
        throw validation_error("policy stage count does not match matrix model count");
    costs.validate(sm.n_models);
    if (ref.full_decisions.size() != sm.n_examples)
        throw validation_error("full reference size does not match matrix");

    Metrics m;
    m.n_examples = sm.n_examples;
    m.stop_histogram.assign(sm.n_models, 0);
    double total_cost = 0.0;
    long long total_models = 0;
    long long correct = 0;
    for (std::size_t i = 0; i < sm.n_examples; ++i) {
        EvalOutcome o = evaluate_example(policy, sm.row(i), costs);
        total_cost += o.cost_paid;
        total_models += o.stop_stage;
        ++m.stop_histogram[static_cast<std::size_t>(o.stop_stage - 1)];
        if (o.positive != (ref.full_decisions[i] != 0)) ++m.n_diff;
        if (sm.labels && o.positive == ((*sm.labels)[i] != 0)) ++correct;
    }
    const double n = static_cast<double>(sm.n_examples);
    m.mean_cost = total_cost / n;
    m.mean_models = static_cast<double>(total_models) / n;
    m.pct_diff = static_cast<double>(m.n_diff) / n;
    if (sm.labels) m.accuracy = static_cast<double>(correct) / n;
    return m;
}

std::string Metrics::to_json() const {
    nlohmann::ordered_json j;
    j["mean_cost"] = mean_cost;
    j["mean_models"] = mean_models;
    j["pct_diff"] = pct_diff;
    if (accuracy) j["accuracy"] = *accuracy;
    j["stop_histogram"] = stop_histogram;
    return j.dump(2) + "\n";
}

StagePartition stage_partition(const CascadePolicy& policy, const ScoreMatrix& sm, int r) {
    policy.validate();
    if (policy.n_stages() != sm.n_models)
        throw validation_error("policy stage count does not match matrix model count");
    if (r < 0 || static_cast<std::size_t>(r) > policy.n_stages())
        throw validation_error("stage index out of range [0, T]");

    StagePartition part;
    if (r == 0) {
        part.n_uncertain = sm.n_examples;
        part.n_cascade_uncertain = sm.n_examples;
        return part;
    }
    for (std::size_t i = 0; i < sm.n_examples; ++i) {
        double g = 0.0;
        bool always_uncertain = true;
        for (int s = 0; s < r; ++s) {
            g += sm.score(i, static_cast<std::size_t>(policy.order[s]));
            if (s + 1 < r && (g > policy.eps_pos[s] || g < policy.eps_neg[s]))
                always_uncertain = false;
        }
        const std::size_t last = static_cast<std::size_t>(r - 1);
        if (g > policy.eps_pos[last]) {
            ++part.n_positive;
            always_uncertain = false;
        } else if (g < policy.eps_neg[last]) {
            ++part.n_negative;
            always_uncertain = false;
        } else {
            ++part.n_uncertain;
        }
        if (always_uncertain) ++part.n_cascade_uncertain;
    }
    return part;
}

}  // namespace qwyc
