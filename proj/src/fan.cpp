#include "qwyc/fan.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "qwyc/errors.hpp"

namespace qwyc {

namespace {

void validate_order(const std::vector<int>& order) {
    if (order.empty()) throw validation_error("fan policy has no stages");
    std::vector<char> seen(order.size(), 0);
    for (int m : order) {
        if (m < 0 || static_cast<std::size_t>(m) >= order.size() || seen[m])
            throw validation_error("fan order is not a permutation");
        seen[m] = 1;
    }
}

}  // namespace

void FanPolicy::validate() const {
    validate_order(order);
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw validation_error("gamma must be a positive real");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw validation_error("lambda must be a positive real");
    if (!std::isfinite(beta)) throw validation_error("fan beta must be finite");
    if (stages.size() != order.size())
        throw validation_error("fan policy needs one bin table per stage");
    for (const auto& table : stages)
        for (const auto& [bin, st] : table) {
            if (st.count < 1) throw validation_error("fan bins must have count >= 1");
            if (!(st.sigma >= 0.0)) throw validation_error("fan bin sigma must be >= 0");
        }
}

long long bin_of(double partial_score, double lambda) {
    if (!(lambda > 0.0)) throw validation_error("lambda must be positive");
    return static_cast<long long>(std::floor(partial_score / lambda));
}

FanPolicy fit_fan(const ScoreMatrix& sm, const std::vector<int>& order, double gamma,
                  double lambda, double beta, FanDiffSign sign) {
    sm.validate();
    if (order.size() != sm.n_models)
        throw validation_error("fan order length does not match model count");
    FanPolicy policy;
    policy.order = order;
    policy.gamma = gamma;
    policy.lambda = lambda;
    policy.beta = beta;
    policy.stages.resize(sm.n_models);
    policy.validate();

    const FullReference ref = full_reference(sm, beta);
    const double flip = (sign == FanDiffSign::g_minus_f) ? 1.0 : -1.0;

    // Two passes: per-bin means first, then the squared deviations.
    struct Acc {
        double sum = 0.0;
        long long count = 0;
        double m2 = 0.0;
    };
    std::vector<std::unordered_map<long long, Acc>> acc(sm.n_models);
    for (std::size_t i = 0; i < sm.n_examples; ++i) {
        double g = 0.0;
        const double f = ref.full_scores[i];
        for (std::size_t r = 0; r < sm.n_models; ++r) {
            g += sm.score(i, static_cast<std::size_t>(order[r]));
            auto& a = acc[r][bin_of(g, lambda)];
            a.sum += flip * (g - f);
            a.count += 1;
        }
    }
    for (std::size_t i = 0; i < sm.n_examples; ++i) {
        double g = 0.0;
        const double f = ref.full_scores[i];
        for (std::size_t r = 0; r < sm.n_models; ++r) {
            g += sm.score(i, static_cast<std::size_t>(order[r]));
            auto& a = acc[r][bin_of(g, lambda)];
            const double d = flip * (g - f) - a.sum / static_cast<double>(a.count);
            a.m2 += d * d;
        }
    }
    for (std::size_t r = 0; r < sm.n_models; ++r)
        for (const auto& [bin, a] : acc[r]) {
            FanPolicy::BinStats st;
            st.count = a.count;
            st.mu = a.sum / static_cast<double>(a.count);
            // Population standard deviation; singleton bins get sigma 0.
            st.sigma = std::sqrt(a.m2 / static_cast<double>(a.count));
            policy.stages[r].emplace(bin, st);
        }
    return policy;
}

EvalOutcome evaluate_fan(const FanPolicy& policy, std::span<const double> row,
                         const CostVector& costs) {
    const std::size_t t = policy.n_stages();
    EvalOutcome out;
    double g = 0.0;
    for (std::size_t r = 0; r < t; ++r) {
        const int model = policy.order[r];
        g += row[static_cast<std::size_t>(model)];
        out.cost_paid += costs.values[static_cast<std::size_t>(model)];
        out.stop_stage = static_cast<int>(r + 1);
        if (r + 1 == t) break;
        const auto& table = policy.stages[r];
        const auto it = table.find(bin_of(g, policy.lambda));
        if (it == table.end()) {
            // Unseen bin: fall back to the full evaluation.
            for (std::size_t s = r + 1; s < t; ++s) {
                const int rest = policy.order[s];
                g += row[static_cast<std::size_t>(rest)];
                out.cost_paid += costs.values[static_cast<std::size_t>(rest)];
            }
            out.stop_stage = static_cast<int>(t);
            break;
        }
        const double hi = policy.beta + it->second.mu + policy.gamma * it->second.sigma;
        const double lo = policy.beta + it->second.mu - policy.gamma * it->second.sigma;
        if (g > hi) {
            out.positive = true;
            out.partial_score = g;
            return out;
        }
        if (g < lo) {
            out.positive = false;
            out.partial_score = g;
            return out;
        }
    }
    out.positive = canonical_row_sum(row) >= policy.beta;
    out.partial_score = g;
    return out;
}

Metrics evaluate_fan_matrix(const FanPolicy& policy, const ScoreMatrix& sm,
                            const CostVector& costs, const FullReference& ref) {
    policy.validate();
    if (policy.n_stages() != sm.n_models)
        throw validation_error("fan policy stage count does not match matrix model count");
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
        EvalOutcome o = evaluate_fan(policy, sm.row(i), costs);
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

std::string FanPolicy::to_json() const {
    nlohmann::ordered_json j;
    j["type"] = "fan";
    j["order"] = order;
    j["gamma"] = gamma;
    j["lambda"] = lambda;
    j["beta"] = beta;
    nlohmann::ordered_json stage_arr = nlohmann::ordered_json::array();
    for (const auto& table : stages) {
        std::vector<long long> keys;
        keys.reserve(table.size());
        for (const auto& [bin, st] : table) keys.push_back(bin);
        std::sort(keys.begin(), keys.end());
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (long long k : keys) {
            const auto& st = table.at(k);
            nlohmann::ordered_json b;
            b["mu"] = st.mu;
            b["sigma"] = st.sigma;
            b["count"] = st.count;
            obj[std::to_string(k)] = std::move(b);
        }
        stage_arr.push_back(std::move(obj));
    }
    j["stages"] = std::move(stage_arr);
    return j.dump(2) + "\n";
}

FanPolicy FanPolicy::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("invalid fan policy JSON: ") + e.what());
    }
    if (!j.contains("type") || j["type"] != "fan")
        throw validation_error("fan policy JSON must have type \"fan\"");
    FanPolicy p;
    p.order = j.at("order").get<std::vector<int>>();
    p.gamma = j.at("gamma").get<double>();
    p.lambda = j.at("lambda").get<double>();
    p.beta = j.at("beta").get<double>();
    for (const auto& table : j.at("stages")) {
        std::unordered_map<long long, BinStats> stage;
        for (const auto& [key, val] : table.items()) {
            BinStats st;
            st.mu = val.at("mu").get<double>();
            st.sigma = val.at("sigma").get<double>();
            st.count = val.at("count").get<long long>();
            stage.emplace(std::stoll(key), st);
        }
        p.stages.push_back(std::move(stage));
    }
    p.validate();
    return p;
}

}  // namespace qwyc
