#include "qwyc/gbt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "qwyc/errors.hpp"
#include "qwyc/util.hpp"

namespace qwyc {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Exact greedy split search: features are argsorted once up front; each
// node filters the presorted order through its membership mask, so no
// per-node sorting is needed.
class TreeBuilder {
public:
    TreeBuilder(const TabularData& data, const std::vector<std::vector<std::size_t>>& sorted_ids,
                int max_depth)
        : data_(data), sorted_ids_(sorted_ids), max_depth_(max_depth) {}

    Tree build(const std::vector<double>& residual, const std::vector<std::size_t>& members) {
        residual_ = &residual;
        Tree tree;
        in_node_.assign(data_.n_rows, 0);
        grow(tree, members, 0);
        return tree;
    }

private:
    int grow(Tree& tree, const std::vector<std::size_t>& members, int depth) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        double sum = 0.0;
        for (std::size_t i : members) sum += (*residual_)[i];
        const double mean = sum / static_cast<double>(members.size());

        SplitCandidate split;
        if (depth < max_depth_ && members.size() >= 2)
            split = best_split(members, sum);

        if (split.feature < 0) {
            tree.nodes[static_cast<std::size_t>(node_id)].leaf = mean;
            return node_id;
        }

        std::vector<std::size_t> left, right;
        left.reserve(members.size());
        right.reserve(members.size());
        for (std::size_t i : members) {
            if (data_.row(i)[static_cast<std::size_t>(split.feature)] < split.threshold)
                left.push_back(i);
            else
                right.push_back(i);
        }
        const int l = grow(tree, left, depth + 1);
        const int r = grow(tree, right, depth + 1);
        TreeNode& n = tree.nodes[static_cast<std::size_t>(node_id)];
        n.feature = split.feature;
        n.threshold = split.threshold;
        n.left = l;
        n.right = r;
        return node_id;
    }

    SplitCandidate best_split(const std::vector<std::size_t>& members, double total_sum) {
        SplitCandidate best;
        const auto n = static_cast<double>(members.size());
        for (std::size_t i : members) in_node_[i] = 1;
        for (std::size_t f = 0; f < data_.n_features; ++f) {
            double left_sum = 0.0;
            double left_n = 0.0;
            double prev_value = 0.0;
            bool have_prev = false;
            for (std::size_t i : sorted_ids_[f]) {
                if (!in_node_[i]) continue;
                const double v = data_.row(i)[f];
                if (have_prev && v != prev_value && left_n > 0.0) {
                    // Candidate boundary between prev_value and v.
                    const double right_sum = total_sum - left_sum;
                    const double right_n = n - left_n;
                    const double gain = left_sum * left_sum / left_n +
                                        right_sum * right_sum / right_n -
                                        total_sum * total_sum / n;
                    if (gain > best.gain) {
                        double thr = prev_value + (v - prev_value) / 2.0;
                        if (!(prev_value < thr)) thr = v;
                        best.feature = static_cast<int>(f);
                        best.threshold = thr;
                        best.gain = gain;
                    }
                }
                left_sum += (*residual_)[i];
                left_n += 1.0;
                prev_value = v;
                have_prev = true;
            }
        }
        for (std::size_t i : members) in_node_[i] = 0;
        return best;
    }

    const TabularData& data_;
    const std::vector<std::vector<std::size_t>>& sorted_ids_;
    const int max_depth_;
    const std::vector<double>* residual_ = nullptr;
    std::vector<char> in_node_;
};

template <typename StopFn>
EvalOutcome tree_cascade_walk(const TreeEnsemble& model, const std::vector<int>& order,
                              double beta, std::span<const double> x, const StopFn& stop,
                              std::vector<double>& contributions) {
    const std::size_t t = model.n_trees();
    EvalOutcome out;
    contributions.clear();
    double g = 0.0;
    bool fallback = false;
    for (std::size_t r = 0; r < t; ++r) {
        const int tree = order[r];
        const double c = model.learning_rate * model.trees[static_cast<std::size_t>(tree)].predict(x);
        contributions.push_back(c);
        g += c;
        out.cost_paid += 1.0;
        out.stop_stage = static_cast<int>(r + 1);
        if (r + 1 == t) break;
        if (!fallback) {
            const int verdict = stop(r, g);  // +1 pos, -1 neg, 0 continue, 2 full fallback
            if (verdict == +1) {
                out.positive = true;
                out.partial_score = g;
                return out;
            }
            if (verdict == -1) {
                out.positive = false;
                out.partial_score = g;
                return out;
            }
            if (verdict == 2) fallback = true;
        }
    }
    out.stop_stage = static_cast<int>(t);
    out.cost_paid = static_cast<double>(t);
    out.positive = canonical_row_sum(contributions) >= beta;
    out.partial_score = g;
    return out;
}

}  // namespace

double Tree::predict(std::span<const double> x) const {
    int node = 0;
    while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
        const TreeNode& n = nodes[static_cast<std::size_t>(node)];
        node = (x[static_cast<std::size_t>(n.feature)] < n.threshold) ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].leaf;
}

double TreeEnsemble::margin(std::span<const double> x) const {
    std::vector<double> contributions;
    contributions.reserve(trees.size());
    for (const Tree& t : trees) contributions.push_back(learning_rate * t.predict(x));
    return bias + canonical_row_sum(contributions);
}

bool TreeEnsemble::classify(std::span<const double> x) const {
    std::vector<double> contributions;
    contributions.reserve(trees.size());
    for (const Tree& t : trees) contributions.push_back(learning_rate * t.predict(x));
    return canonical_row_sum(contributions) >= folded_beta();
}

int TreeEnsemble::max_feature_index() const {
    int max_f = -1;
    for (const Tree& t : trees)
        for (const TreeNode& n : t.nodes)
            if (!n.is_leaf()) max_f = std::max(max_f, n.feature);
    return max_f;
}

void TreeEnsemble::validate() const {
    if (trees.empty()) throw validation_error("ensemble has no trees");
    if (!(learning_rate > 0.0)) throw validation_error("learning rate must be positive");
    if (!std::isfinite(bias) || !std::isfinite(beta))
        throw validation_error("bias and beta must be finite");
    for (const Tree& t : trees) {
        if (t.nodes.empty()) throw validation_error("tree has no nodes");
        for (const TreeNode& n : t.nodes) {
            if (n.is_leaf()) continue;
            const auto size = static_cast<int>(t.nodes.size());
            if (n.left < 0 || n.left >= size || n.right < 0 || n.right >= size)
                throw validation_error("tree child index out of range");
        }
    }
}

void TabularData::validate() const {
    if (n_rows == 0) throw validation_error("tabular data has no rows");
    if (n_features == 0) throw validation_error("tabular data has no features");
    if (features.size() != n_rows * n_features)
        throw validation_error("feature storage size does not match dimensions");
    for (double v : features)
        if (!std::isfinite(v)) throw validation_error("features must be finite");
    if (labels.size() != n_rows)
        throw validation_error("label count does not match row count");
    for (int y : labels)
        if (y != 0 && y != 1) throw validation_error("labels must be 0 or 1");
}

TabularData load_tabular_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    TabularData data;
    std::string_view rest(text);
    std::size_t line_no = 0;
    std::ptrdiff_t label_col = -1;
    std::size_t n_cols = 0;
    while (!rest.empty()) {
        ++line_no;
        std::size_t nl = rest.find('\n');
        std::string_view line = (nl == std::string_view::npos) ? rest : rest.substr(0, nl);
        rest = (nl == std::string_view::npos) ? std::string_view{} : rest.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (line_no == 1) {
            n_cols = fields.size();
            for (std::size_t k = 0; k < fields.size(); ++k)
                if (fields[k] == "label") label_col = static_cast<std::ptrdiff_t>(k);
            if (label_col < 0)
                throw parse_error(path + ": header must contain a 'label' column");
            if (n_cols < 2) throw parse_error(path + ": need at least one feature column");
            data.n_features = n_cols - 1;
            continue;
        }
        if (fields.size() != n_cols)
            throw parse_error(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(n_cols) + " columns, found " +
                              std::to_string(fields.size()));
        for (std::size_t k = 0; k < fields.size(); ++k) {
            auto v = parse_double(fields[k]);
            if (!v)
                throw parse_error(path + ":" + std::to_string(line_no) +
                                  ": malformed numeric value '" + std::string(fields[k]) + "'");
            if (static_cast<std::ptrdiff_t>(k) == label_col) {
                if (*v != 0.0 && *v != 1.0)
                    throw parse_error(path + ":" + std::to_string(line_no) +
                                      ": label must be 0 or 1");
                data.labels.push_back(static_cast<int>(*v));
            } else {
                data.features.push_back(*v);
            }
        }
        ++data.n_rows;
    }
    if (data.n_rows == 0) throw parse_error(path + ": no data rows");
    data.validate();
    return data;
}

void save_tabular_csv(const std::string& path, const TabularData& data) {
    data.validate();
    std::string text;
    text.reserve(data.n_rows * data.n_features * 10);
    for (std::size_t f = 0; f < data.n_features; ++f) {
        text += "x";
        text += std::to_string(f);
        text += ",";
    }
    text += "label\n";
    for (std::size_t i = 0; i < data.n_rows; ++i) {
        for (std::size_t f = 0; f < data.n_features; ++f) {
            text += format_double(data.row(i)[f]);
            text += ',';
        }
        text += std::to_string(data.labels[i]);
        text += '\n';
    }
    write_text_file(path, text);
}

TreeEnsemble train_gbt(const TabularData& data, const GbtParams& params) {
    data.validate();
    if (params.n_trees < 1) throw validation_error("n_trees must be >= 1");
    if (params.max_depth < 0) throw validation_error("max_depth must be >= 0");
    if (!(params.learning_rate > 0.0)) throw validation_error("learning rate must be positive");
    if (data.n_rows < 2) throw validation_error("need at least two training rows");

    long long positives = 0;
    for (int y : data.labels) positives += y;
    if (positives == 0 || positives == static_cast<long long>(data.n_rows))
        throw validation_error("training data must contain both classes");

    TreeEnsemble model;
    model.learning_rate = params.learning_rate;
    model.beta = 0.0;
    const double p = static_cast<double>(positives) / static_cast<double>(data.n_rows);
    model.bias = std::log(p / (1.0 - p));

    std::vector<std::vector<std::size_t>> sorted_ids(data.n_features);
    for (std::size_t f = 0; f < data.n_features; ++f) {
        auto& ids = sorted_ids[f];
        ids.resize(data.n_rows);
        std::iota(ids.begin(), ids.end(), 0);
        std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
            return data.row(a)[f] < data.row(b)[f];
        });
    }

    std::vector<double> margin(data.n_rows, model.bias);
    std::vector<double> residual(data.n_rows, 0.0);
    std::vector<std::size_t> all(data.n_rows);
    std::iota(all.begin(), all.end(), 0);

    TreeBuilder builder(data, sorted_ids, params.max_depth);
    model.trees.reserve(static_cast<std::size_t>(params.n_trees));
    for (int t = 0; t < params.n_trees; ++t) {
        for (std::size_t i = 0; i < data.n_rows; ++i)
            residual[i] = static_cast<double>(data.labels[i]) - sigmoid(margin[i]);
        Tree tree = builder.build(residual, all);
        for (std::size_t i = 0; i < data.n_rows; ++i)
            margin[i] += params.learning_rate * tree.predict(data.row(i));
        model.trees.push_back(std::move(tree));
    }
    model.validate();
    return model;
}

ScoredEnsemble score_matrix_from_trees(const TreeEnsemble& model, const TabularData& data,
                                       bool attach_labels) {
    model.validate();
    data.validate();
    if (model.max_feature_index() >= static_cast<int>(data.n_features))
        throw validation_error("model references feature " +
                               std::to_string(model.max_feature_index()) + " but data has " +
                               std::to_string(data.n_features) + " features");
    ScoredEnsemble out;
    ScoreMatrix& sm = out.matrix;
    sm.n_examples = data.n_rows;
    sm.n_models = model.n_trees();
    sm.scores.resize(sm.n_examples * sm.n_models);
    for (std::size_t i = 0; i < data.n_rows; ++i) {
        const auto x = data.row(i);
        for (std::size_t t = 0; t < model.n_trees(); ++t)
            sm.scores[i * sm.n_models + t] = model.learning_rate * model.trees[t].predict(x);
    }
    if (attach_labels) sm.labels = data.labels;
    out.folded_beta = model.folded_beta();
    sm.validate();
    return out;
}

EvalOutcome cascade_infer_trees(const TreeEnsemble& model, const CascadePolicy& policy,
                                std::span<const double> x) {
    if (policy.n_stages() != model.n_trees())
        throw validation_error("policy stage count does not match tree count");
    static thread_local std::vector<double> contributions;
    return tree_cascade_walk(
        model, policy.order, policy.beta, x,
        [&](std::size_t r, double g) -> int {
            if (g > policy.eps_pos[r]) return +1;
            if (g < policy.eps_neg[r]) return -1;
            return 0;
        },
        contributions);
}

EvalOutcome cascade_infer_trees(const TreeEnsemble& model, const FanPolicy& policy,
                                std::span<const double> x) {
    if (policy.n_stages() != model.n_trees())
        throw validation_error("fan policy stage count does not match tree count");
    static thread_local std::vector<double> contributions;
    return tree_cascade_walk(
        model, policy.order, policy.beta, x,
        [&](std::size_t r, double g) -> int {
            const auto& table = policy.stages[r];
            const auto it = table.find(bin_of(g, policy.lambda));
            if (it == table.end()) return 2;
            const double hi = policy.beta + it->second.mu + policy.gamma * it->second.sigma;
            const double lo = policy.beta + it->second.mu - policy.gamma * it->second.sigma;
            if (g > hi) return +1;
            if (g < lo) return -1;
            return 0;
        },
        contributions);
}

namespace {

template <typename Policy>
TimingReport run_timed(const TreeEnsemble& model, const Policy& policy,
                       const TabularData& data, int runs) {
    if (runs < 1) throw validation_error("runs must be >= 1");
    model.validate();
    data.validate();
    if (model.max_feature_index() >= static_cast<int>(data.n_features))
        throw validation_error("model references more features than the data provides");

    std::vector<double> per_run_us;
    per_run_us.reserve(static_cast<std::size_t>(runs));
    long long total_models = 0;
    double sink = 0.0;
    for (int run = 0; run < runs; ++run) {
        long long models_this_run = 0;
        const auto start = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < data.n_rows; ++i) {
            EvalOutcome o = cascade_infer_trees(model, policy, data.row(i));
            models_this_run += o.stop_stage;
            sink += o.positive ? 1.0 : 0.0;
        }
        const auto end = std::chrono::steady_clock::now();
        const double us =
            std::chrono::duration_cast<std::chrono::duration<double, std::micro>>(end - start)
                .count() /
            static_cast<double>(data.n_rows);
        per_run_us.push_back(us);
        total_models = models_this_run;  // identical every run
    }

    TimingReport rep;
    double sum = std::accumulate(per_run_us.begin(), per_run_us.end(), 0.0);
    rep.mean_us = sum / static_cast<double>(runs);
    if (runs > 1) {
        double sq = 0.0;
        for (double v : per_run_us) sq += (v - rep.mean_us) * (v - rep.mean_us);
        rep.std_us = std::sqrt(sq / static_cast<double>(runs - 1));
    }
    rep.mean_models = static_cast<double>(total_models) / static_cast<double>(data.n_rows);
    // Keep the decision sum alive so the loop is not optimized away.
    if (sink < -1.0) rep.mean_us = -rep.mean_us;
    return rep;
}

}  // namespace

TimingReport timed_cascade_inference(const TreeEnsemble& model, const CascadePolicy& policy,
                                     const TabularData& data, int runs) {
    return run_timed(model, policy, data, runs);
}

TimingReport timed_cascade_inference(const TreeEnsemble& model, const FanPolicy& policy,
                                     const TabularData& data, int runs) {
    return run_timed(model, policy, data, runs);
}

std::string TimingReport::to_json() const {
    nlohmann::ordered_json j;
    j["mean_us"] = mean_us;
    j["std_us"] = std_us;
    j["mean_models"] = mean_models;
    return j.dump(2) + "\n";
}

std::string TreeEnsemble::to_json() const {
    nlohmann::ordered_json j;
    j["bias"] = bias;
    j["learning_rate"] = learning_rate;
    j["beta"] = beta;
    nlohmann::ordered_json tree_arr = nlohmann::ordered_json::array();
    for (const Tree& t : trees) {
        nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
        for (const TreeNode& n : t.nodes) {
            nlohmann::ordered_json node;
            if (n.is_leaf()) {
                node["leaf"] = n.leaf;
            } else {
                node["feature"] = n.feature;
                node["threshold"] = n.threshold;
                node["left"] = n.left;
                node["right"] = n.right;
            }
            nodes.push_back(std::move(node));
        }
        nlohmann::ordered_json tj;
        tj["nodes"] = std::move(nodes);
        tree_arr.push_back(std::move(tj));
    }
    j["trees"] = std::move(tree_arr);
    return j.dump() + "\n";
}

TreeEnsemble TreeEnsemble::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("invalid model JSON: ") + e.what());
    }
    TreeEnsemble model;
    model.bias = j.at("bias").get<double>();
    model.learning_rate = j.at("learning_rate").get<double>();
    model.beta = j.at("beta").get<double>();
    for (const auto& tj : j.at("trees")) {
        Tree t;
        for (const auto& node : tj.at("nodes")) {
            TreeNode n;
            if (node.contains("leaf")) {
                n.leaf = node.at("leaf").get<double>();
            } else {
                n.feature = node.at("feature").get<int>();
                n.threshold = node.at("threshold").get<double>();
                n.left = node.at("left").get<int>();
                n.right = node.at("right").get<int>();
            }
            t.nodes.push_back(n);
        }
        model.trees.push_back(std::move(t));
    }
    model.validate();
    return model;
}

}  // namespace qwyc
