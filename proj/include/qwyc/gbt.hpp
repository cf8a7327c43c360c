#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qwyc/cascade.hpp"
#include "qwyc/ensemble.hpp"
#include "qwyc/fan.hpp"

namespace qwyc {

/// One depth-limited regression tree stored as a flat node array
/// (root at index 0). Internal nodes route x[feature] < threshold to
/// `left`, otherwise to `right`; leaves carry the fitted value.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double leaf = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const;
};

/// Additive tree ensemble: margin(x) = bias + learning_rate * sum of tree
/// outputs; the decision compares the margin against beta. Cascade paths
/// work on the tree-sum scale with the bias folded into the threshold, so
/// matrix-based and tree-walk evaluation agree bit for bit.
struct TreeEnsemble {
    std::vector<Tree> trees;
    double bias = 0.0;
    double learning_rate = 0.1;
    double beta = 0.0;

    std::size_t n_trees() const { return trees.size(); }
    /// Decision threshold on the tree-sum scale.
    double folded_beta() const { return beta - bias; }

    double margin(std::span<const double> x) const;
    bool classify(std::span<const double> x) const;
    /// Largest feature index referenced by any tree (-1 for stump-only).
    int max_feature_index() const;
    void validate() const;

    std::string to_json() const;
    static TreeEnsemble from_json(const std::string& text);
};

struct TabularData {
    std::size_t n_rows = 0;
    std::size_t n_features = 0;
    std::vector<double> features;  // row-major
    std::vector<int> labels;       // 0/1

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * n_features, n_features};
    }
    void validate() const;
};

/// Loads a numeric CSV with a header row; the label column is named
/// `label`, every other column is a feature.
TabularData load_tabular_csv(const std::string& path);
void save_tabular_csv(const std::string& path, const TabularData& data);

struct GbtParams {
    int n_trees = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    std::uint64_t seed = 1;  // reserved; training is fully deterministic
};

/// Logistic-loss gradient boosting with exact greedy squared-error splits
/// on the negative gradient. Tree order is the training order.
TreeEnsemble train_gbt(const TabularData& data, const GbtParams& params);

/// scores[i][t] = learning_rate * leaf value of tree t; the accompanying
/// folded beta makes row-sum decisions identical to classify().
struct ScoredEnsemble {
    ScoreMatrix matrix;
    double folded_beta = 0.0;
};

ScoredEnsemble score_matrix_from_trees(const TreeEnsemble& model, const TabularData& data,
                                       bool attach_labels = true);

/// Tree-walk cascade evaluation: same semantics as evaluate_example on
/// the score matrix, computed directly from the trees.
EvalOutcome cascade_infer_trees(const TreeEnsemble& model, const CascadePolicy& policy,
                                std::span<const double> x);
EvalOutcome cascade_infer_trees(const TreeEnsemble& model, const FanPolicy& policy,
                                std::span<const double> x);

struct TimingReport {
    double mean_us = 0.0;   // mean per-example wall time across runs
    double std_us = 0.0;    // sample standard deviation across runs
    double mean_models = 0.0;

    std::string to_json() const;
};

/// Walks the trees in policy order with early exit, `runs` times over the
/// whole feature set, timing each run. Single-threaded to keep the
/// variance down.
TimingReport timed_cascade_inference(const TreeEnsemble& model, const CascadePolicy& policy,
                                     const TabularData& data, int runs);
TimingReport timed_cascade_inference(const TreeEnsemble& model, const FanPolicy& policy,
                                     const TabularData& data, int runs);

}  // namespace qwyc
