#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qwyc {

/// Row-major N x T matrix of per-model score contributions. The full
/// ensemble score of example i is the sum of row i.
struct ScoreMatrix {
    std::size_t n_examples = 0;
    std::size_t n_models = 0;
    std::vector<double> scores;  // row-major, n_examples * n_models
    std::optional<std::vector<int>> labels;            // 0/1 when present
    std::optional<std::vector<std::string>> example_ids;

    double score(std::size_t i, std::size_t t) const {
        return scores[i * n_models + t];
    }
    std::span<const double> row(std::size_t i) const {
        return {scores.data() + i * n_models, n_models};
    }

    // Throws validation_error on shape mismatch, non-finite scores, or
    // labels outside {0, 1}.
    void validate() const;
};

/// Per-model evaluation costs; all entries strictly positive.
struct CostVector {
    std::vector<double> values;

    static CostVector ones(std::size_t n) {
        return CostVector{std::vector<double>(n, 1.0)};
    }
    void validate(std::size_t expected_size) const;
};

enum class Mode { two_sided, filter_negative };

/// Decision threshold, disagreement budget and stopping mode shared by
/// the optimizers.
struct DecisionConfig {
    double beta = 0.0;
    double alpha = 0.0;  // in [0, 1]
    Mode mode = Mode::two_sided;

    void validate() const;
};

/// Reference scores and decisions of the fully evaluated ensemble.
/// Ties at beta classify positive.
struct FullReference {
    std::vector<double> full_scores;
    std::vector<std::uint8_t> full_decisions;  // 1 = positive
};

/// Order-independent sum of a row: values are added in ascending order,
/// so any column permutation produces the bit-identical result. All full
/// ensemble scores in this library are computed this way.
double canonical_row_sum(std::span<const double> values);

FullReference full_reference(const ScoreMatrix& sm, double beta);

struct LoadedMatrix {
    ScoreMatrix matrix;
    CostVector costs;
    DecisionConfig config;  // beta from meta (default 0), alpha/mode defaults
};

/// Loads a score matrix CSV (`id[,label],s0,...`) plus an optional meta
/// sidecar (`{"beta": ..., "costs": [...]}`). A file whose first line does
/// not look like a header is read as header-less data (no labels, first
/// field is the id). Missing costs default to all ones, missing beta to 0.
LoadedMatrix load_score_matrix(const std::string& path,
                               const std::optional<std::string>& meta_path = std::nullopt);

/// Writes the CSV form; scores use shortest round-trip rendering. Rows
/// without ids get their row index as id.
void save_score_matrix(const std::string& path, const ScoreMatrix& sm);

/// Writes the meta sidecar for a matrix.
void save_matrix_meta(const std::string& path, double beta, const CostVector& costs);

/// Default sidecar path for a matrix path: replaces the extension with
/// ".meta.json" ("dir/m.csv" -> "dir/m.meta.json").
std::string default_meta_path(const std::string& matrix_path);

}  // namespace qwyc
