#include "qwyc/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "qwyc/errors.hpp"
#include "qwyc/util.hpp"

namespace qwyc {

namespace {

bool looks_like_header(const std::vector<std::string_view>& fields) {
    if (fields.empty() || fields[0] != "id") return false;
    std::size_t k = 1;
    if (k < fields.size() && fields[k] == "label") ++k;
    if (k == fields.size()) return false;  // no score columns
    for (std::size_t j = 0; k < fields.size(); ++k, ++j) {
        const auto f = fields[k];
        if (f.size() < 2 || f[0] != 's') return false;
        for (std::size_t p = 1; p < f.size(); ++p)
            if (f[p] < '0' || f[p] > '9') return false;
    }
    return true;
}

}  // namespace

void ScoreMatrix::validate() const {
    if (n_examples == 0) throw validation_error("score matrix has no examples");
    if (n_models == 0) throw validation_error("score matrix has no models");
    if (scores.size() != n_examples * n_models)
        throw validation_error("score matrix storage size does not match dimensions");
    for (double v : scores)
        if (!std::isfinite(v)) throw validation_error("score matrix contains a non-finite value");
    if (labels) {
        if (labels->size() != n_examples)
            throw validation_error("label vector length does not match example count");
        for (int y : *labels)
            if (y != 0 && y != 1) throw validation_error("labels must be 0 or 1");
    }
    if (example_ids && example_ids->size() != n_examples)
        throw validation_error("example id count does not match example count");
}

void CostVector::validate(std::size_t expected_size) const {
    if (values.size() != expected_size)
        throw validation_error("cost vector length does not match model count");
    for (double c : values)
        if (!(c > 0.0) || !std::isfinite(c))
            throw validation_error("costs must be strictly positive finite reals");
}

void DecisionConfig::validate() const {
    if (!std::isfinite(beta)) throw validation_error("beta must be finite");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw validation_error("alpha must lie in [0, 1]");
}

double canonical_row_sum(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double acc = 0.0;
    for (double v : sorted) acc += v;
    return acc;
}

FullReference full_reference(const ScoreMatrix& sm, double beta) {
    FullReference ref;
    ref.full_scores.reserve(sm.n_examples);
    ref.full_decisions.reserve(sm.n_examples);
    for (std::size_t i = 0; i < sm.n_examples; ++i) {
        double s = canonical_row_sum(sm.row(i));
        ref.full_scores.push_back(s);
        ref.full_decisions.push_back(s >= beta ? 1 : 0);
    }
    return ref;
}

LoadedMatrix load_score_matrix(const std::string& path,
                               const std::optional<std::string>& meta_path) {
    const std::string text = read_text_file(path);

    std::vector<std::pair<std::size_t, std::string_view>> lines;  // (line no, text)
    {
        std::string_view rest(text);
        std::size_t line_no = 0;
        while (!rest.empty()) {
            ++line_no;
            std::size_t nl = rest.find('\n');
            std::string_view line = (nl == std::string_view::npos) ? rest : rest.substr(0, nl);
            rest = (nl == std::string_view::npos) ? std::string_view{} : rest.substr(nl + 1);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (!line.empty()) lines.emplace_back(line_no, line);
        }
    }
    if (lines.empty()) throw parse_error(path + ": empty score matrix file");

    LoadedMatrix out;
    ScoreMatrix& sm = out.matrix;

    auto first_fields = split_csv_line(lines.front().second);
    bool has_header = looks_like_header(first_fields);
    bool has_label = has_header && first_fields.size() > 1 && first_fields[1] == "label";
    std::size_t n_cols = first_fields.size();
    std::size_t first_data = has_header ? 1 : 0;
    if (!has_header) {
        if (n_cols < 2) throw parse_error(path + ":1: expected at least an id and one score column");
    }
    sm.n_models = n_cols - 1 - (has_label ? 1 : 0);
    sm.example_ids.emplace();
    if (has_label) sm.labels.emplace();

    if (first_data >= lines.size())
        throw parse_error(path + ": header but no data rows");

    for (std::size_t li = first_data; li < lines.size(); ++li) {
        auto [line_no, line] = lines[li];
        auto fields = split_csv_line(line);
        if (fields.size() != n_cols)
            throw parse_error(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(n_cols) + " columns, found " +
                              std::to_string(fields.size()));
        std::size_t k = 0;
        sm.example_ids->emplace_back(fields[k++]);
        if (has_label) {
            auto y = parse_double(fields[k++]);
            if (!y || (*y != 0.0 && *y != 1.0))
                throw parse_error(path + ":" + std::to_string(line_no) + ": label must be 0 or 1");
            sm.labels->push_back(static_cast<int>(*y));
        }
        for (; k < n_cols; ++k) {
            auto v = parse_double(fields[k]);
            if (!v)
                throw parse_error(path + ":" + std::to_string(line_no) +
                                  ": malformed score value '" + std::string(fields[k]) + "'");
            if (!std::isfinite(*v))
                throw validation_error(path + ":" + std::to_string(line_no) +
                                       ": score values must be finite");
            sm.scores.push_back(*v);
        }
        ++sm.n_examples;
    }

    out.costs = CostVector::ones(sm.n_models);
    out.config = DecisionConfig{};

    std::optional<std::string> meta = meta_path;
    if (!meta) {
        std::string candidate = default_meta_path(path);
        if (std::filesystem::exists(candidate)) meta = candidate;
    }
    if (meta) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text_file(*meta));
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(*meta + ": invalid meta JSON: " + e.what());
        }
        if (j.contains("beta")) {
            if (!j["beta"].is_number()) throw validation_error(*meta + ": beta must be a number");
            out.config.beta = j["beta"].get<double>();
        }
        if (j.contains("costs")) {
            if (!j["costs"].is_array()) throw validation_error(*meta + ": costs must be an array");
            out.costs.values = j["costs"].get<std::vector<double>>();
        }
    }

    sm.validate();
    out.costs.validate(sm.n_models);
    out.config.validate();
    return out;
}

void save_score_matrix(const std::string& path, const ScoreMatrix& sm) {
    sm.validate();
    std::string text;
    text.reserve(sm.n_examples * sm.n_models * 12);
    text += "id";
    if (sm.labels) text += ",label";
    for (std::size_t t = 0; t < sm.n_models; ++t) {
        text += ",s";
        text += std::to_string(t);
    }
    text += '\n';
    for (std::size_t i = 0; i < sm.n_examples; ++i) {
        if (sm.example_ids)
            text += (*sm.example_ids)[i];
        else
            text += std::to_string(i);
        if (sm.labels) {
            text += ',';
            text += std::to_string((*sm.labels)[i]);
        }
        for (std::size_t t = 0; t < sm.n_models; ++t) {
            text += ',';
            text += format_double(sm.score(i, t));
        }
        text += '\n';
    }
    write_text_file(path, text);
}

void save_matrix_meta(const std::string& path, double beta, const CostVector& costs) {
    nlohmann::ordered_json j;
    j["beta"] = beta;
    j["costs"] = costs.values;
    write_text_file(path, j.dump(2) + "\n");
}

std::string default_meta_path(const std::string& matrix_path) {
    std::filesystem::path p(matrix_path);
    p.replace_extension(".meta.json");
    return p.string();
}

}  // namespace qwyc
