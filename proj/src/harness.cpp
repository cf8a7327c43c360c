#include "qwyc/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qwyc/datagen.hpp"
#include "qwyc/ensemble.hpp"
#include "qwyc/errors.hpp"
#include "qwyc/fan.hpp"
#include "qwyc/gbt.hpp"
#include "qwyc/oracle.hpp"
#include "qwyc/optimizer.hpp"
#include "qwyc/orderings.hpp"
#include "qwyc/util.hpp"

namespace qwyc {

namespace {

Mode parse_mode(const std::string& mode) {
    if (mode == "two-sided") return Mode::two_sided;
    if (mode == "filter") return Mode::filter_negative;
    throw validation_error("unknown mode '" + mode + "' (expected two-sided or filter)");
}

FanDiffSign parse_fan_sign(const std::string& sign) {
    if (sign == "g-f") return FanDiffSign::g_minus_f;
    if (sign == "f-g") return FanDiffSign::f_minus_g;
    throw validation_error("unknown fan sign '" + sign + "' (expected g-f or f-g)");
}

CostVector parse_costs_override(const std::string& text, std::size_t n_models) {
    CostVector costs;
    for (auto field : split_csv_line(text)) {
        auto v = parse_double(field);
        if (!v) throw validation_error("malformed cost value '" + std::string(field) + "'");
        costs.values.push_back(*v);
    }
    costs.validate(n_models);
    return costs;
}

// Resolves the --order choice; nullopt means the joint greedy search.
std::optional<std::vector<int>> resolve_order(const std::string& name,
                                              const std::optional<std::uint64_t>& seed,
                                              const std::string& mse_target,
                                              const ScoreMatrix& sm, const FullReference& ref) {
    if (name == "qwyc") return std::nullopt;
    OrderingSpec spec;
    spec.seed = seed;
    if (mse_target == "labels")
        spec.target_source = MseTargetSource::labels;
    else if (mse_target == "full-score")
        spec.target_source = MseTargetSource::full_score;
    else if (mse_target == "auto")
        spec.target_source = sm.labels ? MseTargetSource::labels : MseTargetSource::full_score;
    else
        throw validation_error("unknown mse target '" + mse_target + "'");
    if (name == "training")
        spec.kind = OrderingKind::training_order;
    else if (name == "random")
        spec.kind = OrderingKind::random_order;
    else if (name == "individual-mse")
        spec.kind = OrderingKind::individual_mse;
    else if (name == "greedy-mse")
        spec.kind = OrderingKind::greedy_mse;
    else
        throw validation_error("unknown order '" + name + "'");
    return make_order(spec, sm, ref);
}

std::string histogram_csv(const Metrics& m) {
    std::string text = "stage,count\n";
    for (std::size_t r = 0; r < m.stop_histogram.size(); ++r) {
        text += std::to_string(r + 1);
        text += ',';
        text += std::to_string(m.stop_histogram[r]);
        text += '\n';
    }
    return text;
}

std::string hist_path_for(const std::string& report_path) {
    std::filesystem::path p(report_path);
    p.replace_extension(".hist.csv");
    return p.string();
}

struct BuiltPolicy {
    std::optional<CascadePolicy> cascade;
    std::optional<FanPolicy> fan;

    Metrics evaluate(const ScoreMatrix& sm, const CostVector& costs) const {
        const double beta = cascade ? cascade->beta : fan->beta;
        const FullReference ref = full_reference(sm, beta);
        if (cascade) return evaluate_matrix(*cascade, sm, costs, ref);
        return evaluate_fan_matrix(*fan, sm, costs, ref);
    }
    std::string to_json() const { return cascade ? cascade->to_json() : fan->to_json(); }
};

// Shared policy construction for optimize and sweep.
BuiltPolicy build_policy(const LoadedMatrix& loaded, const std::string& stopping,
                         const std::string& order_name,
                         const std::optional<std::uint64_t>& seed,
                         const std::string& mse_target, const std::string& mode, double alpha,
                         const std::optional<double>& gamma, double lambda,
                         const std::string& fan_sign) {
    const ScoreMatrix& sm = loaded.matrix;
    const FullReference ref = full_reference(sm, loaded.config.beta);
    const auto order = resolve_order(order_name, seed, mse_target, sm, ref);

    BuiltPolicy built;
    if (stopping == "qwyc") {
        DecisionConfig config = loaded.config;
        config.alpha = alpha;
        config.mode = parse_mode(mode);
        config.validate();
        built.cascade = order ? thresholds_for_fixed_order(sm, loaded.costs, config, *order)
                              : optimize_order(sm, loaded.costs, config);
    } else if (stopping == "fan") {
        if (!order)
            throw validation_error("fan stopping needs a fixed ordering (--order != qwyc)");
        if (parse_mode(mode) != Mode::two_sided)
            throw validation_error("fan stopping only supports two-sided mode");
        if (!gamma) throw validation_error("fan stopping requires --gamma");
        built.fan = fit_fan(sm, *order, *gamma, lambda, loaded.config.beta,
                            parse_fan_sign(fan_sign));
    } else {
        throw validation_error("unknown stopping '" + stopping + "' (expected qwyc or fan)");
    }
    return built;
}

}  // namespace

void cmd_split(const SplitOptions& opt) {
    const std::string text = read_text_file(opt.input);
    std::vector<std::string_view> lines;
    std::string_view rest(text);
    while (!rest.empty()) {
        std::size_t nl = rest.find('\n');
        std::string_view line = (nl == std::string_view::npos) ? rest : rest.substr(0, nl);
        rest = (nl == std::string_view::npos) ? std::string_view{} : rest.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.size() < 3)
        throw validation_error(opt.input + ": need a header and at least two data rows to split");

    const std::string_view header = lines.front();
    std::vector<std::string_view> rows(lines.begin() + 1, lines.end());
    std::mt19937_64 rng(opt.seed);
    for (std::size_t i = rows.size() - 1; i > 0; --i)
        std::swap(rows[i], rows[static_cast<std::size_t>(rng() % (i + 1))]);

    const std::size_t n_train = (rows.size() * 8) / 10;
    const auto write_part = [&](const std::string& path, std::size_t from, std::size_t to) {
        std::string out(header);
        out += '\n';
        for (std::size_t i = from; i < to; ++i) {
            out += rows[i];
            out += '\n';
        }
        write_text_file(path, out);
    };
    write_part(opt.out_prefix + ".train.csv", 0, n_train);
    write_part(opt.out_prefix + ".test.csv", n_train, rows.size());

    // Carry the sidecar along when the input has one.
    const std::string meta = default_meta_path(opt.input);
    if (std::filesystem::exists(meta)) {
        const std::string meta_text = read_text_file(meta);
        write_text_file(opt.out_prefix + ".train.meta.json", meta_text);
        write_text_file(opt.out_prefix + ".test.meta.json", meta_text);
    }
    std::cout << "wrote " << opt.out_prefix << ".train.csv (" << n_train << " rows), "
              << opt.out_prefix << ".test.csv (" << rows.size() - n_train << " rows)\n";
}

void cmd_train_gbt(const TrainGbtOptions& opt) {
    const TabularData data = load_tabular_csv(opt.input);
    GbtParams params;
    params.n_trees = opt.trees;
    params.max_depth = opt.depth;
    params.learning_rate = opt.learning_rate;
    params.seed = opt.seed;
    const TreeEnsemble model = train_gbt(data, params);
    write_text_file(opt.out, model.to_json());

    long long correct = 0;
    for (std::size_t i = 0; i < data.n_rows; ++i)
        if (model.classify(data.row(i)) == (data.labels[i] != 0)) ++correct;
    std::cout << "trained " << model.n_trees() << " trees; training accuracy "
              << format_double(static_cast<double>(correct) / static_cast<double>(data.n_rows))
              << "\n";
}

void cmd_score(const ScoreOptions& opt) {
    const TreeEnsemble model = TreeEnsemble::from_json(read_text_file(opt.model));
    const TabularData data = load_tabular_csv(opt.input);
    const ScoredEnsemble scored = score_matrix_from_trees(model, data);
    save_score_matrix(opt.out, scored.matrix);
    const std::string meta_path = opt.meta_out ? *opt.meta_out : default_meta_path(opt.out);
    save_matrix_meta(meta_path, scored.folded_beta, CostVector::ones(scored.matrix.n_models));
    std::cout << "wrote " << opt.out << " and " << meta_path << "\n";
}

void cmd_optimize(const OptimizeOptions& opt) {
    LoadedMatrix loaded = load_score_matrix(opt.input, opt.meta);
    if (opt.costs) loaded.costs = parse_costs_override(*opt.costs, loaded.matrix.n_models);

    const BuiltPolicy built =
        build_policy(loaded, opt.stopping, opt.order, opt.seed, opt.mse_target, opt.mode,
                     opt.alpha, opt.gamma, opt.lambda, opt.fan_sign);
    write_text_file(opt.out, built.to_json());
    const Metrics train = built.evaluate(loaded.matrix, loaded.costs);
    std::cout << train.to_json();
}

void cmd_evaluate(const EvaluateOptions& opt) {
    const LoadedMatrix loaded = load_score_matrix(opt.input, opt.meta);
    const std::string policy_text = read_text_file(opt.policy);

    nlohmann::json probe;
    try {
        probe = nlohmann::json::parse(policy_text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(opt.policy + ": invalid policy JSON: " + e.what());
    }
    const std::string type = probe.value("type", "");

    BuiltPolicy built;
    if (type == "qwyc")
        built.cascade = CascadePolicy::from_json(policy_text);
    else if (type == "fan")
        built.fan = FanPolicy::from_json(policy_text);
    else
        throw validation_error(opt.policy + ": unknown policy type '" + type + "'");

    const Metrics m = built.evaluate(loaded.matrix, loaded.costs);
    const std::string report = m.to_json();
    if (opt.out) {
        write_text_file(*opt.out, report);
        write_text_file(hist_path_for(*opt.out), histogram_csv(m));
    }
    std::cout << report;
}

void cmd_sweep(const SweepOptions& opt) {
    if (opt.values.empty()) throw validation_error("sweep needs a non-empty --values list");
    if (opt.knob != "alpha" && opt.knob != "gamma" && opt.knob != "lambda")
        throw validation_error("unknown knob '" + opt.knob + "'");
    const bool fan_knob = (opt.knob != "alpha");
    if (fan_knob != (opt.stopping == "fan"))
        throw validation_error("knob '" + opt.knob + "' does not match stopping '" +
                               opt.stopping + "'");
    for (double v : opt.values) {
        if (opt.knob == "alpha" && !(v >= 0.0 && v <= 1.0))
            throw validation_error("alpha values must lie in [0, 1]");
        if (fan_knob && !(v > 0.0))
            throw validation_error(opt.knob + " values must be positive");
    }

    const LoadedMatrix train = load_score_matrix(opt.train, opt.train_meta);
    const LoadedMatrix test = load_score_matrix(opt.test, opt.test_meta);
    if (train.matrix.n_models != test.matrix.n_models)
        throw validation_error("train and test matrices disagree on the model count");

    std::vector<double> values = opt.values;
    std::sort(values.begin(), values.end());

    const bool train_acc = train.matrix.labels.has_value();
    const bool test_acc = test.matrix.labels.has_value();
    std::string csv = opt.knob;
    csv += ",train_mean_models,train_pct_diff";
    if (train_acc) csv += ",train_accuracy";
    csv += ",test_mean_models,test_pct_diff";
    if (test_acc) csv += ",test_accuracy";
    csv += '\n';

    for (double v : values) {
        const double alpha = (opt.knob == "alpha") ? v : 0.0;
        const std::optional<double> gamma =
            (opt.knob == "gamma") ? std::optional<double>(v) : opt.gamma;
        const double lambda = (opt.knob == "lambda") ? v : opt.lambda.value_or(0.01);
        const BuiltPolicy built =
            build_policy(train, opt.stopping, opt.order, opt.seed, opt.mse_target, opt.mode,
                         alpha, gamma, lambda, opt.fan_sign);
        const Metrics mtr = built.evaluate(train.matrix, train.costs);
        const Metrics mte = built.evaluate(test.matrix, test.costs);
        csv += format_double(v);
        csv += ',';
        csv += format_double(mtr.mean_models);
        csv += ',';
        csv += format_double(mtr.pct_diff);
        if (train_acc) {
            csv += ',';
            csv += format_double(*mtr.accuracy);
        }
        csv += ',';
        csv += format_double(mte.mean_models);
        csv += ',';
        csv += format_double(mte.pct_diff);
        if (test_acc) {
            csv += ',';
            csv += format_double(*mte.accuracy);
        }
        csv += '\n';
    }
    write_text_file(opt.out, csv);
    std::cout << csv;
}

void cmd_time(const TimeOptions& opt) {
    const TreeEnsemble model = TreeEnsemble::from_json(read_text_file(opt.model));
    const TabularData data = load_tabular_csv(opt.input);
    const std::string policy_text = read_text_file(opt.policy);
    nlohmann::json probe;
    try {
        probe = nlohmann::json::parse(policy_text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(opt.policy + ": invalid policy JSON: " + e.what());
    }
    const std::string type = probe.value("type", "");
    TimingReport rep;
    if (type == "qwyc")
        rep = timed_cascade_inference(model, CascadePolicy::from_json(policy_text), data,
                                      opt.runs);
    else if (type == "fan")
        rep = timed_cascade_inference(model, FanPolicy::from_json(policy_text), data, opt.runs);
    else
        throw validation_error(opt.policy + ": unknown policy type '" + type + "'");
    if (opt.out) write_text_file(*opt.out, rep.to_json());
    std::cout << rep.to_json();
}

void cmd_oracle(const OracleOptions& opt) {
    const LoadedMatrix loaded = load_score_matrix(opt.input, opt.meta);
    const OracleResult res =
        brute_force_optimal(loaded.matrix, loaded.costs, opt.alpha, opt.max_t);
    if (opt.out) write_text_file(*opt.out, res.to_json());
    std::cout << res.to_json();
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"cascade construction and evaluation for additive ensembles"};
    app.require_subcommand(1);

    SplitOptions split;
    auto* split_cmd = app.add_subcommand("split", "seeded 80-20 shuffle split of a CSV");
    split_cmd->add_option("--input", split.input)->required();
    split_cmd->add_option("--seed", split.seed);
    split_cmd->add_option("--out", split.out_prefix, "output path prefix")->required();

    TrainGbtOptions train;
    auto* train_cmd = app.add_subcommand("train-gbt", "train a boosted tree ensemble");
    train_cmd->add_option("--input", train.input)->required();
    train_cmd->add_option("--trees", train.trees);
    train_cmd->add_option("--depth", train.depth);
    train_cmd->add_option("--learning-rate", train.learning_rate);
    train_cmd->add_option("--seed", train.seed);
    train_cmd->add_option("--out", train.out)->required();

    ScoreOptions score;
    auto* score_cmd = app.add_subcommand("score", "emit the per-tree score matrix");
    score_cmd->add_option("--model", score.model)->required();
    score_cmd->add_option("--input", score.input)->required();
    score_cmd->add_option("--out", score.out)->required();
    score_cmd->add_option("--meta", score.meta_out, "sidecar output path");

    OptimizeOptions optimize;
    auto* opt_cmd = app.add_subcommand("optimize", "build a cascade policy");
    opt_cmd->add_option("--input", optimize.input)->required();
    opt_cmd->add_option("--meta", optimize.meta);
    opt_cmd->add_option("--alpha", optimize.alpha);
    opt_cmd->add_option("--mode", optimize.mode);
    opt_cmd->add_option("--order", optimize.order);
    opt_cmd->add_option("--stopping", optimize.stopping);
    opt_cmd->add_option("--seed", optimize.seed);
    opt_cmd->add_option("--mse-target", optimize.mse_target);
    opt_cmd->add_option("--gamma", optimize.gamma);
    opt_cmd->add_option("--lambda", optimize.lambda);
    opt_cmd->add_option("--fan-sign", optimize.fan_sign);
    opt_cmd->add_option("--costs", optimize.costs, "comma-separated per-model costs");
    opt_cmd->add_option("--out", optimize.out)->required();

    EvaluateOptions evaluate;
    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a policy on a score matrix");
    eval_cmd->add_option("--input", evaluate.input)->required();
    eval_cmd->add_option("--meta", evaluate.meta);
    eval_cmd->add_option("--policy", evaluate.policy)->required();
    eval_cmd->add_option("--out", evaluate.out);

    SweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "trade-off curve over a knob");
    sweep_cmd->add_option("--train", sweep.train)->required();
    sweep_cmd->add_option("--test", sweep.test)->required();
    sweep_cmd->add_option("--train-meta", sweep.train_meta);
    sweep_cmd->add_option("--test-meta", sweep.test_meta);
    sweep_cmd->add_option("--knob", sweep.knob);
    sweep_cmd->add_option("--values", sweep.values, "knob values")->required()->delimiter(',');
    sweep_cmd->add_option("--order", sweep.order);
    sweep_cmd->add_option("--stopping", sweep.stopping);
    sweep_cmd->add_option("--seed", sweep.seed);
    sweep_cmd->add_option("--mse-target", sweep.mse_target);
    sweep_cmd->add_option("--mode", sweep.mode);
    sweep_cmd->add_option("--gamma", sweep.gamma);
    sweep_cmd->add_option("--lambda", sweep.lambda);
    sweep_cmd->add_option("--fan-sign", sweep.fan_sign);
    sweep_cmd->add_option("--out", sweep.out)->required();

    TimeOptions time;
    auto* time_cmd = app.add_subcommand("time", "wall-clock early-exit inference");
    time_cmd->add_option("--model", time.model)->required();
    time_cmd->add_option("--policy", time.policy)->required();
    time_cmd->add_option("--input", time.input)->required();
    time_cmd->add_option("--runs", time.runs);
    time_cmd->add_option("--out", time.out);

    OracleOptions oracle;
    auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive optimal cascade search");
    oracle_cmd->add_option("--input", oracle.input)->required();
    oracle_cmd->add_option("--meta", oracle.meta);
    oracle_cmd->add_option("--alpha", oracle.alpha);
    oracle_cmd->add_option("--max-t", oracle.max_t);
    oracle_cmd->add_option("--out", oracle.out);

    try {
        app.parse(argc, argv);
        if (split_cmd->parsed()) cmd_split(split);
        if (train_cmd->parsed()) cmd_train_gbt(train);
        if (score_cmd->parsed()) cmd_score(score);
        if (opt_cmd->parsed()) cmd_optimize(optimize);
        if (eval_cmd->parsed()) cmd_evaluate(evaluate);
        if (sweep_cmd->parsed()) cmd_sweep(sweep);
        if (time_cmd->parsed()) cmd_time(time);
        if (oracle_cmd->parsed()) cmd_oracle(oracle);
        return kExitOk;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace qwyc
