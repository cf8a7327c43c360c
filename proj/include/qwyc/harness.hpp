#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qwyc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitValidation = 2;

struct SplitOptions {
    std::string input;
    std::uint64_t seed = 1;
    std::string out_prefix;
};

struct TrainGbtOptions {
    std::string input;
    int trees = 100;
    int depth = 3;
    double learning_rate = 0.1;
    std::uint64_t seed = 1;
    std::string out;
};

struct ScoreOptions {
    std::string model;
    std::string input;
    std::string out;
    std::optional<std::string> meta_out;  // defaults next to `out`
};

struct OptimizeOptions {
    std::string input;
    std::optional<std::string> meta;
    double alpha = 0.0;
    std::string mode = "two-sided";  // two-sided | filter
    std::string order = "qwyc";      // qwyc | training | random | individual-mse | greedy-mse
    std::string stopping = "qwyc";   // qwyc | fan
    std::optional<std::uint64_t> seed;
    std::string mse_target = "auto";  // auto | labels | full-score
    std::optional<double> gamma;
    double lambda = 0.01;
    std::string fan_sign = "g-f";  // g-f | f-g
    std::optional<std::string> costs;  // comma-separated override
    std::string out;
};

struct EvaluateOptions {
    std::string input;
    std::optional<std::string> meta;
    std::string policy;
    std::optional<std::string> out;  // report JSON; histogram CSV lands beside it
};

struct SweepOptions {
    std::string train;
    std::string test;
    std::optional<std::string> train_meta;
    std::optional<std::string> test_meta;
    std::string knob = "alpha";  // alpha | gamma | lambda
    std::vector<double> values;
    std::string order = "qwyc";
    std::string stopping = "qwyc";
    std::optional<std::uint64_t> seed;
    std::string mse_target = "auto";
    std::string mode = "two-sided";
    std::optional<double> gamma;   // fixed value for lambda sweeps
    std::optional<double> lambda;  // fixed value for gamma sweeps (default 0.01)
    std::string fan_sign = "g-f";
    std::string out;
};

struct TimeOptions {
    std::string model;
    std::string policy;
    std::string input;
    int runs = 100;
    std::optional<std::string> out;
};

struct OracleOptions {
    std::string input;
    std::optional<std::string> meta;
    double alpha = 0.0;
    int max_t = 8;
    std::optional<std::string> out;
};

void cmd_split(const SplitOptions& opt);
void cmd_train_gbt(const TrainGbtOptions& opt);
void cmd_score(const ScoreOptions& opt);
void cmd_optimize(const OptimizeOptions& opt);
void cmd_evaluate(const EvaluateOptions& opt);
void cmd_sweep(const SweepOptions& opt);
void cmd_time(const TimeOptions& opt);
void cmd_oracle(const OracleOptions& opt);

/// Full CLI entry point; maps validation/parse failures to exit code 2
/// and internal failures to 1.
int run_cli(int argc, const char* const* argv);

}  // namespace qwyc
