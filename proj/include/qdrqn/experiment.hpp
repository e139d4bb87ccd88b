#pragma once

#include "qdrqn/cartpole.hpp"
#include "qdrqn/drqn.hpp"
#include "qdrqn/recurrent.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qdrqn {

/// Raised for unrecognised model names, bad observability values and
/// ill-typed config fields.
class SpecError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// The four model families of the comparison grid.
inline const std::vector<std::string> &model_names() {
    static const std::vector<std::string> names{"qlstm-1", "qlstm-2", "lstm-8", "lstm-16"};
    return names;
}

ModelConfig model_config(std::string_view model, int obs_dim);

struct ExperimentSpec {
    std::string model = "lstm-8";
    bool partial = false;
    TrainConfig train;
    EnvConfig env;
    std::filesystem::path out_dir = "runs/default";

    void validate() const;
};

std::string spec_to_json(const ExperimentSpec &spec);
/// Missing fields keep their defaults; present fields must have the right type.
ExperimentSpec spec_from_json(std::string_view text);

struct ExperimentResult {
    RunLog log;
    std::filesystem::path scores_csv;
    std::filesystem::path config_json;
    std::filesystem::path reward_svg;
};

/// Trains per `spec` and writes scores.csv, config.json and reward_curve.svg
/// into spec.out_dir (created if needed).
ExperimentResult run_experiment(const ExperimentSpec &spec,
                                const std::function<void(const EpisodeLog &)> &on_episode = {});

/// Trailing mean over up to `window` entries ending at each index.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

/// Static SVG line chart: raw episode scores and their moving average.
void write_reward_svg(const RunLog &log, std::ostream &out, std::size_t window = 20);

struct ParameterCell {
    std::string name;
    ModelConfig config;
    std::size_t expected = 0;
};

struct ParameterCheck {
    std::string name;
    std::size_t expected = 0;
    std::size_t actual = 0;
    bool pass = false;
};

/// The eight reference parameter counts (four models x full/partial).
std::vector<ParameterCell> reference_parameter_cells();

std::vector<ParameterCheck> verify_parameters(std::span<const ParameterCell> cells);
std::vector<ParameterCheck> verify_parameters();

/// One line per cell: `name expected actual PASS|FAIL`.
void write_parameter_report(std::span<const ParameterCheck> checks, std::ostream &out);

} // namespace qdrqn
