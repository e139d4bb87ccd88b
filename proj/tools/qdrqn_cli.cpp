// Experiment runner for the recurrent Q-learning agents on Cart-Pole.
//
// Exit codes: 0 success, 1 usage error, 2 runtime abort.

#include "qdrqn/experiment.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::string read_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw qdrqn::SpecError("cannot read config file " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Train quantum and classical recurrent Q-networks on Cart-Pole"};

    std::string config_path;
    std::string model;
    std::string obs;
    int episodes = 0;
    unsigned long long seed = 0;
    std::string out_dir;
    double gamma = 0;
    int max_steps = 0;
    double angle_limit_deg = 0;
    int jobs = 1;
    int num_seeds = 1;
    bool print_params = false;
    bool verify_params = false;
    bool quiet = false;

    app.add_option("--config", config_path, "Resolved config.json of an earlier run to reproduce");
    app.add_option("--model", model, "qlstm-1 | qlstm-2 | lstm-8 | lstm-16");
    app.add_option("--obs", obs, "full | partial")->check(CLI::IsMember({"full", "partial"}));
    app.add_option("--episodes", episodes, "Episode budget (default 1000 for LSTM models)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--gamma", gamma, "Discount factor in (0, 1]");
    app.add_option("--max-steps", max_steps, "Step cap per episode")->check(CLI::PositiveNumber);
    app.add_option("--angle-limit-deg", angle_limit_deg, "Pole angle termination limit in degrees")
        ->check(CLI::PositiveNumber);
    app.add_option("--num-seeds", num_seeds, "Run seeds seed..seed+N-1 into OUT/seed-<s>")
        ->check(CLI::PositiveNumber);
    app.add_option("--jobs", jobs, "Concurrent runs when --num-seeds > 1")->check(CLI::PositiveNumber);
    app.add_flag("--print-params", print_params, "Print the trainable parameter count and exit");
    app.add_flag("--verify-params", verify_params, "Check all eight reference parameter counts and exit");
    app.add_flag("--quiet", quiet, "No per-episode progress");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    if (verify_params) {
        const auto checks = qdrqn::verify_parameters();
        qdrqn::write_parameter_report(checks, std::cout);
        for (const auto &c : checks) {
            if (!c.pass) {
                return kExitRuntime;
            }
        }
        return 0;
    }

    qdrqn::ExperimentSpec spec;
    try {
        if (!config_path.empty()) {
            spec = qdrqn::spec_from_json(read_file(config_path));
        } else if (model.empty()) {
            throw qdrqn::SpecError("--model is required (or --config)");
        }
        if (!model.empty()) {
            spec.model = model;
        }
        if (!obs.empty()) {
            spec.partial = obs == "partial";
            spec.env.partial_observation = spec.partial;
        }
        (void)qdrqn::model_config(spec.model, spec.env.obs_dim());

        if (print_params) {
            qdrqn::Rng rng(0);
            const qdrqn::DressedModel m(qdrqn::model_config(spec.model, spec.env.obs_dim()), rng);
            std::cout << qdrqn::count_parameters(m) << '\n';
            return 0;
        }

        if (app.count("--episodes")) {
            spec.train.episodes = episodes;
        } else if (config_path.empty()) {
            if (spec.model.rfind("qlstm", 0) == 0) {
                throw qdrqn::SpecError("--episodes is required for QLSTM runs");
            }
            spec.train.episodes = 1000;
        }
        if (app.count("--seed")) {
            spec.train.seed = seed;
        }
        if (app.count("--gamma")) {
            spec.train.gamma = gamma;
        }
        if (app.count("--max-steps")) {
            spec.train.max_steps = max_steps;
            spec.env.max_steps = max_steps;
        }
        if (app.count("--angle-limit-deg")) {
            spec.env.angle_limit = angle_limit_deg * std::numbers::pi / 180.0;
        }
        if (!out_dir.empty()) {
            spec.out_dir = out_dir;
        } else if (config_path.empty()) {
            spec.out_dir = std::filesystem::path("runs") / (spec.model + "-" + (spec.partial ? "partial" : "full"));
        }
        spec.validate();
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    std::vector<qdrqn::ExperimentSpec> runs;
    for (int k = 0; k < num_seeds; ++k) {
        qdrqn::ExperimentSpec s = spec;
        s.train.seed = spec.train.seed + static_cast<unsigned long long>(k);
        if (num_seeds > 1) {
            s.out_dir = spec.out_dir / ("seed-" + std::to_string(s.train.seed));
        }
        runs.push_back(std::move(s));
    }

    std::mutex io;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            const auto &run = runs[i];
            try {
                const auto result = qdrqn::run_experiment(run, [&](const qdrqn::EpisodeLog &e) {
                    if (!quiet) {
                        std::lock_guard lock(io);
                        std::cout << "[seed " << run.train.seed << "] episode " << e.episode << " score " << e.score
                                  << " loss " << e.mean_loss << " eps " << e.epsilon << '\n';
                    }
                });
                std::lock_guard lock(io);
                std::cout << "wrote " << result.scores_csv.string() << '\n';
            } catch (const std::exception &e) {
                std::lock_guard lock(io);
                std::cerr << "run aborted (seed " << run.train.seed << "): " << e.what() << '\n';
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    const int workers = std::min<int>(jobs, static_cast<int>(runs.size()));
    for (int w = 1; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto &t : pool) {
        t.join();
    }
    return failed ? kExitRuntime : 0;
}
