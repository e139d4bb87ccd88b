#include "qdrqn/experiment.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qdrqn {

using nlohmann::json;

ModelConfig model_config(std::string_view model, int obs_dim) {
    if (model == "qlstm-1") {
        return ModelConfig::qlstm(1, obs_dim);
    }
    if (model == "qlstm-2") {
        return ModelConfig::qlstm(2, obs_dim);
    }
    if (model == "lstm-8") {
        return ModelConfig::lstm(8, obs_dim);
    }
    if (model == "lstm-16") {
        return ModelConfig::lstm(16, obs_dim);
    }
    throw SpecError("unknown model '" + std::string(model) + "' (expected qlstm-1, qlstm-2, lstm-8 or lstm-16)");
}

void ExperimentSpec::validate() const {
    (void)model_config(model, env.obs_dim());
    if (partial != env.partial_observation) {
        throw SpecError("ExperimentSpec: partial flag disagrees with env.partial_observation");
    }
    try {
        train.validate();
        env.validate();
    } catch (const std::invalid_argument &e) {
        throw SpecError(e.what());
    }
}

// ---------------------------------------------------------------------------
// JSON

std::string spec_to_json(const ExperimentSpec &spec) {
    const TrainConfig &t = spec.train;
    const EnvConfig &e = spec.env;
    json j;
    j["model"] = spec.model;
    j["obs"] = spec.partial ? "partial" : "full";
    j["out"] = spec.out_dir.string();
    j["train"] = {
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"memory_capacity", t.memory_capacity},
        {"lookup_steps", t.lookup_steps},
        {"epsilon_init", t.epsilon_init},
        {"epsilon_decay", t.epsilon_decay},
        {"epsilon_final", t.epsilon_final},
        {"target_update_period", t.target_update_period},
        {"tau", t.tau},
        {"gamma", t.gamma},
        {"episodes", t.episodes},
        {"max_steps", t.max_steps},
        {"seed", t.seed},
        {"grad_clip_norm", t.grad_clip_norm},
        {"checked", t.checked},
    };
    j["env"] = {
        {"gravity", e.gravity},
        {"mass_cart", e.mass_cart},
        {"mass_pole", e.mass_pole},
        {"half_length", e.half_length},
        {"force_mag", e.force_mag},
        {"dt", e.dt},
        {"angle_limit_rad", e.angle_limit},
        {"position_limit", e.position_limit},
        {"max_steps", e.max_steps},
    };
    return j.dump(2) + "\n";
}

namespace {

const json *field(const json &obj, const char *key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

void read(const json &obj, const char *key, double &out) {
    if (const json *v = field(obj, key)) {
        if (!v->is_number()) {
            throw SpecError(std::string("config field '") + key + "' must be a number");
        }
        out = v->get<double>();
    }
}

template <typename Int> void read_int(const json &obj, const char *key, Int &out) {
    if (const json *v = field(obj, key)) {
        if (!v->is_number_integer()) {
            throw SpecError(std::string("config field '") + key + "' must be an integer");
        }
        out = v->get<Int>();
    }
}

void read(const json &obj, const char *key, int &out) { read_int(obj, key, out); }
void read(const json &obj, const char *key, std::size_t &out) { read_int(obj, key, out); }
void read(const json &obj, const char *key, unsigned long long &out) { read_int(obj, key, out); }

void read(const json &obj, const char *key, bool &out) {
    if (const json *v = field(obj, key)) {
        if (!v->is_boolean()) {
            throw SpecError(std::string("config field '") + key + "' must be a boolean");
        }
        out = v->get<bool>();
    }
}

void read(const json &obj, const char *key, std::string &out) {
    if (const json *v = field(obj, key)) {
        if (!v->is_string()) {
            throw SpecError(std::string("config field '") + key + "' must be a string");
        }
        out = v->get<std::string>();
    }
}

const json &section(const json &root, const char *key) {
    static const json empty = json::object();
    const json *s = field(root, key);
    if (!s) {
        return empty;
    }
    if (!s->is_object()) {
        throw SpecError(std::string("config section '") + key + "' must be an object");
    }
    return *s;
}

} // namespace

ExperimentSpec spec_from_json(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error &e) {
        throw SpecError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) {
        throw SpecError("config root must be an object");
    }

    ExperimentSpec spec;
    read(root, "model", spec.model);
    std::string obs = "full";
    read(root, "obs", obs);
    if (obs != "full" && obs != "partial") {
        throw SpecError("obs must be 'full' or 'partial', got '" + obs + "'");
    }
    spec.partial = obs == "partial";
    spec.env.partial_observation = spec.partial;
    std::string out = spec.out_dir.string();
    read(root, "out", out);
    spec.out_dir = out;

    const json &t = section(root, "train");
    read(t, "batch_size", spec.train.batch_size);
    read(t, "learning_rate", spec.train.learning_rate);
    read(t, "memory_capacity", spec.train.memory_capacity);
    read(t, "lookup_steps", spec.train.lookup_steps);
    read(t, "epsilon_init", spec.train.epsilon_init);
    read(t, "epsilon_decay", spec.train.epsilon_decay);
    read(t, "epsilon_final", spec.train.epsilon_final);
    read(t, "target_update_period", spec.train.target_update_period);
    read(t, "tau", spec.train.tau);
    read(t, "gamma", spec.train.gamma);
    read(t, "episodes", spec.train.episodes);
    read(t, "max_steps", spec.train.max_steps);
    read(t, "seed", spec.train.seed);
    read(t, "grad_clip_norm", spec.train.grad_clip_norm);
    read(t, "checked", spec.train.checked);

    const json &e = section(root, "env");
    read(e, "gravity", spec.env.gravity);
    read(e, "mass_cart", spec.env.mass_cart);
    read(e, "mass_pole", spec.env.mass_pole);
    read(e, "half_length", spec.env.half_length);
    read(e, "force_mag", spec.env.force_mag);
    read(e, "dt", spec.env.dt);
    read(e, "angle_limit_rad", spec.env.angle_limit);
    read(e, "position_limit", spec.env.position_limit);
    read(e, "max_steps", spec.env.max_steps);

    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------
// Plotting

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
    std::vector<double> out(values.size());
    if (window == 0) {
        window = 1;
    }
    double acc = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += values[i];
        if (i >= window) {
            acc -= values[i - window];
        }
        out[i] = acc / static_cast<double>(std::min(i + 1, window));
    }
    return out;
}

void write_reward_svg(const RunLog &log, std::ostream &out, std::size_t window) {
    constexpr double width = 800, height = 400, left = 60, right = 20, top = 30, bottom = 50;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    std::vector<double> scores;
    scores.reserve(log.episodes.size());
    for (const auto &e : log.episodes) {
        scores.push_back(e.score);
    }
    const auto avg = moving_average(scores, window);
    const double y_max = std::max(1.0, scores.empty() ? 1.0 : *std::max_element(scores.begin(), scores.end()));
    const double n = std::max<double>(1.0, static_cast<double>(scores.size()) - 1.0);

    auto polyline = [&](const std::vector<double> &ys, const char *color, double stroke) {
        out << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << stroke << "\" points=\"";
        char buf[64];
        for (std::size_t i = 0; i < ys.size(); ++i) {
            const double x = left + plot_w * static_cast<double>(i) / n;
            const double y = top + plot_h * (1.0 - ys[i] / y_max);
            std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", x, y);
            out << buf;
        }
        out << "\"/>\n";
    };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "  <line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
        << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"14\">episode</text>\n";
    out << "  <text x=\"16\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" font-size=\"14\" "
        << "transform=\"rotate(-90 16 " << top + plot_h / 2 << ")\">score</text>\n";
    out << "  <text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << y_max
        << "</text>\n";
    out << "  <text x=\"" << left - 6 << "\" y=\"" << top + plot_h + 4
        << "\" text-anchor=\"end\" font-size=\"11\">0</text>\n";
    out << "  <text x=\"" << left + plot_w << "\" y=\"" << top + plot_h + 18
        << "\" text-anchor=\"end\" font-size=\"11\">" << scores.size() << "</text>\n";
    polyline(scores, "#9bbbd9", 1);
    polyline(avg, "#c0392b", 2);
    out << "  <text x=\"" << left + 10 << "\" y=\"" << top - 10 << "\" font-size=\"12\" fill=\"#c0392b\">"
        << "moving average (" << window << ")</text>\n";
    out << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Runs

ExperimentResult run_experiment(const ExperimentSpec &spec, const std::function<void(const EpisodeLog &)> &on_episode) {
    spec.validate();
    std::filesystem::create_directories(spec.out_dir);

    ExperimentResult result;
    result.config_json = spec.out_dir / "config.json";
    result.scores_csv = spec.out_dir / "scores.csv";
    result.reward_svg = spec.out_dir / "reward_curve.svg";

    {
        std::ofstream cfg(result.config_json);
        cfg << spec_to_json(spec);
        if (!cfg) {
            throw std::runtime_error("cannot write " + result.config_json.string());
        }
    }

    result.log = train(spec.train, model_config(spec.model, spec.env.obs_dim()), spec.env, on_episode);

    std::ofstream csv(result.scores_csv);
    result.log.write_csv(csv);
    std::ofstream svg(result.reward_svg);
    write_reward_svg(result.log, svg);
    if (!csv || !svg) {
        throw std::runtime_error("cannot write run artifacts under " + spec.out_dir.string());
    }
    return result;
}

// ---------------------------------------------------------------------------
// Parameter counts

std::vector<ParameterCell> reference_parameter_cells() {
    return {
        {"qlstm-1/full", model_config("qlstm-1", 4), 150},  {"qlstm-2/full", model_config("qlstm-2", 4), 270},
        {"lstm-8/full", model_config("lstm-8", 4), 634},    {"lstm-16/full", model_config("lstm-16", 4), 2290},
        {"qlstm-1/partial", model_config("qlstm-1", 3), 146}, {"qlstm-2/partial", model_config("qlstm-2", 3), 266},
        {"lstm-8/partial", model_config("lstm-8", 3), 626}, {"lstm-16/partial", model_config("lstm-16", 3), 2274},
    };
}

std::vector<ParameterCheck> verify_parameters(std::span<const ParameterCell> cells) {
    std::vector<ParameterCheck> out;
    Rng rng(0);
    for (const auto &cell : cells) {
        const DressedModel model(cell.config, rng);
        const std::size_t actual = count_parameters(model);
        out.push_back({cell.name, cell.expected, actual, actual == cell.expected});
    }
    return out;
}

std::vector<ParameterCheck> verify_parameters() {
    const auto cells = reference_parameter_cells();
    return verify_parameters(cells);
}

void write_parameter_report(std::span<const ParameterCheck> checks, std::ostream &out) {
    for (const auto &c : checks) {
        out << c.name << ' ' << c.expected << ' ' << c.actual << ' ' << (c.pass ? "PASS" : "FAIL") << '\n';
    }
}

} // namespace qdrqn
