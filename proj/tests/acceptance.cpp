// Acceptance suite: one verdict line per criterion.
//
//   acceptance                 run every criterion
//   acceptance 1 3 5           run a subset
//   acceptance --report-only   always exit 0 once every verdict is printed
//
// Exit status is the number of failed criteria, or 1 if a criterion threw.

#include "oracles.hpp"
#include "qdrqn/circuit_gradients.hpp"
#include "qdrqn/drqn.hpp"
#include "qdrqn/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace qdrqn;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char *f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Vector random_vector(int n, std::mt19937_64 &rng, double scale = 1.0) {
    std::uniform_real_distribution<double> d(-scale, scale);
    Vector v(n);
    for (int k = 0; k < n; ++k) {
        v(k) = d(rng);
    }
    return v;
}

std::vector<Gate> random_gates(int n, int count, std::mt19937_64 &rng) {
    std::uniform_int_distribution<int> kind(0, n > 1 ? 4 : 3);
    std::uniform_int_distribution<int> wire(0, n - 1);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::vector<Gate> out;
    for (int k = 0; k < count; ++k) {
        const int q = wire(rng);
        switch (kind(rng)) {
        case 0:
            out.push_back(Gate::h(q));
            break;
        case 1:
            out.push_back(Gate::ry(q, angle(rng)));
            break;
        case 2:
            out.push_back(Gate::rz(q, angle(rng)));
            break;
        case 3:
            out.push_back(Gate::rot(q, angle(rng), angle(rng), angle(rng)));
            break;
        default: {
            int t = wire(rng);
            while (t == q) {
                t = wire(rng);
            }
            out.push_back(Gate::cnot(q, t));
        }
        }
    }
    return out;
}

struct Baseline {
    double mean = 0;
    double standard_error = 0;
};

Baseline random_policy(const EnvConfig &cfg, int episodes, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coin(0, 1);
    CartPole env(cfg);
    std::vector<double> scores;
    for (int e = 0; e < episodes; ++e) {
        env.reset(rng);
        double s = 0;
        while (!env.done()) {
            s += env.step(coin(rng)).reward;
        }
        scores.push_back(s);
    }
    Baseline b;
    for (double s : scores) {
        b.mean += s;
    }
    b.mean /= episodes;
    double var = 0;
    for (double s : scores) {
        var += (s - b.mean) * (s - b.mean);
    }
    b.standard_error = std::sqrt(var / (episodes - 1) / episodes);
    return b;
}

ReplayMemory random_rollouts(int episodes, const EnvConfig &cfg, std::mt19937_64 &rng) {
    std::uniform_int_distribution<int> coin(0, 1);
    ReplayMemory mem(100);
    CartPole env(cfg);
    for (int e = 0; e < episodes; ++e) {
        EpisodeRecord rec;
        Vector obs = env.reset(rng);
        while (!env.done()) {
            const int a = coin(rng);
            auto r = env.step(a);
            rec.push({obs, a, r.reward, r.observation, r.done});
            obs = r.observation;
        }
        mem.push(std::move(rec));
    }
    return mem;
}

// ---------------------------------------------------------------------------

Verdict parameter_parity() {
    const auto t0 = Clock::now();
    const auto checks = verify_parameters();
    const double elapsed = seconds_since(t0);
    Verdict v;
    int ok = 0;
    for (const auto &c : checks) {
        ok += c.pass;
    }
    v.pass = ok == 8 && checks.size() == 8 && elapsed < 1.0;
    v.detail = std::to_string(ok) + "/8 cells, " + fmt("%.3f s", elapsed);
    return v;
}

Verdict quantum_correctness() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2001);
    int cases = 0;
    double worst_norm = 0, worst_matrix = 0, worst_cos = 0;

    std::uniform_int_distribution<int> nq(1, 10), len(1, 100);
    for (int k = 0; k < 400; ++k, ++cases) {
        const int n = nq(rng);
        auto s = zero_state<double>(n);
        for (const Gate &g : random_gates(n, len(rng), rng)) {
            s.apply(g);
            worst_norm = std::max(worst_norm, std::abs(s.norm() - 1.0));
        }
    }
    for (int k = 0; k < 400; ++k, ++cases) {
        const int n = 1 + k % 3;
        oracle::CVector psi = oracle::zero_state(n);
        auto s = zero_state<double>(n);
        for (const Gate &g : random_gates(n, 20, rng)) {
            psi = oracle::gate_matrix(g, n) * psi;
            s.apply(g);
        }
        worst_matrix = std::max(worst_matrix, (s.amplitudes() - psi).cwiseAbs().maxCoeff());
    }
    std::uniform_real_distribution<double> theta(-2 * std::numbers::pi, 2 * std::numbers::pi);
    for (int k = 0; k < 400; ++k, ++cases) {
        const int n = 1 + k % 6;
        const int q = k % n;
        const double t = theta(rng);
        const auto s = apply_gate(zero_state<double>(n), Gate::ry(q, t));
        worst_cos = std::max(worst_cos, std::abs(s.expectation_z(q) - std::cos(t)));
    }
    const double elapsed = seconds_since(t0);
    Verdict v;
    v.pass = cases >= 1000 && worst_norm <= 1e-10 && worst_matrix <= 1e-12 && worst_cos <= 1e-12 && elapsed < 30;
    v.detail = std::to_string(cases) + " cases, norm " + fmt("%.1e", worst_norm) + ", matrix " +
               fmt("%.1e", worst_matrix) + ", cos " + fmt("%.1e", worst_cos) + ", " + fmt("%.2f s", elapsed);
    return v;
}

// Random tiny dressed QLSTMs trained on random Cart-Pole windows of length
// <= 3; every parameter entry of the Bellman loss is checked.
Verdict gradient_fidelity(int obs_dim) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(3000 + obs_dim);
    EnvConfig env;
    env.partial_observation = obs_dim == 3;
    const ReplayMemory mem = random_rollouts(10, env, rng);
    int models = 0;
    long components = 0, mismatches = 0;
    double worst = 0;
    for (int trial = 0; trial < 24; ++trial, ++models) {
        ModelConfig cfg;
        cfg.core = CoreKind::kQlstm;
        cfg.obs_dim = obs_dim;
        cfg.n_qubits = 2 + trial % 3;
        cfg.hidden_size = 1 + (trial / 3) % (cfg.n_qubits - 1);
        cfg.vqc_layers = 1 + (trial / 2) % 2;
        Rng init(static_cast<unsigned long long>(trial));
        DressedModel policy(cfg, init);
        const DressedModel target(cfg, init);
        const auto batch = *sample_batch(mem, 1 + trial % 2, 1 + trial % 3, init);

        for (Parameter *p : policy.parameters()) {
            p->zero_grad();
        }
        {
            Tape tape;
            const auto b = policy.bind(tape);
            tape.backward(compute_loss(tape, b, policy, target, batch, 0.99));
        }
        for (Parameter *p : policy.parameters()) {
            for (Eigen::Index k = 0; k < p->value.size(); ++k) {
                const double keep = p->value.data()[k];
                auto eval = [&](double x) {
                    p->value.data()[k] = x;
                    Tape tape;
                    const auto b = policy.bind_frozen(tape);
                    return tape.value(compute_loss(tape, b, policy, target, batch, 0.99))(0, 0);
                };
                const double fd = (eval(keep + 1e-4) - eval(keep - 1e-4)) / 2e-4;
                p->value.data()[k] = keep;
                const double g = p->grad.data()[k];
                ++components;
                if (!oracle::close_rel(g, fd, 1e-5, 1e-7)) {
                    ++mismatches;
                }
                worst = std::max(worst, std::abs(g - fd));
            }
        }
    }
    const double elapsed = seconds_since(t0);
    Verdict v;
    v.pass = models >= 20 && mismatches == 0 && elapsed < 300;
    v.detail = std::to_string(models) + " models, " + std::to_string(components) + " components, " +
               std::to_string(mismatches) + " mismatches, max |diff| " + fmt("%.1e", worst) + ", " +
               fmt("%.2f s", elapsed);
    return v;
}

Verdict qlstm_oracle() {
    std::mt19937_64 rng(4000);
    double worst = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        Rng init(static_cast<unsigned long long>(t));
        const QlstmCell cell(1, 1, 2, 1, init);
        std::array<Eigen::VectorXd, 5> angles;
        for (int k = 0; k < 5; ++k) {
            angles[k] = Eigen::Map<const Eigen::VectorXd>(cell.circuits()[k].value.data(), cell.circuits()[k].size());
        }
        const Vector x = random_vector(1, rng, 3.0);
        const Vector h = random_vector(1, rng);
        const Vector c = random_vector(2, rng, 2.0);
        const auto [hi, ci] = qlstm_step(cell, x, h, c);
        const auto [hr, cr] = oracle::small_qlstm(angles, x(0), h(0), c);
        worst = std::max({worst, (hi - hr).cwiseAbs().maxCoeff(), (ci - cr).cwiseAbs().maxCoeff()});
    }
    return {worst <= 1e-10, std::to_string(trials) + " steps, max error " + fmt("%.1e", worst)};
}

// Dressed tiny QLSTM against pre-layer, brute-force cell and post-layer
// composed by hand, for a given observation width.
Verdict dressed_qlstm_oracle(int obs_dim) {
    std::mt19937_64 rng(4100 + obs_dim);
    ModelConfig cfg;
    cfg.core = CoreKind::kQlstm;
    cfg.obs_dim = obs_dim;
    cfg.n_qubits = 2;
    cfg.hidden_size = 1;
    double worst = 0;
    for (int t = 0; t < 50; ++t) {
        Rng init(static_cast<unsigned long long>(t));
        DressedModel m(cfg, init);
        const auto &cell = std::get<QlstmCell>(m.core());
        std::array<Eigen::VectorXd, 5> angles;
        for (int k = 0; k < 5; ++k) {
            angles[k] = Eigen::Map<const Eigen::VectorXd>(cell.circuits()[k].value.data(), cell.circuits()[k].size());
        }
        const std::vector<Vector> seq{random_vector(obs_dim, rng), random_vector(obs_dim, rng)};
        const auto q = forward_sequence(m, seq);
        Eigen::VectorXd h = Eigen::VectorXd::Zero(1), c = Eigen::VectorXd::Zero(2);
        for (std::size_t s = 0; s < seq.size(); ++s) {
            const double x = (m.pre().weight.value * seq[s])(0) + m.pre().bias.value(0, 0);
            std::tie(h, c) = oracle::small_qlstm(angles, x, h(0), c);
            const Vector expected = m.post().weight.value * h + m.post().bias.value.transpose();
            worst = std::max(worst, (q[s] - expected).cwiseAbs().maxCoeff());
        }
    }
    return {worst <= 1e-10, "obs " + std::to_string(obs_dim) + ", max error " + fmt("%.1e", worst)};
}

Verdict environment_sanity(bool partial) {
    EnvConfig cfg;
    cfg.partial_observation = partial;
    const auto base = random_policy(cfg, 500, 5000);

    std::mt19937_64 rng(5001);
    std::uniform_int_distribution<int> coin(0, 1);
    double worst_sym = 0;
    CartPole a, b;
    for (int e = 0; e < 100; ++e) {
        const auto s = a.reset(rng);
        b.reset_to({-s(0), -s(1), -s(2), -s(3)});
        while (!a.done() && !b.done()) {
            const int act = coin(rng);
            a.step(act);
            b.step(1 - act);
            const auto &sa = a.state();
            const auto &sb = b.state();
            worst_sym = std::max({worst_sym, std::abs(sa.x + sb.x), std::abs(sa.x_dot + sb.x_dot),
                                  std::abs(sa.theta + sb.theta), std::abs(sa.theta_dot + sb.theta_dot)});
        }
        if (a.done() != b.done()) {
            worst_sym = 1;
        }
    }

    CartPole env(cfg);
    env.reset_to({});
    const auto obs = env.step(1).observation;
    const double temp = 10.0 / 1.1;
    const double theta_acc = -temp / (0.5 * (4.0 / 3.0 - 0.1 / 1.1));
    const double x_acc = temp - 0.05 * theta_acc / 1.1;
    Vector expected(4);
    expected << 0.0, 0.02 * x_acc, 0.0, 0.02 * theta_acc;
    const double first = (obs - expected.head(obs.size())).cwiseAbs().maxCoeff();

    Verdict v;
    v.pass = std::abs(base.mean - 20.0) <= 5.0 && worst_sym <= 1e-12 && first <= 1e-6 &&
             obs.size() == (partial ? 3 : 4);
    v.detail = "random mean " + fmt("%.2f", base.mean) + " (se " + fmt("%.2f", base.standard_error) +
               "), symmetry " + fmt("%.1e", worst_sym) + ", first step " + fmt("%.1e", first);
    return v;
}

Verdict partial_matches_full() {
    EnvConfig pc;
    pc.partial_observation = true;
    CartPole full, partial(pc);
    std::mt19937_64 r1(9000), r2(9000), acts(9001);
    std::uniform_int_distribution<int> coin(0, 1);
    long steps = 0;
    bool ok = true;
    for (int e = 0; e < 200 && ok; ++e) {
        ok = partial.reset(r2) == full.reset(r1).head(3);
        while (ok && !full.done()) {
            const int a = coin(acts);
            const auto f = full.step(a);
            const auto p = partial.step(a);
            ok = p.observation == f.observation.head(3) && p.done == f.done && p.reward == f.reward;
            ++steps;
        }
    }
    return {ok, std::to_string(steps) + " steps compared"};
}

Verdict classical_learning() {
    const auto t0 = Clock::now();
    const std::array<unsigned long long, 3> seeds{1, 2, 3};
    std::vector<std::future<RunLog>> runs;
    for (auto seed : seeds) {
        runs.push_back(std::async(std::launch::async, [seed] {
            TrainConfig cfg;
            cfg.episodes = 1000;
            cfg.max_steps = 200;
            cfg.seed = seed;
            return train(cfg, model_config("lstm-16", 4), {});
        }));
    }
    std::vector<std::vector<double>> averages;
    for (auto &r : runs) {
        const RunLog log = r.get();
        std::vector<double> scores;
        for (const auto &e : log.episodes) {
            scores.push_back(e.score);
        }
        averages.push_back(moving_average(scores, 100));
    }
    double best = 0;
    int best_episode = 0;
    for (std::size_t i = 99; i < averages[0].size(); ++i) {
        const double m = (averages[0][i] + averages[1][i] + averages[2][i]) / 3.0;
        if (m > best) {
            best = m;
            best_episode = static_cast<int>(i) + 1;
        }
    }
    return {best >= 150.0, "seed-averaged MA-100 peak " + fmt("%.1f", best) + " at episode " +
                               std::to_string(best_episode) + ", " + fmt("%.0f s", seconds_since(t0))};
}

Verdict quantum_learning() {
    const auto t0 = Clock::now();
    const auto base = random_policy({}, 500, 5000);
    TrainConfig cfg;
    cfg.episodes = 150;
    cfg.seed = 1;
    bool finite = true;
    RunLog log;
    try {
        log = train(cfg, model_config("qlstm-1", 4), {}, [&](const EpisodeLog &e) {
            finite = finite && std::isfinite(e.mean_loss);
        });
    } catch (const TrainingAborted &) {
        finite = false;
    }
    double tail = 0;
    const std::size_t n = log.episodes.size();
    for (std::size_t i = n >= 50 ? n - 50 : 0; i < n; ++i) {
        tail += log.episodes[i].score;
    }
    tail /= 50.0;
    const double bar = base.mean + 3 * base.standard_error;
    return {finite && n == 150 && tail > bar, "final-50 mean " + fmt("%.2f", tail) + " vs random bar " +
                                                  fmt("%.2f", bar) + ", loss " + (finite ? "finite" : "NOT finite") +
                                                  ", " + fmt("%.0f s", seconds_since(t0))};
}

Verdict determinism() {
    const auto root = std::filesystem::temp_directory_path() / "qdrqn_acceptance_determinism";
    std::filesystem::remove_all(root);
    bool same = true;
    std::string detail;
    for (const char *model : {"lstm-8", "qlstm-1"}) {
        std::array<std::string, 2> csv;
        for (int k = 0; k < 2; ++k) {
            ExperimentSpec spec;
            spec.model = model;
            spec.train.episodes = 8;
            spec.train.seed = 42;
            spec.out_dir = root / (std::string(model) + "-" + std::to_string(k));
            const auto r = run_experiment(spec);
            std::ifstream in(r.scores_csv, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            csv[k] = ss.str();
        }
        same = same && csv[0] == csv[1] && !csv[0].empty();
        detail += std::string(detail.empty() ? "" : ", ") + model + (csv[0] == csv[1] ? " identical" : " DIFFERS");
    }
    std::filesystem::remove_all(root);
    return {same, detail};
}

Verdict partial_observability() {
    std::vector<std::pair<std::string, Verdict>> parts{
        {"1", parameter_parity()},           {"3", gradient_fidelity(3)},
        {"4", dressed_qlstm_oracle(3)},      {"5", environment_sanity(true)},
        {"obs", partial_matches_full()},
    };
    Verdict v;
    for (const auto &[name, r] : parts) {
        v.pass = v.pass && r.pass;
        v.detail += (v.detail.empty() ? "" : "; ") + name + (r.pass ? " ok" : " FAIL (" + r.detail + ")");
    }
    v.detail += "; 2 has no observation input";
    return v;
}

} // namespace

int main(int argc, char **argv) {
    struct Criterion {
        int id;
        const char *name;
        Verdict (*run)();
    };
    const std::vector<Criterion> criteria{
        {1, "parameter parity", parameter_parity},
        {2, "quantum correctness", quantum_correctness},
        {3, "gradient fidelity", [] { return gradient_fidelity(4); }},
        {4, "QLSTM oracle",
         [] {
             auto cell = qlstm_oracle();
             const auto dressed = dressed_qlstm_oracle(4);
             cell.pass = cell.pass && dressed.pass;
             cell.detail += "; dressed " + dressed.detail;
             return cell;
         }},
        {5, "environment sanity", [] { return environment_sanity(false); }},
        {6, "classical learning", classical_learning},
        {7, "quantum learning smoke", quantum_learning},
        {8, "determinism", determinism},
        {9, "partial observability", partial_observability},
    };

    std::set<int> only;
    bool report_only = false;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--report-only") {
            report_only = true;
        } else {
            only.insert(std::atoi(argv[i]));
        }
    }

    int failed = 0;
    bool crashed = false;
    for (const auto &c : criteria) {
        if (!only.empty() && !only.count(c.id)) {
            continue;
        }
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception &e) {
            v = {false, std::string("exception: ") + e.what()};
            crashed = true;
        }
        failed += !v.pass;
        std::cout << "criterion " << c.id << " " << c.name << ": " << (v.pass ? "PASS" : "FAIL") << " (" << v.detail
                  << ")" << std::endl;
    }
    std::cout << "acceptance: " << failed << " failed" << std::endl;
    if (report_only) {
        return crashed ? 1 : 0;
    }
    return failed;
}
