#pragma once

#include "qdrqn/autograd.hpp"
#include "qdrqn/cartpole.hpp"
#include "qdrqn/recurrent.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace qdrqn {

struct Transition {
    Vector state;
    int action = 0;
    double reward = 0.0;
    Vector next_state;
    bool done = false;
};

/// Transitions of one episode in order; only the last may be terminal.
class EpisodeRecord {
  public:
    void push(Transition t);
    const std::vector<Transition> &steps() const { return steps_; }
    std::size_t size() const { return steps_.size(); }
    bool empty() const { return steps_.empty(); }

  private:
    std::vector<Transition> steps_;
};

/// FIFO store of whole episodes, oldest evicted first.
class ReplayMemory {
  public:
    explicit ReplayMemory(std::size_t capacity);

    void push(EpisodeRecord episode);
    std::size_t size() const { return episodes_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return episodes_.empty(); }
    const EpisodeRecord &operator[](std::size_t i) const { return episodes_[i]; }

  private:
    std::size_t capacity_;
    std::deque<EpisodeRecord> episodes_;
};

struct TrainConfig {
    int batch_size = 8;
    double learning_rate = 1e-3;
    std::size_t memory_capacity = 100;
    int lookup_steps = 10;
    double epsilon_init = 0.1;
    double epsilon_decay = 0.995;
    double epsilon_final = 0.001;
    int target_update_period = 4;
    double tau = 1e-2;
    double gamma = 0.99;
    int episodes = 1000;
    int max_steps = 200;
    unsigned long long seed = 0;
    /// Global-norm clip; 0 disables.
    double grad_clip_norm = 0.0;
    /// NaN/Inf screening on every tape node.
    bool checked = false;

    void validate() const;
};

/// A contiguous window of one stored episode.
using SubTrajectory = std::span<const Transition>;
using Batch = std::vector<SubTrajectory>;

/// Plain recurrent state carried between acting steps.
struct HiddenState {
    Vector h;
    Vector c;

    static HiddenState zeros(const DressedModel &model);
};

struct ActionChoice {
    int action = 0;
    HiddenState hidden;
    Vector q_values;
};

/// Index of the largest entry; ties go to the lowest index.
int argmax_action(const Vector &q);

/// Epsilon-greedy action. The model consumes `obs` in both branches so the
/// hidden state always advances.
ActionChoice select_action(const DressedModel &model, const Vector &obs, const HiddenState &hidden, double epsilon,
                           Rng &rng);

double decay_epsilon(double epsilon, const TrainConfig &config);

/// `batch_size` episodes drawn uniformly with replacement, each cut to a
/// window of min(L, length) steps at a uniform offset. std::nullopt when the
/// memory is empty.
std::optional<Batch> sample_batch(const ReplayMemory &memory, int batch_size, int lookup_steps, Rng &rng);

/// Mean squared Bellman error over every step of every window. Targets come
/// from `target` with zero initial hidden state and carry no gradient.
Var compute_loss(Tape &tape, const DressedModel::Bound &policy_params, const DressedModel &policy,
                 const DressedModel &target, const Batch &batch, double gamma);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamMoments {
    Matrix m;
    Matrix v;
};

/// One bias-corrected Adam update of `param`; `step` counts from 1.
void adam_step(Matrix &param, const Matrix &grad, AdamMoments &moments, const AdamConfig &config, long step);

class AdamOptimizer {
  public:
    AdamOptimizer(std::vector<Parameter *> params, AdamConfig config);

    void zero_grad();
    void step();
    long steps() const { return t_; }

  private:
    std::vector<Parameter *> params_;
    std::vector<AdamMoments> moments_;
    AdamConfig config_;
    long t_ = 0;
};

/// target <- tau * policy + (1 - tau) * target
void soft_update(Matrix &target, const Matrix &policy, double tau);
void soft_update(DressedModel &target, const DressedModel &policy, double tau);

struct EpisodeLog {
    int episode = 0;
    double score = 0.0;
    double mean_loss = 0.0;
    double epsilon = 0.0;
};

struct RunLog {
    std::vector<EpisodeLog> episodes;

    /// `episode,score,mean_loss,epsilon`, 6 significant digits.
    void write_csv(std::ostream &out) const;
};

class TrainingAborted : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Deep recurrent Q-learning loop. All randomness (initial weights, resets,
/// exploration, replay sampling) comes from one generator seeded by
/// `config.seed`.
class Trainer {
  public:
    Trainer(const TrainConfig &config, const ModelConfig &model, const EnvConfig &env);
    // The optimizer holds pointers into policy_.
    Trainer(const Trainer &) = delete;
    Trainer &operator=(const Trainer &) = delete;

    /// Runs one episode and returns its log entry.
    EpisodeLog run_episode();
    RunLog run(const std::function<void(const EpisodeLog &)> &on_episode = {});

    const DressedModel &policy() const { return policy_; }
    const DressedModel &target() const { return target_; }
    const ReplayMemory &memory() const { return memory_; }
    double epsilon() const { return epsilon_; }
    long optimizer_steps() const { return optimizer_.steps(); }
    long soft_updates() const { return soft_updates_; }

  private:
    double optimize();

    TrainConfig config_;
    EnvConfig env_config_;
    Rng rng_;
    DressedModel policy_;
    DressedModel target_;
    AdamOptimizer optimizer_;
    ReplayMemory memory_;
    CartPole env_;
    double epsilon_;
    int episode_ = 0;
    long global_step_ = 0;
    long soft_updates_ = 0;
};

RunLog train(const TrainConfig &config, const ModelConfig &model, const EnvConfig &env,
             const std::function<void(const EpisodeLog &)> &on_episode = {});

} // namespace qdrqn
