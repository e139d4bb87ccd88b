#include "qdrqn/drqn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace qdrqn {

// ---------------------------------------------------------------------------
// Replay

void EpisodeRecord::push(Transition t) {
    if (!steps_.empty() && steps_.back().done) {
        throw std::logic_error("EpisodeRecord: transition appended after a terminal one");
    }
    if (t.action != 0 && t.action != 1) {
        throw std::invalid_argument("EpisodeRecord: invalid action " + std::to_string(t.action));
    }
    if (!std::isfinite(t.reward)) {
        throw std::invalid_argument("EpisodeRecord: non-finite reward");
    }
    steps_.push_back(std::move(t));
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw std::invalid_argument("ReplayMemory: capacity must be positive");
    }
}

void ReplayMemory::push(EpisodeRecord episode) {
    if (episode.empty()) {
        return;
    }
    if (episodes_.size() == capacity_) {
        episodes_.pop_front();
    }
    episodes_.push_back(std::move(episode));
}

std::optional<Batch> sample_batch(const ReplayMemory &memory, int batch_size, int lookup_steps, Rng &rng) {
    if (memory.empty()) {
        return std::nullopt;
    }
    std::uniform_int_distribution<std::size_t> pick_episode(0, memory.size() - 1);
    Batch batch;
    batch.reserve(batch_size);
    for (int b = 0; b < batch_size; ++b) {
        const auto &steps = memory[pick_episode(rng)].steps();
        const std::size_t window = std::min<std::size_t>(lookup_steps, steps.size());
        std::uniform_int_distribution<std::size_t> pick_start(0, steps.size() - window);
        batch.push_back(SubTrajectory(steps).subspan(pick_start(rng), window));
    }
    return batch;
}

// ---------------------------------------------------------------------------
// Acting

void TrainConfig::validate() const {
    if (batch_size < 1 || learning_rate <= 0 || memory_capacity < 1 || lookup_steps < 1 || epsilon_init < 0 ||
        epsilon_init > 1 || epsilon_final < 0 || epsilon_final > epsilon_init || epsilon_decay <= 0 ||
        epsilon_decay > 1 || target_update_period < 1 || tau < 0 || tau > 1 || gamma <= 0 || gamma > 1 ||
        episodes < 0 || max_steps < 1 || grad_clip_norm < 0) {
        throw std::invalid_argument("TrainConfig: invalid hyperparameters");
    }
}

HiddenState HiddenState::zeros(const DressedModel &model) {
    return {Vector::Zero(model.hidden_size()), Vector::Zero(model.cell_size())};
}

int argmax_action(const Vector &q) {
    int best = 0;
    for (int a = 1; a < q.size(); ++a) {
        if (q(a) > q(best)) {
            best = a;
        }
    }
    return best;
}

ActionChoice select_action(const DressedModel &model, const Vector &obs, const HiddenState &hidden, double epsilon,
                           Rng &rng) {
    Tape tape(Checked::kOff);
    const auto p = model.bind_frozen(tape);
    CoreState state{tape.constant(hidden.h.transpose()), tape.constant(hidden.c.transpose())};
    const Var q = model.step(tape, p, tape.constant(obs.transpose()), state);

    ActionChoice out;
    out.q_values = tape.value(q).row(0).transpose();
    out.hidden = {tape.value(state.h).row(0).transpose(), tape.value(state.c).row(0).transpose()};

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
        std::uniform_int_distribution<int> any(0, DressedModel::kNumActions - 1);
        out.action = any(rng);
    } else {
        out.action = argmax_action(out.q_values);
    }
    return out;
}

double decay_epsilon(double epsilon, const TrainConfig &config) {
    return std::max(config.epsilon_final, epsilon * config.epsilon_decay);
}

// ---------------------------------------------------------------------------
// Loss

Var compute_loss(Tape &tape, const DressedModel::Bound &policy_params, const DressedModel &policy,
                 const DressedModel &target, const Batch &batch, double gamma) {
    const auto rows = static_cast<Eigen::Index>(batch.size());
    std::size_t horizon = 0;
    for (const auto &w : batch) {
        horizon = std::max(horizon, w.size());
    }
    if (rows == 0 || horizon == 0) {
        return tape.constant(Matrix::Zero(1, 1));
    }
    const int obs_dim = policy.obs_dim();

    // Windows are right-padded to a common length; padded rows are masked out
    // of the loss and, being causal, never influence the real rows.
    std::vector<Matrix> states(horizon, Matrix::Zero(rows, obs_dim));
    std::vector<Matrix> next_states(horizon, Matrix::Zero(rows, obs_dim));
    std::vector<std::vector<int>> actions(horizon, std::vector<int>(rows, 0));
    std::vector<Matrix> rewards(horizon, Matrix::Zero(rows, 1));
    std::vector<Matrix> nonterminal(horizon, Matrix::Zero(rows, 1));
    std::vector<Matrix> mask(horizon, Matrix::Zero(rows, 1));
    double count = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto &w = batch[r];
        for (std::size_t t = 0; t < w.size(); ++t) {
            states[t].row(r) = w[t].state.transpose();
            next_states[t].row(r) = w[t].next_state.transpose();
            actions[t][r] = w[t].action;
            rewards[t](r, 0) = w[t].reward;
            nonterminal[t](r, 0) = w[t].done ? 0.0 : 1.0;
            mask[t](r, 0) = 1.0;
            count += 1;
        }
    }

    std::vector<Matrix> targets(horizon);
    {
        Tape frozen(Checked::kOff);
        const auto tp = target.bind_frozen(frozen);
        CoreState state = target.zero_state(frozen, rows);
        for (std::size_t t = 0; t < horizon; ++t) {
            const Var q = target.step(frozen, tp, frozen.constant(next_states[t]), state);
            const Matrix max_q = frozen.value(q).rowwise().maxCoeff();
            targets[t] = rewards[t] + gamma * nonterminal[t].cwiseProduct(max_q);
        }
    }

    CoreState state = policy.zero_state(tape, rows);
    Var total;
    for (std::size_t t = 0; t < horizon; ++t) {
        const Var q = policy.step(tape, policy_params, tape.constant(states[t]), state);
        const Var err = tape.sub(tape.pick(q, actions[t]), tape.constant(targets[t]));
        const Var term = tape.sum(tape.mul(tape.square(err), tape.constant(mask[t])));
        total = total.valid() ? tape.add(total, term) : term;
    }
    return tape.scale(total, 1.0 / count);
}

// ---------------------------------------------------------------------------
// Optimisation

void adam_step(Matrix &param, const Matrix &grad, AdamMoments &moments, const AdamConfig &config, long step) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
        throw std::invalid_argument("adam_step: parameter and gradient shapes differ");
    }
    if (moments.m.size() == 0) {
        moments.m = Matrix::Zero(param.rows(), param.cols());
        moments.v = Matrix::Zero(param.rows(), param.cols());
    }
    moments.m = config.beta1 * moments.m + (1 - config.beta1) * grad;
    moments.v = config.beta2 * moments.v + (1 - config.beta2) * grad.cwiseAbs2();
    const double c1 = 1 - std::pow(config.beta1, static_cast<double>(step));
    const double c2 = 1 - std::pow(config.beta2, static_cast<double>(step));
    param.array() -= config.learning_rate * (moments.m.array() / c1) /
                     ((moments.v.array() / c2).sqrt() + config.epsilon);
}

AdamOptimizer::AdamOptimizer(std::vector<Parameter *> params, AdamConfig config)
    : params_(std::move(params)), moments_(params_.size()), config_(config) {}

void AdamOptimizer::zero_grad() {
    for (Parameter *p : params_) {
        p->zero_grad();
    }
}

void AdamOptimizer::step() {
    ++t_;
    for (std::size_t k = 0; k < params_.size(); ++k) {
        adam_step(params_[k]->value, params_[k]->grad, moments_[k], config_, t_);
    }
}

void soft_update(Matrix &target, const Matrix &policy, double tau) {
    if (target.rows() != policy.rows() || target.cols() != policy.cols()) {
        throw std::invalid_argument("soft_update: shape mismatch");
    }
    target = tau * policy + (1 - tau) * target;
}

void soft_update(DressedModel &target, const DressedModel &policy, double tau) {
    auto dst = target.parameters();
    const auto src = policy.parameters();
    if (dst.size() != src.size()) {
        throw std::invalid_argument("soft_update: models have different parameter lists");
    }
    for (std::size_t k = 0; k < dst.size(); ++k) {
        soft_update(dst[k]->value, src[k]->value, tau);
    }
}

// ---------------------------------------------------------------------------
// Logging

void RunLog::write_csv(std::ostream &out) const {
    out << "episode,score,mean_loss,epsilon\n";
    char buf[128];
    for (const auto &e : episodes) {
        std::snprintf(buf, sizeof buf, "%d,%.6g,%.6g,%.6g\n", e.episode, e.score, e.mean_loss, e.epsilon);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

Rng seeded_rng(const TrainConfig &config) {
    config.validate();
    return Rng(config.seed);
}

EnvConfig with_cap(EnvConfig env, int max_steps) {
    env.max_steps = max_steps;
    return env;
}

} // namespace

Trainer::Trainer(const TrainConfig &config, const ModelConfig &model, const EnvConfig &env)
    : config_(config), env_config_(with_cap(env, config.max_steps)), rng_(seeded_rng(config)),
      policy_(model, rng_), target_(policy_), optimizer_(policy_.parameters(), {config.learning_rate}),
      memory_(config.memory_capacity), env_(env_config_), epsilon_(config.epsilon_init) {
    if (model.obs_dim != env_config_.obs_dim()) {
        throw std::invalid_argument("Trainer: model obs_dim " + std::to_string(model.obs_dim) +
                                    " does not match environment observation size " +
                                    std::to_string(env_config_.obs_dim()));
    }
}

double Trainer::optimize() {
    const auto batch = sample_batch(memory_, config_.batch_size, config_.lookup_steps, rng_);
    if (!batch) {
        return std::nan("");
    }
    Tape tape(config_.checked ? Checked::kOn : Checked::kOff);
    const auto params = policy_.bind(tape);
    const Var loss = compute_loss(tape, params, policy_, target_, *batch, config_.gamma);
    const double value = tape.value(loss)(0, 0);
    if (!std::isfinite(value)) {
        throw TrainingAborted("non-finite loss at episode " + std::to_string(episode_ + 1) + ", global step " +
                              std::to_string(global_step_));
    }
    optimizer_.zero_grad();
    tape.backward(loss);
    if (config_.grad_clip_norm > 0) {
        double sq = 0;
        for (Parameter *p : policy_.parameters()) {
            sq += p->grad.squaredNorm();
        }
        const double norm = std::sqrt(sq);
        if (norm > config_.grad_clip_norm) {
            for (Parameter *p : policy_.parameters()) {
                p->grad *= config_.grad_clip_norm / norm;
            }
        }
    }
    optimizer_.step();
    return value;
}

EpisodeLog Trainer::run_episode() {
    EpisodeLog log;
    log.episode = ++episode_;
    log.epsilon = epsilon_;

    EpisodeRecord record;
    Vector obs = env_.reset(rng_);
    HiddenState hidden = HiddenState::zeros(policy_);
    double loss_sum = 0;
    int loss_count = 0;

    for (int t = 0; t < config_.max_steps; ++t) {
        ActionChoice choice = select_action(policy_, obs, hidden, epsilon_, rng_);
        hidden = std::move(choice.hidden);
        StepResult result = env_.step(choice.action);
        log.score += result.reward;
        record.push({obs, choice.action, result.reward, result.observation, result.done});
        obs = std::move(result.observation);
        ++global_step_;

        // The running episode joins the memory only when it ends.
        const double loss = optimize();
        if (!std::isnan(loss)) {
            loss_sum += loss;
            ++loss_count;
        }
        if (global_step_ % config_.target_update_period == 0) {
            soft_update(target_, policy_, config_.tau);
            ++soft_updates_;
        }
        if (result.done) {
            break;
        }
    }

    memory_.push(std::move(record));
    epsilon_ = decay_epsilon(epsilon_, config_);
    log.mean_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
    return log;
}

RunLog Trainer::run(const std::function<void(const EpisodeLog &)> &on_episode) {
    RunLog log;
    log.episodes.reserve(config_.episodes);
    for (int e = 0; e < config_.episodes; ++e) {
        log.episodes.push_back(run_episode());
        if (on_episode) {
            on_episode(log.episodes.back());
        }
    }
    return log;
}

RunLog train(const TrainConfig &config, const ModelConfig &model, const EnvConfig &env,
             const std::function<void(const EpisodeLog &)> &on_episode) {
    Trainer trainer(config, model, env);
    return trainer.run(on_episode);
}

} // namespace qdrqn
