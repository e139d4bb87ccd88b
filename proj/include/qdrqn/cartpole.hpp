#pragma once

#include <Eigen/Core>

#include <numbers>
#include <random>

namespace qdrqn {

struct CartPoleState {
    double x = 0.0;
    double x_dot = 0.0;
    double theta = 0.0;
    double theta_dot = 0.0;
};

struct EnvConfig {
    double gravity = 9.8;
    double mass_cart = 1.0;
    double mass_pole = 0.1;
    double half_length = 0.5;
    double force_mag = 10.0;
    double dt = 0.02;
    double angle_limit = 12.0 * std::numbers::pi / 180.0;
    double position_limit = 2.4;
    int max_steps = 200;
    bool partial_observation = false;

    int obs_dim() const { return partial_observation ? 3 : 4; }
    void validate() const;
};

enum class Action : int { kLeft = 0, kRight = 1 };

struct StepResult {
    Eigen::VectorXd observation;
    double reward = 0.0;
    bool done = false;
};

/// Frictionless cart-pole with explicit Euler integration. Reward is +1 on
/// every step, including the terminating one.
class CartPole {
  public:
    explicit CartPole(EnvConfig config = {});

    /// Draws each state component uniformly from [-0.05, 0.05].
    Eigen::VectorXd reset(std::mt19937_64 &rng);
    StepResult step(int action);

    /// Starts from an explicit state; for tests and diagnostics.
    Eigen::VectorXd reset_to(const CartPoleState &state);

    const CartPoleState &state() const { return state_; }
    const EnvConfig &config() const { return config_; }
    int steps() const { return steps_; }
    bool done() const { return done_; }

    Eigen::VectorXd observe() const;

  private:
    EnvConfig config_;
    CartPoleState state_;
    int steps_ = 0;
    bool done_ = true;
};

/// One Euler step of the dynamics from `s` under horizontal force `force`.
CartPoleState integrate(const EnvConfig &config, const CartPoleState &s, double force);

} // namespace qdrqn
