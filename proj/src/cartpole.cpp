#include "qdrqn/cartpole.hpp"

#include <cmath>
#include <stdexcept>

namespace qdrqn {

void EnvConfig::validate() const {
    if (!(gravity > 0 && mass_cart > 0 && mass_pole > 0 && half_length > 0 && force_mag > 0 && dt > 0 &&
          angle_limit > 0 && position_limit > 0 && max_steps > 0)) {
        throw std::invalid_argument("EnvConfig: physical constants and limits must be positive");
    }
}

CartPoleState integrate(const EnvConfig &c, const CartPoleState &s, double force) {
    const double total_mass = c.mass_cart + c.mass_pole;
    const double pole_ml = c.mass_pole * c.half_length;
    const double cos_t = std::cos(s.theta);
    const double sin_t = std::sin(s.theta);

    const double temp = (force + pole_ml * s.theta_dot * s.theta_dot * sin_t) / total_mass;
    const double theta_acc = (c.gravity * sin_t - cos_t * temp) /
                             (c.half_length * (4.0 / 3.0 - c.mass_pole * cos_t * cos_t / total_mass));
    const double x_acc = temp - pole_ml * theta_acc * cos_t / total_mass;

    return {s.x + c.dt * s.x_dot, s.x_dot + c.dt * x_acc, s.theta + c.dt * s.theta_dot,
            s.theta_dot + c.dt * theta_acc};
}

CartPole::CartPole(EnvConfig config) : config_(config) { config_.validate(); }

Eigen::VectorXd CartPole::observe() const {
    Eigen::VectorXd full(4);
    full << state_.x, state_.x_dot, state_.theta, state_.theta_dot;
    return config_.partial_observation ? Eigen::VectorXd(full.head(3)) : full;
}

Eigen::VectorXd CartPole::reset(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> dist(-0.05, 0.05);
    CartPoleState s;
    s.x = dist(rng);
    s.x_dot = dist(rng);
    s.theta = dist(rng);
    s.theta_dot = dist(rng);
    return reset_to(s);
}

Eigen::VectorXd CartPole::reset_to(const CartPoleState &state) {
    state_ = state;
    steps_ = 0;
    done_ = false;
    return observe();
}

StepResult CartPole::step(int action) {
    if (done_) {
        throw std::logic_error("CartPole::step called on a finished episode; call reset()");
    }
    if (action != 0 && action != 1) {
        throw std::invalid_argument("CartPole::step: action must be 0 or 1");
    }
    const double force = action == static_cast<int>(Action::kRight) ? config_.force_mag : -config_.force_mag;
    state_ = integrate(config_, state_, force);
    ++steps_;

    done_ = std::abs(state_.x) > config_.position_limit || std::abs(state_.theta) > config_.angle_limit ||
            steps_ >= config_.max_steps;
    return {observe(), 1.0, done_};
}

} // namespace qdrqn
