#include "aac/adviser.hpp"

#include <cmath>

namespace aac {

AdviserState AdviserState::fresh(AdviserGains gains, int goal_dim, double dt, double integral_clamp) {
    require(std::isfinite(gains.kp) && std::isfinite(gains.ki) && std::isfinite(gains.kd),
            "adviser gains must be finite");
    require(gains.kp >= 0.0 && gains.ki >= 0.0 && gains.kd >= 0.0, "adviser gains must be non-negative");
    require(dt > 0.0, "adviser dt must be positive");
    require(integral_clamp > 0.0, "adviser integral clamp must be positive");
    require(goal_dim >= 0, "negative goal dimension");
    return AdviserState{gains, Vector::Zero(goal_dim), std::nullopt, dt, integral_clamp};
}

AdviserState reset(AdviserState state) {
    state.integral.setZero();
    state.prev_error.reset();
    return state;
}

FakeError fake_error(const AdviserState& state, const Vector& e) {
    require(e.size() == state.integral.size(), "error dimension does not match adviser state");
    require(all_finite(e), "non-finite error passed to adviser");
    require(state.dt > 0.0, "adviser dt must be positive");

    AdviserState next = state;
    next.integral = (state.integral + e * state.dt).cwiseMax(-state.integral_clamp).cwiseMin(state.integral_clamp);

    const auto& g = state.gains;
    Vector epsilon = -(g.kp * e);
    if (g.ki != 0.0) epsilon -= g.ki * next.integral;
    if (g.kd != 0.0 && state.prev_error) epsilon -= g.kd * ((e - *state.prev_error) / state.dt);

    next.prev_error = e;
    return {std::move(epsilon), std::move(next)};
}

Advised advise(const AdviserState& state, const GoalObservation& obs) {
    auto [epsilon, next] = fake_error(state, error(obs));
    return {build_extended_observation(obs, epsilon), std::move(next)};
}

Vector fake_goal(const GoalObservation& obs, const Vector& epsilon) {
    require(epsilon.size() == obs.achieved_goal.size(), "synthetic error dimension does not match goal");
    return obs.achieved_goal - epsilon;
}

ObservationMediator::ObservationMediator(AdviserGains gains, int goal_dim, double dt, double integral_clamp)
    : state_(AdviserState::fresh(gains, goal_dim, dt, integral_clamp)) {}

void ObservationMediator::begin_episode() {
    if (state_) state_ = reset(std::move(*state_));
    last_epsilon_.resize(0);
}

ExtendedObservation ObservationMediator::observe(const GoalObservation& obs) {
    if (!state_) return unadvised_observation(obs);
    auto [epsilon, next] = fake_error(*state_, error(obs));
    state_ = std::move(next);
    last_epsilon_ = epsilon;
    return build_extended_observation(obs, epsilon);
}

}  // namespace aac
