#pragma once

#include <optional>
#include <utility>

#include "aac/core.hpp"

namespace aac {

struct AdviserGains {
    double kp = 1.0;
    double ki = 0.0;
    double kd = 0.0;

    static AdviserGains identity() { return {1.0, 0.0, 0.0}; }
    bool is_identity() const { return kp == 1.0 && ki == 0.0 && kd == 0.0; }
    bool operator==(const AdviserGains&) const = default;
};

/// PID adviser memory for one episode. Passed by value through the
/// adviser functions; never mutated in place.
struct AdviserState {
    AdviserGains gains;
    Vector integral;                  // accumulated e*dt per goal dimension
    std::optional<Vector> prev_error; // absent until the first step after reset
    double dt = 0.0;
    double integral_clamp = 0.0;

    static AdviserState fresh(AdviserGains gains, int goal_dim, double dt, double integral_clamp);
};

AdviserState reset(AdviserState state);

struct FakeError {
    Vector epsilon;
    AdviserState state;
};

/// Discrete PID on the true error:
///   integral' = clamp(integral + e*dt)
///   derivative = (e - prev_error)/dt, or 0 on the first step after reset
///   eps = -(kp*e + ki*integral' + kd*derivative)
/// Zero gains contribute no term at all, so kp=1, ki=kd=0 yields exactly -e.
FakeError fake_error(const AdviserState& state, const Vector& e);

struct Advised {
    ExtendedObservation observation;
    AdviserState state;
};

/// Replaces the third slot of the extended observation by the synthetic error.
Advised advise(const AdviserState& state, const GoalObservation& obs);

/// The waypoint g_f = g_a - eps whose unadvised error reproduces eps.
Vector fake_goal(const GoalObservation& obs, const Vector& epsilon);

/// Builds actor inputs for one episode, either through a PID adviser or
/// with the plain [s, g_a, -e] layout. Owns the per-episode adviser state.
class ObservationMediator {
public:
    /// Plain unadvised mediator.
    ObservationMediator() = default;
    ObservationMediator(AdviserGains gains, int goal_dim, double dt, double integral_clamp);

    bool advised() const { return state_.has_value(); }
    void begin_episode();
    ExtendedObservation observe(const GoalObservation& obs);
    /// Synthetic error used for the most recent observation (empty when unadvised).
    const Vector& last_epsilon() const { return last_epsilon_; }

private:
    std::optional<AdviserState> state_;
    Vector last_epsilon_;
};

}  // namespace aac
