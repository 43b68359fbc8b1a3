#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>

#include "aac/core.hpp"

namespace aac {

enum class EnvKind { PointMass, PlanarArm, QuadVel, Line1d };

std::string_view to_string(EnvKind kind);
EnvKind env_kind_from_string(std::string_view name);

struct PointMassParams {
    double mass = 1.0;
    double spring = 0.5;
    double damping = 0.1;
    double force_scale = 10.0;
};

struct PlanarArmParams {
    // Pedestal height, upper arm, forearm.
    double pedestal = 0.2;
    double upper_arm = 0.4;
    double forearm = 0.4;
    double base_x = 0.75;
    double base_y = 0.75;
    double joint_inertia = 1.0;
    double joint_damping = 0.5;
    double torque_scale = 5.0;
    double max_joint_velocity = 10.0;
};

struct QuadVelParams {
    double gravity = 9.81;
    double attitude_tau = 0.15;
    double vertical_tau = 0.3;
    double max_velocity = 4.0;
    double max_tilt = 1.5707963267948966;
};

/// Unit point mass on a line driven by a biased force: v' = F*(a + bias) - c*v.
struct Line1dParams {
    double force_scale = 2.0;
    double damping = 2.0;
    double action_bias = 0.0;
    double position_bound = 4.0;
};

struct EnvConfig {
    EnvKind name = EnvKind::PointMass;
    double dt = 0.02;
    int max_steps = 1000;
    std::uint64_t seed = 0;
    PointMassParams point_mass;
    PlanarArmParams planar_arm;
    QuadVelParams quad_vel;
    Line1dParams line1d;

    /// Defaults for the given environment (dt differs between plants).
    static EnvConfig defaults(EnvKind kind);
};

struct EnvStepResult {
    GoalObservation obs;
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;
    Vector applied_action;  // action after clamping to the action box
};

/// Goal-conditioned simulator contract shared by all plants.
class Env {
public:
    explicit Env(EnvConfig config);
    virtual ~Env() = default;

    virtual std::unique_ptr<Env> clone() const = 0;

    EnvKind kind() const { return config_.name; }
    const EnvConfig& config() const { return config_; }
    double dt() const { return config_.dt; }
    int max_steps() const { return config_.max_steps; }
    int steps() const { return steps_; }

    virtual int state_dim() const = 0;
    virtual int goal_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual Vector action_low() const = 0;
    virtual Vector action_high() const = 0;
    /// Half-width of the desired-goal sampling box (largest over dimensions).
    virtual double goal_half_width() const = 0;
    /// Distance below which the desired goal counts as reached.
    virtual double success_tolerance() const = 0;

    GoalObservation reset(std::uint64_t seed);
    EnvStepResult step(const Vector& action);
    const GoalObservation& current() const { return current_; }

    /// Pure reward; `observation` is the post-step state, `action` the applied action.
    virtual double compute_reward(const Vector& achieved, const Vector& desired,
                                  const Vector& observation, const Vector& action) const = 0;
    /// Termination test on a post-step state, pure in its arguments:
    /// the plant left its safe region or the goal is reached.
    bool is_terminal(const Vector& observation, const Vector& achieved, const Vector& desired) const;
    virtual bool out_of_bounds(const Vector& observation) const = 0;
    virtual bool goal_reached(const Vector& achieved, const Vector& desired) const;
    virtual bool terminates_on_success() const { return true; }

    Vector clamp_action(const Vector& action) const;

protected:
    virtual void sample_initial(std::mt19937_64& rng) = 0;
    virtual void integrate(const Vector& action) = 0;
    virtual GoalObservation observe() const = 0;
    /// Starts a fresh episode from whatever state the subclass holds.
    void restart_from_current_state();

    EnvConfig config_;

private:
    std::mt19937_64 rng_;
    GoalObservation current_;
    int steps_ = 0;
    bool done_ = true;
};

std::unique_ptr<Env> make_env(const EnvConfig& config);

class PointMassEnv final : public Env {
public:
    explicit PointMassEnv(EnvConfig config) : Env(std::move(config)) {}
    std::unique_ptr<Env> clone() const override { return std::make_unique<PointMassEnv>(*this); }

    int state_dim() const override { return 4; }
    int goal_dim() const override { return 4; }
    int action_dim() const override { return 2; }
    Vector action_low() const override { return Vector::Constant(2, -1.0); }
    Vector action_high() const override { return Vector::Constant(2, 1.0); }
    double goal_half_width() const override { return 2.4; }
    double success_tolerance() const override { return 0.01; }

    double compute_reward(const Vector& achieved, const Vector& desired,
                          const Vector& observation, const Vector& action) const override;
    bool out_of_bounds(const Vector& observation) const override;
    /// Position and velocity errors each below 0.01.
    bool goal_reached(const Vector& achieved, const Vector& desired) const override;

    static constexpr double kPositionBound = 4.8;

protected:
    void sample_initial(std::mt19937_64& rng) override;
    void integrate(const Vector& action) override;
    GoalObservation observe() const override;

private:
    Eigen::Vector2d pos_, vel_, goal_;
};

class PlanarArmEnv final : public Env {
public:
    explicit PlanarArmEnv(EnvConfig config) : Env(std::move(config)) {}
    std::unique_ptr<Env> clone() const override { return std::make_unique<PlanarArmEnv>(*this); }

    int state_dim() const override { return 9; }
    int goal_dim() const override { return 3; }
    int action_dim() const override { return 3; }
    Vector action_low() const override { return Vector::Constant(3, -1.0); }
    Vector action_high() const override { return Vector::Constant(3, 1.0); }
    double goal_half_width() const override { return 0.25; }
    double success_tolerance() const override { return 0.1; }

    double compute_reward(const Vector& achieved, const Vector& desired,
                          const Vector& observation, const Vector& action) const override;
    bool out_of_bounds(const Vector& observation) const override;

    /// End-effector position for joint angles (yaw, shoulder, elbow).
    Eigen::Vector3d forward_kinematics(const Eigen::Vector3d& q) const;

    static const Eigen::Vector3d kGoalLow;
    static const Eigen::Vector3d kGoalHigh;

protected:
    void sample_initial(std::mt19937_64& rng) override;
    void integrate(const Vector& action) override;
    GoalObservation observe() const override;

private:
    Eigen::Vector3d q_, qdot_, goal_;
};

/// Velocity-tracking quadcopter with a first-order attitude inner loop.
/// Observation: velocity(3), acceleration(3), angular rates(3), attitude(3).
/// Action: vertical velocity setpoint, roll/pitch/yaw setpoints.
class QuadVelEnv final : public Env {
public:
    explicit QuadVelEnv(EnvConfig config) : Env(std::move(config)) {}
    std::unique_ptr<Env> clone() const override { return std::make_unique<QuadVelEnv>(*this); }

    int state_dim() const override { return 12; }
    int goal_dim() const override { return 3; }
    int action_dim() const override { return 4; }
    Vector action_low() const override;
    Vector action_high() const override;
    double goal_half_width() const override { return 1.0; }
    double success_tolerance() const override { return 0.05; }

    double compute_reward(const Vector& achieved, const Vector& desired,
                          const Vector& observation, const Vector& action) const override;
    bool out_of_bounds(const Vector& observation) const override;

protected:
    void sample_initial(std::mt19937_64& rng) override;
    void integrate(const Vector& action) override;
    GoalObservation observe() const override;

private:
    Eigen::Vector3d horizontal_accel(const Eigen::Vector3d& attitude) const;

    Eigen::Vector3d vel_, acc_, rates_, att_, goal_;
};

class Line1dEnv final : public Env {
public:
    explicit Line1dEnv(EnvConfig config) : Env(std::move(config)) {}
    std::unique_ptr<Env> clone() const override { return std::make_unique<Line1dEnv>(*this); }

    int state_dim() const override { return 2; }
    int goal_dim() const override { return 1; }
    int action_dim() const override { return 1; }
    Vector action_low() const override { return Vector::Constant(1, -1.0); }
    Vector action_high() const override { return Vector::Constant(1, 1.0); }
    double goal_half_width() const override { return 1.0; }
    double success_tolerance() const override { return 0.01; }
    /// A regulation task: episodes run to the step budget so the residual error is observable.
    bool terminates_on_success() const override { return false; }

    double compute_reward(const Vector& achieved, const Vector& desired,
                          const Vector& observation, const Vector& action) const override;
    bool out_of_bounds(const Vector& observation) const override;

    /// Steady-state error of the policy a = gain*e - damping_gain*v under the configured bias
    /// (unsaturated regime).
    double proportional_steady_state_error(double gain) const;

    /// Places the plant at a given state and goal (for oracle tests).
    void set_state(double position, double velocity, double goal);

protected:
    void sample_initial(std::mt19937_64& rng) override;
    void integrate(const Vector& action) override;
    GoalObservation observe() const override;

private:
    double x_ = 0.0, v_ = 0.0, goal_ = 0.0;
};

}  // namespace aac
