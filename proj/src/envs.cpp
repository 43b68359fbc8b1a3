#include "aac/envs.hpp"

#include <cmath>
#include <numbers>

namespace aac {

std::string_view to_string(EnvKind kind) {
    switch (kind) {
    case EnvKind::PointMass: return "point_mass";
    case EnvKind::PlanarArm: return "planar_arm";
    case EnvKind::QuadVel: return "quad_vel";
    case EnvKind::Line1d: return "line1d";
    }
    return "unknown";
}

EnvKind env_kind_from_string(std::string_view name) {
    if (name == "point_mass") return EnvKind::PointMass;
    if (name == "planar_arm") return EnvKind::PlanarArm;
    if (name == "quad_vel") return EnvKind::QuadVel;
    if (name == "line1d") return EnvKind::Line1d;
    throw InvalidInput("unknown environment '" + std::string(name) + "'");
}

EnvConfig EnvConfig::defaults(EnvKind kind) {
    EnvConfig c;
    c.name = kind;
    switch (kind) {
    case EnvKind::PointMass: c.dt = 0.02; break;
    case EnvKind::PlanarArm: c.dt = 0.05; break;
    case EnvKind::QuadVel: c.dt = 0.05; break;
    case EnvKind::Line1d: c.dt = 0.05; break;
    }
    return c;
}

Env::Env(EnvConfig config) : config_(std::move(config)) {
    require(config_.dt > 0.0, "env dt must be positive");
    require(config_.max_steps >= 1, "env max_steps must be at least 1");
}

GoalObservation Env::reset(std::uint64_t seed) {
    rng_.seed(seed);
    sample_initial(rng_);
    restart_from_current_state();
    return current_;
}

void Env::restart_from_current_state() {
    steps_ = 0;
    done_ = false;
    current_ = observe();
}

Vector Env::clamp_action(const Vector& action) const {
    return action.cwiseMax(action_low()).cwiseMin(action_high());
}

bool Env::goal_reached(const Vector& achieved, const Vector& desired) const {
    return (desired - achieved).norm() < success_tolerance();
}

bool Env::is_terminal(const Vector& observation, const Vector& achieved, const Vector& desired) const {
    return out_of_bounds(observation) || (terminates_on_success() && goal_reached(achieved, desired));
}

EnvStepResult Env::step(const Vector& action) {
    require(!done_, "step called on a finished episode; call reset first");
    require(action.size() == action_dim(), "action has wrong dimension");
    require(all_finite(action), "non-finite action");

    EnvStepResult out;
    out.applied_action = clamp_action(action);
    integrate(out.applied_action);
    ++steps_;
    current_ = observe();
    out.obs = current_;
    out.reward = compute_reward(current_.achieved_goal, current_.desired_goal, current_.observation,
                                out.applied_action);
    out.terminated = is_terminal(current_.observation, current_.achieved_goal, current_.desired_goal);
    out.truncated = !out.terminated && steps_ >= config_.max_steps;
    // Termination on the very last step also ends the step budget.
    if (out.terminated && steps_ >= config_.max_steps) out.truncated = true;
    done_ = out.terminated || out.truncated;
    return out;
}

std::unique_ptr<Env> make_env(const EnvConfig& config) {
    switch (config.name) {
    case EnvKind::PointMass: return std::make_unique<PointMassEnv>(config);
    case EnvKind::PlanarArm: return std::make_unique<PlanarArmEnv>(config);
    case EnvKind::QuadVel: return std::make_unique<QuadVelEnv>(config);
    case EnvKind::Line1d: return std::make_unique<Line1dEnv>(config);
    }
    throw InvalidInput("unknown environment kind");
}

// ---------------------------------------------------------------- point mass

void PointMassEnv::sample_initial(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> position(-2.4, 2.4);
    std::uniform_real_distribution<double> velocity(-0.1, 0.1);
    pos_ = {position(rng), position(rng)};
    vel_ = {velocity(rng), velocity(rng)};
    goal_ = {position(rng), position(rng)};
}

void PointMassEnv::integrate(const Vector& action) {
    const auto& p = config_.point_mass;
    const Eigen::Vector2d force = p.force_scale * action.head<2>() - p.spring * pos_ - p.damping * vel_;
    vel_ += config_.dt * force / p.mass;
    pos_ += config_.dt * vel_;
}

GoalObservation PointMassEnv::observe() const {
    Vector s(4);
    s << pos_, vel_;
    Vector desired(4);
    desired << goal_, 0.0, 0.0;
    return {s, desired, s};
}

double PointMassEnv::compute_reward(const Vector& achieved, const Vector& desired, const Vector&,
                                    const Vector& action) const {
    const double position_sq = (achieved.head<2>() - desired.head<2>()).squaredNorm();
    const double velocity_sq = (achieved.tail<2>() - desired.tail<2>()).squaredNorm();
    return -1.0 * position_sq - 0.5 * velocity_sq - 0.1 * action.norm();
}

bool PointMassEnv::out_of_bounds(const Vector& observation) const {
    return std::abs(observation[0]) > kPositionBound || std::abs(observation[1]) > kPositionBound;
}

bool PointMassEnv::goal_reached(const Vector& achieved, const Vector& desired) const {
    const double position_err = (achieved.head<2>() - desired.head<2>()).norm();
    const double velocity_err = (achieved.tail<2>() - desired.tail<2>()).norm();
    return position_err < 0.01 && velocity_err < 0.01;
}

// ---------------------------------------------------------------- planar arm

const Eigen::Vector3d PlanarArmEnv::kGoalLow{0.5, 0.5, 0.0};
const Eigen::Vector3d PlanarArmEnv::kGoalHigh{1.0, 1.0, 0.3};

Eigen::Vector3d PlanarArmEnv::forward_kinematics(const Eigen::Vector3d& q) const {
    const auto& p = config_.planar_arm;
    const double reach = p.upper_arm * std::cos(q[1]) + p.forearm * std::cos(q[1] + q[2]);
    const double height = p.pedestal + p.upper_arm * std::sin(q[1]) + p.forearm * std::sin(q[1] + q[2]);
    return {p.base_x + reach * std::cos(q[0]), p.base_y + reach * std::sin(q[0]), height};
}

void PlanarArmEnv::sample_initial(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> rate(-0.005, 0.005);
    for (int i = 0; i < 3; ++i) q_[i] = angle(rng);
    for (int i = 0; i < 3; ++i) qdot_[i] = rate(rng);
    for (int i = 0; i < 3; ++i) {
        std::uniform_real_distribution<double> g(kGoalLow[i], kGoalHigh[i]);
        goal_[i] = g(rng);
    }
}

void PlanarArmEnv::integrate(const Vector& action) {
    const auto& p = config_.planar_arm;
    const Eigen::Vector3d accel = (p.torque_scale * action.head<3>() - p.joint_damping * qdot_) / p.joint_inertia;
    qdot_ += config_.dt * accel;
    q_ += config_.dt * qdot_;
}

GoalObservation PlanarArmEnv::observe() const {
    Vector s(9);
    s << q_.array().cos().matrix(), q_.array().sin().matrix(), qdot_;
    Vector achieved = forward_kinematics(q_);
    return {s, Vector(goal_), achieved};
}

double PlanarArmEnv::compute_reward(const Vector& achieved, const Vector& desired, const Vector& observation,
                                    const Vector& action) const {
    return -1.0 * (achieved - desired).norm() - 0.1 * observation.tail<3>().norm() - 0.1 * action.norm();
}

bool PlanarArmEnv::out_of_bounds(const Vector& observation) const {
    return (observation.tail<3>().array().abs() > config_.planar_arm.max_joint_velocity).any();
}

// ---------------------------------------------------------------- quadcopter

Vector QuadVelEnv::action_low() const {
    Vector v(4);
    v << -2.0, -0.2, -0.2, -0.2;
    return v;
}

Vector QuadVelEnv::action_high() const {
    Vector v(4);
    v << 2.0, 0.2, 0.2, 0.2;
    return v;
}

Eigen::Vector3d QuadVelEnv::horizontal_accel(const Eigen::Vector3d& attitude) const {
    const double g = config_.quad_vel.gravity;
    // Body-frame thrust tilt, small-angle tangent model, rotated by yaw.
    const double forward = g * std::tan(attitude[1]);
    const double lateral = -g * std::tan(attitude[0]);
    const double c = std::cos(attitude[2]);
    const double s = std::sin(attitude[2]);
    return {c * forward - s * lateral, s * forward + c * lateral, 0.0};
}

void QuadVelEnv::sample_initial(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> velocity(-1.0, 1.0);
    std::uniform_real_distribution<double> attitude(-0.01, 0.01);
    for (int i = 0; i < 3; ++i) vel_[i] = velocity(rng);
    for (int i = 0; i < 3; ++i) att_[i] = attitude(rng);
    for (int i = 0; i < 3; ++i) goal_[i] = velocity(rng);
    rates_.setZero();
    acc_ = horizontal_accel(att_);
}

void QuadVelEnv::integrate(const Vector& action) {
    const auto& p = config_.quad_vel;
    const Eigen::Vector3d attitude_sp = action.segment<3>(1);
    rates_ = (attitude_sp - att_) / p.attitude_tau;
    att_ += config_.dt * rates_;
    acc_ = horizontal_accel(att_);
    acc_[2] = (action[0] - vel_[2]) / p.vertical_tau;
    vel_ += config_.dt * acc_;
}

GoalObservation QuadVelEnv::observe() const {
    Vector s(12);
    s << vel_, acc_, rates_, att_;
    return {s, Vector(goal_), Vector(vel_)};
}

double QuadVelEnv::compute_reward(const Vector& achieved, const Vector& desired, const Vector&,
                                  const Vector&) const {
    return -(achieved - desired).norm();
}

bool QuadVelEnv::out_of_bounds(const Vector& observation) const {
    const auto& p = config_.quad_vel;
    if ((observation.head<3>().array().abs() > p.max_velocity).any()) return true;
    return std::abs(observation[9]) > p.max_tilt || std::abs(observation[10]) > p.max_tilt;
}

// ---------------------------------------------------------------- line1d

void Line1dEnv::sample_initial(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> position(-1.0, 1.0);
    x_ = position(rng);
    v_ = 0.0;
    goal_ = position(rng);
}

void Line1dEnv::set_state(double position, double velocity, double goal) {
    x_ = position;
    v_ = velocity;
    goal_ = goal;
    restart_from_current_state();
}

void Line1dEnv::integrate(const Vector& action) {
    const auto& p = config_.line1d;
    v_ += config_.dt * (p.force_scale * (action[0] + p.action_bias) - p.damping * v_);
    x_ += config_.dt * v_;
}

GoalObservation Line1dEnv::observe() const {
    Vector s(2);
    s << x_, v_;
    return {s, Vector::Constant(1, goal_), Vector::Constant(1, x_)};
}

double Line1dEnv::compute_reward(const Vector& achieved, const Vector& desired, const Vector& observation,
                                 const Vector& action) const {
    const double e = achieved[0] - desired[0];
    return -1.0 * e * e - 0.5 * observation[1] * observation[1] - 0.1 * action.norm();
}

bool Line1dEnv::out_of_bounds(const Vector& observation) const {
    return std::abs(observation[0]) > config_.line1d.position_bound;
}

double Line1dEnv::proportional_steady_state_error(double gain) const {
    // Equilibrium of F*(gain*e - kv*v + bias) - c*v = 0 at v = 0.
    return -config_.line1d.action_bias / gain;
}

}  // namespace aac
