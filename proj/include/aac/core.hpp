#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace aac {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown for inputs that violate an operation's preconditions
/// (dimension mismatch, non-finite values, malformed configuration).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

bool all_finite(const Vector& v);

void require(bool condition, const std::string& message);

/// One environment step as seen by a goal-conditioned agent:
/// the raw state, the goal it is asked to reach, and the goal it currently reaches.
struct GoalObservation {
    Vector observation;
    Vector desired_goal;
    Vector achieved_goal;

    int state_dim() const { return static_cast<int>(observation.size()); }
    int goal_dim() const { return static_cast<int>(desired_goal.size()); }
};

/// Flat actor/critic input with layout [s | g_a | third slot].
/// The third slot is -e for an unadvised agent and the adviser's synthetic error otherwise.
class ExtendedObservation {
public:
    ExtendedObservation() = default;
    ExtendedObservation(Vector values, int state_dim, int goal_dim);

    const Vector& values() const { return values_; }
    int state_dim() const { return state_dim_; }
    int goal_dim() const { return goal_dim_; }
    int size() const { return static_cast<int>(values_.size()); }

    auto state() const { return values_.head(state_dim_); }
    auto achieved_goal() const { return values_.segment(state_dim_, goal_dim_); }
    auto third_slot() const { return values_.tail(goal_dim_); }

    bool operator==(const ExtendedObservation& other) const;

private:
    Vector values_;
    int state_dim_ = 0;
    int goal_dim_ = 0;
};

/// e = g_d - g_a
Vector error(const GoalObservation& obs);

ExtendedObservation build_extended_observation(const GoalObservation& obs, const Vector& third_slot);

/// The unadvised observation [s, g_a, -e].
inline ExtendedObservation unadvised_observation(const GoalObservation& obs) {
    return build_extended_observation(obs, -error(obs));
}

/// Bitwise equality, so -0.0 and +0.0 compare unequal and NaN payloads matter.
bool bit_equal(const Vector& a, const Vector& b);

/// SplitMix64 finalizer, used to derive independent seeds from one run seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace aac
