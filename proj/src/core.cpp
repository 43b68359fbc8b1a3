#include "aac/core.hpp"

#include <cstring>

namespace aac {

bool all_finite(const Vector& v) {
    return v.allFinite();
}

void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidInput(message);
}

ExtendedObservation::ExtendedObservation(Vector values, int state_dim, int goal_dim)
    : values_(std::move(values)), state_dim_(state_dim), goal_dim_(goal_dim) {
    require(state_dim >= 0 && goal_dim >= 0, "negative extended-observation dimension");
    require(values_.size() == state_dim + 2 * goal_dim,
            "extended observation length must equal dim(s) + 2*dim(g)");
}

bool ExtendedObservation::operator==(const ExtendedObservation& other) const {
    return state_dim_ == other.state_dim_ && goal_dim_ == other.goal_dim_ &&
           bit_equal(values_, other.values_);
}

Vector error(const GoalObservation& obs) {
    require(obs.desired_goal.size() == obs.achieved_goal.size(),
            "desired and achieved goal dimensions differ");
    return obs.desired_goal - obs.achieved_goal;
}

ExtendedObservation build_extended_observation(const GoalObservation& obs, const Vector& third_slot) {
    const auto n = obs.observation.size();
    const auto p = obs.achieved_goal.size();
    require(third_slot.size() == p, "third slot must have the goal dimension");
    require(all_finite(obs.observation) && all_finite(obs.achieved_goal) && all_finite(third_slot),
            "extended observation entries must be finite");
    Vector values(n + 2 * p);
    values << obs.observation, obs.achieved_goal, third_slot;
    return {std::move(values), static_cast<int>(n), static_cast<int>(p)};
}

bool bit_equal(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) return false;
    if (a.size() == 0) return true;
    return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace aac
