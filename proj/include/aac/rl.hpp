#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "aac/adviser.hpp"
#include "aac/core.hpp"
#include "aac/envs.hpp"
#include "aac/nn.hpp"

namespace aac::rl {

struct Transition {
    ExtendedObservation s_e;
    Vector action;  // applied action, in environment units
    double reward = 0.0;
    ExtendedObservation s_e_next;
    bool terminated = false;
    int episode = 0;
    int step = 0;
    GoalObservation raw;
    GoalObservation raw_next;
};

/// Fixed-capacity FIFO ring of transitions.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 1'000'000);

    void push(Transition t);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    /// i-th oldest stored transition.
    const Transition& at(std::size_t i) const;
    /// Uniform sample with replacement.
    std::vector<const Transition*> sample(std::size_t batch, std::mt19937_64& rng) const;

private:
    std::vector<Transition> storage_;
    std::size_t capacity_;
    std::size_t head_ = 0;  // next write slot once full
    std::size_t size_ = 0;
};

struct SacConfig {
    int hidden_width = 128;
    int hidden_layers = 3;
    nn::Activation activation = nn::Activation::Selu;
    double gamma = 0.995;
    double tau = 0.005;
    double lr_critic = 5e-4;
    double lr_actor = 3e-4;
    double lr_alpha = 3e-4;
    double init_alpha = 0.2;
    int batch_size = 64;
    std::size_t buffer_capacity = 1'000'000;
    std::size_t min_buffer = 1000;
    bool learn_alpha = true;
};

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// y = r + gamma * (1 - terminated) * (min_target_q - alpha * log_pi)
double soft_bellman_target(double reward, bool terminated, double gamma, double min_target_q, double alpha,
                           double log_pi);

struct UpdateReport {
    bool performed = false;
    bool under_filled = false;
    double critic1_loss = 0.0;
    double critic2_loss = 0.0;
    double policy_loss = 0.0;
    double alpha_loss = 0.0;
    double alpha = 0.0;
    double mean_log_pi = 0.0;
};

/// Squashed-Gaussian actor with twin critics, their targets and a learned temperature.
class SacAgent {
public:
    SacAgent(int observation_dim, Vector action_low, Vector action_high, SacConfig config, std::uint64_t seed);

    const SacConfig& config() const { return config_; }
    int observation_dim() const { return observation_dim_; }
    int action_dim() const { return static_cast<int>(action_low_.size()); }
    const Vector& action_low() const { return action_low_; }
    const Vector& action_high() const { return action_high_; }

    Vector sample_action(const ExtendedObservation& s_e, bool deterministic);
    /// Squashed mean, in environment units.
    Vector act_deterministic(const ExtendedObservation& s_e) const;

    /// Soft Bellman targets for a batch, drawing next actions from the current policy.
    Vector critic_target(const std::vector<const Transition*>& batch);

    UpdateReport update(const ReplayBuffer& buffer);

    /// d(alpha loss)/d(log alpha) for the standard objective -log_alpha * (log_pi + target_entropy).
    double temperature_gradient(double mean_log_pi) const;
    double target_entropy() const { return -static_cast<double>(action_dim()); }
    double alpha() const;

    void polyak_targets();

    nn::MlpParameters& policy() { return policy_; }
    nn::MlpParameters& critic(int i) { return i == 0 ? q1_ : q2_; }
    nn::MlpParameters& target_critic(int i) { return i == 0 ? q1_target_ : q2_target_; }
    const nn::MlpParameters& policy() const { return policy_; }
    const nn::MlpParameters& critic(int i) const { return i == 0 ? q1_ : q2_; }
    const nn::MlpParameters& target_critic(int i) const { return i == 0 ? q1_target_ : q2_target_; }
    double log_alpha() const { return log_alpha_; }
    void set_log_alpha(double v) { log_alpha_ = v; }

    bool all_finite() const;

    void save(const std::filesystem::path& path) const;
    void load(const std::filesystem::path& path);

private:
    Vector to_env_units(const Vector& squashed) const;
    Vector to_unit_box(const Vector& action) const;

    SacConfig config_;
    int observation_dim_;
    Vector action_low_, action_high_;
    nn::MlpParameters policy_, q1_, q2_, q1_target_, q2_target_;
    nn::OptimizerState policy_opt_, q1_opt_, q2_opt_;
    double log_alpha_;
    nn::ScalarAdam alpha_opt_;
    std::mt19937_64 rng_;
};

/// Rebuilds a transition for another desired goal with the unadvised layout,
/// recomputing reward and termination. State, action and next state are untouched.
Transition relabel(const Transition& t, const Vector& goal, const Env& env);

/// "future" hindsight relabeling: each transition followed by up to k copies whose goal
/// is the achieved goal of a uniformly drawn strictly-later step.
std::vector<Transition> her_relabel(const std::vector<Transition>& episode, int k, const Env& env,
                                    std::mt19937_64& rng);

using PolicyFn = std::function<Vector(const ExtendedObservation&)>;

/// Number of trailing steps averaged for the tail goal-error metric.
inline constexpr int kTailWindow = 50;

struct EpisodeResult {
    double episode_return = 0.0;
    double final_goal_error = 0.0;
    double tail_goal_error = 0.0;
    bool success = false;
    int steps = 0;
};

/// One rollout from env.reset(seed), with an optional observation adviser.
EpisodeResult rollout_episode(const PolicyFn& policy, Env& env, ObservationMediator mediator, std::uint64_t seed,
                              std::vector<Transition>* transitions = nullptr, int episode_index = 0);

struct EvalMetrics {
    int episodes = 0;
    bool empty = true;
    double success_rate = 0.0;
    double median_final_goal_error = 0.0;
    double median_tail_goal_error = 0.0;
    double mean_return = 0.0;
};

EvalMetrics summarize(const std::vector<EpisodeResult>& results);

/// Adviser gains applied during evaluation; nullopt means the plain observation path.
struct AdviserSetting {
    std::optional<AdviserGains> gains;
    double integral_clamp = 1.0;

    ObservationMediator mediator(int goal_dim, double dt) const;
};

/// Seeds for evaluation episode i of a run.
std::uint64_t eval_episode_seed(std::uint64_t seed, int episode);

/// Deterministic-policy evaluation; episodes run in parallel on clones of `env`.
EvalMetrics evaluate(const PolicyFn& policy, const Env& env, const AdviserSetting& adviser, int episodes,
                     std::uint64_t seed);
/// Serial reference of `evaluate`, same results.
EvalMetrics evaluate_serial(const PolicyFn& policy, const Env& env, const AdviserSetting& adviser, int episodes,
                            std::uint64_t seed);
EvalMetrics evaluate(const SacAgent& agent, const Env& env, const AdviserSetting& adviser, int episodes,
                     std::uint64_t seed);

struct TrainOptions {
    int epochs = 20;
    int episodes_per_epoch = 10;
    std::uint64_t seed = 0;
    bool her = false;
    int her_k = 4;
    AdviserSetting adviser;
};

struct EpochLog {
    int epoch = 0;
    double mean_return = 0.0;
    double median_final_goal_error = 0.0;
    double median_tail_goal_error = 0.0;
    double success_rate = 0.0;
    double alpha = 0.0;
    double critic_loss = 0.0;
    double policy_loss = 0.0;
    double alpha_loss = 0.0;
    long updates = 0;
};

/// Collects episodes through the train-time adviser, stores (optionally hindsight-augmented)
/// transitions, and runs one update per environment step once the buffer is warm.
std::vector<EpochLog> train(SacAgent& agent, Env& env, ReplayBuffer& buffer, const TrainOptions& options);

}  // namespace aac::rl
