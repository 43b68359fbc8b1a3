#include "aac/rl.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>

namespace aac::rl {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

// log(1 - tanh(u)^2), stable for large |u|.
double log_one_minus_tanh_sq(double u) {
    return 2.0 * (std::numbers::ln2 - u - std::log1p(std::exp(-2.0 * u)));
}

double stable_log_one_minus_tanh_sq(double u) {
    // softplus(-2u) = log1p(exp(-2u)) overflows for very negative u; use symmetry.
    return log_one_minus_tanh_sq(std::abs(u));
}

}  // namespace

// ---------------------------------------------------------------- replay buffer

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    require(capacity > 0, "replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    if (storage_.size() < capacity_) {
        storage_.push_back(std::move(t));
        ++size_;
        return;
    }
    storage_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    require(i < size_, "replay buffer index out of range");
    return storage_[(head_ + i) % storage_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, std::mt19937_64& rng) const {
    require(size_ > 0, "sampling from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    std::vector<const Transition*> out(batch);
    for (auto& p : out) p = &storage_[pick(rng)];
    return out;
}

// ---------------------------------------------------------------- agent

double soft_bellman_target(double reward, bool terminated, double gamma, double min_target_q, double alpha,
                           double log_pi) {
    if (terminated) return reward;
    return reward + gamma * (min_target_q - alpha * log_pi);
}

SacAgent::SacAgent(int observation_dim, Vector action_low, Vector action_high, SacConfig config, std::uint64_t seed)
    : config_(config),
      observation_dim_(observation_dim),
      action_low_(std::move(action_low)),
      action_high_(std::move(action_high)),
      log_alpha_(std::log(config.init_alpha)),
      rng_(seed) {
    require(observation_dim > 0, "observation dimension must be positive");
    require(action_low_.size() > 0 && action_low_.size() == action_high_.size(), "bad action box");
    require((action_high_.array() > action_low_.array()).all(), "empty action box");
    require(config.init_alpha > 0.0, "initial alpha must be positive");
    require(config.gamma >= 0.0 && config.gamma <= 1.0, "gamma must lie in [0, 1]");
    require(config.batch_size > 0, "batch size must be positive");

    const int m = action_dim();
    policy_ = nn::make_mlp(nn::mlp_widths(observation_dim, 2 * m, config.hidden_width, config.hidden_layers),
                           config.activation, rng_);
    const auto critic_widths = nn::mlp_widths(observation_dim + m, 1, config.hidden_width, config.hidden_layers);
    q1_ = nn::make_mlp(critic_widths, config.activation, rng_);
    q2_ = nn::make_mlp(critic_widths, config.activation, rng_);
    q1_target_ = q1_;
    q2_target_ = q2_;
    policy_opt_ = nn::OptimizerState::for_params(policy_, config.lr_actor);
    q1_opt_ = nn::OptimizerState::for_params(q1_, config.lr_critic);
    q2_opt_ = nn::OptimizerState::for_params(q2_, config.lr_critic);
    alpha_opt_.learning_rate = config.lr_alpha;
}

double SacAgent::alpha() const {
    return std::exp(log_alpha_);
}

Vector SacAgent::to_env_units(const Vector& squashed) const {
    const Vector center = 0.5 * (action_high_ + action_low_);
    const Vector half = 0.5 * (action_high_ - action_low_);
    return center + half.cwiseProduct(squashed);
}

Vector SacAgent::to_unit_box(const Vector& action) const {
    const Vector center = 0.5 * (action_high_ + action_low_);
    const Vector half = 0.5 * (action_high_ - action_low_);
    return (action - center).cwiseQuotient(half);
}

Vector SacAgent::act_deterministic(const ExtendedObservation& s_e) const {
    require(s_e.size() == observation_dim_, "observation length does not match the policy");
    const Vector out = nn::forward(policy_, s_e.values());
    return to_env_units(out.head(action_dim()).array().tanh().matrix());
}

Vector SacAgent::sample_action(const ExtendedObservation& s_e, bool deterministic) {
    if (deterministic) return act_deterministic(s_e);
    require(s_e.size() == observation_dim_, "observation length does not match the policy");
    const int m = action_dim();
    const Vector out = nn::forward(policy_, s_e.values());
    std::normal_distribution<double> noise(0.0, 1.0);
    Vector squashed(m);
    for (int j = 0; j < m; ++j) {
        const double log_std = std::clamp(out[m + j], kLogStdMin, kLogStdMax);
        squashed[j] = std::tanh(out[j] + std::exp(log_std) * noise(rng_));
    }
    return to_env_units(squashed);
}

namespace {

struct PolicySample {
    Matrix squashed;  // (m, B), tanh(u)
    Matrix noise;     // (m, B)
    Matrix std_dev;   // (m, B)
    Matrix clamped;   // 1 where log-std was clamped (no gradient)
    Vector log_pi;    // (B)
};

PolicySample draw_policy_sample(const Matrix& policy_out, int m, std::mt19937_64& rng) {
    const auto batch = policy_out.cols();
    PolicySample s{Matrix(m, batch), Matrix(m, batch), Matrix(m, batch), Matrix(m, batch), Vector::Zero(batch)};
    std::normal_distribution<double> noise(0.0, 1.0);
    const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (int j = 0; j < m; ++j) {
            const double raw = policy_out(m + j, b);
            const double log_std = std::clamp(raw, kLogStdMin, kLogStdMax);
            const double xi = noise(rng);
            const double sd = std::exp(log_std);
            const double u = policy_out(j, b) + sd * xi;
            s.noise(j, b) = xi;
            s.std_dev(j, b) = sd;
            s.clamped(j, b) = (raw < kLogStdMin || raw > kLogStdMax) ? 1.0 : 0.0;
            s.squashed(j, b) = std::tanh(u);
            s.log_pi[b] += -0.5 * xi * xi - log_std - half_log_two_pi - stable_log_one_minus_tanh_sq(u);
        }
    }
    return s;
}

Matrix stack(const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
}

}  // namespace

Vector SacAgent::critic_target(const std::vector<const Transition*>& batch) {
    const int m = action_dim();
    const auto n = static_cast<Eigen::Index>(batch.size());
    Matrix next(observation_dim_, n);
    for (Eigen::Index b = 0; b < n; ++b) next.col(b) = batch[static_cast<std::size_t>(b)]->s_e_next.values();

    const Matrix policy_out = nn::forward_batch(policy_, next);
    const auto sample = draw_policy_sample(policy_out, m, rng_);
    const Matrix critic_in = stack(next, sample.squashed);
    const Matrix t1 = nn::forward_batch(q1_target_, critic_in);
    const Matrix t2 = nn::forward_batch(q2_target_, critic_in);

    const double a = alpha();
    Vector y(n);
    for (Eigen::Index b = 0; b < n; ++b) {
        const auto* t = batch[static_cast<std::size_t>(b)];
        y[b] = soft_bellman_target(t->reward, t->terminated, config_.gamma, std::min(t1(0, b), t2(0, b)), a,
                                   sample.log_pi[b]);
    }
    return y;
}

double SacAgent::temperature_gradient(double mean_log_pi) const {
    return -(mean_log_pi + target_entropy());
}

void SacAgent::polyak_targets() {
    nn::polyak_update(q1_target_, q1_, config_.tau);
    nn::polyak_update(q2_target_, q2_, config_.tau);
}

UpdateReport SacAgent::update(const ReplayBuffer& buffer) {
    UpdateReport report;
    const auto batch_size = static_cast<std::size_t>(config_.batch_size);
    if (buffer.size() < std::max(config_.min_buffer, batch_size)) {
        report.under_filled = true;
        report.alpha = alpha();
        return report;
    }

    const int m = action_dim();
    const auto batch = buffer.sample(batch_size, rng_);
    const auto n = static_cast<Eigen::Index>(batch.size());
    const double inv_n = 1.0 / static_cast<double>(n);

    Matrix states(observation_dim_, n);
    Matrix actions(m, n);
    for (Eigen::Index b = 0; b < n; ++b) {
        const auto* t = batch[static_cast<std::size_t>(b)];
        states.col(b) = t->s_e.values();
        actions.col(b) = to_unit_box(t->action);
    }
    const Vector y = critic_target(batch);
    const double a = alpha();

    // Critics: mean squared error to the soft Bellman target.
    const Matrix critic_in = stack(states, actions);
    auto critic_step = [&](nn::MlpParameters& q, nn::OptimizerState& opt) {
        nn::ForwardCache cache;
        const Matrix pred = nn::forward_batch(q, critic_in, &cache);
        const Matrix diff = pred - y.transpose();
        const auto g = nn::backward(q, cache, 2.0 * inv_n * diff);
        nn::adam_step(q, g.params, opt);
        return diff.squaredNorm() * inv_n;
    };
    report.critic1_loss = critic_step(q1_, q1_opt_);
    report.critic2_loss = critic_step(q2_, q2_opt_);

    // Policy: reparameterized mean of alpha * log_pi - min(Q1, Q2).
    nn::ForwardCache policy_cache;
    const Matrix policy_out = nn::forward_batch(policy_, states, &policy_cache);
    const auto sample = draw_policy_sample(policy_out, m, rng_);
    const Matrix q_in = stack(states, sample.squashed);
    nn::ForwardCache c1, c2;
    const Matrix v1 = nn::forward_batch(q1_, q_in, &c1);
    const Matrix v2 = nn::forward_batch(q2_, q_in, &c2);
    Matrix pick1 = Matrix::Zero(1, n), pick2 = Matrix::Zero(1, n);
    double policy_loss = 0.0;
    for (Eigen::Index b = 0; b < n; ++b) {
        const bool first = v1(0, b) <= v2(0, b);
        (first ? pick1 : pick2)(0, b) = 1.0;
        policy_loss += a * sample.log_pi[b] - std::min(v1(0, b), v2(0, b));
    }
    report.policy_loss = policy_loss * inv_n;
    const Matrix dq_da = nn::backward(q1_, c1, pick1).input.bottomRows(m) +
                         nn::backward(q2_, c2, pick2).input.bottomRows(m);

    Matrix upstream(2 * m, n);
    for (Eigen::Index b = 0; b < n; ++b) {
        for (int j = 0; j < m; ++j) {
            const double t = sample.squashed(j, b);
            const double dtanh = 1.0 - t * t;
            const double spread = sample.std_dev(j, b) * sample.noise(j, b);
            const double dq = dq_da(j, b) * dtanh;
            upstream(j, b) = inv_n * (a * 2.0 * t - dq);
            const double d_log_std = a * (-1.0 + 2.0 * t * spread) - dq * spread;
            upstream(m + j, b) = sample.clamped(j, b) > 0.0 ? 0.0 : inv_n * d_log_std;
        }
    }
    const auto pg = nn::backward(policy_, policy_cache, upstream);
    nn::adam_step(policy_, pg.params, policy_opt_);

    report.mean_log_pi = sample.log_pi.mean();
    report.alpha_loss = -log_alpha_ * (report.mean_log_pi + target_entropy());
    if (config_.learn_alpha) log_alpha_ = alpha_opt_.update(log_alpha_, temperature_gradient(report.mean_log_pi));

    polyak_targets();
    report.performed = true;
    report.alpha = alpha();
    return report;
}

bool SacAgent::all_finite() const {
    return policy_.all_finite() && q1_.all_finite() && q2_.all_finite() && q1_target_.all_finite() &&
           q2_target_.all_finite() && std::isfinite(log_alpha_);
}

void SacAgent::save(const std::filesystem::path& path) const {
    std::vector<Matrix> tensors;
    nn::append_tensors(policy_, tensors);
    nn::append_tensors(q1_, tensors);
    nn::append_tensors(q2_, tensors);
    nn::append_tensors(q1_target_, tensors);
    nn::append_tensors(q2_target_, tensors);
    tensors.push_back(Matrix::Constant(1, 1, log_alpha_));
    nn::write_tensors(path, tensors);
}

void SacAgent::load(const std::filesystem::path& path) {
    const auto tensors = nn::read_tensors(path);
    std::size_t offset = 0;
    offset = nn::load_tensors(policy_, tensors, offset);
    offset = nn::load_tensors(q1_, tensors, offset);
    offset = nn::load_tensors(q2_, tensors, offset);
    offset = nn::load_tensors(q1_target_, tensors, offset);
    offset = nn::load_tensors(q2_target_, tensors, offset);
    require(offset + 1 == tensors.size() && tensors[offset].size() == 1, "checkpoint trailer malformed");
    log_alpha_ = tensors[offset](0, 0);
}

// ---------------------------------------------------------------- hindsight relabeling

Transition relabel(const Transition& t, const Vector& goal, const Env& env) {
    Transition r = t;
    r.raw.desired_goal = goal;
    r.raw_next.desired_goal = goal;
    r.s_e = unadvised_observation(r.raw);
    r.s_e_next = unadvised_observation(r.raw_next);
    r.reward = env.compute_reward(r.raw_next.achieved_goal, goal, r.raw_next.observation, r.action);
    r.terminated = env.is_terminal(r.raw_next.observation, r.raw_next.achieved_goal, goal);
    return r;
}

std::vector<Transition> her_relabel(const std::vector<Transition>& episode, int k, const Env& env,
                                    std::mt19937_64& rng) {
    std::vector<Transition> out;
    if (episode.empty()) return out;
    out.reserve(episode.size() * static_cast<std::size_t>(1 + std::max(k, 0)));
    const std::size_t last = episode.size() - 1;
    for (std::size_t t = 0; t < episode.size(); ++t) {
        out.push_back(episode[t]);
        if (t == last) continue;
        std::uniform_int_distribution<std::size_t> future(t + 1, last);
        for (int c = 0; c < k; ++c) {
            const auto& source = episode[future(rng)];
            out.push_back(relabel(episode[t], source.raw_next.achieved_goal, env));
        }
    }
    return out;
}

// ---------------------------------------------------------------- rollouts and evaluation

ObservationMediator AdviserSetting::mediator(int goal_dim, double dt) const {
    if (!gains) return {};
    return ObservationMediator(*gains, goal_dim, dt, integral_clamp);
}

EpisodeResult rollout_episode(const PolicyFn& policy, Env& env, ObservationMediator mediator, std::uint64_t seed,
                              std::vector<Transition>* transitions, int episode_index) {
    EpisodeResult result;
    mediator.begin_episode();
    GoalObservation obs = env.reset(seed);
    ExtendedObservation s_e = mediator.observe(obs);
    std::vector<double> errors;
    errors.reserve(static_cast<std::size_t>(env.max_steps()));
    for (;;) {
        const Vector action = policy(s_e);
        auto step = env.step(action);
        ExtendedObservation s_e_next = mediator.observe(step.obs);
        result.episode_return += step.reward;
        errors.push_back(error(step.obs).norm());
        if (transitions) {
            transitions->push_back(Transition{s_e, step.applied_action, step.reward, s_e_next, step.terminated,
                                              episode_index, result.steps, obs, step.obs});
        }
        ++result.steps;
        obs = std::move(step.obs);
        s_e = std::move(s_e_next);
        if (step.terminated || step.truncated) break;
    }
    result.final_goal_error = errors.back();
    const std::size_t window = std::min<std::size_t>(errors.size(), kTailWindow);
    result.tail_goal_error =
        std::accumulate(errors.end() - static_cast<std::ptrdiff_t>(window), errors.end(), 0.0) /
        static_cast<double>(window);
    result.success = env.goal_reached(obs.achieved_goal, obs.desired_goal);
    return result;
}

EvalMetrics summarize(const std::vector<EpisodeResult>& results) {
    EvalMetrics m;
    m.episodes = static_cast<int>(results.size());
    if (results.empty()) return m;
    m.empty = false;
    std::vector<double> finals, tails;
    double returns = 0.0;
    int successes = 0;
    for (const auto& r : results) {
        finals.push_back(r.final_goal_error);
        tails.push_back(r.tail_goal_error);
        returns += r.episode_return;
        successes += r.success ? 1 : 0;
    }
    m.success_rate = static_cast<double>(successes) / static_cast<double>(results.size());
    m.median_final_goal_error = median(std::move(finals));
    m.median_tail_goal_error = median(std::move(tails));
    m.mean_return = returns / static_cast<double>(results.size());
    return m;
}

std::uint64_t eval_episode_seed(std::uint64_t seed, int episode) {
    return splitmix64(splitmix64(seed ^ 0xE7A1'5EEDULL) + static_cast<std::uint64_t>(episode));
}

EvalMetrics evaluate_serial(const PolicyFn& policy, const Env& env, const AdviserSetting& adviser, int episodes,
                            std::uint64_t seed) {
    std::vector<EpisodeResult> results;
    auto local = env.clone();
    for (int i = 0; i < episodes; ++i)
        results.push_back(rollout_episode(policy, *local, adviser.mediator(env.goal_dim(), env.dt()),
                                          eval_episode_seed(seed, i)));
    return summarize(results);
}

EvalMetrics evaluate(const PolicyFn& policy, const Env& env, const AdviserSetting& adviser, int episodes,
                     std::uint64_t seed) {
    if (episodes <= 0) return {};
    std::vector<EpisodeResult> results(static_cast<std::size_t>(episodes));
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < episodes; ++i) {
        try {
            auto local = env.clone();
            results[static_cast<std::size_t>(i)] = rollout_episode(
                policy, *local, adviser.mediator(env.goal_dim(), env.dt()), eval_episode_seed(seed, i));
        } catch (...) {
#pragma omp critical
            failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return summarize(results);
}

EvalMetrics evaluate(const SacAgent& agent, const Env& env, const AdviserSetting& adviser, int episodes,
                     std::uint64_t seed) {
    return evaluate([&agent](const ExtendedObservation& s) { return agent.act_deterministic(s); }, env, adviser,
                    episodes, seed);
}

// ---------------------------------------------------------------- training

std::vector<EpochLog> train(SacAgent& agent, Env& env, ReplayBuffer& buffer, const TrainOptions& options) {
    require(options.epochs >= 0 && options.episodes_per_epoch >= 1, "bad training schedule");
    require(agent.observation_dim() == env.state_dim() + 2 * env.goal_dim(),
            "agent input does not match the environment's extended observation");
    require(agent.action_dim() == env.action_dim(), "agent action dimension does not match the environment");

    std::mt19937_64 episode_rng(splitmix64(options.seed));
    std::mt19937_64 her_rng(splitmix64(options.seed + 1));
    std::vector<EpochLog> log;
    int episode_index = 0;

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        EpochLog row;
        row.epoch = epoch;
        std::vector<EpisodeResult> results;
        double critic_loss = 0.0, policy_loss = 0.0, alpha_loss = 0.0;

        for (int ep = 0; ep < options.episodes_per_epoch; ++ep, ++episode_index) {
            std::vector<Transition> episode;
            // Update once per environment step, right after the step's transition is stored.
            const PolicyFn collect = [&](const ExtendedObservation& s_e) {
                if (!episode.empty()) {
                    buffer.push(episode.back());
                    const auto report = agent.update(buffer);
                    if (report.performed) {
                        ++row.updates;
                        critic_loss += 0.5 * (report.critic1_loss + report.critic2_loss);
                        policy_loss += report.policy_loss;
                        alpha_loss += report.alpha_loss;
                    }
                }
                return agent.sample_action(s_e, false);
            };
            results.push_back(rollout_episode(collect, env, options.adviser.mediator(env.goal_dim(), env.dt()),
                                              episode_rng(), &episode, episode_index));
            buffer.push(episode.back());
            const auto report = agent.update(buffer);
            if (report.performed) {
                ++row.updates;
                critic_loss += 0.5 * (report.critic1_loss + report.critic2_loss);
                policy_loss += report.policy_loss;
                alpha_loss += report.alpha_loss;
            }
            if (options.her) {
                auto augmented = her_relabel(episode, options.her_k, env, her_rng);
                // Originals were stored live; her_relabel emits each original followed by its copies.
                std::size_t pos = 0;
                for (std::size_t t = 0; t < episode.size(); ++t) {
                    ++pos;
                    const std::size_t copies = t + 1 == episode.size() ? 0 : static_cast<std::size_t>(options.her_k);
                    for (std::size_t c = 0; c < copies; ++c) buffer.push(std::move(augmented[pos++]));
                }
            }
            require(agent.all_finite(), "agent parameters became non-finite during training");
        }

        const auto summary = summarize(results);
        row.mean_return = summary.mean_return;
        row.median_final_goal_error = summary.median_final_goal_error;
        row.median_tail_goal_error = summary.median_tail_goal_error;
        row.success_rate = summary.success_rate;
        row.alpha = agent.alpha();
        if (row.updates > 0) {
            const auto u = static_cast<double>(row.updates);
            row.critic_loss = critic_loss / u;
            row.policy_loss = policy_loss / u;
            row.alpha_loss = alpha_loss / u;
        }
        log.push_back(row);
    }
    return log;
}

}  // namespace aac::rl
