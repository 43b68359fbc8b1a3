#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "aac/rl.hpp"
#include "test_util.hpp"

using namespace aac;
using namespace aac::rl;
using testutil::vec;

namespace {

SacConfig tiny_config() {
    SacConfig c;
    c.hidden_width = 16;
    c.hidden_layers = 2;
    c.batch_size = 16;
    c.min_buffer = 64;
    c.buffer_capacity = 10'000;
    return c;
}

std::unique_ptr<Env> line1d(int max_steps, double bias = 0.0) {
    auto c = EnvConfig::defaults(EnvKind::Line1d);
    c.max_steps = max_steps;
    c.line1d.action_bias = bias;
    return make_env(c);
}

SacAgent agent_for(const Env& env, SacConfig config = tiny_config(), std::uint64_t seed = 1) {
    return SacAgent(env.state_dim() + 2 * env.goal_dim(), env.action_low(), env.action_high(), config, seed);
}

std::vector<Transition> random_episode(Env& env, std::uint64_t seed, int index = 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const PolicyFn policy = [&](const ExtendedObservation&) {
        Vector a(env.action_dim());
        for (auto& x : a) x = u(rng);
        return a;
    };
    std::vector<Transition> out;
    rollout_episode(policy, env, ObservationMediator(), seed, &out, index);
    return out;
}

// Critic-free PD policy for line1d, reading e from the third slot.
Vector line1d_pd(const ExtendedObservation& s) { return vec({-4.0 * s.third_slot()[0] - 1.0 * s.state()[1]}); }

}  // namespace

TEST_SUITE("rl") {

TEST_CASE("replay buffer evicts oldest first and keeps order") {
    ReplayBuffer buffer(5);
    for (int i = 0; i < 8; ++i) {
        Transition t;
        t.step = i;
        buffer.push(t);
    }
    CHECK(buffer.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(buffer.at(i).step == static_cast<int>(i) + 3);
    CHECK_THROWS_AS(buffer.at(5), InvalidInput);

    std::mt19937_64 a(3), b(3);
    const auto s1 = buffer.sample(32, a);
    const auto s2 = buffer.sample(32, b);
    for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i] == s2[i]);
}

TEST_CASE("soft Bellman target") {
    CHECK(soft_bellman_target(1.0, true, 0.995, 123.0, 0.2, -7.0) == 1.0);
    CHECK(soft_bellman_target(1.0, false, 0.995, 0.0, 0.2, 0.0) == 1.0);
    CHECK(soft_bellman_target(-2.0, false, 0.0, 55.0, 0.2, 3.0) == -2.0);
    CHECK(soft_bellman_target(0.5, false, 0.9, 2.0, 0.1, -1.0) == doctest::Approx(0.5 + 0.9 * (2.0 + 0.1)));
}

TEST_CASE("critic targets on real batches") {
    auto env = line1d(30);
    auto episode = random_episode(*env, 4);
    std::vector<const Transition*> batch;
    std::vector<Transition> terminal = episode;
    for (auto& t : terminal) {
        t.terminated = true;
        t.reward = 1.0;
    }
    for (const auto& t : terminal) batch.push_back(&t);
    auto agent = agent_for(*env);
    const auto y = agent.critic_target(batch);
    for (Eigen::Index i = 0; i < y.size(); ++i) CHECK(y[i] == 1.0);

    auto config = tiny_config();
    config.gamma = 0.0;
    auto myopic = agent_for(*env, config);
    batch.clear();
    for (const auto& t : episode) batch.push_back(&t);
    const auto y0 = myopic.critic_target(batch);
    for (std::size_t i = 0; i < episode.size(); ++i) CHECK(y0[static_cast<Eigen::Index>(i)] == episode[i].reward);
}

TEST_CASE("zero-weight policy acts at the centre of the box") {
    auto c = EnvConfig::defaults(EnvKind::QuadVel);
    auto env = make_env(c);
    auto agent = agent_for(*env);
    agent.policy() = agent.policy().zeros_like();
    const auto s_e = unadvised_observation(env->reset(0));
    const Vector a = agent.sample_action(s_e, true);
    const Vector center = 0.5 * (env->action_low() + env->action_high());
    CHECK((a - center).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("actions stay in the box and sampling is seeded") {
    auto env = make_env(EnvConfig::defaults(EnvKind::QuadVel));
    auto a1 = agent_for(*env, tiny_config(), 9);
    auto a2 = agent_for(*env, tiny_config(), 9);
    // Push the policy towards saturation.
    for (auto& l : a1.policy().layers) l.weight *= 20.0;
    for (auto& l : a2.policy().layers) l.weight *= 20.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s_e = unadvised_observation(env->reset(seed));
        const Vector x = a1.sample_action(s_e, false);
        const Vector y = a2.sample_action(s_e, false);
        CHECK(bit_equal(x, y));
        CHECK((x.array() <= env->action_high().array()).all());
        CHECK((x.array() >= env->action_low().array()).all());
    }
}

TEST_CASE("temperature gradient vanishes at the target entropy") {
    auto env = make_env(EnvConfig::defaults(EnvKind::QuadVel));
    auto agent = agent_for(*env);
    CHECK(agent.target_entropy() == -4.0);
    // The objective -log_alpha * (log_pi + target_entropy) is stationary when E[log pi] = dim(A).
    CHECK(agent.temperature_gradient(-agent.target_entropy()) == 0.0);
    CHECK(agent.temperature_gradient(10.0) < 0.0);  // too little entropy: alpha grows
    CHECK(agent.temperature_gradient(-10.0) > 0.0);
}

TEST_CASE("update is a no-op while the buffer is under-filled") {
    auto env = line1d(20);
    auto agent = agent_for(*env);
    ReplayBuffer buffer(1000);
    for (const auto& t : random_episode(*env, 1)) buffer.push(t);
    const auto before = agent.policy();
    const auto report = agent.update(buffer);
    CHECK(report.under_filled);
    CHECK_FALSE(report.performed);
    CHECK(nn::max_abs_difference(before, agent.policy()) == 0.0);
}

TEST_CASE("an update changes every network and moves targets by tau") {
    auto env = line1d(50);
    auto agent = agent_for(*env);
    ReplayBuffer buffer(1000);
    for (std::uint64_t s = 0; s < 3; ++s)
        for (const auto& t : random_episode(*env, s)) buffer.push(t);
    const auto policy = agent.policy();
    const auto q1 = agent.critic(0);
    const auto target_before = agent.target_critic(0);
    const auto report = agent.update(buffer);
    REQUIRE(report.performed);
    CHECK(nn::max_abs_difference(policy, agent.policy()) > 0.0);
    CHECK(nn::max_abs_difference(q1, agent.critic(0)) > 0.0);
    // target' = tau * online' + (1 - tau) * target
    auto expected = target_before;
    nn::polyak_update(expected, agent.critic(0), agent.config().tau);
    CHECK(nn::max_abs_difference(expected, agent.target_critic(0)) < 1e-15);
    CHECK(std::isfinite(report.critic1_loss));
    CHECK(agent.alpha() != doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("repeated Polyak steps with frozen critics shrink the gap by 1 - tau") {
    auto env = line1d(10);
    auto agent = agent_for(*env);
    for (auto& l : agent.critic(0).layers) l.weight.array() += 0.5;
    double gap = nn::max_abs_difference(agent.target_critic(0), agent.critic(0));
    for (int i = 0; i < 20; ++i) {
        agent.polyak_targets();
        const double next = nn::max_abs_difference(agent.target_critic(0), agent.critic(0));
        CHECK(next == doctest::Approx(0.995 * gap).epsilon(1e-9));
        gap = next;
    }
}

TEST_CASE("checkpoint save and load restore the agent") {
    auto env = line1d(10);
    auto a = agent_for(*env, tiny_config(), 1);
    a.set_log_alpha(-1.25);
    const auto path = std::filesystem::temp_directory_path() / "aac_agent.bin";
    a.save(path);
    auto b = agent_for(*env, tiny_config(), 2);
    b.load(path);
    CHECK(nn::max_abs_difference(a.policy(), b.policy()) == 0.0);
    CHECK(nn::max_abs_difference(a.target_critic(1), b.target_critic(1)) == 0.0);
    CHECK(b.log_alpha() == -1.25);
    auto other = SacAgent(5, Vector::Constant(1, -1), Vector::Constant(1, 1), tiny_config(), 3);
    CHECK_THROWS_AS(other.load(path), InvalidInput);
}

TEST_CASE("relabeling with the true goal reproduces the transition") {
    auto env = make_env(EnvConfig::defaults(EnvKind::PointMass));
    for (const auto& t : random_episode(*env, 6)) {
        const auto r = relabel(t, t.raw.desired_goal, *env);
        CHECK(r.s_e == t.s_e);
        CHECK(r.s_e_next == t.s_e_next);
        CHECK(r.reward == t.reward);
        CHECK(r.terminated == t.terminated);
    }
}

TEST_CASE("relabeling at the reached position leaves only the velocity and action terms") {
    auto env = make_env(EnvConfig::defaults(EnvKind::PointMass));
    const auto episode = random_episode(*env, 7);
    const auto& t = episode[3];
    Vector goal = Vector::Zero(4);
    goal.head(2) = t.raw_next.achieved_goal.head(2);
    const auto r = relabel(t, goal, *env);
    const double expected = -0.5 * t.raw_next.observation.tail(2).squaredNorm() - 0.1 * t.action.norm();
    CHECK(r.reward == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("hindsight relabeling with future goals") {
    auto env = make_env(EnvConfig::defaults(EnvKind::PlanarArm));
    auto c = EnvConfig::defaults(EnvKind::PlanarArm);
    c.max_steps = 12;
    env = make_env(c);
    auto episode = random_episode(*env, 8);
    REQUIRE(episode.size() == 12);
    std::mt19937_64 rng(1);
    const auto out = her_relabel(episode, 4, *env, rng);
    CHECK(out.size() == 11 * 5 + 1);
    std::size_t pos = 0;
    for (std::size_t t = 0; t < episode.size(); ++t) {
        const auto& original = out[pos++];
        CHECK(original.s_e == episode[t].s_e);
        const int copies = t + 1 == episode.size() ? 0 : 4;
        for (int k = 0; k < copies; ++k) {
            const auto& r = out[pos++];
            // Dynamics untouched.
            CHECK(bit_equal(r.raw.observation, episode[t].raw.observation));
            CHECK(bit_equal(r.raw_next.observation, episode[t].raw_next.observation));
            CHECK(bit_equal(r.action, episode[t].action));
            CHECK(bit_equal(r.s_e.state(), episode[t].s_e.state()));
            // Goal comes from a strictly later step.
            bool found = false;
            for (std::size_t j = t + 1; j < episode.size(); ++j)
                found = found || bit_equal(r.raw.desired_goal, episode[j].raw_next.achieved_goal);
            CHECK(found);
            CHECK(r.reward == env->compute_reward(r.raw_next.achieved_goal, r.raw.desired_goal,
                                                  r.raw_next.observation, r.action));
            CHECK(r.s_e == unadvised_observation(r.raw));
        }
    }
    CHECK(pos == out.size());
    CHECK(her_relabel({}, 4, *env, rng).empty());
    CHECK(her_relabel(episode, 0, *env, rng).size() == episode.size());
}

TEST_CASE("an analytic controller solves line1d") {
    auto env = line1d(200);
    const auto m = evaluate(line1d_pd, *env, AdviserSetting{}, 20, 5);
    CHECK(m.success_rate == 1.0);
    CHECK(m.median_final_goal_error < 0.01);
    CHECK(m.episodes == 20);
    CHECK_FALSE(m.empty);
}

TEST_CASE("zero evaluation episodes give flagged empty metrics") {
    auto env = line1d(10);
    const auto m = evaluate(line1d_pd, *env, AdviserSetting{}, 0, 5);
    CHECK(m.empty);
    CHECK(m.episodes == 0);
}

TEST_CASE("parallel evaluation equals the serial reference and is seeded") {
    auto env = make_env(EnvConfig::defaults(EnvKind::PointMass));
    auto agent = agent_for(*env);
    AdviserSetting adviser;
    adviser.gains = AdviserGains{1.3, 0.1, 0.1};
    adviser.integral_clamp = 24.0;
    const PolicyFn policy = [&agent](const ExtendedObservation& s) { return agent.act_deterministic(s); };
    const auto a = evaluate(policy, *env, adviser, 12, 77);
    const auto b = evaluate_serial(policy, *env, adviser, 12, 77);
    const auto c = evaluate(policy, *env, adviser, 12, 77);
    CHECK(a.median_final_goal_error == b.median_final_goal_error);
    CHECK(a.mean_return == b.mean_return);
    CHECK(a.mean_return == c.mean_return);
    CHECK(a.median_tail_goal_error == b.median_tail_goal_error);
}

TEST_CASE("summary statistics") {
    std::vector<EpisodeResult> r(4);
    r[0] = {-1.0, 0.4, 0.5, false, 10};
    r[1] = {-3.0, 0.1, 0.2, true, 10};
    r[2] = {-2.0, 0.3, 0.1, true, 10};
    r[3] = {-6.0, 0.2, 0.4, false, 10};
    const auto m = summarize(r);
    CHECK(m.success_rate == 0.5);
    CHECK(m.median_final_goal_error == doctest::Approx(0.25));
    CHECK(m.median_tail_goal_error == doctest::Approx(0.3));
    CHECK(m.mean_return == doctest::Approx(-3.0));
}

TEST_CASE("training honours the epoch count and is reproducible") {
    auto env = line1d(40, 0.2);
    TrainOptions options;
    options.epochs = 3;
    options.episodes_per_epoch = 3;
    options.seed = 5;
    auto run = [&](std::optional<AdviserGains> gains, bool her) {
        auto agent = agent_for(*env);
        ReplayBuffer buffer(10'000);
        auto o = options;
        o.her = her;
        o.adviser.gains = gains;
        o.adviser.integral_clamp = 10.0;
        auto local = env->clone();
        return train(agent, *local, buffer, o);
    };
    const auto plain = run(std::nullopt, false);
    const auto identity = run(AdviserGains::identity(), false);
    const auto again = run(std::nullopt, false);
    REQUIRE(plain.size() == 3);
    CHECK(plain.back().updates > 0);
    for (std::size_t e = 0; e < plain.size(); ++e) {
        CHECK(plain[e].epoch == static_cast<int>(e));
        CHECK(plain[e].mean_return == identity[e].mean_return);
        CHECK(plain[e].critic_loss == identity[e].critic_loss);
        CHECK(plain[e].alpha == identity[e].alpha);
        CHECK(plain[e].mean_return == again[e].mean_return);
    }
    const auto with_her = run(std::nullopt, true);
    REQUIRE(with_her.size() == 3);
    CHECK(with_her.back().updates > 0);
}

}
