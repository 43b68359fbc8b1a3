#include "aac/experiment.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>

#include "aac/csv.hpp"

namespace aac::cli {

namespace {

constexpr std::uint64_t kAgentSalt = 0xA6E7'0000'0000'0001ULL;
constexpr std::uint64_t kEvalSalt = 0xE7A1'0000'0000'0002ULL;

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// CSV cells may not hold separators or quotes.
std::string sanitize(std::string text) {
    for (char& ch : text)
        if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ' ';
    return text;
}

void prepare_directory(const fs::path& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw InvalidInput("cannot create output directory " + out.string() + ": " + ec.message());
}

}  // namespace

std::uint64_t evaluation_seed(std::uint64_t run_seed) { return splitmix64(run_seed ^ kEvalSalt); }

std::unique_ptr<rl::SacAgent> make_agent(const RunConfig& config, const Env& env, std::uint64_t seed) {
    const int obs_dim = env.state_dim() + 2 * env.goal_dim();
    return std::make_unique<rl::SacAgent>(obs_dim, env.action_low(), env.action_high(), config.sac,
                                          splitmix64(seed ^ kAgentSalt));
}

TrainingRun run_training(const RunConfig& config, std::uint64_t seed) {
    validate(config);
    auto env = make_env(config.env);
    TrainingRun run;
    run.agent = make_agent(config, *env, seed);

    rl::ReplayBuffer buffer(config.sac.buffer_capacity);
    rl::TrainOptions options;
    options.epochs = config.epochs;
    options.episodes_per_epoch = config.episodes_per_epoch;
    options.seed = seed;
    options.her = config.her;
    options.her_k = config.her_k;
    options.adviser = config.train_adviser(env->goal_half_width());
    run.log = rl::train(*run.agent, *env, buffer, options);

    run.eval = rl::evaluate(*run.agent, *env, config.eval_adviser(env->goal_half_width()), config.eval_episodes,
                            evaluation_seed(seed));
    return run;
}

void write_training_log(const fs::path& path, const std::vector<rl::EpochLog>& log) {
    csv::Writer w(path, "training_log", kTrainingLogColumns);
    for (const auto& r : log) {
        w.cell(r.epoch)
            .cell(r.mean_return)
            .cell(r.median_final_goal_error)
            .cell(r.median_tail_goal_error)
            .cell(r.success_rate)
            .cell(r.alpha)
            .cell(r.critic_loss)
            .cell(r.policy_loss)
            .cell(r.alpha_loss)
            .cell(static_cast<long long>(r.updates));
        w.end_row();
    }
}

void write_eval_metrics(const fs::path& path, const rl::EvalMetrics& m) {
    csv::Writer w(path, "eval_metrics", kEvalMetricsColumns);
    w.cell(m.episodes)
        .cell(m.success_rate)
        .cell(m.median_final_goal_error)
        .cell(m.median_tail_goal_error)
        .cell(m.mean_return);
    w.end_row();
}

namespace {

void write_trajectory(const fs::path& path, const RunConfig& config, const rl::SacAgent& agent) {
    auto env = make_env(config.env);
    const auto adviser = config.eval_adviser(env->goal_half_width());
    std::vector<rl::Transition> steps;
    const rl::PolicyFn policy = [&agent](const ExtendedObservation& s) { return agent.act_deterministic(s); };
    rl::rollout_episode(policy, *env, adviser.mediator(env->goal_dim(), env->dt()),
                        rl::eval_episode_seed(evaluation_seed(config.seed), 0), &steps);

    std::vector<std::string> columns{"step", "t"};
    auto add = [&columns](const char* prefix, int n) {
        for (int i = 0; i < n; ++i) columns.push_back(std::string(prefix) + std::to_string(i));
    };
    add("s_", env->state_dim());
    add("a_", env->action_dim());
    add("g_a_", env->goal_dim());
    add("g_d_", env->goal_dim());
    for (const char* c : {"reward", "terminated", "truncated", "goal_error", "synthetic_error_norm"}) columns.emplace_back(c);

    csv::Writer w(path, "trajectory", columns);
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const auto& t = steps[k];
        const int step = t.step + 1;
        w.cell(step).cell(step * env->dt());
        for (const Vector* v : {&t.raw_next.observation, &t.action, &t.raw_next.achieved_goal, &t.raw_next.desired_goal})
            for (double x : *v) w.cell(x);
        const bool last = k + 1 == steps.size();
        w.cell(t.reward)
            .cell(t.terminated ? 1 : 0)
            .cell(last && (!t.terminated || step >= env->max_steps()) ? 1 : 0)
            .cell(error(t.raw_next).norm())
            .cell(t.s_e_next.third_slot().norm());
        w.end_row();
    }
}

}  // namespace

void cmd_train(const RunConfig& config, const fs::path& out, bool trajectory) {
    validate(config);
    prepare_directory(out);
    write_config(out / "resolved_config.ini", config);
    const auto run = run_training(config, config.seed);
    write_training_log(out / "training_log.csv", run.log);
    write_eval_metrics(out / "eval_metrics.csv", run.eval);
    run.agent->save(out / "checkpoint.bin");
    if (trajectory) write_trajectory(out / "trajectory.csv", config, *run.agent);
}

void cmd_eval(const RunConfig& config, const fs::path& checkpoint, const fs::path& out) {
    validate(config);
    prepare_directory(out);
    write_config(out / "resolved_config.ini", config);
    auto env = make_env(config.env);
    auto agent = make_agent(config, *env, config.seed);
    agent->load(checkpoint);
    const auto metrics = rl::evaluate(*agent, *env, config.eval_adviser(env->goal_half_width()),
                                      config.eval_episodes, evaluation_seed(config.seed));
    write_eval_metrics(out / "eval_metrics.csv", metrics);
}

// ---------------------------------------------------------------- matrix

std::vector<MatrixCell> matrix_cells() {
    std::vector<MatrixCell> cells;
    for (bool her : {false, true})
        for (auto s : kAllStrategies) cells.push_back({her, s});
    return cells;
}

std::string algorithm_name(bool her) { return her ? "sac_her" : "sac"; }

int cmd_matrix(const RunConfig& base, const fs::path& out) {
    validate(base);
    prepare_directory(out);
    // Every cell picks its own strategy; echo the base with both gain sets visible.
    RunConfig echo = base;
    echo.strategy = Strategy::TrainEvalAdviser;
    write_config(out / "resolved_config.ini", echo);

    const auto cells = matrix_cells();
    const int seeds = base.seeds;
    const int jobs = static_cast<int>(cells.size()) * seeds;

    struct JobResult {
        bool ok = false;
        std::string message;
        rl::EvalMetrics eval;
    };
    std::vector<JobResult> results(static_cast<std::size_t>(jobs));

#pragma omp parallel for schedule(dynamic, 1)
    for (int j = 0; j < jobs; ++j) {
        const auto& cell = cells[static_cast<std::size_t>(j / seeds)];
        auto& slot = results[static_cast<std::size_t>(j)];
        try {
            RunConfig config = base;
            config.strategy = cell.strategy;
            config.her = cell.her;
            const auto seed = base.seed + static_cast<std::uint64_t>(j % seeds);
            slot.eval = run_training(config, seed).eval;
            slot.ok = true;
        } catch (const std::exception& e) {
            slot.message = sanitize(e.what());
        } catch (...) {
            slot.message = "unknown error";
        }
    }

    csv::Writer w(out / "matrix.csv", "matrix", kMatrixColumns);
    int failed = 0;
    for (int j = 0; j < jobs; ++j) {
        const auto& cell = cells[static_cast<std::size_t>(j / seeds)];
        const auto& r = results[static_cast<std::size_t>(j)];
        failed += r.ok ? 0 : 1;
        w.cell("run")
            .cell(algorithm_name(cell.her))
            .cell(to_string(cell.strategy))
            .cell(strategy_label(cell.strategy))
            .cell(static_cast<long long>(base.seed + static_cast<std::uint64_t>(j % seeds)))
            .cell(r.ok ? "ok" : "failed")
            .cell(r.ok ? 1 : 0)
            .cell(r.eval.success_rate)
            .cell(r.eval.median_final_goal_error)
            .cell(r.eval.median_tail_goal_error)
            .cell(r.eval.mean_return)
            .cell(r.message);
        w.end_row();
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<double> success, finals, tails;
        double returns = 0.0;
        for (int s = 0; s < seeds; ++s) {
            const auto& r = results[c * static_cast<std::size_t>(seeds) + static_cast<std::size_t>(s)];
            if (!r.ok) continue;
            success.push_back(r.eval.success_rate);
            finals.push_back(r.eval.median_final_goal_error);
            tails.push_back(r.eval.median_tail_goal_error);
            returns += r.eval.mean_return;
        }
        const auto ok = static_cast<int>(finals.size());
        w.cell("summary")
            .cell(algorithm_name(cells[c].her))
            .cell(to_string(cells[c].strategy))
            .cell(strategy_label(cells[c].strategy))
            .cell("all")
            .cell(ok == seeds ? "ok" : (ok == 0 ? "failed" : "partial"))
            .cell(ok)
            .cell(median(success))
            .cell(median(finals))
            .cell(median(tails))
            .cell(ok > 0 ? returns / ok : 0.0)
            .cell("");
        w.end_row();
    }
    return failed;
}

// ---------------------------------------------------------------- analysis

std::vector<TraceCase> reference_trace_cases() {
    return {{"asymptotic", {2.0, 2.0, 1.0}}, {"marginal", {1.0, 1.0, 1.0}}, {"unstable", {1.0, 1.0, 2.0}}};
}

void cmd_stability(const StabilitySpec& spec, const fs::path& out) {
    for (const auto* axis : {&spec.kp_eff, &spec.kd_eff, &spec.ki})
        require(axis->count >= 0, "grid axis count must be non-negative");
    require(spec.dt > 0.0 && spec.horizon >= spec.dt, "trace dt must be positive and not exceed the horizon");
    prepare_directory(out);

    const auto triples = parallel::make_grid(spec.kp_eff, spec.kd_eff, spec.ki);
    const auto rows = parallel::classify_grid(triples);
    csv::Writer w(out / "stability_grid.csv", "stability_grid", kStabilityColumns);
    for (const auto& r : rows) {
        w.cell(r.gains.kp_eff).cell(r.gains.kd_eff).cell(r.gains.ki).cell(to_string(r.verdict.classification));
        for (double v : r.verdict.routh_first_column) w.cell(v);
        w.cell(r.max_root_real);
        w.end_row();
    }

    for (const auto& tc : spec.traces) {
        require(!tc.name.empty() && tc.name.find_first_of("/\\ ") == std::string::npos,
                "trace names must be non-empty and contain no spaces or slashes");
        auto model = ErrorDynamicsModel::from_effective(tc.gains.kp_eff, tc.gains.kd_eff, tc.gains.ki,
                                                        spec.disturbance);
        model.dt = spec.dt;
        model.horizon = spec.horizon;
        cmd_step_response(model, spec.record_every, out / ("trace_" + tc.name + ".csv"));
    }
}

ErrorTrajectory cmd_step_response(const ErrorDynamicsModel& model, int record_every, const fs::path& out) {
    const auto trajectory = simulate_error_dynamics(model, record_every);
    if (out.has_parent_path()) prepare_directory(out.parent_path());
    csv::Writer w(out, "error_trace", kTraceColumns);
    for (const auto& s : trajectory.samples) {
        w.cell(s.t).cell(s.integral).cell(s.e).cell(s.edot).cell(trajectory.diverged ? 1 : 0);
        w.end_row();
    }
    return trajectory;
}

Matrix read_matrix(const fs::path& path) {
    std::istringstream in(csv::read_file(path));
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        std::vector<double> row;
        std::string token;
        while (ls >> token) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(token, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != token.size()) throw InvalidInput("matrix file " + path.string() + ": bad number '" + token + "'");
            row.push_back(v);
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    require(!rows.empty(), "matrix file " + path.string() + " is empty");
    const std::size_t cols = rows.front().size();
    for (const auto& r : rows)
        require(r.size() == cols, "matrix file " + path.string() + " has rows of different lengths");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

ContractionReport cmd_contraction(const fs::path& b_file, const std::optional<fs::path>& e0_file, int iterations,
                                  const fs::path& out) {
    const Matrix b = read_matrix(b_file);
    require(b.rows() == b.cols(), "B must be square, got " + std::to_string(b.rows()) + "x" +
                                      std::to_string(b.cols()));
    require(iterations >= 0, "iterations must be non-negative");
    Vector e0 = Vector::Ones(b.rows());
    if (e0_file) {
        const Matrix raw = read_matrix(*e0_file);
        require(raw.size() == b.rows(), "e0 length does not match B");
        e0 = raw.reshaped();
    }
    const auto report = contraction_analysis(b, e0, iterations);
    if (out.has_parent_path()) prepare_directory(out.parent_path());
    csv::Writer w(out, "contraction", kContractionColumns);
    for (std::size_t k = 0; k < report.error_norm_sequence.size(); ++k) {
        w.cell(static_cast<long long>(k)).cell(report.error_norm_sequence[k]).cell(report.spectral_radius);
        w.end_row();
    }
    return report;
}

}  // namespace aac::cli
