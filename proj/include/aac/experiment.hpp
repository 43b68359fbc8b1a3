#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aac/config.hpp"
#include "aac/parallel.hpp"
#include "aac/rl.hpp"
#include "aac/stability.hpp"

namespace aac::cli {

namespace fs = std::filesystem;

struct TrainingRun {
    std::unique_ptr<rl::SacAgent> agent;
    std::vector<rl::EpochLog> log;
    rl::EvalMetrics eval;
};

/// Builds the agent for `config`, trains it through the train-time adviser and
/// evaluates it through the eval-time adviser. Everything derives from `seed`.
TrainingRun run_training(const RunConfig& config, std::uint64_t seed);

std::unique_ptr<rl::SacAgent> make_agent(const RunConfig& config, const Env& env, std::uint64_t seed);

/// Seed handed to the evaluation episodes of a run with the given seed.
std::uint64_t evaluation_seed(std::uint64_t run_seed);

void write_training_log(const fs::path& path, const std::vector<rl::EpochLog>& log);
void write_eval_metrics(const fs::path& path, const rl::EvalMetrics& metrics);

inline const std::vector<std::string> kTrainingLogColumns = {
    "epoch",       "mean_return", "median_final_goal_error", "median_tail_goal_error", "success_rate",
    "alpha",       "critic_loss", "policy_loss",             "alpha_loss",             "updates"};
inline const std::vector<std::string> kEvalMetricsColumns = {
    "episodes", "success_rate", "median_final_goal_error", "median_tail_goal_error", "mean_return"};

/// train: writes training_log.csv, eval_metrics.csv, checkpoint.bin and resolved_config.ini under `out`.
/// With `trajectory` set, also writes one evaluation episode's goal error over time.
void cmd_train(const RunConfig& config, const fs::path& out, bool trajectory = false);

/// eval: loads a checkpoint and writes eval_metrics.csv plus the resolved config.
void cmd_eval(const RunConfig& config, const fs::path& checkpoint, const fs::path& out);

struct MatrixCell {
    bool her = false;
    Strategy strategy = Strategy::None;
};

/// The eight cells: the four strategies under SAC, then under SAC+HER.
std::vector<MatrixCell> matrix_cells();
std::string algorithm_name(bool her);

inline const std::vector<std::string> kMatrixColumns = {
    "row_kind",         "algorithm",       "strategy",     "strategy_label",        "seed",
    "status",           "runs_ok",         "success_rate", "median_final_goal_error",
    "median_tail_goal_error", "mean_return", "error"};

/// matrix: every cell for `config.seeds` seeds, written to matrix.csv. Cells that throw are
/// marked failed and the rest still run. Returns the number of failed runs.
int cmd_matrix(const RunConfig& base, const fs::path& out);

struct TraceCase {
    std::string name;
    parallel::GainTriple gains;
};

struct StabilitySpec {
    parallel::AxisRange kp_eff{-5.0, 5.0, 11};
    parallel::AxisRange kd_eff{-5.0, 5.0, 11};
    parallel::AxisRange ki{-5.0, 5.0, 11};
    std::vector<TraceCase> traces;
    double disturbance = 0.5;
    double horizon = 50.0;
    double dt = 1e-3;
    int record_every = 10;
};

/// The three classic cases: decaying, sustained oscillation, divergence.
std::vector<TraceCase> reference_trace_cases();

inline const std::vector<std::string> kStabilityColumns = {"kp_eff", "kd_eff", "ki", "classification",
                                                           "routh_1", "routh_2", "routh_3", "routh_4",
                                                           "max_root_real"};
inline const std::vector<std::string> kTraceColumns = {"t", "integral", "e", "edot", "diverged"};

/// stability: stability_grid.csv plus trace_<name>.csv for each trace case.
void cmd_stability(const StabilitySpec& spec, const fs::path& out);

/// Whitespace-separated rows; every row must have the same length.
Matrix read_matrix(const fs::path& path);

inline const std::vector<std::string> kContractionColumns = {"iteration", "error_norm", "spectral_radius"};

/// contraction: reads B (and e0, defaulting to all ones) and writes contraction.csv.
ContractionReport cmd_contraction(const fs::path& b_file, const std::optional<fs::path>& e0_file, int iterations,
                                  const fs::path& out);

/// step-response: one error-dynamics trace for a plant and PID gains, written to step_response.csv.
ErrorTrajectory cmd_step_response(const ErrorDynamicsModel& model, int record_every, const fs::path& out);

}  // namespace aac::cli
