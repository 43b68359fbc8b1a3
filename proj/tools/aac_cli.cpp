// aac: command-line front end for training, evaluation, the strategy matrix and
// the control-theoretic analyses.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aac/config.hpp"
#include "aac/experiment.hpp"

namespace {

struct CommonFlags {
    std::optional<std::string> config_file;
    std::optional<std::string> env;
    std::optional<std::string> strategy;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    std::string out = "out";
    bool paper_scale = false;
    std::vector<std::string> set;  // key=value
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_file, "Configuration file ([section] key = value)");
    cmd->add_option("--env", f.env, "point_mass | planar_arm | quad_vel | line1d");
    cmd->add_option("--strategy", f.strategy, "none | eval_adviser | train_adviser | train_eval_adviser");
    cmd->add_option("--seed", f.seed, "Run seed");
    cmd->add_option("--epochs", f.epochs, "Training epochs");
    cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
    cmd->add_flag("--paper-scale", f.paper_scale, "Full-scale defaults instead of desk-scale");
    cmd->add_option("--set", f.set, "Override any config key, e.g. --set sac.hidden_width=64");
}

aac::RunConfig resolve(const CommonFlags& f) {
    aac::ConfigSources sources;
    if (f.config_file) sources.file = *f.config_file;
    auto& o = sources.overrides;
    if (f.env) o["env.name"] = *f.env;
    if (f.strategy) o["run.strategy"] = *f.strategy;
    if (f.seed) o["run.seed"] = std::to_string(*f.seed);
    if (f.epochs) o["run.epochs"] = std::to_string(*f.epochs);
    if (f.paper_scale) o["run.paper_scale"] = "true";
    for (const auto& kv : f.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw aac::InvalidInput("--set expects key=value, got '" + kv + "'");
        o[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return aac::resolve_config(sources);
}

aac::parallel::AxisRange parse_axis(const std::vector<double>& v, const char* name) {
    if (v.size() != 3 || v[2] < 0 || v[2] != static_cast<int>(v[2]))
        throw aac::InvalidInput(std::string("--") + name + " expects MIN MAX COUNT with COUNT a non-negative integer");
    return {v[0], v[1], static_cast<int>(v[2])};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adviser-augmented goal-conditioned SAC: experiments and stability analysis"};
    app.require_subcommand(1);

    CommonFlags train_flags, eval_flags, matrix_flags;
    bool trajectory = false;
    auto* train = app.add_subcommand("train", "Train, evaluate and write CSV metrics plus a checkpoint");
    add_common(train, train_flags);
    train->add_flag("--trajectory", trajectory, "Also write one evaluation episode's goal error over time");

    std::string checkpoint;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    add_common(eval, eval_flags);
    eval->add_option("--checkpoint", checkpoint, "Checkpoint written by train")->required();

    std::optional<int> seeds;
    auto* matrix = app.add_subcommand("matrix", "All four strategies under SAC and SAC+HER across seeds");
    add_common(matrix, matrix_flags);
    matrix->add_option("--seeds", seeds, "Seeds per cell");

    std::vector<double> kp_axis{-5, 5, 11}, kd_axis{-5, 5, 11}, ki_axis{-5, 5, 11};
    std::string stability_out = "out";
    std::string traces = "reference";
    aac::cli::StabilitySpec spec;
    auto* stability = app.add_subcommand("stability", "Routh-Hurwitz grid with root cross-check and error traces");
    stability->add_option("--kp", kp_axis, "kp' axis: MIN MAX COUNT")->expected(3);
    stability->add_option("--kd", kd_axis, "kd' axis: MIN MAX COUNT")->expected(3);
    stability->add_option("--ki", ki_axis, "ki axis: MIN MAX COUNT")->expected(3);
    stability->add_option("--traces", traces, "reference (three named cases) or none")
        ->check(CLI::IsMember({"reference", "none"}));
    stability->add_option("--disturbance", spec.disturbance, "Constant disturbance for the traces");
    stability->add_option("--horizon", spec.horizon, "Trace horizon in seconds");
    stability->add_option("--out", stability_out, "Output directory")->capture_default_str();

    std::string b_file, contraction_out = "out/contraction.csv";
    std::optional<std::string> e0_file;
    int iterations = 20;
    auto* contraction = app.add_subcommand("contraction", "Iterate e <- (I - B) e and report the spectral radius");
    contraction->add_option("--b", b_file, "Whitespace-separated square matrix B")->required();
    contraction->add_option("--e0", e0_file, "Initial error vector (defaults to all ones)");
    contraction->add_option("--iterations", iterations, "Iterations")->capture_default_str();
    contraction->add_option("--out", contraction_out, "Output CSV")->capture_default_str();

    aac::ErrorDynamicsModel model;
    model.gains = {1.3, 0.1, 0.1};
    std::string reading = "canonical", step_out = "out/step_response.csv";
    int record_every = 10;
    auto* step = app.add_subcommand("step-response", "Closed-loop error trace for one set of PID gains");
    step->add_option("--kp", model.gains.kp, "Proportional gain")->capture_default_str();
    step->add_option("--ki", model.gains.ki, "Integral gain")->capture_default_str();
    step->add_option("--kd", model.gains.kd, "Derivative gain")->capture_default_str();
    step->add_option("--a0", model.a0, "Plant coefficient on e");
    step->add_option("--a1", model.a1, "Plant coefficient on e_dot");
    step->add_option("--disturbance", model.disturbance, "Constant disturbance");
    step->add_option("--e0", model.e0, "Initial error")->capture_default_str();
    step->add_option("--horizon", model.horizon, "Horizon in seconds")->capture_default_str();
    step->add_option("--dt", model.dt, "RK4 step")->capture_default_str();
    step->add_option("--record-every", record_every, "Keep every n-th step")->capture_default_str();
    step->add_option("--reading", reading, "canonical or as_printed state-matrix reading")
        ->check(CLI::IsMember({"canonical", "as_printed"}));
    step->add_option("--out", step_out, "Output CSV")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*train) {
            aac::cli::cmd_train(resolve(train_flags), train_flags.out, trajectory);
        } else if (*eval) {
            aac::cli::cmd_eval(resolve(eval_flags), checkpoint, eval_flags.out);
        } else if (*matrix) {
            auto config = resolve(matrix_flags);
            if (seeds) {
                config.seeds = *seeds;
                aac::validate(config);
            }
            const int failed = aac::cli::cmd_matrix(config, matrix_flags.out);
            if (failed > 0) {
                std::cerr << "matrix: " << failed << " of " << 8 * config.seeds << " runs failed\n";
                if (failed == 8 * config.seeds) return 1;
            }
        } else if (*stability) {
            spec.kp_eff = parse_axis(kp_axis, "kp");
            spec.kd_eff = parse_axis(kd_axis, "kd");
            spec.ki = parse_axis(ki_axis, "ki");
            if (traces == "reference") spec.traces = aac::cli::reference_trace_cases();
            aac::cli::cmd_stability(spec, stability_out);
        } else if (*contraction) {
            std::optional<std::filesystem::path> e0;
            if (e0_file) e0 = *e0_file;
            const auto report = aac::cli::cmd_contraction(b_file, e0, iterations, contraction_out);
            std::cout << "spectral_radius " << report.spectral_radius << '\n';
        } else if (*step) {
            model.reading = reading == "as_printed" ? aac::StateMatrixReading::AsPrinted
                                                    : aac::StateMatrixReading::Canonical;
            const auto trajectory_result = aac::cli::cmd_step_response(model, record_every, step_out);
            if (trajectory_result.diverged) std::cout << "diverged\n";
        }
    } catch (const aac::InvalidInput& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
