#include <doctest.h>

#include <fstream>

#include "aac/csv.hpp"
#include "aac/experiment.hpp"

using namespace aac;
using namespace aac::cli;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "aac_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Small enough to train in well under a second.
RunConfig tiny(EnvKind env, Strategy strategy) {
    auto c = RunConfig::defaults(env, false);
    c.strategy = strategy;
    c.env.max_steps = 12;
    c.epochs = 2;
    c.episodes_per_epoch = 2;
    c.eval_episodes = 2;
    c.seeds = 1;
    c.sac.hidden_width = 8;
    c.sac.batch_size = 8;
    c.sac.min_buffer = 10;
    c.integral_clamp = make_env(c.env)->goal_half_width() * 10.0;
    return c;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("stability writes the grid and the three reference traces") {
    const auto out = fresh_dir("stability");
    StabilitySpec spec;
    spec.kp_eff = {-1, 3, 5};
    spec.kd_eff = {-1, 3, 5};
    spec.ki = {-1, 3, 5};
    spec.traces = reference_trace_cases();
    spec.horizon = 5.0;
    cmd_stability(spec, out);

    const auto grid = csv::read(out / "stability_grid.csv", "stability_grid", kStabilityColumns);
    REQUIRE(grid.rows.size() == 125);
    for (std::size_t i = 0; i < grid.rows.size(); ++i) {
        const double root = grid.number(i, "max_root_real");
        const auto& cls = grid.text(i, "classification");
        if (cls == "Stable") CHECK(root < 0.0);
        if (cls == "Unstable") CHECK(root > 0.0);
        if (cls == "Marginal") CHECK(root > -1e-6);
    }
    for (const char* name : {"asymptotic", "marginal", "unstable"}) {
        const auto trace = csv::read(out / (std::string("trace_") + name + ".csv"), "error_trace", kTraceColumns);
        CHECK(trace.rows.size() > 10);
    }
}

TEST_CASE("an empty axis gives a header-only grid") {
    const auto out = fresh_dir("empty_grid");
    StabilitySpec spec;
    spec.ki = {0, 1, 0};
    cmd_stability(spec, out);
    CHECK(csv::read_file(out / "stability_grid.csv") ==
          "# aac-csv v1 stability_grid\nkp_eff,kd_eff,ki,classification,routh_1,routh_2,routh_3,routh_4,max_root_real\n");
}

TEST_CASE("contraction from files") {
    const auto dir = fresh_dir("contraction");
    {
        std::ofstream b(dir / "b.txt");
        b << "# plant\n0.5 0\n0 0.5\n";
        std::ofstream e(dir / "e0.txt");
        e << "0.6\n0.8\n";
    }
    const auto report = cmd_contraction(dir / "b.txt", dir / "e0.txt", 4, dir / "c.csv");
    CHECK(report.spectral_radius == doctest::Approx(0.5));
    const auto t = csv::read(dir / "c.csv", "contraction", kContractionColumns);
    REQUIRE(t.rows.size() == 5);
    CHECK(t.number(4, "error_norm") == doctest::Approx(0.0625));

    {
        std::ofstream b(dir / "wide.txt");
        b << "1 2 3\n4 5 6\n";
        std::ofstream r(dir / "ragged.txt");
        r << "1 2\n3\n";
    }
    CHECK_THROWS_AS(cmd_contraction(dir / "wide.txt", std::nullopt, 3, dir / "w.csv"), InvalidInput);
    CHECK_THROWS_AS(read_matrix(dir / "ragged.txt"), InvalidInput);
}

TEST_CASE("training twice with one seed writes identical files") {
    const auto a = fresh_dir("train_a");
    const auto b = fresh_dir("train_b");
    const auto c = tiny(EnvKind::PointMass, Strategy::TrainEvalAdviser);
    cmd_train(c, a, true);
    cmd_train(c, b, true);
    for (const char* f : {"training_log.csv", "eval_metrics.csv", "resolved_config.ini", "trajectory.csv",
                          "checkpoint.bin"})
        CHECK_MESSAGE(csv::read_file(a / f) == csv::read_file(b / f), f);
    csv::read(a / "training_log.csv", "training_log", kTrainingLogColumns);
    csv::read(a / "eval_metrics.csv", "eval_metrics", kEvalMetricsColumns);

    // Re-running from the echoed configuration reproduces the run.
    ConfigSources again;
    again.use_environment = false;
    again.file = a / "resolved_config.ini";
    const auto echoed = resolve_config(again);
    const auto r = fresh_dir("train_echo");
    cmd_train(echoed, r);
    CHECK(csv::read_file(r / "eval_metrics.csv") == csv::read_file(a / "eval_metrics.csv"));
    CHECK(csv::read_file(r / "training_log.csv") == csv::read_file(a / "training_log.csv"));

    // The checkpoint evaluates to the same metrics.
    const auto e = fresh_dir("eval");
    cmd_eval(c, a / "checkpoint.bin", e);
    CHECK(csv::read_file(e / "eval_metrics.csv") == csv::read_file(a / "eval_metrics.csv"));
}

TEST_CASE("matrix covers every cell and summarizes each") {
    const auto out = fresh_dir("matrix");
    auto c = tiny(EnvKind::PlanarArm, Strategy::TrainEvalAdviser);
    c.seeds = 2;
    CHECK(cmd_matrix(c, out) == 0);
    const auto t = csv::read(out / "matrix.csv", "matrix", kMatrixColumns);
    REQUIRE(t.rows.size() == 8 * 2 + 8);
    int summaries = 0;
    bool found = false;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (t.text(i, "row_kind") != "summary") continue;
        ++summaries;
        CHECK(t.text(i, "status") == "ok");
        CHECK(t.text(i, "runs_ok") == "2");
        if (t.text(i, "algorithm") == "sac_her" && t.text(i, "strategy") == "train_eval_adviser") {
            found = true;
            CHECK(t.text(i, "strategy_label") == "Train + evaluate adviser");
        }
    }
    CHECK(summaries == 8);
    CHECK(found);
    CHECK(fs::exists(out / "resolved_config.ini"));
}

}
