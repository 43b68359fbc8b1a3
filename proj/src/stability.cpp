#include "aac/stability.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace aac {

std::string_view to_string(Stability s) {
    switch (s) {
    case Stability::Stable: return "Stable";
    case Stability::Marginal: return "Marginal";
    case Stability::Unstable: return "Unstable";
    }
    return "Unknown";
}

StabilityVerdict routh_classify(double kp_eff, double kd_eff, double ki) {
    StabilityVerdict v;
    auto& col = v.routh_first_column;
    col[0] = 1.0;
    col[1] = kd_eff;
    // s^1 row is undefined when the s^2 pivot vanishes; record it as a zero entry.
    col[2] = std::abs(kd_eff) > kRouthZeroBand ? (kp_eff * kd_eff - ki) / kd_eff : 0.0;
    col[3] = ki;

    const bool any_negative = std::any_of(col.begin(), col.end(), [](double x) { return x < -kRouthZeroBand; });
    const bool any_zero = std::any_of(col.begin(), col.end(), [](double x) { return std::abs(x) <= kRouthZeroBand; });
    if (any_negative)
        v.classification = Stability::Unstable;
    else if (any_zero)
        v.classification = Stability::Marginal;
    else
        v.classification = Stability::Stable;
    return v;
}

Roots3 characteristic_roots(double kp_eff, double kd_eff, double ki) {
    Eigen::Matrix3d companion;
    companion << -kd_eff, -kp_eff, -ki,
                 1.0, 0.0, 0.0,
                 0.0, 1.0, 0.0;
    Eigen::EigenSolver<Eigen::Matrix3d> solver(companion, false);
    const auto& ev = solver.eigenvalues();
    return {ev[0], ev[1], ev[2]};
}

double max_real_part(const Roots3& roots) {
    double m = roots[0].real();
    for (const auto& r : roots) m = std::max(m, r.real());
    return m;
}

ErrorDynamicsModel ErrorDynamicsModel::from_effective(double kp_eff, double kd_eff, double ki, double disturbance) {
    ErrorDynamicsModel m;
    m.gains = {kp_eff, ki, kd_eff};
    m.disturbance = disturbance;
    return m;
}

namespace {

using State = Eigen::Vector3d;  // (integral, e, e_dot)

State derivative(const ErrorDynamicsModel& m, const State& x) {
    const double integral = x[0], e = x[1], edot = x[2];
    const auto& g = m.gains;
    const double epsilon = -g.kp * e - g.ki * integral - g.kd * edot;
    const double first = m.reading == StateMatrixReading::Canonical ? edot : e;
    return {e, first, m.a0 * e + m.a1 * edot + epsilon + m.disturbance};
}

}  // namespace

ErrorTrajectory simulate_error_dynamics(const ErrorDynamicsModel& model, int record_every) {
    require(model.dt > 0.0, "dt must be positive");
    require(model.horizon >= model.dt, "horizon must be at least one step");
    require(record_every >= 1, "record stride must be positive");

    ErrorTrajectory out;
    const auto steps = static_cast<long>(std::llround(model.horizon / model.dt));
    out.samples.reserve(static_cast<std::size_t>(steps / record_every + 2));

    State x{0.0, model.e0, model.edot0};
    const double h = model.dt;
    out.samples.push_back({0.0, x[0], x[1], x[2]});
    for (long k = 1; k <= steps; ++k) {
        const State k1 = derivative(model, x);
        const State k2 = derivative(model, x + 0.5 * h * k1);
        const State k3 = derivative(model, x + 0.5 * h * k2);
        const State k4 = derivative(model, x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        const double t = static_cast<double>(k) * h;
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceLimit) {
            out.diverged = true;
            out.samples.push_back({t, x[0], x[1], x[2]});
            break;
        }
        if (k % record_every == 0 || k == steps) out.samples.push_back({t, x[0], x[1], x[2]});
    }
    return out;
}

double spectral_radius(const Matrix& m) {
    require(m.rows() == m.cols(), "spectral radius needs a square matrix");
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> solver(m, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

ContractionReport contraction_analysis(const Matrix& b, const Vector& e0, int iterations) {
    require(b.rows() == b.cols(), "B must be square");
    require(b.rows() == e0.size(), "B and e0 dimensions differ");
    require(iterations >= 0, "iteration count must be non-negative");

    ContractionReport report;
    report.b_matrix = b;
    const Matrix step = Matrix::Identity(b.rows(), b.cols()) - b;
    report.spectral_radius = spectral_radius(step);

    Vector e = e0;
    report.error_norm_sequence.reserve(static_cast<std::size_t>(iterations) + 1);
    report.error_norm_sequence.push_back(e.norm());
    for (int k = 0; k < iterations; ++k) {
        e = step * e;
        report.error_norm_sequence.push_back(e.norm());
    }
    return report;
}

double closed_loop_steady_state(double kp_eff, double kd_eff, double ki, double d0) {
    const auto verdict = routh_classify(kp_eff, kd_eff, ki);
    const bool pd_limit = ki == 0.0 && kp_eff > kRouthZeroBand && kd_eff > kRouthZeroBand;
    require(verdict.classification == Stability::Stable || pd_limit,
            "steady state requested for gains that are not Stable");

    // With ki = 0 the integral state decouples; the (e, e_dot) subsystem is s^2 + kd' s + kp'.
    double slowest;
    if (pd_limit) {
        const std::complex<double> disc = std::sqrt(std::complex<double>(kd_eff * kd_eff - 4.0 * kp_eff));
        slowest = std::max(((-kd_eff + disc) / 2.0).real(), ((-kd_eff - disc) / 2.0).real());
    } else {
        slowest = max_real_part(characteristic_roots(kp_eff, kd_eff, ki));
    }
    // Enough time constants for the slowest mode to fall far below the integrator error.
    const double horizon = std::clamp(40.0 / std::abs(slowest), 50.0, 5000.0);

    auto model = ErrorDynamicsModel::from_effective(kp_eff, kd_eff, ki, d0);
    model.e0 = 0.0;
    model.horizon = horizon;
    const auto traj = simulate_error_dynamics(model, 10);
    require(!traj.diverged, "error dynamics diverged");

    const double tail_start = 0.9 * horizon;
    double sum = 0.0;
    long n = 0;
    for (const auto& s : traj.samples) {
        if (s.t >= tail_start) {
            sum += s.e;
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : traj.samples.back().e;
}

}  // namespace aac
