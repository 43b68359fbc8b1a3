#pragma once

#include <array>
#include <complex>
#include <string_view>
#include <vector>

#include "aac/adviser.hpp"
#include "aac/core.hpp"

namespace aac {

enum class Stability { Stable, Marginal, Unstable };

std::string_view to_string(Stability s);

/// Routh band: first-column entries with |x| <= this are treated as zero.
inline constexpr double kRouthZeroBand = 1e-12;

struct StabilityVerdict {
    Stability classification = Stability::Unstable;
    /// Rows s^3, s^2, s^1, s^0 of the Routh array's first column.
    std::array<double, 4> routh_first_column{};
};

/// Routh-Hurwitz test of s^3 + kd' s^2 + kp' s + ki.
StabilityVerdict routh_classify(double kp_eff, double kd_eff, double ki);

using Roots3 = std::array<std::complex<double>, 3>;

/// Eigenvalues of the companion matrix of s^3 + kd' s^2 + kp' s + ki.
Roots3 characteristic_roots(double kp_eff, double kd_eff, double ki);

double max_real_part(const Roots3& roots);

/// How the first row of the per-dimension state matrix is read.
/// Canonical: e' = e_dot (integrator chain). AsPrinted: e' = e.
enum class StateMatrixReading { Canonical, AsPrinted };

/// Second-order error plant e'' = a0*e + a1*e' + eps + d closed by the PID adviser.
struct ErrorDynamicsModel {
    double a0 = 0.0;
    double a1 = 0.0;
    AdviserGains gains;
    double disturbance = 0.0;
    double dt = 1e-3;
    double horizon = 50.0;
    double e0 = 1.0;
    double edot0 = 0.0;
    StateMatrixReading reading = StateMatrixReading::Canonical;

    double kp_eff() const { return gains.kp - a0; }
    double kd_eff() const { return gains.kd - a1; }

    /// Plant with a0 = a1 = 0, so the gains are the effective gains.
    static ErrorDynamicsModel from_effective(double kp_eff, double kd_eff, double ki, double disturbance);
};

struct ErrorSample {
    double t;
    double integral;
    double e;
    double edot;
};

struct ErrorTrajectory {
    std::vector<ErrorSample> samples;
    bool diverged = false;
};

inline constexpr double kDivergenceLimit = 1e6;

/// Fixed-step RK4 over the state (integral of e, e, e_dot). Records every
/// `record_every`-th step plus the initial state; stops early on divergence.
ErrorTrajectory simulate_error_dynamics(const ErrorDynamicsModel& model, int record_every = 1);

struct ContractionReport {
    Matrix b_matrix;
    double spectral_radius = 0.0;
    std::vector<double> error_norm_sequence;
};

/// Iterates e_{k+1} = (I - B) e_k and records ||e_k||_2 for k = 0..iterations.
ContractionReport contraction_analysis(const Matrix& b, const Vector& e0, int iterations);

double spectral_radius(const Matrix& m);

/// Long-horizon tail average of e under a constant disturbance, starting at rest.
/// Accepts Stable gains, and the PD limit ki = 0 with kp', kd' > 0.
double closed_loop_steady_state(double kp_eff, double kd_eff, double ki, double d0);

}  // namespace aac
