#pragma once

#include <span>
#include <vector>

#include "aac/stability.hpp"

namespace aac::parallel {

struct GainTriple {
    double kp_eff = 0.0;
    double kd_eff = 0.0;
    double ki = 0.0;
};

struct GridRow {
    GainTriple gains;
    StabilityVerdict verdict;
    double max_root_real = 0.0;
};

struct AxisRange {
    double min = 0.0;
    double max = 0.0;
    int count = 0;

    double at(int i) const;
};

/// Cartesian grid, kp' slowest-varying, ki fastest.
std::vector<GainTriple> make_grid(const AxisRange& kp_eff, const AxisRange& kd_eff, const AxisRange& ki);

/// Routh verdict plus the companion-matrix root oracle for every triple.
std::vector<GridRow> classify_grid_serial(std::span<const GainTriple> triples);
/// OpenMP version of classify_grid_serial; identical output.
std::vector<GridRow> classify_grid(std::span<const GainTriple> triples);

struct AgreementCount {
    long checked = 0;
    long agreed = 0;
};

/// Counts rows where (Routh says Stable) == (all roots strictly in the left half-plane).
AgreementCount routh_root_agreement(std::span<const GridRow> rows);

}  // namespace aac::parallel
