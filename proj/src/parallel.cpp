#include "aac/parallel.hpp"

namespace aac::parallel {

double AxisRange::at(int i) const {
    if (count <= 1) return min;
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
}

std::vector<GainTriple> make_grid(const AxisRange& kp_eff, const AxisRange& kd_eff, const AxisRange& ki) {
    require(kp_eff.count >= 0 && kd_eff.count >= 0 && ki.count >= 0, "negative grid size");
    std::vector<GainTriple> grid;
    grid.reserve(static_cast<std::size_t>(kp_eff.count) * static_cast<std::size_t>(kd_eff.count) *
                 static_cast<std::size_t>(ki.count));
    for (int a = 0; a < kp_eff.count; ++a)
        for (int b = 0; b < kd_eff.count; ++b)
            for (int c = 0; c < ki.count; ++c) grid.push_back({kp_eff.at(a), kd_eff.at(b), ki.at(c)});
    return grid;
}

namespace {

GridRow classify_one(const GainTriple& g) {
    return {g, routh_classify(g.kp_eff, g.kd_eff, g.ki),
            max_real_part(characteristic_roots(g.kp_eff, g.kd_eff, g.ki))};
}

}  // namespace

std::vector<GridRow> classify_grid_serial(std::span<const GainTriple> triples) {
    std::vector<GridRow> rows;
    rows.reserve(triples.size());
    for (const auto& g : triples) rows.push_back(classify_one(g));
    return rows;
}

std::vector<GridRow> classify_grid(std::span<const GainTriple> triples) {
    std::vector<GridRow> rows(triples.size());
    const auto n = static_cast<long>(triples.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = classify_one(triples[static_cast<std::size_t>(i)]);
    return rows;
}

AgreementCount routh_root_agreement(std::span<const GridRow> rows) {
    AgreementCount c;
    for (const auto& r : rows) {
        ++c.checked;
        const bool routh_stable = r.verdict.classification == Stability::Stable;
        const bool roots_stable = r.max_root_real < 0.0;
        if (routh_stable == roots_stable) ++c.agreed;
    }
    return c;
}

}  // namespace aac::parallel
