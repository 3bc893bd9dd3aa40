#include "fracms/metrics.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <ostream>

namespace fracms {

using linalg::Index;
using linalg::Triplet;
using linalg::Vector;

linalg::SparseMatrix averaging_operator(const IntermediateGrid& ig, const FractureMesh& fm) {
    const int nm = ig.fine().cell_count();
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(nm + fm.size()));
    const double w = 1.0 / (ig.ratio_x() * ig.ratio_y());
    for (int i = 0; i < nm; ++i) t.emplace_back(ig.cell_of_fine(i), i, w);
    for (int d = ig.cell_count(); d < ig.dof_count(); ++d) {
        const Continuum& c = ig.continuum_of_dof(d);
        for (int s : c.segments) t.emplace_back(d, nm + s, fm.segments[s].length / c.measure);
    }
    return linalg::from_triplets(ig.dof_count(), nm + fm.size(), t);
}

Vector fine_measures(const FineGrid& grid, const FractureMesh& fm) {
    Vector w(grid.cell_count() + fm.size());
    w.head(grid.cell_count()).setConstant(grid.cell_area());
    for (int s = 0; s < fm.size(); ++s) w[grid.cell_count() + s] = fm.segments[s].length;
    return w;
}

double relative_l2(const Vector& u, const Vector& v, const Vector& weights) {
    if (u.size() != v.size() || (weights.size() != 0 && weights.size() != v.size()))
        throw std::invalid_argument(
            fmt::format("relative_l2: size mismatch ({} vs {}, weights {})", u.size(), v.size(), weights.size()));
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < v.size(); ++i) {
        const double w = weights.size() ? weights[i] : 1.0;
        const double diff = u[i] - v[i];
        num += w * diff * diff;
        den += w * v[i] * v[i];
    }
    if (!(den > 0.0)) throw ZeroReferenceError("relative_l2: reference has zero norm");
    return 100.0 * std::sqrt(num / den);
}

std::vector<double> compare_trajectories(const ErrorContext& ctx, const Trajectory& fine, const Trajectory& candidate,
                                         Level level) {
    if (fine.steps() != candidate.steps())
        throw std::invalid_argument(
            fmt::format("trajectories have {} and {} steps", fine.steps(), candidate.steps()));
    if (std::abs(fine.tau - candidate.tau) > 1e-12 * std::abs(fine.tau))
        throw std::invalid_argument("trajectories use different time steps");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(fine.steps()));
    for (int n = 1; n <= fine.steps(); ++n) {
        const Vector& p = fine.states[static_cast<std::size_t>(n)];
        const Vector& c = candidate.states[static_cast<std::size_t>(n)];
        if (level == Level::intermediate) {
            out.push_back(relative_l2(c, Vector(ctx.averaging * p)));
        } else {
            out.push_back(relative_l2(Vector(ctx.projection.transpose() * c), p, ctx.fine_weights));
        }
    }
    return out;
}

void write_error_csv(std::ostream& out, const ErrorReport& report) {
    out << "step,time,e_FI_I,e_FI_F,e_IC_I,e_IC_F\n";
    auto cell = [](const std::optional<std::vector<double>>& col, int k) {
        return col ? fmt::format("{:.17g}", (*col)[static_cast<std::size_t>(k)]) : std::string{};
    };
    for (int k = 0; k < report.steps(); ++k) {
        fmt::print(out, "{},{:.17g},{},{},{},{}\n", k + 1, report.time[static_cast<std::size_t>(k)],
                   cell(report.fi_intermediate, k), cell(report.fi_fine, k), cell(report.ic_intermediate, k),
                   cell(report.ic_fine, k));
    }
}

} // namespace fracms
