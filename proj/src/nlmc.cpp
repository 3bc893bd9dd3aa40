#include "fracms/nlmc.hpp"

#include "fracms/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <stdexcept>

namespace fracms {

using linalg::Index;
using linalg::Triplet;
using linalg::Vector;

int ConstraintSet::row_of(int dof) const {
    const auto it = std::lower_bound(dofs.begin(), dofs.end(), dof);
    if (it == dofs.end() || *it != dof) throw std::out_of_range(fmt::format("dof {} is not constrained here", dof));
    return static_cast<int>(it - dofs.begin());
}

namespace {

std::vector<int> region_support(const OversampleRegion& region, int matrix_dofs) {
    std::vector<int> support = region.fine_cells;
    support.reserve(support.size() + region.segments.size());
    for (int s : region.segments) support.push_back(matrix_dofs + s);
    return support;
}

std::vector<Index> as_index(const std::vector<int>& v) { return {v.begin(), v.end()}; }

} // namespace

ConstraintSet build_constraints(const OversampleRegion& region, const IntermediateGrid& ig, const FractureMesh& fm,
                                const std::vector<int>& support, int matrix_dofs) {
    auto local = [&support](int global) {
        const auto it = std::lower_bound(support.begin(), support.end(), global);
        if (it == support.end() || *it != global)
            throw std::logic_error(fmt::format("fine dof {} missing from oversampled region", global));
        return static_cast<Index>(it - support.begin());
    };

    ConstraintSet cs;
    for (int cell : region.cells) cs.dofs.push_back(cell);
    for (int cell : region.cells)
        for (int l = 1; l <= ig.continuum_count(cell); ++l) cs.dofs.push_back(ig.dof(cell, l));
    std::sort(cs.dofs.begin(), cs.dofs.end());

    std::vector<Triplet> t;
    const double fine_weight = 1.0 / (ig.ratio_x() * ig.ratio_y());
    for (std::size_t r = 0; r < cs.dofs.size(); ++r) {
        const int dof = cs.dofs[r];
        if (ig.is_matrix_dof(dof)) {
            for (int fc : ig.fine_cells(dof)) t.emplace_back(static_cast<Index>(r), local(fc), fine_weight);
        } else {
            const Continuum& c = ig.continuum_of_dof(dof);
            for (int s : c.segments)
                t.emplace_back(static_cast<Index>(r), local(matrix_dofs + s), fm.segments[s].length / c.measure);
        }
    }
    cs.functionals =
        linalg::from_triplets(static_cast<Index>(cs.dofs.size()), static_cast<Index>(support.size()), t);
    return cs;
}

LocalBasisProblem::LocalBasisProblem(const OversampleRegion& region, const FineSystem& sys, const IntermediateGrid& ig,
                                     const FractureMesh& fm)
    : target_cell_(region.target),
      support_(region_support(region, sys.matrix_dofs)),
      stiffness_(linalg::principal_submatrix(sys.stiffness, as_index(support_))),
      constraints_(build_constraints(region, ig, fm, support_, sys.matrix_dofs)),
      solver_(stiffness_, constraints_.functionals) {
    for (int l = 0; l <= ig.continuum_count(target_cell_); ++l) target_dofs_.push_back(ig.dof(target_cell_, l));
}

NlmcBasis LocalBasisProblem::solve(BasisTarget target) const {
    if (target.cell != target_cell_ || target.continuum < 0 ||
        target.continuum >= static_cast<int>(target_dofs_.size()))
        throw std::invalid_argument(
            fmt::format("continuum {} of cell {} has no basis in this region", target.continuum, target.cell));
    NlmcBasis basis;
    basis.target = target;
    basis.dof = target_dofs_[static_cast<std::size_t>(target.continuum)];
    basis.support = support_;
    Vector g = Vector::Zero(static_cast<Index>(constraints_.dofs.size()));
    g[constraints_.row_of(basis.dof)] = 1.0;
    basis.values = solver_.solve(g).primal;
    basis.constraint_residual = (constraints_.functionals * basis.values - g).cwiseAbs().maxCoeff();
    return basis;
}

std::vector<NlmcBasis> LocalBasisProblem::solve_all() const {
    std::vector<NlmcBasis> out;
    for (int l = 0; l < static_cast<int>(target_dofs_.size()); ++l) out.push_back(solve({target_cell_, l}));
    return out;
}

NlmcBasis solve_local_basis(const OversampleRegion& region, BasisTarget target, const FineSystem& sys,
                            const IntermediateGrid& ig, const FractureMesh& fm) {
    return LocalBasisProblem(region, sys, ig, fm).solve(target);
}

std::vector<NlmcBasis> compute_bases(const IntermediateGrid& ig, const FractureMesh& fm, const FineSystem& sys,
                                     int layers, int threads) {
    std::vector<std::vector<NlmcBasis>> per_cell(static_cast<std::size_t>(ig.cell_count()));
    parallel_for(ig.cell_count(), threads, [&](int cell) {
        const OversampleRegion region = oversample(ig, fm, cell, layers);
        per_cell[static_cast<std::size_t>(cell)] = LocalBasisProblem(region, sys, ig, fm).solve_all();
    });
    std::vector<NlmcBasis> bases(static_cast<std::size_t>(ig.dof_count()));
    for (auto& cell_bases : per_cell)
        for (auto& b : cell_bases) bases[static_cast<std::size_t>(b.dof)] = std::move(b);
    return bases;
}

linalg::SparseMatrix build_projection(std::span<const NlmcBasis> bases, const IntermediateGrid& ig, int fine_dofs) {
    std::vector<char> seen(static_cast<std::size_t>(ig.dof_count()), 0);
    std::size_t nnz = 0;
    for (const auto& b : bases) nnz += b.support.size();
    std::vector<Triplet> t;
    t.reserve(nnz);
    for (const auto& b : bases) {
        if (b.dof < 0 || b.dof >= ig.dof_count())
            throw std::invalid_argument(fmt::format("basis owner dof {} out of range", b.dof));
        if (seen[static_cast<std::size_t>(b.dof)]++)
            throw std::invalid_argument(fmt::format("duplicate basis for dof {}", b.dof));
        for (std::size_t k = 0; k < b.support.size(); ++k)
            if (b.values[static_cast<Index>(k)] != 0.0) t.emplace_back(b.dof, b.support[k], b.values[static_cast<Index>(k)]);
    }
    for (int d = 0; d < ig.dof_count(); ++d) {
        if (!seen[static_cast<std::size_t>(d)]) {
            const int cell = ig.cell_of_dof(d);
            throw std::invalid_argument(fmt::format("missing basis for dof {} (cell {}, {} continuum)", d, cell,
                                                    ig.is_matrix_dof(d) ? "matrix" : "fracture"));
        }
    }
    return linalg::from_triplets(ig.dof_count(), fine_dofs, t);
}

linalg::SparseMatrix remove_row_sums(const linalg::SparseMatrix& a) {
    std::vector<linalg::Triplet> t;
    t.reserve(static_cast<std::size_t>(a.nonZeros() + a.rows()));
    for (linalg::Index r = 0; r < a.outerSize(); ++r) {
        for (linalg::SparseMatrix::InnerIterator it(a, r); it; ++it)
            if (it.col() != r) t.emplace_back(r, it.col(), it.value());
        double off = 0.0;
        for (linalg::SparseMatrix::InnerIterator it(a, r); it; ++it)
            if (it.col() != r) off += it.value();
        t.emplace_back(r, r, -off);
    }
    return linalg::from_triplets(a.rows(), a.cols(), t);
}

NlmcModel upscale(linalg::SparseMatrix projection, const FineSystem& sys, const IntermediateGrid& ig,
                  const PhysicalParams& params, StiffnessForm form) {
    if (projection.rows() != ig.dof_count() || projection.cols() != sys.size())
        throw std::invalid_argument(fmt::format("projection is {}x{}, expected {}x{}", projection.rows(),
                                                projection.cols(), ig.dof_count(), sys.size()));
    NlmcModel m;
    m.stiffness = linalg::triple_product(projection, sys.stiffness);
    m.projection = std::move(projection);
    if (form == StiffnessForm::conservative) {
        const Vector defect = m.stiffness * Vector::Ones(m.stiffness.cols());
        m.row_sum_defect = defect.lpNorm<Eigen::Infinity>() / std::max(linalg::inf_norm(m.stiffness), 1e-300);
        m.stiffness = remove_row_sums(m.stiffness);
    }

    const int n = ig.dof_count();
    m.mass.resize(n);
    for (int d = 0; d < n; ++d) m.mass[d] = (ig.is_matrix_dof(d) ? params.a_m() : params.a_f()) * ig.measure(d);

    m.load = Vector::Zero(n);
    for (int i = 0; i < sys.matrix_dofs; ++i) m.load[ig.cell_of_fine(i)] += sys.load[i];
    const auto& seg_dof = ig.segment_dof();
    for (int s = 0; s < sys.fracture_dofs; ++s) {
        const double f = sys.load[sys.matrix_dofs + s];
        if (f == 0.0) continue;
        m.load[seg_dof[static_cast<std::size_t>(s)]] += f;
    }
    return m;
}

NlmcModel build_nlmc(const IntermediateGrid& ig, const FractureMesh& fm, const FineSystem& sys,
                     const PhysicalParams& params, int layers, int threads, StiffnessForm form) {
    const auto bases = compute_bases(ig, fm, sys, layers, threads);
    NlmcModel m = upscale(build_projection(bases, ig, sys.size()), sys, ig, params, form);
    m.layers = layers;
    for (const auto& b : bases) m.max_constraint_residual = std::max(m.max_constraint_residual, b.constraint_residual);
    return m;
}

Trajectory simulate_intermediate(const NlmcModel& model, const Vector& p0, double tau, int n_steps) {
    return ImplicitEuler(model.mass, model.stiffness, model.load, tau).run(p0, n_steps);
}

Vector downscale(const NlmcModel& model, const Vector& p_bar) {
    if (p_bar.size() != model.projection.rows())
        throw std::invalid_argument(
            fmt::format("downscale: state has {} entries, model has {} dofs", p_bar.size(), model.projection.rows()));
    return model.projection.transpose() * p_bar;
}

} // namespace fracms
