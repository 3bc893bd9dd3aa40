#include "fracms/gmsfem.hpp"

#include "fracms/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <stdexcept>

namespace fracms {

using linalg::DenseMatrix;
using linalg::Index;
using linalg::Triplet;
using linalg::Vector;

Vector spectral_weights(const IntermediateGrid& ig, const PhysicalParams& params) {
    Vector s(ig.dof_count());
    for (int d = 0; d < ig.dof_count(); ++d) s[d] = (ig.is_matrix_dof(d) ? params.b_m() : params.b_f()) * ig.measure(d);
    return s;
}

std::vector<int> neighborhood_dofs(const CoarseGrid& cg, const IntermediateGrid& ig, int vertex) {
    if (vertex < 0 || vertex >= cg.vertex_count())
        throw std::out_of_range(fmt::format("vertex {} outside [0, {})", vertex, cg.vertex_count()));
    std::vector<int> dofs;
    for (int cell : cg.neighborhood_cells(vertex)) {
        dofs.push_back(cell);
        for (int l = 1; l <= ig.continuum_count(cell); ++l) dofs.push_back(ig.dof(cell, l));
    }
    std::sort(dofs.begin(), dofs.end());
    return dofs;
}

std::vector<Neighborhood> partition_of_unity(const CoarseGrid& cg, const IntermediateGrid& ig) {
    std::vector<Neighborhood> out(static_cast<std::size_t>(cg.vertex_count()));
    for (int v = 0; v < cg.vertex_count(); ++v) {
        auto& nb = out[static_cast<std::size_t>(v)];
        nb.vertex = v;
        nb.dofs = neighborhood_dofs(cg, ig, v);
        nb.weights.resize(static_cast<Index>(nb.dofs.size()));
        for (std::size_t k = 0; k < nb.dofs.size(); ++k)
            nb.weights[static_cast<Index>(k)] = cg.hat(v, ig.anchor(nb.dofs[k]));
    }
    return out;
}

LocalMatrices restrict_to(const linalg::SparseMatrix& stiffness, const Vector& spectral, std::span<const int> dofs,
                          LocalBoundary boundary) {
    if (dofs.empty()) throw std::invalid_argument("restrict_to: empty neighbourhood");
    LocalMatrices local;
    local.dofs.assign(dofs.begin(), dofs.end());
    const std::vector<Index> idx(dofs.begin(), dofs.end());
    auto sub = linalg::principal_submatrix(stiffness, idx);
    if (boundary == LocalBoundary::no_flux) sub = remove_row_sums(sub);
    local.stiffness = DenseMatrix(sub);
    local.constant_kernel = boundary == LocalBoundary::no_flux;
    local.spectral.resize(static_cast<Index>(dofs.size()));
    for (std::size_t k = 0; k < dofs.size(); ++k) local.spectral[static_cast<Index>(k)] = spectral[dofs[k]];
    return local;
}

NeighborhoodEigenBasis solve_spectral(const LocalMatrices& local, int count) {
    const auto pairs =
        local.constant_kernel
            ? linalg::sym_gen_eig(local.stiffness, local.spectral, Vector::Ones(local.spectral.size()), count)
            : linalg::sym_gen_eig(local.stiffness, local.spectral, count);
    NeighborhoodEigenBasis basis;
    basis.dofs = local.dofs;
    basis.eigenvalues = pairs.values;
    basis.eigenvectors = pairs.vectors;
    basis.clamped = pairs.clamped;
    return basis;
}

linalg::SparseMatrix build_multiscale_space(std::span<const NeighborhoodEigenBasis> bases,
                                            std::span<const Neighborhood> neighborhoods, int intermediate_dofs) {
    if (bases.size() != neighborhoods.size())
        throw std::invalid_argument("build_multiscale_space: one eigenbasis per neighbourhood required");
    std::vector<Triplet> t;
    Index row = 0;
    for (std::size_t i = 0; i < bases.size(); ++i) {
        const auto& b = bases[i];
        const auto& nb = neighborhoods[i];
        if (b.dofs != nb.dofs)
            throw std::invalid_argument(fmt::format("neighbourhood {} eigenbasis and weights disagree on dofs", i));
        for (Index k = 0; k < b.eigenvectors.cols(); ++k, ++row)
            for (std::size_t j = 0; j < b.dofs.size(); ++j) {
                const double v = nb.weights[static_cast<Index>(j)] * b.eigenvectors(static_cast<Index>(j), k);
                if (v != 0.0) t.emplace_back(row, b.dofs[j], v);
            }
    }
    return linalg::from_triplets(row, intermediate_dofs, t);
}

GmsfemModel assemble_coarse(const linalg::SparseMatrix& projection, const NlmcModel& model, double rank_tol) {
    if (projection.cols() != model.size())
        throw std::invalid_argument(fmt::format("coarse projection has {} columns, intermediate model has {} dofs",
                                                projection.cols(), model.size()));
    GmsfemModel out;
    const linalg::SparseMatrix mass_bar = linalg::diagonal(model.mass);
    DenseMatrix gram = DenseMatrix(linalg::triple_product(projection, mass_bar));
    const auto piv = linalg::pivoted_cholesky(gram, rank_tol);

    if (piv.dropped.empty()) {
        out.projection = projection;
    } else {
        std::vector<Index> keep = piv.kept;
        std::sort(keep.begin(), keep.end());
        std::vector<Triplet> t;
        for (std::size_t r = 0; r < keep.size(); ++r)
            for (linalg::SparseMatrix::InnerIterator it(projection, keep[r]); it; ++it)
                t.emplace_back(static_cast<Index>(r), it.col(), it.value());
        out.projection = linalg::from_triplets(static_cast<Index>(keep.size()), projection.cols(), t);
        out.dropped = static_cast<int>(piv.dropped.size());
    }
    out.mass = DenseMatrix(linalg::triple_product(out.projection, mass_bar));
    out.stiffness = DenseMatrix(linalg::triple_product(out.projection, model.stiffness));
    out.load = out.projection * model.load;
    return out;
}

GmsfemBuild build_gmsfem(const NlmcModel& nlmc, const IntermediateGrid& ig, const CoarseGrid& cg,
                         const PhysicalParams& params, const GmsfemOptions& options) {
    if (options.basis_count < 1)
        throw std::invalid_argument(fmt::format("basis count must be >= 1 (got {})", options.basis_count));
    const Vector spectral = spectral_weights(ig, params);
    const auto neighborhoods = partition_of_unity(cg, ig);
    GmsfemBuild build;
    build.bases.resize(neighborhoods.size());
    parallel_for(static_cast<int>(neighborhoods.size()), options.threads, [&](int v) {
        const auto& nb = neighborhoods[static_cast<std::size_t>(v)];
        auto basis = solve_spectral(restrict_to(nlmc.stiffness, spectral, nb.dofs, options.local_boundary), options.basis_count);
        basis.vertex = v;
        build.bases[static_cast<std::size_t>(v)] = std::move(basis);
    });
    for (const auto& b : build.bases) build.clamped_neighborhoods += b.clamped ? 1 : 0;
    build.model = assemble_coarse(build_multiscale_space(build.bases, neighborhoods, ig.dof_count()), nlmc,
                                  options.rank_tol);
    return build;
}

Trajectory simulate_coarse(const GmsfemModel& model, const Vector& p0, double tau, int n_steps) {
    if (!(tau > 0.0)) throw std::invalid_argument(fmt::format("time step must be positive (got {})", tau));
    if (n_steps < 0) throw std::invalid_argument("step count must be non-negative");
    if (p0.size() != model.size()) throw std::invalid_argument("coarse initial state has wrong size");
    const DenseMatrix mt = model.mass / tau;
    DenseMatrix k = mt + model.stiffness;
    k = 0.5 * (k + k.transpose()).eval();
    Eigen::LLT<DenseMatrix> llt(k);
    if (llt.info() != Eigen::Success)
        throw linalg::SolverError("coarse system M_C/tau + A_C is not positive definite");

    Trajectory tr;
    tr.tau = tau;
    tr.states.push_back(p0);
    for (int n = 0; n < n_steps; ++n) {
        const Vector rhs = mt * tr.states.back() + model.load;
        Vector x = llt.solve(rhs);
        x += llt.solve(Vector(rhs - k * x));
        tr.states.push_back(std::move(x));
    }
    return tr;
}

std::pair<Vector, Vector> reconstruct(const GmsfemModel& model, const NlmcModel& nlmc, const Vector& p_coarse) {
    if (p_coarse.size() != model.size()) throw std::invalid_argument("coarse state has wrong size");
    Vector inter = model.projection.transpose() * p_coarse;
    Vector fine = downscale(nlmc, inter);
    return {std::move(inter), std::move(fine)};
}

} // namespace fracms
