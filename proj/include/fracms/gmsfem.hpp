#pragma once

#include "fracms/fine_model.hpp"
#include "fracms/linalg.hpp"
#include "fracms/mesh.hpp"
#include "fracms/nlmc.hpp"

#include <span>
#include <utility>
#include <vector>

namespace fracms {

/// Diagonal of the spectral weight matrix: b_m|K_i| on matrix dofs, b_f|gamma| on
/// fracture dofs.
linalg::Vector spectral_weights(const IntermediateGrid& ig, const PhysicalParams& params);

/// Support of one coarse neighbourhood: intermediate dofs (ascending) and the
/// partition-of-unity weight of its vertex at each of them.
struct Neighborhood {
    int vertex = -1;
    std::vector<int> dofs;
    linalg::Vector weights;
};

/// Dofs whose intermediate cell lies in the neighbourhood of vertex v.
std::vector<int> neighborhood_dofs(const CoarseGrid& cg, const IntermediateGrid& ig, int vertex);

/// Bilinear hat weights of every vertex, evaluated at the anchor of each dof of its
/// neighbourhood (cell centre for matrix dofs, measure-weighted centroid for
/// fracture continua).
std::vector<Neighborhood> partition_of_unity(const CoarseGrid& cg, const IntermediateGrid& ig);

struct LocalMatrices {
    std::vector<int> dofs;
    linalg::DenseMatrix stiffness;
    linalg::Vector spectral;
    bool constant_kernel = false; // stiffness annihilates constants exactly
};

/// How the local operator treats connections that leave the neighbourhood.
/// `no_flux` drops them (the diagonal is rebuilt from the retained connections, so
/// constants lie in the kernel); `truncated` keeps the plain principal submatrix.
enum class LocalBoundary { no_flux, truncated };

/// Upscaled stiffness and spectral weights restricted to `dofs`.
LocalMatrices restrict_to(const linalg::SparseMatrix& stiffness, const linalg::Vector& spectral,
                          std::span<const int> dofs, LocalBoundary boundary = LocalBoundary::no_flux);

struct NeighborhoodEigenBasis {
    int vertex = -1;
    std::vector<int> dofs;
    linalg::Vector eigenvalues;      // ascending
    linalg::DenseMatrix eigenvectors; // columns, S-orthonormal
    bool clamped = false;             // fewer pairs than requested were available
};

/// Smallest `count` pairs of the local pencil. With `constant_kernel` the first
/// pair is exactly (0, constant).
NeighborhoodEigenBasis solve_spectral(const LocalMatrices& local, int count);

/// Rows psi = chi_i * Psi^i_k, neighbourhood-major then ascending eigenvalue.
/// `neighborhoods[i]` and `bases[i]` must describe the same dofs.
linalg::SparseMatrix build_multiscale_space(std::span<const NeighborhoodEigenBasis> bases,
                                            std::span<const Neighborhood> neighborhoods, int intermediate_dofs);

struct GmsfemModel {
    linalg::SparseMatrix projection; // R_C, rows = coarse basis functions
    linalg::DenseMatrix mass;        // R_C M R_C^T
    linalg::DenseMatrix stiffness;   // R_C A R_C^T
    linalg::Vector load;             // R_C F
    int dropped = 0;                 // basis functions removed as linearly dependent

    int size() const noexcept { return static_cast<int>(load.size()); }
};

/// Galerkin projection of the intermediate model. Rows of R_C whose span duplicates
/// earlier rows (pivoted Cholesky of the unit-scaled coarse mass, relative pivot
/// below `rank_tol`) are dropped and counted.
GmsfemModel assemble_coarse(const linalg::SparseMatrix& projection, const NlmcModel& model, double rank_tol = 1e-10);

struct GmsfemOptions {
    int basis_count = 8;
    int threads = 0;
    double rank_tol = 1e-10;
    LocalBoundary local_boundary = LocalBoundary::no_flux;
};

struct GmsfemBuild {
    GmsfemModel model;
    std::vector<NeighborhoodEigenBasis> bases;
    int clamped_neighborhoods = 0;
};

GmsfemBuild build_gmsfem(const NlmcModel& nlmc, const IntermediateGrid& ig, const CoarseGrid& cg,
                         const PhysicalParams& params, const GmsfemOptions& options);

/// Implicit Euler with the dense coarse mass: (M_C/tau + A_C) p^n = M_C p^{n-1}/tau + F_C.
Trajectory simulate_coarse(const GmsfemModel& model, const linalg::Vector& p0, double tau, int n_steps);

/// Intermediate state R_C^T p_C and fine state R^T R_C^T p_C.
std::pair<linalg::Vector, linalg::Vector> reconstruct(const GmsfemModel& model, const NlmcModel& nlmc,
                                                      const linalg::Vector& p_coarse);

} // namespace fracms
