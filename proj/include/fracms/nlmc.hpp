#pragma once

#include "fracms/fine_model.hpp"
#include "fracms/linalg.hpp"
#include "fracms/mesh.hpp"

#include <span>
#include <vector>

namespace fracms {

/// Owner of a basis function: intermediate cell and continuum (0 = matrix, 1..L_i fractures).
struct BasisTarget {
    int cell = -1;
    int continuum = 0;
};

/// Averaged constraint functionals on the local dofs of an oversampled region. Row r
/// is the mean over the continuum that owns intermediate dof `dofs[r]`.
struct ConstraintSet {
    linalg::SparseMatrix functionals;
    std::vector<int> dofs;

    int row_of(int dof) const;
};

struct NlmcBasis {
    BasisTarget target;
    int dof = -1;             // intermediate dof of the owner continuum
    std::vector<int> support; // global fine dofs of the oversampled region, ascending
    linalg::Vector values;    // basis values on `support`; zero elsewhere
    double constraint_residual = 0.0;
};

/// Local saddle-point problem on one oversampled region. Unknowns are all fine dofs
/// of the region; the local operator is the principal submatrix of the fine
/// stiffness, which imposes zero values on the cells just outside the region and
/// keeps the no-flux condition where the region meets the domain boundary.
/// One factorization serves every continuum of the target cell.
class LocalBasisProblem {
public:
    LocalBasisProblem(const OversampleRegion& region, const FineSystem& sys, const IntermediateGrid& ig,
                      const FractureMesh& fm);

    NlmcBasis solve(BasisTarget target) const;
    /// Bases for the matrix and every fracture continuum of the target cell.
    std::vector<NlmcBasis> solve_all() const;

    const ConstraintSet& constraints() const noexcept { return constraints_; }
    const linalg::SparseMatrix& local_stiffness() const noexcept { return stiffness_; }
    const std::vector<int>& support() const noexcept { return support_; }

private:
    int target_cell_;
    std::vector<int> target_dofs_; // dof of continuum l at position l
    std::vector<int> support_;
    linalg::SparseMatrix stiffness_;
    ConstraintSet constraints_;
    linalg::SaddleSolver solver_;
};

ConstraintSet build_constraints(const OversampleRegion& region, const IntermediateGrid& ig, const FractureMesh& fm,
                                const std::vector<int>& support, int matrix_dofs);

NlmcBasis solve_local_basis(const OversampleRegion& region, BasisTarget target, const FineSystem& sys,
                            const IntermediateGrid& ig, const FractureMesh& fm);

/// All bases, ordered by intermediate dof. Regions are solved independently on up
/// to `threads` workers (0 = hardware concurrency).
std::vector<NlmcBasis> compute_bases(const IntermediateGrid& ig, const FractureMesh& fm, const FineSystem& sys,
                                     int layers, int threads = 0);

/// Rows = intermediate dofs (matrix continua first, then fracture continua by
/// cell), columns = fine dofs. Throws if any dof lacks a basis.
linalg::SparseMatrix build_projection(std::span<const NlmcBasis> bases, const IntermediateGrid& ig, int fine_dofs);

/// `galerkin` keeps R A R^T as computed. `conservative` replaces each diagonal entry
/// by minus the sum of the off-diagonal entries of its row, so the upscaled operator
/// annihilates constants and the scheme conserves mass exactly even when localized
/// bases do not sum to one.
enum class StiffnessForm { galerkin, conservative };

/// Copy of `a` with every diagonal entry set to minus its row's off-diagonal sum.
linalg::SparseMatrix remove_row_sums(const linalg::SparseMatrix& a);

struct NlmcModel {
    linalg::SparseMatrix projection; // R
    linalg::SparseMatrix stiffness;  // R A R^T, row-sum corrected in conservative form
    linalg::Vector mass;             // diagonal: a_m |K_i|, a_f |gamma_i|
    linalg::Vector load;
    int layers = 0;
    double max_constraint_residual = 0.0;
    double row_sum_defect = 0.0; // ||R A R^T 1||_inf / ||R A R^T||_inf before correction

    int size() const noexcept { return static_cast<int>(mass.size()); }
};

/// Upscaled operators. The load is the fine load aggregated per continuum, which
/// equals q|K_i| and q|gamma_i| for source regions aligned with intermediate cells.
NlmcModel upscale(linalg::SparseMatrix projection, const FineSystem& sys, const IntermediateGrid& ig,
                  const PhysicalParams& params, StiffnessForm form = StiffnessForm::conservative);

NlmcModel build_nlmc(const IntermediateGrid& ig, const FractureMesh& fm, const FineSystem& sys,
                     const PhysicalParams& params, int layers, int threads = 0,
                     StiffnessForm form = StiffnessForm::conservative);

Trajectory simulate_intermediate(const NlmcModel& model, const linalg::Vector& p0, double tau, int n_steps);

/// Fine field R^T p_bar.
linalg::Vector downscale(const NlmcModel& model, const linalg::Vector& p_bar);

} // namespace fracms
