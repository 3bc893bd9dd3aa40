#pragma once

#include "fracms/fine_model.hpp"
#include "fracms/linalg.hpp"
#include "fracms/mesh.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace fracms {

/// Pi: fine dofs -> intermediate dofs. Matrix rows average over the fine cells of K_j
/// with weights |cell|/|K_j|; fracture rows average over the continuum's segments with
/// weights |segment|/|gamma_j|.
linalg::SparseMatrix averaging_operator(const IntermediateGrid& ig, const FractureMesh& fm);

/// Cell areas followed by segment lengths.
linalg::Vector fine_measures(const FineGrid& grid, const FractureMesh& fm);

class ZeroReferenceError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// 100 * ||u - v|| / ||v|| with ||x||^2 = sum w_i x_i^2 (all weights 1 when
/// `weights` is empty). Throws ZeroReferenceError when ||v|| = 0.
double relative_l2(const linalg::Vector& u, const linalg::Vector& v, const linalg::Vector& weights = {});

enum class Level { intermediate, fine };

/// What the error functionals need to map a candidate intermediate-space trajectory
/// onto both reference levels.
struct ErrorContext {
    linalg::SparseMatrix averaging; // Pi
    linalg::SparseMatrix projection; // R (intermediate -> fine via R^T)
    linalg::Vector fine_weights;
};

/// Per-step relative errors (percent) for steps 1..n. The candidate lives in
/// intermediate space (NLMC states, or R_C^T p_C for GMsFEM); at the intermediate
/// level it is compared with Pi p, at the fine level R^T candidate is compared with p
/// under the measure-weighted norm.
std::vector<double> compare_trajectories(const ErrorContext& ctx, const Trajectory& fine,
                                         const Trajectory& candidate, Level level);

/// Error curves by step; absent columns stay empty.
struct ErrorReport {
    std::vector<double> time;
    std::optional<std::vector<double>> fi_intermediate;
    std::optional<std::vector<double>> fi_fine;
    std::optional<std::vector<double>> ic_intermediate;
    std::optional<std::vector<double>> ic_fine;

    int steps() const noexcept { return static_cast<int>(time.size()); }
};

/// CSV with header `step,time,e_FI_I,e_FI_F,e_IC_I,e_IC_F`, 17 significant digits.
void write_error_csv(std::ostream& out, const ErrorReport& report);

} // namespace fracms
