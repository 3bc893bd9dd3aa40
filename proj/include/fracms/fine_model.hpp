#pragma once

#include "fracms/linalg.hpp"
#include "fracms/mesh.hpp"

#include <vector>

namespace fracms {

/// Physical coefficients. The assembled operators use only the derived
/// coefficients a_m, a_f, b_m, b_f and the exchange coefficient sigma.
struct PhysicalParams {
    double c_m = 1.0;   // matrix compressibility
    double c_f = 1.0;   // fracture compressibility
    double k_m = 1.0;   // matrix permeability
    double k_f = 1.0;   // fracture permeability
    double mu = 1.0;    // viscosity
    double d = 1.0;     // fracture thickness
    double sigma = 1.0; // matrix-fracture exchange

    double a_m() const noexcept { return c_m; }
    double a_f() const noexcept { return d * c_f; }
    double b_m() const noexcept { return k_m / mu; }
    double b_f() const noexcept { return d * k_f / mu; }

    /// Parameters reproducing the given derived coefficients (thickness and viscosity 1).
    static PhysicalParams from_coefficients(double a_m, double a_f, double b_m, double b_f, double sigma);

    /// Throws std::invalid_argument unless every value is strictly positive.
    void validate() const;
};

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    bool contains(Point p) const noexcept { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

enum class SourceTarget { fractures, matrix };

struct SourceSpec {
    std::vector<Rect> rects;
    double rate = 0.0;
    SourceTarget target = SourceTarget::fractures;
};

/// M dp/dt + A p = F on the fine grid. Dofs: fine cells first, then fracture segments.
struct FineSystem {
    linalg::Vector mass; // diagonal of M
    linalg::SparseMatrix stiffness;
    linalg::Vector load;
    int matrix_dofs = 0;
    int fracture_dofs = 0;

    int size() const noexcept { return matrix_dofs + fracture_dofs; }
};

/// Fracture-fracture connection used by the assembly (exposed for tests).
struct FractureLink {
    int first = -1;  // segment index
    int second = -1; // segment index
    double distance = 0.0;
};

/// Consecutive pieces of each fracture plus the nearest pieces at every
/// intersection of two fractures from the same network, without duplicates.
std::vector<FractureLink> fracture_links(const FractureNetworkSet& fx, const FractureMesh& fm);

FineSystem assemble_fine(const FineGrid& grid, const FractureNetworkSet& fx, const FractureMesh& fm,
                         const PhysicalParams& params, const SourceSpec& source);

/// States p^0, p^1, ..., p^n at uniform spacing tau.
struct Trajectory {
    double tau = 0.0;
    std::vector<linalg::Vector> states;

    int steps() const noexcept { return static_cast<int>(states.size()) - 1; }
    double time(int n) const noexcept { return n * tau; }
};

/// Implicit Euler for a diagonal mass matrix: (M/tau + A) p^n = M p^{n-1}/tau + F.
/// The system matrix is factorized once. Each step is refined against the
/// residual evaluated in flux form, sum_j a_ij (p_j - p_i) plus the row-sum
/// remainder of A, which makes the summed residual cancel pairwise. Row sums
/// within roundoff of zero are taken as exactly zero.
class ImplicitEuler {
public:
    ImplicitEuler(const linalg::Vector& mass, const linalg::SparseMatrix& stiffness, const linalg::Vector& load,
                  double tau);

    linalg::Vector step(const linalg::Vector& prev) const;
    Trajectory run(const linalg::Vector& p0, int n_steps) const;
    double tau() const noexcept { return tau_; }

private:
    struct Coupling {
        linalg::Index row;
        linalg::Index col;
        double value;
    };

    linalg::Vector residual(const linalg::Vector& rhs, const linalg::Vector& p) const;

    linalg::Vector mass_;
    linalg::Vector load_;
    double tau_;
    std::vector<Coupling> couplings_; // strictly lower triangle of A
    linalg::Vector self_;             // row sums of A
    linalg::SpdSolver solver_;
};

linalg::Vector step(const FineSystem& sys, const linalg::Vector& p_prev, double tau);
Trajectory simulate_fine(const FineSystem& sys, const linalg::Vector& p0, double tau, int n_steps);

} // namespace fracms
