#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracms::linalg {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
/// Compressed row storage; column indices sorted and unique once compressed.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;
using DenseMatrix = Eigen::MatrixXd;
using Triplet = Eigen::Triplet<double, std::int64_t>;

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the saddle solver when the constraint rows are linearly dependent.
class RankDeficientConstraints : public SolverError {
public:
    RankDeficientConstraints(Index row, const std::string& what)
        : SolverError(what), row_(row) {}
    Index row() const noexcept { return row_; }

private:
    Index row_;
};

/// Builds a compressed matrix; duplicate entries are summed and exact zeros dropped.
SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Triplet>& entries);

SparseMatrix identity(Index n);
SparseMatrix diagonal(const Vector& d);

double inf_norm(const SparseMatrix& a);
/// max |a_ij - a_ji| / ||A||_inf (0 for the zero matrix).
double symmetry_defect(const SparseMatrix& a);

/// Principal submatrix on the given (sorted or unsorted) index set.
SparseMatrix principal_submatrix(const SparseMatrix& a, const std::vector<Index>& idx);

/// Sparse Cholesky factorization of an SPD matrix, reusable for many right-hand sides.
class SpdSolver {
public:
    explicit SpdSolver(const SparseMatrix& a);
    ~SpdSolver();
    SpdSolver(SpdSolver&&) noexcept;
    SpdSolver& operator=(SpdSolver&&) noexcept;

    /// Iterative refinement drives the normwise backward error
    /// ‖b - Ax‖ / (‖A‖ ‖x‖ + ‖b‖) (infinity norms) below 1e-10; otherwise throws SolverError.
    Vector solve(const Vector& b) const;
    DenseMatrix solve(const DenseMatrix& b) const;
    Index size() const noexcept { return n_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Index n_ = 0;
};

Vector spd_solve(const SparseMatrix& a, const Vector& b);

struct SaddleSolution {
    Vector primal;
    Vector multipliers;
};

/// Solves [A B^T; B 0][x; mu] = [0; g] for symmetric A that is positive definite on
/// ker(B). The factorization is shared by every right-hand side g.
///
/// Uses the augmented form A + B^T W B (W positive diagonal, which leaves the
/// solution unchanged) so A itself may be singular, then eliminates the multipliers
/// through the dense Schur complement B (A + B^T W B)^{-1} B^T. Linearly dependent
/// rows of B are detected by pivoted Cholesky of that complement.
class SaddleSolver {
public:
    SaddleSolver(const SparseMatrix& a, const SparseMatrix& b);
    ~SaddleSolver();
    SaddleSolver(SaddleSolver&&) noexcept;
    SaddleSolver& operator=(SaddleSolver&&) noexcept;

    SaddleSolution solve(const Vector& g) const;
    Index primal_size() const noexcept { return n_; }
    Index constraint_count() const noexcept { return k_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Index n_ = 0;
    Index k_ = 0;
};

SaddleSolution saddle_solve(const SparseMatrix& a, const SparseMatrix& b, const Vector& g);

struct EigenPairs {
    Vector values;       // ascending
    DenseMatrix vectors; // one column per value, S-orthonormal
    bool clamped = false;
};

/// Smallest m eigenpairs of A x = lambda S x with S = diag(s), s > 0, via the
/// symmetric standard problem S^{-1/2} A S^{-1/2}. m larger than the dimension is
/// clamped and flagged. Each vector's largest-magnitude entry is made positive and
/// equal eigenvalues are ordered lexicographically by vector entries.
EigenPairs sym_gen_eig(const DenseMatrix& a, const Vector& s, Index m);

/// As sym_gen_eig, for A with a known exact null vector z. The pair (0, z) is
/// split off by a Householder reflection and the rest of the spectrum is computed
/// on the orthogonal complement, so the zero eigenvalue is exact instead of
/// carrying an error of order eps ||A|| / min(s).
EigenPairs sym_gen_eig(const DenseMatrix& a, const Vector& s, const Vector& z, Index m);

/// R A R^T, symmetrized as (X + X^T)/2 when A is symmetric.
SparseMatrix triple_product(const SparseMatrix& r, const SparseMatrix& a);

struct PivotedCholesky {
    std::vector<Index> kept;    // original indices of accepted pivots, in pivot order
    std::vector<Index> dropped; // indices whose pivot fell below tolerance
};

/// Greedy diagonal pivoting on a symmetric positive semidefinite matrix, scaled to
/// unit diagonal first. Pivots below tol (relative) are rejected; ties go to the
/// lowest index so the result is deterministic.
PivotedCholesky pivoted_cholesky(const DenseMatrix& a, double tol);

} // namespace fracms::linalg
