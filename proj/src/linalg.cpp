#include "fracms/linalg.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fracms::linalg {

namespace {

using ColMajorSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;
using Cholesky = Eigen::SimplicialLLT<ColMajorSparse, Eigen::Lower, Eigen::AMDOrdering<std::int64_t>>;

constexpr double kRefineTarget = 1e-14;
constexpr double kResidualBound = 1e-10;
constexpr int kMaxRefinements = 4;

// Normwise backward error ||b - Ax|| / (||A|| ||x|| + ||b||) in the infinity norm.
double relative_residual(const SparseMatrix& a, const Vector& x, const Vector& b, double a_norm) {
    const double scale = a_norm * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
    const double rn = (b - a * x).lpNorm<Eigen::Infinity>();
    return scale > 0.0 ? rn / scale : rn;
}

} // namespace

SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Triplet>& entries) {
    SparseMatrix m(rows, cols);
    m.setFromTriplets(entries.begin(), entries.end());
    m.prune(0.0, 0.0);
    m.makeCompressed();
    return m;
}

SparseMatrix identity(Index n) {
    SparseMatrix m(n, n);
    m.setIdentity();
    m.makeCompressed();
    return m;
}

SparseMatrix diagonal(const Vector& d) {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(d.size()));
    for (Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
    return from_triplets(d.size(), d.size(), t);
}

double inf_norm(const SparseMatrix& a) {
    double best = 0.0;
    for (Index r = 0; r < a.outerSize(); ++r) {
        double row = 0.0;
        for (SparseMatrix::InnerIterator it(a, r); it; ++it) row += std::abs(it.value());
        best = std::max(best, row);
    }
    return best;
}

double symmetry_defect(const SparseMatrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("symmetry_defect: matrix is not square");
    const double norm = inf_norm(a);
    if (norm == 0.0) return 0.0;
    SparseMatrix t = a.transpose();
    SparseMatrix d = a - t;
    double worst = 0.0;
    for (Index k = 0; k < d.nonZeros(); ++k) worst = std::max(worst, std::abs(d.valuePtr()[k]));
    return worst / norm;
}

SparseMatrix principal_submatrix(const SparseMatrix& a, const std::vector<Index>& idx) {
    std::vector<Index> pos(static_cast<std::size_t>(a.cols()), -1);
    for (std::size_t k = 0; k < idx.size(); ++k) pos[static_cast<std::size_t>(idx[k])] = static_cast<Index>(k);
    std::vector<Triplet> t;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        for (SparseMatrix::InnerIterator it(a, idx[k]); it; ++it) {
            const Index c = pos[static_cast<std::size_t>(it.col())];
            if (c >= 0) t.emplace_back(static_cast<Index>(k), c, it.value());
        }
    }
    const auto n = static_cast<Index>(idx.size());
    return from_triplets(n, n, t);
}

// ---------------------------------------------------------------------------

struct SpdSolver::Impl {
    SparseMatrix a;
    double a_norm = 0.0;
    Cholesky llt;
};

SpdSolver::SpdSolver(const SparseMatrix& a) : impl_(std::make_unique<Impl>()), n_(a.rows()) {
    if (a.rows() != a.cols()) throw std::invalid_argument("SpdSolver: matrix is not square");
    impl_->a = a;
    impl_->a_norm = inf_norm(a);
    ColMajorSparse cm = a;
    impl_->llt.compute(cm);
    if (impl_->llt.info() != Eigen::Success)
        throw SolverError("SpdSolver: Cholesky factorization failed (matrix not positive definite)");
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

Vector SpdSolver::solve(const Vector& b) const {
    if (b.size() != n_) throw std::invalid_argument("SpdSolver: right-hand side has wrong size");
    Vector x = impl_->llt.solve(b);
    double res = relative_residual(impl_->a, x, b, impl_->a_norm);
    for (int it = 0; it < kMaxRefinements && res > kRefineTarget; ++it) {
        Vector r = b - impl_->a * x;
        x += impl_->llt.solve(r);
        const double next = relative_residual(impl_->a, x, b, impl_->a_norm);
        if (!(next < res)) {
            res = next;
            break;
        }
        res = next;
    }
    if (!(res <= kResidualBound))
        throw SolverError(fmt::format("SpdSolver: relative residual {:.3e} above {:.0e}", res, kResidualBound));
    return x;
}

DenseMatrix SpdSolver::solve(const DenseMatrix& b) const {
    DenseMatrix x(b.rows(), b.cols());
    for (Index c = 0; c < b.cols(); ++c) x.col(c) = solve(Vector(b.col(c)));
    return x;
}

Vector spd_solve(const SparseMatrix& a, const Vector& b) { return SpdSolver(a).solve(b); }

// ---------------------------------------------------------------------------

PivotedCholesky pivoted_cholesky(const DenseMatrix& a, double tol) {
    const Index n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("pivoted_cholesky: matrix is not square");
    PivotedCholesky out;
    std::vector<char> done(static_cast<std::size_t>(n), 0);
    Vector scale = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
        if (a(i, i) > 0.0) {
            scale[i] = 1.0 / std::sqrt(a(i, i));
        } else {
            done[static_cast<std::size_t>(i)] = 1;
            out.dropped.push_back(i);
        }
    }
    DenseMatrix w = scale.asDiagonal() * a * scale.asDiagonal();
    Vector d = w.diagonal();
    DenseMatrix l = DenseMatrix::Zero(n, n);
    Index rank = 0;
    for (;;) {
        Index best = -1;
        for (Index i = 0; i < n; ++i) {
            if (done[static_cast<std::size_t>(i)]) continue;
            if (best < 0 || d[i] > d[best]) best = i;
        }
        if (best < 0 || d[best] < tol) break;
        done[static_cast<std::size_t>(best)] = 1;
        out.kept.push_back(best);
        const double piv = std::sqrt(d[best]);
        for (Index i = 0; i < n; ++i) {
            if (done[static_cast<std::size_t>(i)]) continue;
            double v = w(i, best);
            for (Index k = 0; k < rank; ++k) v -= l(i, k) * l(best, k);
            l(i, rank) = v / piv;
            d[i] -= l(i, rank) * l(i, rank);
        }
        l(best, rank) = piv;
        ++rank;
    }
    for (Index i = 0; i < n; ++i)
        if (!done[static_cast<std::size_t>(i)]) out.dropped.push_back(i);
    std::sort(out.dropped.begin(), out.dropped.end());
    return out;
}

// ---------------------------------------------------------------------------

struct SaddleSolver::Impl {
    SparseMatrix b;
    Vector weights;
    DenseMatrix y; // (A + B^T W B)^{-1} B^T
    DenseMatrix schur;
    Eigen::LLT<DenseMatrix> schur_llt;
};

SaddleSolver::SaddleSolver(const SparseMatrix& a, const SparseMatrix& b)
    : impl_(std::make_unique<Impl>()), n_(a.rows()), k_(b.rows()) {
    if (a.rows() != a.cols()) throw std::invalid_argument("SaddleSolver: A is not square");
    if (b.cols() != a.rows() && b.rows() > 0)
        throw std::invalid_argument("SaddleSolver: constraint matrix has wrong column count");
    impl_->b = b;
    impl_->weights = Vector::Zero(k_);

    const Vector diag = a.diagonal();
    for (Index r = 0; r < k_; ++r) {
        double bb = 0.0, dsum = 0.0;
        Index cnt = 0;
        for (SparseMatrix::InnerIterator it(b, r); it; ++it) {
            bb += it.value() * it.value();
            dsum += std::abs(diag[it.col()]);
            ++cnt;
        }
        if (bb == 0.0) throw RankDeficientConstraints(r, fmt::format("SaddleSolver: constraint row {} is zero", r));
        const double mean = dsum > 0.0 ? dsum / static_cast<double>(cnt) : 1.0;
        impl_->weights[r] = mean / bb;
    }

    SparseMatrix augmented = a;
    if (k_ > 0) {
        SparseMatrix bt = b.transpose();
        SparseMatrix wb = impl_->weights.asDiagonal() * b;
        augmented = a + SparseMatrix(bt * wb);
    }
    SpdSolver chol(augmented);
    if (k_ == 0) {
        impl_->y.resize(n_, 0);
        return;
    }
    DenseMatrix bt_dense = DenseMatrix(b.transpose());
    impl_->y = chol.solve(bt_dense);
    impl_->schur = b * impl_->y;
    impl_->schur = 0.5 * (impl_->schur + impl_->schur.transpose()).eval();

    const auto piv = pivoted_cholesky(impl_->schur, 1e-13);
    if (!piv.dropped.empty()) {
        const Index row = piv.dropped.front();
        throw RankDeficientConstraints(
            row, fmt::format("SaddleSolver: constraint row {} is linearly dependent on the others", row));
    }
    impl_->schur_llt.compute(impl_->schur);
    if (impl_->schur_llt.info() != Eigen::Success)
        throw SolverError("SaddleSolver: Schur complement factorization failed");
}

SaddleSolver::~SaddleSolver() = default;
SaddleSolver::SaddleSolver(SaddleSolver&&) noexcept = default;
SaddleSolver& SaddleSolver::operator=(SaddleSolver&&) noexcept = default;

SaddleSolution SaddleSolver::solve(const Vector& g) const {
    if (g.size() != k_) throw std::invalid_argument("SaddleSolver: constraint vector has wrong size");
    SaddleSolution out;
    if (k_ == 0) {
        out.primal = Vector::Zero(n_);
        out.multipliers = Vector::Zero(0);
        return out;
    }
    Vector z = impl_->schur_llt.solve(g);
    for (int it = 0; it < 2; ++it) {
        const Vector r = g - impl_->schur * z;
        z += impl_->schur_llt.solve(r);
    }
    out.primal = impl_->y * z;
    // Final correction against the constraint residual of the assembled primal.
    const Vector r = g - impl_->b * out.primal;
    const Vector dz = impl_->schur_llt.solve(r);
    z += dz;
    out.primal += impl_->y * dz;
    out.multipliers = impl_->weights.cwiseProduct(g) - z;
    return out;
}

SaddleSolution saddle_solve(const SparseMatrix& a, const SparseMatrix& b, const Vector& g) {
    return SaddleSolver(a, b).solve(g);
}

// ---------------------------------------------------------------------------

namespace {

void check_pencil(const DenseMatrix& a, const Vector& s, Index m) {
    const Index n = a.rows();
    if (a.cols() != n || s.size() != n) throw std::invalid_argument("sym_gen_eig: shape mismatch");
    if (m < 0) throw std::invalid_argument("sym_gen_eig: negative eigenpair count");
    for (Index i = 0; i < n; ++i)
        if (!(s[i] > 0.0)) throw std::invalid_argument("sym_gen_eig: S must be a positive diagonal");
}

// Scaled, symmetrized standard matrix S^{-1/2} A S^{-1/2}.
DenseMatrix standard_form(const DenseMatrix& a, const Vector& d) {
    DenseMatrix c = d.asDiagonal() * a * d.asDiagonal();
    return 0.5 * (c + c.transpose()).eval();
}

// vecs holds S-orthonormal columns in the original coordinates.
EigenPairs finish_pairs(const Vector& vals, DenseMatrix vecs, Index m) {
    const Index n = vals.size();
    EigenPairs out;
    if (m > n) {
        out.clamped = true;
        m = n;
    }
    for (Index k = 0; k < n; ++k) {
        Index arg = 0;
        for (Index i = 1; i < n; ++i)
            if (std::abs(vecs(i, k)) > std::abs(vecs(arg, k))) arg = i;
        if (vecs(arg, k) < 0.0) vecs.col(k) *= -1.0;
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index p, Index q) { return vals[p] < vals[q]; });
    const double tie = 1e-12 * std::max(1.0, vals.cwiseAbs().maxCoeff());
    auto lex_less = [&](Index p, Index q) {
        for (Index i = 0; i < n; ++i) {
            if (vecs(i, p) < vecs(i, q)) return true;
            if (vecs(i, p) > vecs(i, q)) return false;
        }
        return false;
    };
    for (std::size_t g0 = 0; g0 < order.size();) {
        std::size_t g1 = g0 + 1;
        while (g1 < order.size() && vals[order[g1]] - vals[order[g1 - 1]] <= tie) ++g1;
        std::sort(order.begin() + static_cast<std::ptrdiff_t>(g0), order.begin() + static_cast<std::ptrdiff_t>(g1),
                  lex_less);
        g0 = g1;
    }

    out.values.resize(m);
    out.vectors.resize(n, m);
    for (Index k = 0; k < m; ++k) {
        out.values[k] = vals[order[static_cast<std::size_t>(k)]];
        out.vectors.col(k) = vecs.col(order[static_cast<std::size_t>(k)]);
    }
    return out;
}

} // namespace

EigenPairs sym_gen_eig(const DenseMatrix& a, const Vector& s, Index m) {
    check_pencil(a, s, m);
    const Vector d = s.cwiseSqrt().cwiseInverse();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(standard_form(a, d));
    if (es.info() != Eigen::Success) throw SolverError("sym_gen_eig: eigen decomposition failed");
    return finish_pairs(es.eigenvalues(), d.asDiagonal() * es.eigenvectors(), m);
}

EigenPairs sym_gen_eig(const DenseMatrix& a, const Vector& s, const Vector& z, Index m) {
    check_pencil(a, s, m);
    const Index n = a.rows();
    if (z.size() != n) throw std::invalid_argument("sym_gen_eig: null vector has wrong size");
    Vector u = s.cwiseSqrt().cwiseProduct(z);
    const double un = u.norm();
    if (!(un > 0.0)) throw std::invalid_argument("sym_gen_eig: null vector is zero");
    u /= un;
    const Vector d = s.cwiseSqrt().cwiseInverse();

    // H = I - 2 v v^T / (v^T v) maps u to a multiple of e_0.
    Vector v = u;
    v[0] += u[0] >= 0.0 ? 1.0 : -1.0;
    const double vv = v.squaredNorm();
    auto reflect = [&](DenseMatrix& x) { x -= (2.0 / vv) * v * (v.transpose() * x); };

    DenseMatrix c = standard_form(a, d);
    reflect(c);
    c.transposeInPlace();
    reflect(c);
    Vector vals = Vector::Zero(n);
    DenseMatrix q = DenseMatrix::Zero(n, n);
    q.col(0) = u;
    if (n > 1) {
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(c.bottomRightCorner(n - 1, n - 1));
        if (es.info() != Eigen::Success) throw SolverError("sym_gen_eig: eigen decomposition failed");
        vals.tail(n - 1) = es.eigenvalues();
        DenseMatrix w = DenseMatrix::Zero(n, n - 1);
        w.bottomRows(n - 1) = es.eigenvectors();
        reflect(w);
        q.rightCols(n - 1) = w;
    }
    return finish_pairs(vals, d.asDiagonal() * q, m);
}

// ---------------------------------------------------------------------------

SparseMatrix triple_product(const SparseMatrix& r, const SparseMatrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("triple_product: A is not square");
    if (r.cols() != a.rows())
        throw std::invalid_argument(
            fmt::format("triple_product: R has {} columns but A has {} rows", r.cols(), a.rows()));
    SparseMatrix rt = r.transpose();
    SparseMatrix ra = r * a;
    SparseMatrix x = ra * rt;
    if (symmetry_defect(a) <= 1e-12) {
        SparseMatrix xt = x.transpose();
        x = 0.5 * (x + xt);
    }
    x.prune(0.0, 0.0);
    x.makeCompressed();
    return x;
}

} // namespace fracms::linalg
