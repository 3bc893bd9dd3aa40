#include "fracms/fine_model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace fracms {

using linalg::Triplet;
using linalg::Vector;

PhysicalParams PhysicalParams::from_coefficients(double a_m, double a_f, double b_m, double b_f, double sigma) {
    PhysicalParams p;
    p.c_m = a_m;
    p.c_f = a_f;
    p.k_m = b_m;
    p.k_f = b_f;
    p.mu = 1.0;
    p.d = 1.0;
    p.sigma = sigma;
    return p;
}

void PhysicalParams::validate() const {
    const std::pair<const char*, double> fields[] = {{"c_m", c_m}, {"c_f", c_f}, {"k_m", k_m}, {"k_f", k_f},
                                                     {"mu", mu},   {"d", d},     {"sigma", sigma}};
    for (const auto& [name, value] : fields)
        if (!(value > 0.0) || !std::isfinite(value))
            throw std::invalid_argument(fmt::format("physical parameter {} must be positive (got {})", name, value));
}

namespace {

double midpoint_distance(const FractureSegment& a, const FractureSegment& b) {
    const Point p = a.midpoint(), q = b.midpoint();
    const double d = std::hypot(p.x - q.x, p.y - q.y);
    // Coincident midpoints (symmetric crossing inside one cell) would give an
    // infinite transmissibility; fall back to a small fraction of the piece size.
    return std::max(d, 1e-2 * 0.5 * (a.length + b.length));
}

int nearest_piece(const FractureMesh& fm, int fracture, Point p) {
    int best = -1;
    double best_d = 0.0;
    for (int s : fm.by_fracture[static_cast<std::size_t>(fracture)]) {
        const auto& seg = fm.segments[static_cast<std::size_t>(s)];
        const double d = segment_distance(seg.a, seg.b, p, p);
        if (best < 0 || d < best_d) {
            best = s;
            best_d = d;
        }
    }
    return best;
}

} // namespace

std::vector<FractureLink> fracture_links(const FractureNetworkSet& fx, const FractureMesh& fm) {
    std::vector<FractureLink> links;
    std::set<std::pair<int, int>> seen;
    auto add = [&](int a, int b) {
        if (a < 0 || b < 0 || a == b) return;
        const auto key = std::minmax(a, b);
        if (!seen.insert(key).second) return;
        links.push_back({key.first, key.second,
                         midpoint_distance(fm.segments[static_cast<std::size_t>(key.first)],
                                           fm.segments[static_cast<std::size_t>(key.second)])});
    };
    for (const auto& pieces : fm.by_fracture)
        for (std::size_t k = 1; k < pieces.size(); ++k) add(pieces[k - 1], pieces[k]);

    const int n = static_cast<int>(fx.fractures.size());
    for (int f = 0; f < n; ++f) {
        for (int g = f + 1; g < n; ++g) {
            if (!fx.network_of.empty() && fx.network_of[f] != fx.network_of[g]) continue;
            const auto& vf = fx.fractures[f].vertices;
            const auto& vg = fx.fractures[g].vertices;
            for (std::size_t i = 1; i < vf.size(); ++i) {
                for (std::size_t j = 1; j < vg.size(); ++j) {
                    if (segment_distance(vf[i - 1], vf[i], vg[j - 1], vg[j]) > kGeomTol) continue;
                    const Point p = segment_meeting_point(vf[i - 1], vf[i], vg[j - 1], vg[j]);
                    add(nearest_piece(fm, f, p), nearest_piece(fm, g, p));
                }
            }
        }
    }
    return links;
}

FineSystem assemble_fine(const FineGrid& grid, const FractureNetworkSet& fx, const FractureMesh& fm,
                         const PhysicalParams& params, const SourceSpec& source) {
    params.validate();
    FineSystem sys;
    sys.matrix_dofs = grid.cell_count();
    sys.fracture_dofs = fm.size();
    const int n = sys.size();
    const int nm = sys.matrix_dofs;

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(5 * nm + 6 * fm.size()));
    auto couple = [&t](int i, int j, double w) {
        t.emplace_back(i, i, w);
        t.emplace_back(j, j, w);
        t.emplace_back(i, j, -w);
        t.emplace_back(j, i, -w);
    };

    // Two-point fluxes between face neighbours; boundary faces carry no flux.
    const double tx = params.b_m() * grid.hy() / grid.hx();
    const double ty = params.b_m() * grid.hx() / grid.hy();
    for (int r = 0; r < grid.ny(); ++r) {
        for (int c = 0; c < grid.nx(); ++c) {
            const int i = grid.index(r, c);
            if (c + 1 < grid.nx()) couple(i, grid.index(r, c + 1), tx);
            if (r + 1 < grid.ny()) couple(i, grid.index(r + 1, c), ty);
        }
    }
    for (const auto& link : fracture_links(fx, fm)) couple(nm + link.first, nm + link.second, params.b_f() / link.distance);
    for (int s = 0; s < fm.size(); ++s) couple(fm.segments[s].cell, nm + s, params.sigma);
    sys.stiffness = linalg::from_triplets(n, n, t);

    sys.mass.resize(n);
    sys.load = Vector::Zero(n);
    const double area = grid.cell_area();
    for (int i = 0; i < nm; ++i) sys.mass[i] = params.a_m() * area;
    for (int s = 0; s < fm.size(); ++s) sys.mass[nm + s] = params.a_f() * fm.segments[s].length;

    auto in_source = [&source](Point p) {
        return std::any_of(source.rects.begin(), source.rects.end(), [p](const Rect& r) { return r.contains(p); });
    };
    if (source.target == SourceTarget::fractures) {
        for (int s = 0; s < fm.size(); ++s)
            if (in_source(fm.segments[s].midpoint())) sys.load[nm + s] = source.rate * fm.segments[s].length;
    } else {
        for (int i = 0; i < nm; ++i)
            if (in_source(grid.center(i))) sys.load[i] = source.rate * area;
    }
    return sys;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kRowSumTolerance = 1e-12;
constexpr int kFluxRefinements = 3;

linalg::SparseMatrix shifted(const Vector& mass, const linalg::SparseMatrix& stiffness, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument(fmt::format("time step must be positive (got {})", tau));
    if (mass.size() != stiffness.rows() || stiffness.rows() != stiffness.cols())
        throw std::invalid_argument("implicit Euler: mass and stiffness sizes differ");
    linalg::SparseMatrix k = stiffness;
    k += linalg::diagonal(mass / tau);
    return k;
}

} // namespace

ImplicitEuler::ImplicitEuler(const Vector& mass, const linalg::SparseMatrix& stiffness, const Vector& load, double tau)
    : mass_(mass), load_(load), tau_(tau), solver_(shifted(mass, stiffness, tau)) {
    if (load.size() != mass.size()) throw std::invalid_argument("implicit Euler: load has wrong size");
    self_ = Vector::Zero(mass.size());
    for (linalg::Index r = 0; r < stiffness.outerSize(); ++r) {
        long double sum = 0.0L;
        double scale = 0.0;
        for (linalg::SparseMatrix::InnerIterator it(stiffness, r); it; ++it) {
            sum += it.value();
            scale += std::abs(it.value());
            if (it.col() < r) couplings_.push_back({r, it.col(), it.value()});
        }
        if (std::abs(static_cast<double>(sum)) > kRowSumTolerance * scale) self_[r] = static_cast<double>(sum);
    }
}

Vector ImplicitEuler::residual(const Vector& rhs, const Vector& p) const {
    std::vector<long double> r(static_cast<std::size_t>(p.size()));
    for (linalg::Index i = 0; i < p.size(); ++i)
        r[static_cast<std::size_t>(i)] =
            static_cast<long double>(rhs[i]) - (static_cast<long double>(mass_[i]) / tau_ + self_[i]) * p[i];
    for (const Coupling& c : couplings_) {
        const long double flux = static_cast<long double>(c.value) * (static_cast<long double>(p[c.col]) - p[c.row]);
        r[static_cast<std::size_t>(c.row)] -= flux;
        r[static_cast<std::size_t>(c.col)] += flux;
    }
    Vector out(p.size());
    for (linalg::Index i = 0; i < p.size(); ++i) out[i] = static_cast<double>(r[static_cast<std::size_t>(i)]);
    return out;
}

Vector ImplicitEuler::step(const Vector& prev) const {
    if (prev.size() != mass_.size()) throw std::invalid_argument("implicit Euler: state has wrong size");
    const Vector rhs = mass_.cwiseProduct(prev) / tau_ + load_;
    Vector p = solver_.solve(rhs);
    for (int it = 0; it < kFluxRefinements; ++it) {
        const Vector r = residual(rhs, p);
        if (r.isZero(0.0)) break;
        p += solver_.solve(r);
    }
    return p;
}

Trajectory ImplicitEuler::run(const Vector& p0, int n_steps) const {
    if (n_steps < 0) throw std::invalid_argument("step count must be non-negative");
    Trajectory tr;
    tr.tau = tau_;
    tr.states.reserve(static_cast<std::size_t>(n_steps + 1));
    tr.states.push_back(p0);
    for (int k = 0; k < n_steps; ++k) tr.states.push_back(step(tr.states.back()));
    return tr;
}

Vector step(const FineSystem& sys, const Vector& p_prev, double tau) {
    return ImplicitEuler(sys.mass, sys.stiffness, sys.load, tau).step(p_prev);
}

Trajectory simulate_fine(const FineSystem& sys, const Vector& p0, double tau, int n_steps) {
    return ImplicitEuler(sys.mass, sys.stiffness, sys.load, tau).run(p0, n_steps);
}

} // namespace fracms
