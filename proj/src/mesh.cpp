#include "fracms/mesh.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace fracms {

namespace {

double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

Point closest_on_segment(Point p, Point a, Point b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) return a;
    const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
    return {a.x + t * dx, a.y + t * dy};
}

bool proper_crossing(Point a0, Point a1, Point b0, Point b1) {
    const double d1 = cross(b0, b1, a0), d2 = cross(b0, b1, a1);
    const double d3 = cross(a0, a1, b0), d4 = cross(a0, a1, b1);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

// Index along one axis with edge points assigned to the lower cell.
int axis_index(double coord, double h, int n) {
    const double c = coord / h;
    const double k = std::round(c);
    int idx;
    if (std::abs(c - k) * h <= kGeomTol && k > 0.0)
        idx = static_cast<int>(k) - 1;
    else
        idx = static_cast<int>(std::floor(c));
    return std::clamp(idx, 0, n - 1);
}

// Liang-Barsky clip of [a,b] to the unit square; false if nothing remains.
bool clip_to_domain(Point& a, Point& b) {
    double t0 = 0.0, t1 = 1.0;
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.x, 1.0 - a.x, a.y, 1.0 - a.y};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < -kGeomTol) return false;
            continue;
        }
        const double r = q[i] / p[i];
        if (p[i] < 0.0)
            t0 = std::max(t0, r);
        else
            t1 = std::min(t1, r);
    }
    if (t0 > t1) return false;
    const Point na{a.x + t0 * dx, a.y + t0 * dy};
    const Point nb{a.x + t1 * dx, a.y + t1 * dy};
    a = na;
    b = nb;
    return true;
}

struct DisjointSets {
    std::vector<int> parent;
    explicit DisjointSets(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace

double Fracture::length() const {
    double s = 0.0;
    for (std::size_t k = 1; k < vertices.size(); ++k) s += dist(vertices[k - 1], vertices[k]);
    return s;
}

double segment_distance(Point a0, Point a1, Point b0, Point b1) {
    if (proper_crossing(a0, a1, b0, b1)) return 0.0;
    return std::min({dist(a0, closest_on_segment(a0, b0, b1)), dist(a1, closest_on_segment(a1, b0, b1)),
                     dist(b0, closest_on_segment(b0, a0, a1)), dist(b1, closest_on_segment(b1, a0, a1))});
}

Point segment_meeting_point(Point a0, Point a1, Point b0, Point b1) {
    if (proper_crossing(a0, a1, b0, b1)) {
        const double da = cross(b0, b1, a0), db = cross(b0, b1, a1);
        const double t = da / (da - db);
        return {a0.x + t * (a1.x - a0.x), a0.y + t * (a1.y - a0.y)};
    }
    std::array<std::pair<Point, Point>, 4> cand = {
        std::pair{a0, closest_on_segment(a0, b0, b1)}, std::pair{a1, closest_on_segment(a1, b0, b1)},
        std::pair{b0, closest_on_segment(b0, a0, a1)}, std::pair{b1, closest_on_segment(b1, a0, a1)}};
    auto best = std::min_element(cand.begin(), cand.end(), [](const auto& l, const auto& r) {
        return dist(l.first, l.second) < dist(r.first, r.second);
    });
    return {0.5 * (best->first.x + best->second.x), 0.5 * (best->first.y + best->second.y)};
}

FractureNetworkSet identify_networks(std::vector<Fracture> fractures, double tol) {
    const int n = static_cast<int>(fractures.size());
    for (int f = 0; f < n; ++f)
        if (fractures[f].vertices.size() < 2)
            throw std::invalid_argument(fmt::format("fracture {} has fewer than two vertices", f));
    DisjointSets sets(n);
    for (int f = 0; f < n; ++f) {
        for (int g = f + 1; g < n; ++g) {
            const auto& vf = fractures[f].vertices;
            const auto& vg = fractures[g].vertices;
            bool hit = false;
            for (std::size_t i = 1; i < vf.size() && !hit; ++i)
                for (std::size_t j = 1; j < vg.size() && !hit; ++j)
                    hit = segment_distance(vf[i - 1], vf[i], vg[j - 1], vg[j]) <= tol;
            if (hit) sets.unite(f, g);
        }
    }
    FractureNetworkSet out;
    out.network_of.assign(static_cast<std::size_t>(n), -1);
    std::map<int, int> label;
    for (int f = 0; f < n; ++f) {
        const int root = sets.find(f);
        auto [it, inserted] = label.emplace(root, static_cast<int>(label.size()));
        out.network_of[f] = it->second;
    }
    out.network_count = static_cast<int>(label.size());
    out.fractures = std::move(fractures);
    return out;
}

// ---------------------------------------------------------------------------

FineGrid::FineGrid(int nx, int ny) : nx_(nx), ny_(ny) {
    if (nx < 1 || ny < 1) throw std::invalid_argument(fmt::format("fine grid needs nx, ny >= 1 (got {}x{})", nx, ny));
    hx_ = 1.0 / nx;
    hy_ = 1.0 / ny;
}

Point FineGrid::center(int cell) const noexcept { return {(col(cell) + 0.5) * hx_, (row(cell) + 0.5) * hy_}; }

int FineGrid::locate(Point p) const { return index(axis_index(p.y, hy_, ny_), axis_index(p.x, hx_, nx_)); }

FineGrid build_fine_grid(int nx, int ny) { return FineGrid(nx, ny); }

FractureMesh clip_fractures(const FineGrid& grid, const FractureNetworkSet& fx) {
    FractureMesh mesh;
    mesh.by_fracture.resize(fx.fractures.size());
    for (std::size_t f = 0; f < fx.fractures.size(); ++f) {
        const auto& verts = fx.fractures[f].vertices;
        if (verts.size() < 2 || fx.fractures[f].length() < kMinSegmentLength)
            throw std::invalid_argument(fmt::format("fracture {} is degenerate (zero length)", f));
        const int network = f < fx.network_of.size() ? fx.network_of[f] : -1;
        double arc = 0.0;
        for (std::size_t k = 1; k < verts.size(); ++k) {
            Point a = verts[k - 1], b = verts[k];
            const double full = dist(a, b);
            if (full == 0.0) continue;
            const Point orig_a = a;
            if (!clip_to_domain(a, b)) {
                arc += full;
                continue;
            }
            const double offset = dist(orig_a, a);
            const double dx = b.x - a.x, dy = b.y - a.y;
            const double len = std::hypot(dx, dy);
            std::vector<double> ts = {0.0, 1.0};
            if (dx != 0.0) {
                const int k0 = static_cast<int>(std::ceil(std::min(a.x, b.x) / grid.hx()));
                const int k1 = static_cast<int>(std::floor(std::max(a.x, b.x) / grid.hx()));
                for (int kk = k0; kk <= k1; ++kk) {
                    const double t = (kk * grid.hx() - a.x) / dx;
                    if (t > 0.0 && t < 1.0) ts.push_back(t);
                }
            }
            if (dy != 0.0) {
                const int k0 = static_cast<int>(std::ceil(std::min(a.y, b.y) / grid.hy()));
                const int k1 = static_cast<int>(std::floor(std::max(a.y, b.y) / grid.hy()));
                for (int kk = k0; kk <= k1; ++kk) {
                    const double t = (kk * grid.hy() - a.y) / dy;
                    if (t > 0.0 && t < 1.0) ts.push_back(t);
                }
            }
            std::sort(ts.begin(), ts.end());
            for (std::size_t j = 1; j < ts.size(); ++j) {
                const double t0 = ts[j - 1], t1 = ts[j];
                const double piece = (t1 - t0) * len;
                if (piece < kMinSegmentLength) continue;
                FractureSegment s;
                s.fracture = static_cast<int>(f);
                s.network = network;
                s.a = {a.x + t0 * dx, a.y + t0 * dy};
                s.b = {a.x + t1 * dx, a.y + t1 * dy};
                s.length = piece;
                s.s_mid = arc + offset + 0.5 * (t0 + t1) * len;
                s.cell = grid.locate(s.midpoint());
                mesh.by_fracture[f].push_back(static_cast<int>(mesh.segments.size()));
                mesh.segments.push_back(s);
            }
            arc += full;
        }
    }
    return mesh;
}

// ---------------------------------------------------------------------------

Point IntermediateGrid::center(int cell) const noexcept { return {(col(cell) + 0.5) * hx(), (row(cell) + 0.5) * hy()}; }

int IntermediateGrid::cell_of_dof(int dof) const noexcept {
    return dof < cell_count() ? dof : continua_[static_cast<std::size_t>(dof - cell_count())].cell;
}

int IntermediateGrid::cell_of_fine(int fine_cell) const noexcept {
    return (fine_.row(fine_cell) / ratio_y()) * nx_ + fine_.col(fine_cell) / ratio_x();
}

std::vector<int> IntermediateGrid::fine_cells(int cell) const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(ratio_x() * ratio_y()));
    const int r0 = row(cell) * ratio_y(), c0 = col(cell) * ratio_x();
    for (int r = r0; r < r0 + ratio_y(); ++r)
        for (int c = c0; c < c0 + ratio_x(); ++c) out.push_back(fine_.index(r, c));
    return out;
}

Point IntermediateGrid::anchor(int dof) const {
    return is_matrix_dof(dof) ? center(dof) : continuum_of_dof(dof).centroid;
}

double IntermediateGrid::measure(int dof) const {
    return is_matrix_dof(dof) ? cell_area() : continuum_of_dof(dof).measure;
}

IntermediateGrid build_intermediate_grid(const FineGrid& grid, int nx, int ny, const FractureMesh& fm) {
    if (nx < 1 || ny < 1 || grid.nx() % nx != 0 || grid.ny() % ny != 0)
        throw std::invalid_argument(fmt::format("intermediate grid {}x{} does not conform with fine grid {}x{}", nx,
                                                ny, grid.nx(), grid.ny()));
    IntermediateGrid ig;
    ig.fine_ = grid;
    ig.nx_ = nx;
    ig.ny_ = ny;

    std::map<std::pair<int, int>, Continuum> pieces; // (cell, network) -> continuum
    for (int s = 0; s < fm.size(); ++s) {
        const auto& seg = fm.segments[s];
        const int cell = ig.cell_of_fine(seg.cell);
        auto& c = pieces[{cell, seg.network}];
        c.cell = cell;
        c.network = seg.network;
        c.measure += seg.length;
        const Point m = seg.midpoint();
        c.centroid.x += seg.length * m.x;
        c.centroid.y += seg.length * m.y;
        c.segments.push_back(s);
    }
    ig.segment_dof_.assign(static_cast<std::size_t>(fm.size()), -1);
    ig.first_.assign(static_cast<std::size_t>(ig.cell_count() + 1), 0);
    for (auto& [key, c] : pieces) {
        if (c.measure < kMinContinuumMeasure) {
            for (int s : c.segments) ig.segment_dof_[static_cast<std::size_t>(s)] = c.cell;
            continue;
        }
        c.centroid.x /= c.measure;
        c.centroid.y /= c.measure;
        ig.first_[static_cast<std::size_t>(c.cell + 1)] += 1;
        ig.continua_.push_back(std::move(c));
    }
    std::partial_sum(ig.first_.begin(), ig.first_.end(), ig.first_.begin());
    for (std::size_t k = 0; k < ig.continua_.size(); ++k)
        for (int s : ig.continua_[k].segments) ig.segment_dof_[s] = ig.cell_count() + static_cast<int>(k);
    return ig;
}

OversampleRegion oversample(const IntermediateGrid& ig, const FractureMesh& fm, int cell, int layers) {
    if (cell < 0 || cell >= ig.cell_count())
        throw std::out_of_range(fmt::format("oversample: cell {} outside [0, {})", cell, ig.cell_count()));
    if (layers < 1) throw std::invalid_argument(fmt::format("oversample: layer count must be >= 1 (got {})", layers));
    OversampleRegion r;
    r.target = cell;
    r.layers = layers;
    const int row = ig.row(cell), col = ig.col(cell);
    r.row_begin = std::max(0, row - layers);
    r.row_end = std::min(ig.ny() - 1, row + layers);
    r.col_begin = std::max(0, col - layers);
    r.col_end = std::min(ig.nx() - 1, col + layers);
    r.saturated = r.row_begin == 0 && r.col_begin == 0 && r.row_end == ig.ny() - 1 && r.col_end == ig.nx() - 1;
    for (int i = r.row_begin; i <= r.row_end; ++i)
        for (int j = r.col_begin; j <= r.col_end; ++j) r.cells.push_back(i * ig.nx() + j);

    const FineGrid& fg = ig.fine();
    const int fr0 = r.row_begin * ig.ratio_y(), fr1 = (r.row_end + 1) * ig.ratio_y() - 1;
    const int fc0 = r.col_begin * ig.ratio_x(), fc1 = (r.col_end + 1) * ig.ratio_x() - 1;
    for (int i = fr0; i <= fr1; ++i) {
        for (int j = fc0; j <= fc1; ++j) {
            r.fine_cells.push_back(fg.index(i, j));
            const bool edge = (i == fr0 && fr0 > 0) || (i == fr1 && fr1 < fg.ny() - 1) || (j == fc0 && fc0 > 0) ||
                              (j == fc1 && fc1 < fg.nx() - 1);
            r.boundary.push_back(edge ? 1 : 0);
        }
    }
    for (int s = 0; s < fm.size(); ++s) {
        const int c = fm.segments[s].cell;
        if (fg.row(c) >= fr0 && fg.row(c) <= fr1 && fg.col(c) >= fc0 && fg.col(c) <= fc1) r.segments.push_back(s);
    }
    return r;
}

// ---------------------------------------------------------------------------

CoarseGrid::CoarseGrid(const IntermediateGrid& ig, int nx, int ny)
    : nx_(nx), ny_(ny), inter_nx_(ig.nx()), inter_ny_(ig.ny()) {
    if (nx < 1 || ny < 1 || ig.nx() % nx != 0 || ig.ny() % ny != 0)
        throw std::invalid_argument(fmt::format("coarse grid {}x{} does not conform with intermediate grid {}x{}", nx,
                                                ny, ig.nx(), ig.ny()));
}

Point CoarseGrid::vertex(int v) const noexcept {
    return {static_cast<double>(v % (nx_ + 1)) / nx_, static_cast<double>(v / (nx_ + 1)) / ny_};
}

std::vector<int> CoarseGrid::neighborhood(int v) const {
    const int vr = v / (nx_ + 1), vc = v % (nx_ + 1);
    std::vector<int> out;
    for (int r = vr - 1; r <= vr; ++r)
        for (int c = vc - 1; c <= vc; ++c)
            if (r >= 0 && r < ny_ && c >= 0 && c < nx_) out.push_back(r * nx_ + c);
    return out;
}

std::vector<int> CoarseGrid::neighborhood_cells(int v) const {
    const int rx = inter_nx_ / nx_, ry = inter_ny_ / ny_;
    std::vector<int> out;
    for (int cc : neighborhood(v)) {
        const int r0 = (cc / nx_) * ry, c0 = (cc % nx_) * rx;
        for (int r = r0; r < r0 + ry; ++r)
            for (int c = c0; c < c0 + rx; ++c) out.push_back(r * inter_nx_ + c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

int CoarseGrid::cell_of_intermediate(int j) const noexcept {
    const int rx = inter_nx_ / nx_, ry = inter_ny_ / ny_;
    return ((j / inter_nx_) / ry) * nx_ + (j % inter_nx_) / rx;
}

double CoarseGrid::hat(int v, Point p) const noexcept {
    const Point x = vertex(v);
    return std::max(0.0, 1.0 - std::abs(p.x - x.x) / hx()) * std::max(0.0, 1.0 - std::abs(p.y - x.y) / hy());
}

CoarseGrid build_coarse_grid(const IntermediateGrid& ig, int nx, int ny) { return CoarseGrid(ig, nx, ny); }

} // namespace fracms
