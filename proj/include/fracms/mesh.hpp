#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fracms {

/// Geometric tolerance (domain units) for intersections and edge tie-breaking.
inline constexpr double kGeomTol = 1e-9;
/// Clipped fracture pieces shorter than this are discarded.
inline constexpr double kMinSegmentLength = 1e-12;
/// Fracture continua with smaller total measure are merged into the matrix continuum.
inline constexpr double kMinContinuumMeasure = 1e-10;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// A fracture trace: a polyline with at least two vertices.
struct Fracture {
    std::vector<Point> vertices;

    double length() const;
};

struct FractureNetworkSet {
    std::vector<Fracture> fractures;
    std::vector<int> network_of; // one entry per fracture
    int network_count = 0;
    double thickness = 1.0;
};

/// Minimum distance between two segments (0 when they cross).
double segment_distance(Point a0, Point a1, Point b0, Point b1);

/// Closest pair of points between two segments; midpoint of that pair.
Point segment_meeting_point(Point a0, Point a1, Point b0, Point b1);

/// Groups fractures into connected components of the relation "some pieces lie
/// within tol of each other". Touching endpoints count as intersecting.
FractureNetworkSet identify_networks(std::vector<Fracture> fractures, double tol = kGeomTol);

// ---------------------------------------------------------------------------

/// Uniform nx-by-ny rectangular grid over the unit square. Cell i <-> (row, col)
/// with i = row * nx + col, row counting upward in y.
class FineGrid {
public:
    FineGrid() = default;
    FineGrid(int nx, int ny);

    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    double hx() const noexcept { return hx_; }
    double hy() const noexcept { return hy_; }
    int cell_count() const noexcept { return nx_ * ny_; }
    double cell_area() const noexcept { return hx_ * hy_; }

    int index(int row, int col) const noexcept { return row * nx_ + col; }
    int row(int cell) const noexcept { return cell / nx_; }
    int col(int cell) const noexcept { return cell % nx_; }
    Point center(int cell) const noexcept;

    /// Cell containing p; points on a cell edge go to the lower-index neighbour.
    int locate(Point p) const;

private:
    int nx_ = 0;
    int ny_ = 0;
    double hx_ = 0.0;
    double hy_ = 0.0;
};

FineGrid build_fine_grid(int nx, int ny);

/// One piece of a fracture lying inside a single fine cell.
struct FractureSegment {
    int fracture = -1;
    int network = -1;
    int cell = -1;
    Point a;
    Point b;
    double length = 0.0;
    double s_mid = 0.0; // arclength from the fracture start to the piece midpoint

    Point midpoint() const noexcept { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }
};

struct FractureMesh {
    std::vector<FractureSegment> segments; // ordered by (fracture, arclength)
    std::vector<std::vector<int>> by_fracture;

    int size() const noexcept { return static_cast<int>(segments.size()); }
};

FractureMesh clip_fractures(const FineGrid& grid, const FractureNetworkSet& fx);

// ---------------------------------------------------------------------------

/// Piece of one fracture network inside one intermediate cell.
struct Continuum {
    int cell = -1;
    int network = -1;
    double measure = 0.0;
    Point centroid;            // measure-weighted centroid of member segments
    std::vector<int> segments; // indices into FractureMesh::segments
};

/// Structured intermediate grid, conforming with the fine grid. Degrees of freedom
/// are ordered matrix continua first (dof == cell) then fracture continua grouped by
/// cell, ascending network id within a cell.
class IntermediateGrid {
public:
    IntermediateGrid() = default;

    const FineGrid& fine() const noexcept { return fine_; }
    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    int ratio_x() const noexcept { return fine_.nx() / nx_; }
    int ratio_y() const noexcept { return fine_.ny() / ny_; }
    int cell_count() const noexcept { return nx_ * ny_; }
    double cell_area() const noexcept { return 1.0 / (static_cast<double>(nx_) * ny_); }
    double hx() const noexcept { return 1.0 / nx_; }
    double hy() const noexcept { return 1.0 / ny_; }
    int row(int cell) const noexcept { return cell / nx_; }
    int col(int cell) const noexcept { return cell % nx_; }
    Point center(int cell) const noexcept;

    int dof_count() const noexcept { return cell_count() + static_cast<int>(continua_.size()); }
    int fracture_dof_count() const noexcept { return static_cast<int>(continua_.size()); }
    /// Number of fracture continua L_j in cell j.
    int continuum_count(int cell) const noexcept { return first_[cell + 1] - first_[cell]; }
    /// Dof of fracture continuum l (1-based, l = 1..L_j) in cell j; l = 0 is the matrix dof.
    int dof(int cell, int l) const noexcept { return l == 0 ? cell : cell_count() + first_[cell] + l - 1; }
    int cell_of_dof(int dof) const noexcept;
    bool is_matrix_dof(int dof) const noexcept { return dof < cell_count(); }
    const Continuum& continuum_of_dof(int dof) const { return continua_.at(dof - cell_count()); }
    const std::vector<Continuum>& continua() const noexcept { return continua_; }

    /// Intermediate cell containing fine cell c.
    int cell_of_fine(int fine_cell) const noexcept;
    std::vector<int> fine_cells(int cell) const;
    /// Intermediate dof of each fracture segment; pieces of sliver continua map to the
    /// matrix dof of their cell.
    const std::vector<int>& segment_dof() const noexcept { return segment_dof_; }

    /// Measure-weighted anchor point of a dof (cell centre for matrix dofs).
    Point anchor(int dof) const;
    double measure(int dof) const;

private:
    friend IntermediateGrid build_intermediate_grid(const FineGrid&, int, int, const FractureMesh&);

    FineGrid fine_;
    int nx_ = 0;
    int ny_ = 0;
    std::vector<Continuum> continua_;
    std::vector<int> first_; // prefix offsets into continua_ per cell, size cell_count + 1
    std::vector<int> segment_dof_;
};

IntermediateGrid build_intermediate_grid(const FineGrid& grid, int nx, int ny, const FractureMesh& fm);

/// Target intermediate cell enlarged by s layers of intermediate cells, clipped to
/// the domain. Ranges are inclusive.
struct OversampleRegion {
    int target = -1;
    int layers = 0;
    int row_begin = 0, row_end = 0;
    int col_begin = 0, col_end = 0;
    std::vector<int> cells;      // intermediate cells, ascending
    std::vector<int> fine_cells; // ascending
    std::vector<int> segments;   // ascending
    /// Per entry of fine_cells: true if the cell touches the part of the region boundary
    /// that lies inside the domain (where zero values are imposed outside).
    std::vector<char> boundary;

    bool contains(int row, int col) const noexcept {
        return row >= row_begin && row <= row_end && col >= col_begin && col <= col_end;
    }
    /// True when the region is the whole domain (no interior boundary).
    bool saturated = false;
};

OversampleRegion oversample(const IntermediateGrid& ig, const FractureMesh& fm, int cell, int layers);

/// Structured coarse grid conforming with the intermediate grid. Vertex v <->
/// (vrow, vcol) with v = vrow * (nx + 1) + vcol.
class CoarseGrid {
public:
    CoarseGrid() = default;
    CoarseGrid(const IntermediateGrid& ig, int nx, int ny);

    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    int vertex_count() const noexcept { return (nx_ + 1) * (ny_ + 1); }
    int cell_count() const noexcept { return nx_ * ny_; }
    Point vertex(int v) const noexcept;
    double hx() const noexcept { return 1.0 / nx_; }
    double hy() const noexcept { return 1.0 / ny_; }

    /// Coarse cells sharing vertex v (1, 2 or 4 of them).
    std::vector<int> neighborhood(int v) const;
    /// Intermediate cells inside the neighbourhood of vertex v, ascending.
    std::vector<int> neighborhood_cells(int v) const;
    /// Coarse cell containing intermediate cell j.
    int cell_of_intermediate(int j) const noexcept;

    /// Bilinear hat of vertex v at point p.
    double hat(int v, Point p) const noexcept;

private:
    int nx_ = 0;
    int ny_ = 0;
    int inter_nx_ = 0;
    int inter_ny_ = 0;
};

CoarseGrid build_coarse_grid(const IntermediateGrid& ig, int nx, int ny);

} // namespace fracms
