#include "fracms/io.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fracms::io {

std::vector<Fracture> parse_geometry(std::istream& in, const std::string& source_name) {
    std::vector<Fracture> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<double> values;
        double v;
        while (ls >> v) values.push_back(v);
        if (!ls.eof())
            throw std::runtime_error(fmt::format("{}:{}: expected numbers", source_name, lineno));
        if (values.empty()) continue;
        if (values.size() < 4 || values.size() % 2 != 0)
            throw std::runtime_error(
                fmt::format("{}:{}: a fracture needs an even count of at least 4 coordinates (got {})", source_name,
                            lineno, values.size()));
        Fracture f;
        for (std::size_t k = 0; k < values.size(); k += 2) {
            const Point p{values[k], values[k + 1]};
            if (p.x < -kGeomTol || p.x > 1.0 + kGeomTol || p.y < -kGeomTol || p.y > 1.0 + kGeomTol)
                throw std::runtime_error(
                    fmt::format("{}:{}: point ({}, {}) lies outside the unit square", source_name, lineno, p.x, p.y));
            f.vertices.push_back(p);
        }
        if (f.length() < kMinSegmentLength)
            throw std::runtime_error(fmt::format("{}:{}: zero-length fracture", source_name, lineno));
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<Fracture> read_geometry(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open geometry file {}", path.string()));
    return parse_geometry(in, path.string());
}

void write_geometry(std::ostream& out, const std::vector<Fracture>& fractures) {
    for (const auto& f : fractures) {
        for (std::size_t k = 0; k < f.vertices.size(); ++k)
            fmt::print(out, "{}{:.17g} {:.17g}", k ? " " : "", f.vertices[k].x, f.vertices[k].y);
        out << '\n';
    }
}

namespace {

// Portable uniform [0,1) from a 64-bit engine; std distributions differ between libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t& h, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= kFnvPrime;
    }
}

} // namespace

std::vector<Fracture> generate_fractures(int count, std::uint64_t seed) {
    if (count < 0) throw std::invalid_argument("fracture count must be non-negative");
    std::mt19937_64 rng(seed);
    std::vector<Fracture> out;
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(out.size()) < count) {
        const double cx = unit(rng), cy = unit(rng);
        const double angle = std::numbers::pi * unit(rng);
        const double len = 0.05 + 0.25 * unit(rng);
        const double dx = 0.5 * len * std::cos(angle), dy = 0.5 * len * std::sin(angle);
        const Point a{cx - dx, cy - dy}, b{cx + dx, cy + dy};
        if (a.x < 0.0 || a.x > 1.0 || b.x < 0.0 || b.x > 1.0 || a.y < 0.0 || a.y > 1.0 || b.y < 0.0 || b.y > 1.0)
            continue;
        out.push_back(Fracture{{a, b}});
    }
    return out;
}

std::uint64_t geometry_hash(const std::vector<Fracture>& fractures) {
    std::uint64_t h = kFnvOffset;
    for (const auto& f : fractures) {
        fnv_mix(h, static_cast<double>(f.vertices.size()));
        for (const auto& p : f.vertices) {
            fnv_mix(h, p.x);
            fnv_mix(h, p.y);
        }
    }
    return h;
}

std::uint64_t params_hash(const PhysicalParams& p) {
    std::uint64_t h = kFnvOffset;
    for (double v : {p.a_m(), p.a_f(), p.b_m(), p.b_f(), p.sigma}) fnv_mix(h, v);
    return h;
}

void write_vtk(std::ostream& out, const FineGrid& grid, const linalg::Vector& state, const std::string& name) {
    if (state.size() < grid.cell_count()) throw std::invalid_argument("write_vtk: state shorter than the grid");
    out << "# vtk DataFile Version 3.0\n";
    fmt::print(out, "{}\nASCII\nDATASET STRUCTURED_POINTS\n", name);
    fmt::print(out, "DIMENSIONS {} {} 1\nORIGIN 0 0 0\nSPACING {:.17g} {:.17g} 1\n", grid.nx() + 1, grid.ny() + 1,
               grid.hx(), grid.hy());
    fmt::print(out, "CELL_DATA {}\nSCALARS pressure double 1\nLOOKUP_TABLE default\n", grid.cell_count());
    for (int i = 0; i < grid.cell_count(); ++i) fmt::print(out, "{:.17g}\n", state[i]);
}

void write_fracture_csv(std::ostream& out, const FineGrid& grid, const FractureMesh& fm, const linalg::Vector& state) {
    if (state.size() != grid.cell_count() + fm.size())
        throw std::invalid_argument("write_fracture_csv: state size does not match the fine system");
    out << "fracture_id,s_mid,p\n";
    for (int s = 0; s < fm.size(); ++s)
        fmt::print(out, "{},{:.17g},{:.17g}\n", fm.segments[s].fracture, fm.segments[s].s_mid,
                   state[grid.cell_count() + s]);
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<char, 8> kMagic = {'F', 'R', 'M', 'S', 'N', 'L', 'M', 'C'};

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b;
    for (int k = 0; k < 8; ++k) b[static_cast<std::size_t>(k)] = static_cast<char>((v >> (8 * k)) & 0xffu);
    out.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
    std::array<unsigned char, 8> b;
    if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw std::runtime_error("NLMC cache: truncated file");
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | b[static_cast<std::size_t>(k)];
    return v;
}

void put_i64(std::ostream& out, std::int64_t v) { put_u64(out, static_cast<std::uint64_t>(v)); }
std::int64_t get_i64(std::istream& in) { return static_cast<std::int64_t>(get_u64(in)); }
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_matrix(std::ostream& out, const linalg::SparseMatrix& m) {
    put_i64(out, m.rows());
    put_i64(out, m.cols());
    put_i64(out, m.nonZeros());
    for (linalg::Index r = 0; r < m.outerSize(); ++r)
        for (linalg::SparseMatrix::InnerIterator it(m, r); it; ++it) {
            put_i64(out, it.row());
            put_i64(out, it.col());
            put_f64(out, it.value());
        }
}

linalg::SparseMatrix get_matrix(std::istream& in) {
    const auto rows = get_i64(in), cols = get_i64(in), nnz = get_i64(in);
    if (rows < 0 || cols < 0 || nnz < 0) throw std::runtime_error("NLMC cache: negative matrix dimensions");
    std::vector<linalg::Triplet> t;
    t.reserve(static_cast<std::size_t>(nnz));
    for (std::int64_t k = 0; k < nnz; ++k) {
        const auto r = get_i64(in), c = get_i64(in);
        const double v = get_f64(in);
        if (r < 0 || r >= rows || c < 0 || c >= cols) throw std::runtime_error("NLMC cache: entry out of range");
        t.emplace_back(r, c, v);
    }
    return linalg::from_triplets(rows, cols, t);
}

} // namespace

void write_nlmc_cache(std::ostream& out, const NlmcCacheKey& key, const linalg::SparseMatrix& projection,
                      const linalg::SparseMatrix& stiffness) {
    out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
    put_u64(out, kCacheVersion);
    put_u64(out, key.geometry_hash);
    put_u64(out, key.params_hash);
    for (auto v : {key.nx, key.ny, key.inter_nx, key.inter_ny, key.layers}) put_i64(out, v);
    put_matrix(out, projection);
    put_matrix(out, stiffness);
    if (!out) throw std::runtime_error("NLMC cache: write failed");
}

std::optional<NlmcCacheEntry> read_nlmc_cache(std::istream& in, const NlmcCacheKey& key) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), 8) || magic != kMagic) throw std::runtime_error("NLMC cache: bad magic");
    if (const auto version = get_u64(in); version != kCacheVersion)
        throw std::runtime_error(fmt::format("NLMC cache: unsupported version {}", version));
    NlmcCacheKey stored;
    stored.geometry_hash = get_u64(in);
    stored.params_hash = get_u64(in);
    stored.nx = get_i64(in);
    stored.ny = get_i64(in);
    stored.inter_nx = get_i64(in);
    stored.inter_ny = get_i64(in);
    stored.layers = get_i64(in);
    if (!(stored == key)) return std::nullopt;
    NlmcCacheEntry e;
    e.projection = get_matrix(in);
    e.stiffness = get_matrix(in);
    return e;
}

std::string cache_file_name(const NlmcCacheKey& key) {
    return fmt::format("nlmc_{:016x}_{:016x}_{}x{}_{}x{}_s{}.bin", key.geometry_hash, key.params_hash, key.nx, key.ny,
                       key.inter_nx, key.inter_ny, key.layers);
}

} // namespace fracms::io
