#pragma once

#include "fracms/fine_model.hpp"
#include "fracms/linalg.hpp"
#include "fracms/mesh.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fracms::io {

/// Geometry text: one fracture per record, `x1 y1 x2 y2 [x3 y3 ...]`; `#` starts a comment.
std::vector<Fracture> parse_geometry(std::istream& in, const std::string& source_name = "<stream>");
std::vector<Fracture> read_geometry(const std::filesystem::path& path);
void write_geometry(std::ostream& out, const std::vector<Fracture>& fractures);

inline constexpr int kGeneratorVersion = 1;

/// N straight fractures with uniformly distributed centre and orientation and length
/// uniform in [0.05, 0.3], resampled until both endpoints lie in the unit square.
/// The output for a given seed is fixed for a given kGeneratorVersion.
std::vector<Fracture> generate_fractures(int count, std::uint64_t seed);

/// FNV-1a over the vertex coordinates.
std::uint64_t geometry_hash(const std::vector<Fracture>& fractures);
std::uint64_t params_hash(const PhysicalParams& params);

/// Legacy VTK structured-points file with the matrix pressure as cell data.
void write_vtk(std::ostream& out, const FineGrid& grid, const linalg::Vector& state, const std::string& name);

/// CSV `fracture_id,s_mid,p` with one row per fracture segment.
void write_fracture_csv(std::ostream& out, const FineGrid& grid, const FractureMesh& fm, const linalg::Vector& state);

struct NlmcCacheKey {
    std::uint64_t geometry_hash = 0;
    std::uint64_t params_hash = 0;
    std::int64_t nx = 0, ny = 0;
    std::int64_t inter_nx = 0, inter_ny = 0;
    std::int64_t layers = 0;

    bool operator==(const NlmcCacheKey&) const = default;
};

/// Binary cache of R and the upscaled stiffness: magic "FRMSNLMC", u64 version,
/// the key fields, then each matrix as i64 rows, i64 cols, i64 nnz and nnz
/// (i64 row, i64 col, f64 value) triplets. All fields little-endian, 64-bit.
inline constexpr std::uint64_t kCacheVersion = 1;

void write_nlmc_cache(std::ostream& out, const NlmcCacheKey& key, const linalg::SparseMatrix& projection,
                      const linalg::SparseMatrix& stiffness);

struct NlmcCacheEntry {
    linalg::SparseMatrix projection;
    linalg::SparseMatrix stiffness;
};

/// std::nullopt when the stored key differs; throws std::runtime_error on a malformed file.
std::optional<NlmcCacheEntry> read_nlmc_cache(std::istream& in, const NlmcCacheKey& key);

std::string cache_file_name(const NlmcCacheKey& key);

} // namespace fracms::io
