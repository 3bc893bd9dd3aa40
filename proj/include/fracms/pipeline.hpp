#pragma once

#include "fracms/config.hpp"
#include "fracms/fine_model.hpp"
#include "fracms/gmsfem.hpp"
#include "fracms/mesh.hpp"
#include "fracms/metrics.hpp"
#include "fracms/nlmc.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fracms {

/// Text of the frozen standard test geometry (data/standard_geometry.txt).
std::string_view standard_geometry_text();
std::vector<Fracture> standard_geometry();

/// Fractures selected by the configuration: generated when gen_fractures > 0,
/// otherwise read from `geometry` ("standard" names the frozen geometry).
std::vector<Fracture> load_geometry(const RunConfig& cfg);

/// Fine and intermediate discretization of one configuration.
struct Problem {
    RunConfig config;
    std::vector<Fracture> fractures;
    FineGrid grid;
    FractureNetworkSet networks;
    FractureMesh fracture_mesh;
    IntermediateGrid intermediate;
    PhysicalParams params;
    FineSystem system;
    linalg::SparseMatrix averaging;
    linalg::Vector fine_weights;
};

Problem setup_problem(const RunConfig& cfg);

/// NLMC model for `layers`, read from or written to cfg.cache_dir when it is set.
NlmcModel obtain_nlmc(const Problem& problem, int layers, bool* cache_hit = nullptr);

ErrorContext error_context(const Problem& problem, const NlmcModel& nlmc);

/// Wall-clock seconds per named stage, in insertion order of first use.
class Timings {
public:
    void add(const std::string& stage, double seconds);
    const std::vector<std::pair<std::string, double>>& entries() const noexcept { return entries_; }

private:
    std::vector<std::pair<std::string, double>> entries_;
};

/// Runs one mode and writes its artifacts into cfg.out: error CSVs, VTK
/// snapshots, fracture pressure CSVs and manifest.json. Progress goes to `log`.
/// Returns 0 on success; configuration errors propagate as std::invalid_argument.
int run(Mode mode, const RunConfig& cfg, std::ostream& log);

} // namespace fracms
