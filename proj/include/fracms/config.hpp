#pragma once

#include "fracms/fine_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fracms {

enum class Mode { fine, nlmc, gmsfem, sweep_s, sweep_m, full_compare };

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

struct GridSize {
    int nx = 0;
    int ny = 0;

    bool operator==(const GridSize&) const = default;
};

/// Everything a run needs. Text form is one `key = value` per line; see `keys()`.
struct RunConfig {
    int nx = 200;
    int ny = 200;
    int inter_nx = 40;
    int inter_ny = 40;
    std::vector<GridSize> coarse = {{5, 5}, {10, 10}};

    double a_m = 1e-5;
    double a_f = 1e-6;
    double b_m = 1e-6;
    double b_f = 1.0;
    double sigma = 1e-4;

    double tau = 0.002;
    int n_steps = 50;
    int layers = 4;
    int nbasis = 8;
    std::vector<int> s_values = {1, 2, 3, 4, 6};
    std::vector<int> m_values = {1, 4, 8, 12, 16, 20, 24, 28};

    std::vector<Rect> sources = {{0.1, 0.05, 0.15, 0.1}, {0.6, 0.9, 0.65, 0.95}};
    double source_rate = 1e-3;
    SourceTarget source_target = SourceTarget::fractures;

    /// Path to a geometry file, or "standard" for the frozen test geometry. Ignored
    /// when gen_fractures > 0.
    std::string geometry = "standard";
    int gen_fractures = 0;
    std::uint64_t seed = 0;

    std::vector<int> snapshots = {10, 30, 50};
    std::string out = "out";
    std::string cache_dir;
    Mode mode = Mode::full_compare;
    int threads = 0;

    PhysicalParams params() const;
    SourceSpec source() const;

    /// Checks every module precondition; throws std::invalid_argument naming the field.
    void validate() const;

    /// Canonical `key = value` text (stable order), used for the run manifest hash.
    std::string to_text() const;

    static const std::vector<std::string>& keys();
};

/// Sets one field from its text form. Unknown keys and malformed values throw
/// std::invalid_argument.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Applies `key = value` lines (`#` comments, blank lines allowed) on top of `base`.
RunConfig parse_config(std::istream& in, RunConfig base = {}, const std::string& source_name = "<config>");
RunConfig read_config(const std::string& path, RunConfig base = {});

/// 200x200 fine, 40x40 intermediate, 5x5 and 10x10 coarse grids, a_m = 1e-5,
/// a_f = 1e-6, b_m = 1e-6, b_f = 1, sigma = 1e-4, tau = 0.002, 50 steps, p0 = 0,
/// q = 1e-3 on fractures in [0.1,0.15]x[0.05,0.1] and [0.6,0.65]x[0.9,0.95].
RunConfig default_paper_config();

/// Default configuration with every grid count halved: 100x100 fine, 20x20 intermediate
/// and the 10x10 coarse grid becoming 5x5 (5x5 cannot be halved and is dropped).
RunConfig desk_config();

} // namespace fracms
