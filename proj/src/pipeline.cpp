#include "fracms/pipeline.hpp"

#include "fracms/io.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <type_traits>

namespace fracms {

namespace fs = std::filesystem;
using linalg::Vector;

std::vector<Fracture> standard_geometry() {
    std::istringstream in{std::string(standard_geometry_text())};
    return io::parse_geometry(in, "standard_geometry.txt");
}

std::vector<Fracture> load_geometry(const RunConfig& cfg) {
    if (cfg.gen_fractures > 0) return io::generate_fractures(cfg.gen_fractures, cfg.seed);
    if (cfg.geometry == "standard") return standard_geometry();
    return io::read_geometry(cfg.geometry);
}

Problem setup_problem(const RunConfig& cfg) {
    cfg.validate();
    Problem p;
    p.config = cfg;
    p.fractures = load_geometry(cfg);
    p.grid = build_fine_grid(cfg.nx, cfg.ny);
    p.networks = identify_networks(p.fractures);
    p.fracture_mesh = clip_fractures(p.grid, p.networks);
    p.intermediate = build_intermediate_grid(p.grid, cfg.inter_nx, cfg.inter_ny, p.fracture_mesh);
    p.params = cfg.params();
    p.system = assemble_fine(p.grid, p.networks, p.fracture_mesh, p.params, cfg.source());
    p.averaging = averaging_operator(p.intermediate, p.fracture_mesh);
    p.fine_weights = fine_measures(p.grid, p.fracture_mesh);
    return p;
}

NlmcModel obtain_nlmc(const Problem& p, int layers, bool* cache_hit) {
    if (cache_hit) *cache_hit = false;
    const auto& cfg = p.config;
    if (cfg.cache_dir.empty())
        return build_nlmc(p.intermediate, p.fracture_mesh, p.system, p.params, layers, cfg.threads);

    const io::NlmcCacheKey key{io::geometry_hash(p.fractures), io::params_hash(p.params), cfg.nx, cfg.ny,
                               cfg.inter_nx, cfg.inter_ny, layers};
    const fs::path file = fs::path(cfg.cache_dir) / io::cache_file_name(key);
    if (fs::exists(file)) {
        std::ifstream in(file, std::ios::binary);
        if (auto entry = io::read_nlmc_cache(in, key)) {
            if (cache_hit) *cache_hit = true;
            NlmcModel m = upscale(std::move(entry->projection), p.system, p.intermediate, p.params);
            m.layers = layers;
            return m;
        }
    }
    NlmcModel m = build_nlmc(p.intermediate, p.fracture_mesh, p.system, p.params, layers, cfg.threads);
    fs::create_directories(cfg.cache_dir);
    std::ofstream out(file, std::ios::binary);
    io::write_nlmc_cache(out, key, m.projection, m.stiffness);
    return m;
}

ErrorContext error_context(const Problem& p, const NlmcModel& nlmc) {
    return ErrorContext{p.averaging, nlmc.projection, p.fine_weights};
}

void Timings::add(const std::string& stage, double seconds) {
    for (auto& [name, total] : entries_)
        if (name == stage) {
            total += seconds;
            return;
        }
    entries_.emplace_back(stage, seconds);
}

namespace {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

template <class F>
auto timed(Timings& t, const std::string& stage, F&& fn) {
    Stopwatch sw;
    if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        t.add(stage, sw.seconds());
    } else {
        auto result = fn();
        t.add(stage, sw.seconds());
        return result;
    }
}

std::uint64_t text_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Collects artifact names and writes files relative to the output directory.
class Output {
public:
    explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    template <class Writer>
    void write(const std::string& name, Writer&& writer) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw std::runtime_error(fmt::format("cannot write {}", (dir_ / name).string()));
        writer(out);
        if (!out) throw std::runtime_error(fmt::format("write failed for {}", (dir_ / name).string()));
        files_.push_back(name);
    }

    const std::vector<std::string>& files() const noexcept { return files_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

struct Context {
    const RunConfig& cfg;
    std::ostream& log;
    Timings timings;
    Output out;
    nlohmann::json results = nlohmann::json::object();
};

std::vector<double> time_axis(const Trajectory& t) {
    std::vector<double> time;
    for (int n = 1; n <= t.steps(); ++n) time.push_back(t.time(n));
    return time;
}

std::vector<double> errors_or_explain(const ErrorContext& ectx, const Trajectory& fine, const Trajectory& cand,
                                      Level level) {
    try {
        return compare_trajectories(ectx, fine, cand, level);
    } catch (const ZeroReferenceError&) {
        throw std::runtime_error(
            "the fine reference solution is zero at some step, so relative errors are undefined "
            "(check that the source rectangles intersect a fracture or use source_target = matrix)");
    }
}

void write_snapshots(Context& c, const Problem& p, const std::string& prefix, const Trajectory& fine_level) {
    for (int n : c.cfg.snapshots) {
        const Vector& state = fine_level.states[static_cast<std::size_t>(n)];
        c.out.write(fmt::format("{}_step{:03}.vtk", prefix, n), [&](std::ostream& os) {
            io::write_vtk(os, p.grid, state, fmt::format("{} matrix pressure, step {}", prefix, n));
        });
        c.out.write(fmt::format("{}_fractures_step{:03}.csv", prefix, n),
                    [&](std::ostream& os) { io::write_fracture_csv(os, p.grid, p.fracture_mesh, state); });
    }
}

void write_intermediate_snapshots(Context& c, const Problem& p, const std::string& prefix, const Trajectory& t) {
    const FineGrid coarse_view(p.intermediate.nx(), p.intermediate.ny());
    for (int n : c.cfg.snapshots)
        c.out.write(fmt::format("{}_step{:03}.vtk", prefix, n), [&](std::ostream& os) {
            io::write_vtk(os, coarse_view, t.states[static_cast<std::size_t>(n)],
                          fmt::format("{} intermediate matrix pressure, step {}", prefix, n));
        });
}

Trajectory to_fine(const Trajectory& t, const linalg::SparseMatrix& projection) {
    Trajectory f{t.tau, {}};
    f.states.reserve(t.states.size());
    for (const auto& s : t.states) f.states.push_back(projection.transpose() * s);
    return f;
}

Trajectory run_fine(Context& c, const Problem& p) {
    c.log << fmt::format("fine: {} matrix + {} fracture dofs, {} steps\n", p.system.matrix_dofs,
                         p.system.fracture_dofs, c.cfg.n_steps);
    return timed(c.timings, "fine_solve", [&] {
        return simulate_fine(p.system, Vector::Zero(p.system.size()), c.cfg.tau, c.cfg.n_steps);
    });
}

struct NlmcRun {
    NlmcModel model;
    Trajectory trajectory;
    std::vector<double> e_i, e_f;
};

NlmcRun run_nlmc(Context& c, const Problem& p, const Trajectory& fine, int layers) {
    NlmcRun r;
    bool hit = false;
    r.model = timed(c.timings, fmt::format("nlmc_basis_s{}", layers), [&] { return obtain_nlmc(p, layers, &hit); });
    c.log << fmt::format("nlmc s={}: {} dofs{}\n", layers, r.model.size(), hit ? " (cached)" : "");
    r.trajectory = timed(c.timings, fmt::format("nlmc_solve_s{}", layers), [&] {
        return simulate_intermediate(r.model, Vector::Zero(r.model.size()), c.cfg.tau, c.cfg.n_steps);
    });
    const ErrorContext ectx = error_context(p, r.model);
    r.e_i = errors_or_explain(ectx, fine, r.trajectory, Level::intermediate);
    r.e_f = errors_or_explain(ectx, fine, r.trajectory, Level::fine);
    c.log << fmt::format("nlmc s={}: final e_FI_I = {:.6g}%, e_FI_F = {:.6g}%\n", layers, r.e_i.back(), r.e_f.back());
    return r;
}

struct GmsfemRun {
    GmsfemBuild build;
    Trajectory intermediate;
    std::vector<double> e_i, e_f;
};

GmsfemRun run_gmsfem(Context& c, const Problem& p, const Trajectory& fine, const NlmcModel& nlmc, GridSize g,
                     int nbasis) {
    GmsfemRun r;
    const std::string tag = fmt::format("{}x{}_M{}", g.nx, g.ny, nbasis);
    const CoarseGrid cg = build_coarse_grid(p.intermediate, g.nx, g.ny);
    r.build = timed(c.timings, "gmsfem_basis_" + tag, [&] {
        return build_gmsfem(nlmc, p.intermediate, cg, p.params, GmsfemOptions{nbasis, c.cfg.threads, 1e-10});
    });
    const Trajectory coarse = timed(c.timings, "gmsfem_solve_" + tag, [&] {
        return simulate_coarse(r.build.model, Vector::Zero(r.build.model.size()), c.cfg.tau, c.cfg.n_steps);
    });
    r.intermediate = to_fine(coarse, r.build.model.projection);
    const ErrorContext ectx = error_context(p, nlmc);
    r.e_i = errors_or_explain(ectx, fine, r.intermediate, Level::intermediate);
    r.e_f = errors_or_explain(ectx, fine, r.intermediate, Level::fine);
    c.log << fmt::format("gmsfem {}: {} dofs ({} dropped), final e_IC_I = {:.6g}%, e_IC_F = {:.6g}%\n", tag,
                         r.build.model.size(), r.build.model.dropped, r.e_i.back(), r.e_f.back());
    return r;
}

void write_errors(Context& c, const std::string& name, const ErrorReport& report) {
    c.out.write(name, [&](std::ostream& os) { write_error_csv(os, report); });
}

void mode_fine(Context& c, const Problem& p) {
    const Trajectory fine = run_fine(c, p);
    write_snapshots(c, p, "fine", fine);
}

void mode_nlmc(Context& c, const Problem& p) {
    const Trajectory fine = run_fine(c, p);
    const NlmcRun r = run_nlmc(c, p, fine, c.cfg.layers);
    ErrorReport rep;
    rep.time = time_axis(fine);
    rep.fi_intermediate = r.e_i;
    rep.fi_fine = r.e_f;
    write_errors(c, fmt::format("errors_nlmc_s{}.csv", c.cfg.layers), rep);
    write_intermediate_snapshots(c, p, "nlmc", r.trajectory);
    write_snapshots(c, p, "nlmc_fine", to_fine(r.trajectory, r.model.projection));
    c.results["nlmc"] = {{"layers", c.cfg.layers},
                         {"dofs", r.model.size()},
                         {"e_FI_I", r.e_i.back()},
                         {"e_FI_F", r.e_f.back()}};
}

void mode_gmsfem(Context& c, const Problem& p, bool with_snapshots_of_fine) {
    const Trajectory fine = run_fine(c, p);
    if (with_snapshots_of_fine) write_snapshots(c, p, "fine", fine);
    const NlmcRun n = run_nlmc(c, p, fine, c.cfg.layers);
    c.results["nlmc"] = {{"layers", c.cfg.layers},
                         {"dofs", n.model.size()},
                         {"e_FI_I", n.e_i.back()},
                         {"e_FI_F", n.e_f.back()}};
    if (with_snapshots_of_fine) write_snapshots(c, p, "nlmc_fine", to_fine(n.trajectory, n.model.projection));
    c.results["gmsfem"] = nlohmann::json::array();
    for (const GridSize& g : c.cfg.coarse) {
        const GmsfemRun r = run_gmsfem(c, p, fine, n.model, g, c.cfg.nbasis);
        ErrorReport rep;
        rep.time = time_axis(fine);
        rep.fi_intermediate = n.e_i;
        rep.fi_fine = n.e_f;
        rep.ic_intermediate = r.e_i;
        rep.ic_fine = r.e_f;
        const std::string tag = fmt::format("{}x{}_M{}", g.nx, g.ny, c.cfg.nbasis);
        write_errors(c, "errors_gmsfem_" + tag + ".csv", rep);
        write_snapshots(c, p, "gmsfem_" + tag, to_fine(r.intermediate, n.model.projection));
        c.results["gmsfem"].push_back({{"coarse", fmt::format("{}x{}", g.nx, g.ny)},
                                       {"M", c.cfg.nbasis},
                                       {"dofs", r.build.model.size()},
                                       {"dropped", r.build.model.dropped},
                                       {"e_IC_I", r.e_i.back()},
                                       {"e_IC_F", r.e_f.back()}});
    }
}

void mode_sweep_s(Context& c, const Problem& p) {
    const Trajectory fine = run_fine(c, p);
    std::string table = "s,dof_I,e_FI_I,e_FI_F\n";
    c.results["sweep_s"] = nlohmann::json::array();
    for (int s : c.cfg.s_values) {
        const NlmcRun r = run_nlmc(c, p, fine, s);
        ErrorReport rep;
        rep.time = time_axis(fine);
        rep.fi_intermediate = r.e_i;
        rep.fi_fine = r.e_f;
        write_errors(c, fmt::format("errors_nlmc_s{}.csv", s), rep);
        table += fmt::format("{},{},{:.17g},{:.17g}\n", s, r.model.size(), r.e_i.back(), r.e_f.back());
        c.results["sweep_s"].push_back(
            {{"s", s}, {"dofs", r.model.size()}, {"e_FI_I", r.e_i.back()}, {"e_FI_F", r.e_f.back()}});
    }
    c.out.write("sweep_s.csv", [&](std::ostream& os) { os << table; });
}

void mode_sweep_m(Context& c, const Problem& p) {
    const Trajectory fine = run_fine(c, p);
    const NlmcRun n = run_nlmc(c, p, fine, c.cfg.layers);
    c.results["nlmc"] = {{"layers", c.cfg.layers},
                         {"dofs", n.model.size()},
                         {"e_FI_I", n.e_i.back()},
                         {"e_FI_F", n.e_f.back()}};
    c.results["sweep_m"] = nlohmann::json::array();
    for (const GridSize& g : c.cfg.coarse) {
        std::string table = "M,dof_C,dropped,e_IC_I,e_IC_F\n";
        for (int m : c.cfg.m_values) {
            const GmsfemRun r = run_gmsfem(c, p, fine, n.model, g, m);
            ErrorReport rep;
            rep.time = time_axis(fine);
            rep.ic_intermediate = r.e_i;
            rep.ic_fine = r.e_f;
            write_errors(c, fmt::format("errors_gmsfem_{}x{}_M{}.csv", g.nx, g.ny, m), rep);
            table += fmt::format("{},{},{},{:.17g},{:.17g}\n", m, r.build.model.size(), r.build.model.dropped,
                                 r.e_i.back(), r.e_f.back());
            c.results["sweep_m"].push_back({{"coarse", fmt::format("{}x{}", g.nx, g.ny)},
                                            {"M", m},
                                            {"dofs", r.build.model.size()},
                                            {"dropped", r.build.model.dropped},
                                            {"e_IC_I", r.e_i.back()},
                                            {"e_IC_F", r.e_f.back()}});
        }
        c.out.write(fmt::format("sweep_m_{}x{}.csv", g.nx, g.ny), [&](std::ostream& os) { os << table; });
    }
}

} // namespace

int run(Mode mode, const RunConfig& cfg_in, std::ostream& log) {
    RunConfig cfg = cfg_in;
    cfg.mode = mode;
    cfg.validate();

    Stopwatch total;
    Context c{cfg, log, {}, Output(cfg.out)};
    const Problem p = timed(c.timings, "setup", [&] { return setup_problem(cfg); });
    log << fmt::format("geometry: {} fractures in {} networks, {} segments; intermediate dofs {}\n",
                       p.fractures.size(), p.networks.network_count, p.fracture_mesh.size(),
                       p.intermediate.dof_count());

    switch (mode) {
    case Mode::fine: mode_fine(c, p); break;
    case Mode::nlmc: mode_nlmc(c, p); break;
    case Mode::gmsfem: mode_gmsfem(c, p, false); break;
    case Mode::sweep_s: mode_sweep_s(c, p); break;
    case Mode::sweep_m: mode_sweep_m(c, p); break;
    case Mode::full_compare: mode_gmsfem(c, p, true); break;
    }

    const std::string cfg_text = cfg.to_text();
    nlohmann::json manifest;
    manifest["mode"] = to_string(mode);
    manifest["config"] = cfg_text;
    manifest["config_hash"] = fmt::format("{:016x}", text_hash(cfg_text));
    manifest["geometry_hash"] = fmt::format("{:016x}", io::geometry_hash(p.fractures));
    manifest["generator_version"] = io::kGeneratorVersion;
    manifest["fractures"] = p.fractures.size();
    manifest["dofs"] = {{"fine_matrix", p.system.matrix_dofs},
                        {"fine_fracture", p.system.fracture_dofs},
                        {"intermediate", p.intermediate.dof_count()}};
    manifest["results"] = c.results;
    nlohmann::json timings = nlohmann::json::object();
    for (const auto& [stage, seconds] : c.timings.entries()) timings[stage] = seconds;
    timings["total"] = total.seconds();
    manifest["timings_seconds"] = timings;
    manifest["artifacts"] = c.out.files();
    c.out.write("manifest.json", [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
    log << fmt::format("wrote {} artifacts to {} in {:.2f} s\n", c.out.files().size(), cfg.out, total.seconds());
    return 0;
}

} // namespace fracms
