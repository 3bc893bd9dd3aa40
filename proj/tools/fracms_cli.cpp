// Command-line driver: fracms --mode sweep-s --out results/

#include "fracms/config.hpp"
#include "fracms/io.hpp"
#include "fracms/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <optional>

int main(int argc, char** argv) {
    CLI::App app{"Multiscale simulation of flow in fractured porous media (fine, NLMC, GMsFEM)"};

    std::string config_path, mode_name = "full-compare", write_geometry_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> gen_fractures, layers, nbasis, threads;
    std::optional<std::string> out_dir, geometry, cache_dir;
    std::vector<std::string> settings;
    bool desk = false, print_config = false;

    app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--mode", mode_name, "fine | nlmc | gmsfem | sweep-s | sweep-m | full-compare")
        ->capture_default_str();
    app.add_option("--seed", seed, "Seed of the fracture generator");
    app.add_option("--gen-fractures", gen_fractures, "Generate N random fractures instead of reading a geometry");
    app.add_option("--geometry", geometry, "Geometry file, or 'standard' for the frozen test geometry");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--layers", layers, "NLMC oversampling layers s");
    app.add_option("--nbasis", nbasis, "GMsFEM basis functions per neighbourhood M");
    app.add_option("--threads", threads, "Worker threads for basis construction (0 = all cores)");
    app.add_option("--cache-dir", cache_dir, "Directory for cached NLMC operators");
    app.add_option("--set", settings, "Override any configuration key: --set key=value (repeatable)");
    app.add_flag("--desk", desk, "Start from the half-resolution configuration instead of the full one");
    app.add_flag("--print-config", print_config, "Print the resolved configuration and exit");
    app.add_option("--write-geometry", write_geometry_path, "Write the selected fracture geometry to a file and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        fracms::RunConfig cfg = desk ? fracms::desk_config() : fracms::default_paper_config();
        if (!config_path.empty()) cfg = fracms::read_config(config_path, cfg);
        for (const auto& s : settings) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw std::invalid_argument(fmt::format("--set expects key=value, got '{}'", s));
            fracms::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
        }
        if (app.count("--mode") || config_path.empty()) cfg.mode = fracms::parse_mode(mode_name);
        if (seed) cfg.seed = *seed;
        if (gen_fractures) cfg.gen_fractures = *gen_fractures;
        if (geometry) cfg.geometry = *geometry;
        if (out_dir) cfg.out = *out_dir;
        if (layers) cfg.layers = *layers;
        if (nbasis) cfg.nbasis = *nbasis;
        if (threads) cfg.threads = *threads;
        if (cache_dir) cfg.cache_dir = *cache_dir;
        cfg.validate();

        if (print_config) {
            std::cout << cfg.to_text();
            return 0;
        }
        if (!write_geometry_path.empty()) {
            std::ofstream out(write_geometry_path);
            if (!out) throw std::runtime_error(fmt::format("cannot write {}", write_geometry_path));
            fracms::io::write_geometry(out, fracms::load_geometry(cfg));
            return 0;
        }
        return fracms::run(cfg.mode, cfg, std::cerr);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
