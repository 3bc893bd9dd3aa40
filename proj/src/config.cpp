#include "fracms/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fracms {

Mode parse_mode(const std::string& name) {
    if (name == "fine") return Mode::fine;
    if (name == "nlmc") return Mode::nlmc;
    if (name == "gmsfem") return Mode::gmsfem;
    if (name == "sweep-s") return Mode::sweep_s;
    if (name == "sweep-m") return Mode::sweep_m;
    if (name == "full-compare") return Mode::full_compare;
    throw std::invalid_argument(
        fmt::format("mode: unknown value '{}' (expected fine, nlmc, gmsfem, sweep-s, sweep-m, full-compare)", name));
}

std::string to_string(Mode mode) {
    switch (mode) {
    case Mode::fine: return "fine";
    case Mode::nlmc: return "nlmc";
    case Mode::gmsfem: return "gmsfem";
    case Mode::sweep_s: return "sweep-s";
    case Mode::sweep_m: return "sweep-m";
    case Mode::full_compare: return "full-compare";
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
    return parts;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    T value{};
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, value);
    if (ec != std::errc() || ptr != end || t.empty())
        throw std::invalid_argument(fmt::format("{}: cannot parse '{}' as a number", key, text));
    return value;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
    std::vector<int> out;
    for (const auto& p : split(text, ','))
        if (!p.empty()) out.push_back(parse_number<int>(key, p));
    if (out.empty()) throw std::invalid_argument(fmt::format("{}: empty list", key));
    return out;
}

GridSize parse_grid(const std::string& key, const std::string& text) {
    const auto parts = split(text, 'x');
    if (parts.size() != 2) throw std::invalid_argument(fmt::format("{}: expected NXxNY, got '{}'", key, text));
    return {parse_number<int>(key, parts[0]), parse_number<int>(key, parts[1])};
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += fmt::format("{}{}", k ? "," : "", v[k]);
    return s;
}

} // namespace

PhysicalParams RunConfig::params() const { return PhysicalParams::from_coefficients(a_m, a_f, b_m, b_f, sigma); }

SourceSpec RunConfig::source() const { return {sources, source_rate, source_target}; }

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = {
        "nx",       "ny",          "inter_nx",      "inter_ny",  "coarse",   "a_m",        "a_f",
        "b_m",      "b_f",         "sigma",         "tau",       "n_steps",  "layers",     "nbasis",
        "s_values", "m_values",    "sources",       "source_rate", "source_target", "geometry", "gen_fractures",
        "seed",     "snapshots",   "out",           "cache_dir", "mode",     "threads"};
    return k;
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& value) {
    const std::string key = trim(raw_key);
    const std::string v = trim(value);
    if (key == "nx") c.nx = parse_number<int>(key, v);
    else if (key == "ny") c.ny = parse_number<int>(key, v);
    else if (key == "inter_nx") c.inter_nx = parse_number<int>(key, v);
    else if (key == "inter_ny") c.inter_ny = parse_number<int>(key, v);
    else if (key == "coarse") {
        c.coarse.clear();
        for (const auto& p : split(v, ','))
            if (!p.empty()) c.coarse.push_back(parse_grid(key, p));
    }
    else if (key == "a_m") c.a_m = parse_number<double>(key, v);
    else if (key == "a_f") c.a_f = parse_number<double>(key, v);
    else if (key == "b_m") c.b_m = parse_number<double>(key, v);
    else if (key == "b_f") c.b_f = parse_number<double>(key, v);
    else if (key == "sigma") c.sigma = parse_number<double>(key, v);
    else if (key == "tau") c.tau = parse_number<double>(key, v);
    else if (key == "n_steps") c.n_steps = parse_number<int>(key, v);
    else if (key == "layers") c.layers = parse_number<int>(key, v);
    else if (key == "nbasis") c.nbasis = parse_number<int>(key, v);
    else if (key == "s_values") c.s_values = parse_int_list(key, v);
    else if (key == "m_values") c.m_values = parse_int_list(key, v);
    else if (key == "snapshots") c.snapshots = parse_int_list(key, v);
    else if (key == "sources") {
        c.sources.clear();
        for (const auto& r : split(v, ';')) {
            if (r.empty()) continue;
            const auto xs = split(r, ',');
            if (xs.size() != 4)
                throw std::invalid_argument(fmt::format("sources: rectangle '{}' needs x0,y0,x1,y1", r));
            c.sources.push_back({parse_number<double>(key, xs[0]), parse_number<double>(key, xs[1]),
                                 parse_number<double>(key, xs[2]), parse_number<double>(key, xs[3])});
        }
    }
    else if (key == "source_rate") c.source_rate = parse_number<double>(key, v);
    else if (key == "source_target") {
        if (v == "fractures") c.source_target = SourceTarget::fractures;
        else if (v == "matrix") c.source_target = SourceTarget::matrix;
        else throw std::invalid_argument(fmt::format("source_target: expected fractures or matrix, got '{}'", v));
    }
    else if (key == "geometry") c.geometry = v;
    else if (key == "gen_fractures") c.gen_fractures = parse_number<int>(key, v);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "out") c.out = v;
    else if (key == "cache_dir") c.cache_dir = v;
    else if (key == "mode") c.mode = parse_mode(v);
    else if (key == "threads") c.threads = parse_number<int>(key, v);
    else throw std::invalid_argument(fmt::format("unknown configuration key '{}'", key));
}

void RunConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    if (nx < 1 || ny < 1) fail(fmt::format("nx, ny: must be >= 1 (got {}x{})", nx, ny));
    if (inter_nx < 1 || inter_ny < 1 || nx % inter_nx != 0 || ny % inter_ny != 0)
        fail(fmt::format("inter_nx, inter_ny: {}x{} must divide the fine grid {}x{}", inter_nx, inter_ny, nx, ny));
    if (coarse.empty() && (mode == Mode::gmsfem || mode == Mode::sweep_m || mode == Mode::full_compare))
        fail("coarse: at least one coarse grid is required for this mode");
    for (const auto& g : coarse)
        if (g.nx < 1 || g.ny < 1 || inter_nx % g.nx != 0 || inter_ny % g.ny != 0)
            fail(fmt::format("coarse: {}x{} must divide the intermediate grid {}x{}", g.nx, g.ny, inter_nx, inter_ny));
    const std::pair<const char*, double> positive[] = {
        {"a_m", a_m}, {"a_f", a_f}, {"b_m", b_m}, {"b_f", b_f}, {"sigma", sigma}, {"tau", tau}};
    for (const auto& [name, v] : positive)
        if (!(v > 0.0)) fail(fmt::format("{}: must be positive (got {})", name, v));
    if (n_steps < 1) fail(fmt::format("n_steps: must be >= 1 (got {})", n_steps));
    if (layers < 1) fail(fmt::format("layers: must be >= 1 (got {})", layers));
    if (nbasis < 1) fail(fmt::format("nbasis: must be >= 1 (got {})", nbasis));
    for (int s : s_values)
        if (s < 1) fail(fmt::format("s_values: entries must be >= 1 (got {})", s));
    for (int m : m_values)
        if (m < 1) fail(fmt::format("m_values: entries must be >= 1 (got {})", m));
    for (int s : snapshots)
        if (s < 0 || s > n_steps) fail(fmt::format("snapshots: step {} outside [0, {}]", s, n_steps));
    for (const auto& r : sources)
        if (!(r.x0 >= 0.0 && r.y0 >= 0.0 && r.x1 <= 1.0 && r.y1 <= 1.0 && r.x0 <= r.x1 && r.y0 <= r.y1))
            fail(fmt::format("sources: rectangle [{}, {}]x[{}, {}] is not inside the unit square", r.x0, r.x1, r.y0,
                             r.y1));
    if (gen_fractures < 0) fail("gen_fractures: must be non-negative");
    if (gen_fractures == 0 && geometry.empty()) fail("geometry: a file, 'standard' or gen_fractures is required");
    if (out.empty()) fail("out: output directory must not be empty");
    if (threads < 0) fail("threads: must be non-negative");
}

std::string RunConfig::to_text() const {
    std::string s;
    auto line = [&s](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
    line("nx", std::to_string(nx));
    line("ny", std::to_string(ny));
    line("inter_nx", std::to_string(inter_nx));
    line("inter_ny", std::to_string(inter_ny));
    std::string cg;
    for (std::size_t k = 0; k < coarse.size(); ++k) cg += fmt::format("{}{}x{}", k ? "," : "", coarse[k].nx, coarse[k].ny);
    line("coarse", cg);
    line("a_m", fmt::format("{:.17g}", a_m));
    line("a_f", fmt::format("{:.17g}", a_f));
    line("b_m", fmt::format("{:.17g}", b_m));
    line("b_f", fmt::format("{:.17g}", b_f));
    line("sigma", fmt::format("{:.17g}", sigma));
    line("tau", fmt::format("{:.17g}", tau));
    line("n_steps", std::to_string(n_steps));
    line("layers", std::to_string(layers));
    line("nbasis", std::to_string(nbasis));
    line("s_values", join_ints(s_values));
    line("m_values", join_ints(m_values));
    std::string src;
    for (std::size_t k = 0; k < sources.size(); ++k)
        src += fmt::format("{}{:.17g},{:.17g},{:.17g},{:.17g}", k ? ";" : "", sources[k].x0, sources[k].y0,
                           sources[k].x1, sources[k].y1);
    line("sources", src);
    line("source_rate", fmt::format("{:.17g}", source_rate));
    line("source_target", source_target == SourceTarget::fractures ? "fractures" : "matrix");
    line("geometry", geometry);
    line("gen_fractures", std::to_string(gen_fractures));
    line("seed", std::to_string(seed));
    line("snapshots", join_ints(snapshots));
    line("out", out);
    line("cache_dir", cache_dir);
    line("mode", to_string(mode));
    line("threads", std::to_string(threads));
    return s;
}

RunConfig parse_config(std::istream& in, RunConfig base, const std::string& source_name) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(fmt::format("{}:{}: expected key = value", source_name, lineno));
        try {
            apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(fmt::format("{}:{}: {}", source_name, lineno, e.what()));
        }
    }
    return base;
}

RunConfig read_config(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument(fmt::format("cannot open configuration file {}", path));
    return parse_config(in, std::move(base), path);
}

RunConfig default_paper_config() { return RunConfig{}; }

RunConfig desk_config() {
    RunConfig c;
    c.nx = 100;
    c.ny = 100;
    c.inter_nx = 20;
    c.inter_ny = 20;
    c.coarse = {{5, 5}};
    return c;
}

} // namespace fracms
