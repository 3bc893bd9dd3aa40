#include "fracms/config.hpp"
#include "fracms/gmsfem.hpp"
#include "fracms/io.hpp"
#include "fracms/linalg.hpp"
#include "fracms/metrics.hpp"
#include "fracms/nlmc.hpp"
#include "fracms/pipeline.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace py = pybind11;
using namespace fracms;

namespace {

linalg::SparseMatrix to_sparse(const linalg::DenseMatrix& d) {
    std::vector<linalg::Triplet> t;
    for (linalg::Index r = 0; r < d.rows(); ++r)
        for (linalg::Index c = 0; c < d.cols(); ++c)
            if (d(r, c) != 0.0) t.emplace_back(r, c, d(r, c));
    return linalg::from_triplets(d.rows(), d.cols(), t);
}

using Polyline = std::vector<std::pair<double, double>>;

std::vector<Polyline> to_python(const std::vector<Fracture>& fractures) {
    std::vector<Polyline> out;
    for (const auto& f : fractures) {
        Polyline p;
        for (const auto& v : f.vertices) p.emplace_back(v.x, v.y);
        out.push_back(std::move(p));
    }
    return out;
}

/// Problem plus the fine reference trajectory, computed once per object.
class Study {
public:
    explicit Study(const RunConfig& cfg)
        : problem_(setup_problem(cfg)),
          fine_(simulate_fine(problem_.system, linalg::Vector::Zero(problem_.system.size()), cfg.tau, cfg.n_steps)) {}

    py::dict sizes() const {
        py::dict d;
        d["fractures"] = problem_.fractures.size();
        d["networks"] = problem_.networks.network_count;
        d["segments"] = problem_.fracture_mesh.size();
        d["fine"] = problem_.system.size();
        d["intermediate"] = problem_.intermediate.dof_count();
        return d;
    }

    linalg::Vector fine_state(int step) const { return fine_.states.at(static_cast<std::size_t>(step)); }

    py::dict nlmc(int layers) {
        const NlmcModel& m = model(layers);
        const Trajectory t = simulate_intermediate(m, linalg::Vector::Zero(m.size()), fine_.tau, fine_.steps());
        const ErrorContext ctx = error_context(problem_, m);
        py::dict d;
        d["dofs"] = m.size();
        d["e_I"] = compare_trajectories(ctx, fine_, t, Level::intermediate);
        d["e_F"] = compare_trajectories(ctx, fine_, t, Level::fine);
        d["final_state"] = t.states.back();
        d["max_constraint_residual"] = m.max_constraint_residual;
        return d;
    }

    py::dict gmsfem(int layers, int coarse_nx, int coarse_ny, int nbasis) {
        const NlmcModel& m = model(layers);
        const CoarseGrid cg = build_coarse_grid(problem_.intermediate, coarse_nx, coarse_ny);
        GmsfemOptions opts;
        opts.basis_count = nbasis;
        opts.threads = problem_.config.threads;
        const GmsfemBuild b = build_gmsfem(m, problem_.intermediate, cg, problem_.params, opts);
        const Trajectory tc = simulate_coarse(b.model, linalg::Vector::Zero(b.model.size()), fine_.tau, fine_.steps());
        Trajectory ti{tc.tau, {}};
        for (const auto& s : tc.states) ti.states.push_back(b.model.projection.transpose() * s);
        const ErrorContext ctx = error_context(problem_, m);
        py::dict d;
        d["dofs"] = b.model.size();
        d["dropped"] = b.model.dropped;
        d["e_I"] = compare_trajectories(ctx, fine_, ti, Level::intermediate);
        d["e_F"] = compare_trajectories(ctx, fine_, ti, Level::fine);
        return d;
    }

private:
    const NlmcModel& model(int layers) {
        auto it = models_.find(layers);
        if (it == models_.end()) it = models_.emplace(layers, obtain_nlmc(problem_, layers)).first;
        return it->second;
    }

    Problem problem_;
    Trajectory fine_;
    std::map<int, NlmcModel> models_;
};

} // namespace

PYBIND11_MODULE(_fracms, m) {
    m.doc() = "Fine, NLMC and GMsFEM models of flow in fractured porous media";

    py::register_exception<linalg::SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<ZeroReferenceError>(m, "ZeroReferenceError", PyExc_ValueError);

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def("set", &apply_setting, py::arg("key"), py::arg("value"), "Set one key from its text form")
        .def("validate", &RunConfig::validate)
        .def("to_text", &RunConfig::to_text)
        .def_readwrite("nx", &RunConfig::nx)
        .def_readwrite("ny", &RunConfig::ny)
        .def_readwrite("inter_nx", &RunConfig::inter_nx)
        .def_readwrite("inter_ny", &RunConfig::inter_ny)
        .def_readwrite("tau", &RunConfig::tau)
        .def_readwrite("n_steps", &RunConfig::n_steps)
        .def_readwrite("layers", &RunConfig::layers)
        .def_readwrite("nbasis", &RunConfig::nbasis)
        .def_readwrite("source_rate", &RunConfig::source_rate)
        .def_readwrite("geometry", &RunConfig::geometry)
        .def_readwrite("gen_fractures", &RunConfig::gen_fractures)
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("out", &RunConfig::out)
        .def_readwrite("cache_dir", &RunConfig::cache_dir)
        .def_readwrite("threads", &RunConfig::threads)
        .def("__repr__", [](const RunConfig& c) { return "RunConfig(\n" + c.to_text() + ")"; });

    m.def("default_paper_config", &default_paper_config);
    m.def("desk_config", &desk_config);
    m.def(
        "parse_config",
        [](const std::string& text, const RunConfig& base) {
            std::istringstream in(text);
            return parse_config(in, base);
        },
        py::arg("text"), py::arg("base") = RunConfig{});

    m.def(
        "run",
        [](const std::string& mode, const RunConfig& cfg) {
            py::gil_scoped_release release;
            return run(parse_mode(mode), cfg, std::cerr);
        },
        py::arg("mode"), py::arg("config"), "Run a pipeline mode and write its artifacts to config.out");

    m.def("generate_fractures", [](int count, std::uint64_t seed) { return to_python(io::generate_fractures(count, seed)); },
          py::arg("count"), py::arg("seed"));
    m.def("standard_geometry", [] { return to_python(standard_geometry()); });
    m.attr("GENERATOR_VERSION") = io::kGeneratorVersion;

    m.def(
        "relative_l2",
        [](const linalg::Vector& u, const linalg::Vector& v, const std::optional<linalg::Vector>& w) {
            return relative_l2(u, v, w.value_or(linalg::Vector{}));
        },
        py::arg("u"), py::arg("v"), py::arg("weights") = py::none(), "100 * ||u - v|| / ||v||");

    m.def(
        "saddle_solve",
        [](const linalg::DenseMatrix& a, const linalg::DenseMatrix& b, const linalg::Vector& g) {
            const auto s = linalg::saddle_solve(to_sparse(a), to_sparse(b), g);
            return py::make_tuple(s.primal, s.multipliers);
        },
        py::arg("a"), py::arg("b"), py::arg("g"), "Solve [A B^T; B 0][x; mu] = [0; g]");

    m.def(
        "sym_gen_eig",
        [](const linalg::DenseMatrix& a, const linalg::Vector& s, int count) {
            const auto p = linalg::sym_gen_eig(a, s, count);
            return py::make_tuple(p.values, p.vectors);
        },
        py::arg("a"), py::arg("s"), py::arg("count"), "Smallest eigenpairs of A x = lambda diag(s) x");

    py::class_<Study>(m, "Study", "Fine reference solution plus NLMC and GMsFEM comparisons for one configuration")
        .def(py::init<const RunConfig&>(), py::arg("config"))
        .def("sizes", &Study::sizes)
        .def("fine_state", &Study::fine_state, py::arg("step"))
        .def("nlmc", &Study::nlmc, py::arg("layers"))
        .def("gmsfem", &Study::gmsfem, py::arg("layers"), py::arg("coarse_nx"), py::arg("coarse_ny"),
             py::arg("nbasis"));
}
