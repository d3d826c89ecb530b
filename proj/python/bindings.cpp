#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "flexamg/cycle.hpp"
#include "flexamg/errors.hpp"
#include "flexamg/evolution.hpp"
#include "flexamg/grammar.hpp"
#include "flexamg/harness.hpp"
#include "flexamg/krylov.hpp"
#include "flexamg/problems.hpp"

namespace py = pybind11;
using namespace flexamg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

template <class T>
py::array_t<T> to_numpy(std::span<const T> s)
{
    py::array_t<T> out(static_cast<py::ssize_t>(s.size()));
    std::copy(s.begin(), s.end(), out.mutable_data());
    return out;
}

std::span<const double> view(const Array& a)
{
    if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
    return {a.data(), static_cast<std::size_t>(a.size())};
}

SparseMatrix csr_from_arrays(Index rows, Index cols, const py::array_t<std::int64_t>& indptr,
                             const py::array_t<std::int64_t>& indices, const Array& data)
{
    std::vector<Index> p(indptr.data(), indptr.data() + indptr.size());
    std::vector<Index> c(indices.data(), indices.data() + indices.size());
    std::vector<double> v(data.data(), data.data() + data.size());
    return SparseMatrix(rows, cols, std::move(p), std::move(c), std::move(v));
}

py::dict report_dict(const SolveReport& r)
{
    py::dict d;
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    d["stagnated"] = r.stagnated;
    d["diverged"] = r.diverged;
    d["final_rel_residual"] = r.final_rel_residual;
    d["final_abs_residual"] = r.final_abs_residual;
    d["work_units_per_iteration"] = r.work_units_per_iteration;
    d["residual_history"] = r.residual_history;
    return d;
}

SolverParams solver_params(double rtol, double atol, Index restart, Index maxiter)
{
    SolverParams p;
    p.rtol = rtol;
    p.atol = atol;
    p.restart = restart;
    p.maxiter = maxiter;
    p.record_history = true;
    return p;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Flexible AMG cycles and their grammar-guided search";

    py::register_exception<StructuralError>(m, "StructuralError", PyExc_ValueError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<SetupError>(m, "SetupError", PyExc_RuntimeError);
    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_RuntimeError);

    py::class_<SparseMatrix>(m, "SparseMatrix")
        .def(py::init(&csr_from_arrays), py::arg("rows"), py::arg("cols"), py::arg("indptr"), py::arg("indices"),
             py::arg("data"))
        .def_property_readonly("shape", [](const SparseMatrix& a) { return py::make_tuple(a.rows(), a.cols()); })
        .def_property_readonly("nnz", &SparseMatrix::nnz)
        .def_property_readonly("indptr", [](const SparseMatrix& a) { return to_numpy(a.row_offsets()); })
        .def_property_readonly("indices", [](const SparseMatrix& a) { return to_numpy(a.col_indices()); })
        .def_property_readonly("data", [](const SparseMatrix& a) { return to_numpy(a.values()); })
        .def("at", &SparseMatrix::at)
        .def("__matmul__", [](const SparseMatrix& a, const Array& x) {
            const Vector y = spmv(a, view(x));
            return to_numpy<double>(y);
        })
        .def("transpose", [](const SparseMatrix& a) { return transpose(a); })
        .def("__eq__", [](const SparseMatrix& a, const SparseMatrix& b) { return a == b; });

    m.def("rap", &rap, py::arg("r"), py::arg("a"), py::arg("p"));

    py::class_<ProblemInstance>(m, "Problem")
        .def_readonly("name", &ProblemInstance::name)
        .def_readonly("matrix", &ProblemInstance::matrix)
        .def_property_readonly("rhs", [](const ProblemInstance& p) { return to_numpy<double>(p.rhs); })
        .def_property_readonly("block_offsets", [](const ProblemInstance& p) { return p.row_partition.offsets; });

    m.def("poisson_2d", &poisson_2d, py::arg("n"), py::arg("blocks") = default_partition_blocks);
    m.def("anisotropic_2d", &anisotropic_2d, py::arg("n"), py::arg("epsilon"),
          py::arg("blocks") = default_partition_blocks);
    m.def(
        "coupled_thermoelastic_2d",
        [](Index nx, Index ny, Index blocks) { return coupled_thermoelastic_2d(nx, ny, {}, blocks); },
        py::arg("nx"), py::arg("ny"), py::arg("blocks") = default_partition_blocks);
    m.def(
        "make_problem", [](const std::string& spec) { return make_problem(ProblemSpec::parse(spec)); },
        py::arg("spec"));

    py::class_<AmgHierarchy>(m, "Hierarchy")
        .def_property_readonly("depth", &AmgHierarchy::depth)
        .def_property_readonly("sizes", [](const AmgHierarchy& h) { return h.stats().sizes; })
        .def_property_readonly("operator_complexity", [](const AmgHierarchy& h) { return h.stats().operator_complexity; })
        .def("operator", [](const AmgHierarchy& h, Index l) { return h.levels.at(l).a; }, py::arg("level"))
        .def("interpolation", [](const AmgHierarchy& h, Index l) { return h.levels.at(l).p; }, py::arg("level"))
        .def("stats_json", &AmgHierarchy::stats_json);

    m.def(
        "build_hierarchy",
        [](const ProblemInstance& p, double theta, Index max_levels) {
            SetupParams s;
            s.strength_threshold = theta;
            s.max_levels = max_levels;
            return build_hierarchy(p.matrix, s, p.row_partition);
        },
        py::arg("problem"), py::arg("strength_threshold") = SetupParams{}.strength_threshold,
        py::arg("max_levels") = SetupParams{}.max_levels);

    py::class_<CycleIR>(m, "Cycle")
        .def_readonly("n_flex", &CycleIR::n_flex)
        .def_property_readonly("length", [](const CycleIR& c) { return c.ops.size(); })
        .def("to_text", [](const CycleIR& c) { return to_text(c); })
        .def("to_json", [](const CycleIR& c) { return to_json(c); })
        .def("trace", [](const CycleIR& c) { return trace_table(c); })
        .def("__eq__", [](const CycleIR& a, const CycleIR& b) { return a == b; })
        .def("__repr__", [](const CycleIR& c) { return "<Cycle " + to_compact(c) + ">"; });

    m.def("parse_cycle", &parse_cycle_text, py::arg("text"));
    m.def("reference_names", &reference_names);
    m.def("encode_reference", &encode_reference, py::arg("name"), py::arg("hierarchy"));
    m.def(
        "validate",
        [](const CycleIR& c, const AmgHierarchy& h) {
            std::vector<std::string> out;
            for (const auto& v : validate(c, h).violations) out.push_back(v.message);
            return out;
        },
        py::arg("cycle"), py::arg("hierarchy"));
    m.def(
        "execute",
        [](const CycleIR& c, const AmgHierarchy& h, const Array& b) { return to_numpy<double>(execute(c, h, view(b))); },
        py::arg("cycle"), py::arg("hierarchy"), py::arg("b"));
    m.def("cycle_work_units", &cycle_work_units, py::arg("cycle"), py::arg("hierarchy"));

    m.def(
        "gmres",
        [](const SparseMatrix& a, const Array& b, const CycleIR* cycle, const AmgHierarchy* h, double rtol,
           double atol, Index restart, Index maxiter) {
            const SolverParams p = solver_params(rtol, atol, restart, maxiter);
            SolveResult r;
            {
                py::gil_scoped_release release;
                if (cycle) {
                    if (!h) throw UsageError("a cycle needs its hierarchy");
                    r = gmres(a, view(b), *cycle, *h, p);
                } else {
                    r = gmres(a, view(b), p);
                }
            }
            return py::make_tuple(to_numpy<double>(r.x), report_dict(r.report));
        },
        py::arg("a"), py::arg("b"), py::arg("cycle") = nullptr, py::arg("hierarchy") = nullptr,
        py::arg("rtol") = SolverParams{}.rtol, py::arg("atol") = SolverParams{}.atol,
        py::arg("restart") = SolverParams{}.restart, py::arg("maxiter") = SolverParams{}.maxiter);

    py::class_<Grammar>(m, "Grammar")
        .def_static("for_hierarchy", &Grammar::for_hierarchy, py::arg("hierarchy"),
                    py::arg("depth_limit") = default_depth_limit, py::arg("max_flex") = default_n_flex)
        .def_property_readonly("n_flex", &Grammar::n_flex)
        .def_property_readonly("depth_limit", &Grammar::depth_limit);

    py::class_<Genotype>(m, "Genotype")
        .def_readonly("cycle", &Genotype::ir)
        .def_readonly("key", &Genotype::key)
        .def("sexpr", [](const Genotype& g) { return to_sexpr(g.root); })
        .def_property_readonly("depth", [](const Genotype& g) { return tree_depth(g.root); });

    m.def(
        "derive_random", [](const Grammar& g, std::uint64_t seed) { return derive_random(g, seed); },
        py::arg("grammar"), py::arg("seed"));
    m.def(
        "crossover",
        [](const Grammar& g, const Genotype& a, const Genotype& b, std::uint64_t seed) {
            Rng rng(seed);
            return crossover(g, a, b, rng);
        },
        py::arg("grammar"), py::arg("a"), py::arg("b"), py::arg("seed"));
    m.def(
        "mutate",
        [](const Grammar& g, const Genotype& a, std::uint64_t seed) {
            Rng rng(seed);
            return mutate(g, a, rng);
        },
        py::arg("grammar"), py::arg("parent"), py::arg("seed"));
    m.def(
        "genotype_from_sexpr",
        [](const Grammar& g, const std::string& text) { return make_genotype(g, parse_sexpr(text)); },
        py::arg("grammar"), py::arg("text"));

    m.def(
        "nondominated_sort",
        [](const std::vector<std::pair<double, double>>& pts) {
            std::vector<Point> p;
            for (const auto& [a, b] : pts) p.push_back({a, b});
            return nondominated_sort(p);
        },
        py::arg("points"));
    m.def(
        "crowding_distance",
        [](const std::vector<std::pair<double, double>>& pts, const std::vector<std::size_t>& front) {
            std::vector<Point> p;
            for (const auto& [a, b] : pts) p.push_back({a, b});
            return crowding_distance(p, front);
        },
        py::arg("points"), py::arg("front"));

    m.def(
        "evaluate_fitness",
        [](const CycleIR& c, const ProblemInstance& p, const AmgHierarchy& h, const std::string& cost_mode) {
            const Fitness f = evaluate_fitness(c, p, h, SolverParams{}, parse_cost_mode(cost_mode));
            return py::make_tuple(f.time_per_iteration, f.iterations, f.feasible);
        },
        py::arg("cycle"), py::arg("problem"), py::arg("hierarchy"), py::arg("cost_mode") = "work-units");

    m.def(
        "optimize",
        [](const std::string& config_text, const std::vector<std::string>& overrides) {
            RunConfig c = parse_config(config_text);
            for (const auto& o : overrides) c.apply_override(o);
            std::ostringstream log;
            OptimizeSummary s;
            {
                py::gil_scoped_release release;
                s = cmd_optimize(c, log);
            }
            return py::make_tuple(s.out_dir, s.front_size, log.str());
        },
        py::arg("config"), py::arg("overrides") = std::vector<std::string>{});
    m.def(
        "config_hash", [](const std::string& text) { return parse_config(text).hash(); }, py::arg("config"));
}
