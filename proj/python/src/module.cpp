#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "funspec/commands.hpp"
#include "funspec/config.hpp"
#include "funspec/covariance.hpp"
#include "funspec/cramer.hpp"
#include "funspec/errors.hpp"
#include "funspec/hfpca.hpp"
#include "funspec/io.hpp"
#include "funspec/parallel.hpp"
#include "funspec/spectral.hpp"

namespace py = pybind11;
using namespace funspec;

namespace pybind11::detail {

// Grids are shared as pointers to const; Python sees them through the
// non-const holder that the Grid class is registered with.
template <>
struct type_caster<GridPtr> {
  PYBIND11_TYPE_CASTER(GridPtr, const_name("Grid"));

  bool load(handle src, bool convert) {
    make_caster<std::shared_ptr<Grid>> inner;
    if (!inner.load(src, convert)) return false;
    value = cast_op<std::shared_ptr<Grid>>(std::move(inner));
    return true;
  }

  static handle cast(const GridPtr& src, return_value_policy policy, handle parent) {
    return make_caster<std::shared_ptr<Grid>>::cast(std::const_pointer_cast<Grid>(src), policy, parent);
  }
};

}  // namespace pybind11::detail

namespace {

PoleHandling parse_pole(const std::string& s) {
  if (s == "neighbor_mean") return PoleHandling::neighbor_mean;
  if (s == "exclude") return PoleHandling::exclude;
  throw DomainError("pole handling must be 'neighbor_mean' or 'exclude'");
}

FuncSeries make_series(const GridPtr& g, const Eigen::MatrixXcd& frames, std::optional<bool> real) {
  const bool is_real = real.value_or(frames.imag().cwiseAbs().maxCoeff() == 0.0);
  return FuncSeries(g, frames, is_real);
}

py::object frames_of(const FuncSeries& s) {
  if (s.is_real()) return py::cast(Eigen::MatrixXd(s.frames().real()));
  return py::cast(s.frames());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral analysis and simulation of functional time series";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<io::IoError>(m, "IoError", PyExc_OSError);

  m.def("num_threads", &num_threads);
  m.def("set_num_threads", &set_num_threads, py::arg("n"));

  py::class_<Grid, std::shared_ptr<Grid>>(m, "Grid")
      .def(py::init([](int n, const std::string& rule) {
             return std::const_pointer_cast<Grid>(Grid::make(n, parse_quadrature(rule)));
           }),
           py::arg("n"),
           py::arg("rule") = "trapezoid")
      .def_property_readonly("size", &Grid::size)
      .def_property_readonly("points", [](const Grid& g) { return g.points(); })
      .def_property_readonly("weights", [](const Grid& g) { return g.weights(); })
      .def_property_readonly("rule", [](const Grid& g) { return std::string(to_string(g.rule())); })
      .def("__eq__", &Grid::operator==)
      .def("__repr__", [](const Grid& g) {
        return "Grid(n=" + std::to_string(g.size()) + ", rule='" + std::string(to_string(g.rule())) + "')";
      });

  py::class_<Op>(m, "Op")
      .def_static("from_kernel", &Op::from_kernel, py::arg("grid"), py::arg("kernel"))
      .def_static("from_coords", &Op::from_coords, py::arg("grid"), py::arg("coords"))
      .def_static("identity", &Op::identity, py::arg("grid"))
      .def_static("zero", &Op::zero, py::arg("grid"))
      .def_property_readonly("grid", &Op::grid)
      .def_property_readonly("kernel", &Op::kernel)
      .def_property_readonly("coords", &Op::coords)
      .def("trace", &Op::trace)
      .def("is_hermitian", &Op::is_hermitian)
      .def("apply", [](const Op& a, const Eigen::VectorXcd& f) { return a.apply(Func(a.grid(), f)).values(); })
      .def("norms",
           [](const Op& a) {
             auto n = norms(a);
             return py::make_tuple(n.trace_norm, n.hs_norm, n.op_norm);
           })
      .def("__add__", [](const Op& a, const Op& b) { return a + b; })
      .def("__sub__", [](const Op& a, const Op& b) { return a - b; })
      .def("__mul__", [](const Op& a, cplx s) { return s * a; })
      .def("__rmul__", [](const Op& a, cplx s) { return s * a; })
      .def("__matmul__", [](const Op& a, const Op& b) { return compose(a, b); });

  m.def("tensor",
        [](const GridPtr& g, const Eigen::VectorXcd& f, const Eigen::VectorXcd& h) { return tensor(Func(g, f), Func(g, h)); },
        py::arg("grid"), py::arg("f"), py::arg("g"));
  m.def("inner",
        [](const GridPtr& g, const Eigen::VectorXcd& f, const Eigen::VectorXcd& h) { return inner(Func(g, f), Func(g, h)); },
        py::arg("grid"), py::arg("f"), py::arg("g"));
  m.def("adjoint", &adjoint);
  m.def("psd_project", &psd_project);
  m.def("psd_sqrt", &psd_sqrt);
  m.def(
      "eigh",
      [](const Op& a) {
        auto es = eigh(a);
        const Eigen::MatrixXcd funcs = a.grid()->inv_sqrt_weights().asDiagonal() * es.vectors;
        return py::make_tuple(es.eigenvalues, funcs);
      },
      "Eigenvalues (descending) and eigenfunction values as columns.");

  py::class_<ModelSpec>(m, "ModelSpec")
      .def_static("white_noise", &ModelSpec::white_noise, py::arg("sigma"), py::arg("real_output") = true)
      .def_static("linear_ma", &ModelSpec::linear_ma, py::arg("sigma"), py::arg("theta"), py::arg("real_output") = true)
      .def_static("fma1", &ModelSpec::fma1, py::arg("sigma"), py::arg("theta"), py::arg("real_output") = true)
      .def_static("long_memory", &ModelSpec::long_memory, py::arg("sigma"), py::arg("d"), py::arg("truncation") = 1000,
                  py::arg("real_output") = true)
      .def_static(
          "atoms_only",
          [](const GridPtr& g, const std::vector<std::pair<double, Op>>& atoms, bool real) {
            std::vector<AtomSpec> a;
            for (const auto& [w, op] : atoms) a.push_back({w, op});
            return ModelSpec::atoms_only(g, a, real);
          },
          py::arg("grid"), py::arg("atoms"), py::arg("real_output") = true)
      .def(
          "with_atoms",
          [](ModelSpec m, const std::vector<std::pair<double, Op>>& atoms) {
            for (const auto& [w, op] : atoms) m.atoms.push_back({w, op});
            m.validate();
            return m;
          },
          py::arg("atoms"))
      .def_property_readonly("grid", [](const ModelSpec& m) { return m.grid; })
      .def_property_readonly("real_output", [](const ModelSpec& m) { return m.real_output; });

  m.def("transfer_density", &transfer_density, py::arg("model"), py::arg("omega"));
  m.def("ma_coefficients_longmemory", &ma_coefficients_longmemory, py::arg("d"), py::arg("J"));

  py::class_<SpectralMeasure>(m, "SpectralMeasure")
      .def_property_readonly("grid", &SpectralMeasure::grid)
      .def_property_readonly("num_freqs", &SpectralMeasure::num_freqs)
      .def_property_readonly("delta", &SpectralMeasure::delta)
      .def_property_readonly("frequencies",
                             [](const SpectralMeasure& sm) {
                               Eigen::VectorXd w(sm.num_freqs());
                               for (int k = 0; k < sm.num_freqs(); ++k) w(k) = sm.frequency(k);
                               return w;
                             })
      .def("density", &SpectralMeasure::density, py::arg("k"))
      .def_property_readonly("atoms",
                             [](const SpectralMeasure& sm) {
                               py::list out;
                               for (const auto& a : sm.atoms()) out.append(py::make_tuple(a.frequency, a.jump));
                               return out;
                             })
      .def_property_readonly("real_process", &SpectralMeasure::is_real_process)
      .def_property_readonly("flagged_cells", &SpectralMeasure::flagged_cells)
      .def("total_mass", &SpectralMeasure::total_mass)
      .def("trace_measure", [](const SpectralMeasure& sm, double a, double b) { return trace_measure(sm, a, b); },
           py::arg("a"), py::arg("b"))
      .def("save", [](const SpectralMeasure& sm, const std::filesystem::path& p) { io::write_measure(p, sm); })
      .def_static("load", &io::read_measure);

  m.def(
      "model_spectral_measure",
      [](const ModelSpec& model, int K, const std::string& pole) { return model_spectral_measure(model, K, parse_pole(pole)); },
      py::arg("model"), py::arg("K"), py::arg("pole") = "neighbor_mean");

  m.def(
      "simulate",
      [](const SpectralMeasure& sm, int T, std::uint64_t seed, bool real) {
        FuncSeries s = [&] {
          py::gil_scoped_release release;
          return simulate(sm, T, seed, real);
        }();
        return frames_of(s);
      },
      py::arg("measure"), py::arg("T"), py::arg("seed"), py::arg("real_output") = true,
      "Frames as a T x N array of function values.");

  py::class_<LagCovSequence>(m, "LagCovSequence")
      .def_property_readonly("max_lag", &LagCovSequence::max_lag)
      .def("at", &LagCovSequence::at, py::arg("h"));

  m.def(
      "empirical_lag_cov",
      [](const GridPtr& g, const Eigen::MatrixXcd& frames, int max_lag, bool demean) {
        return empirical_lag_cov(make_series(g, frames, std::nullopt), max_lag, demean);
      },
      py::arg("grid"), py::arg("frames"), py::arg("max_lag"), py::arg("demean") = false);
  m.def("analytic_lag_cov",
        [](const ModelSpec& model, int max_lag, int K, const std::string& pole) {
          return analytic_lag_cov(model, max_lag, K, parse_pole(pole));
        },
        py::arg("model"), py::arg("max_lag"), py::arg("K"), py::arg("pole") = "neighbor_mean");
  m.def(
      "herglotz_forward",
      [](const LagCovSequence& lc, int K, int q, const std::string& window) {
        return herglotz_forward(lc, K, q, parse_window(window));
      },
      py::arg("lagcov"), py::arg("K"), py::arg("q"), py::arg("window") = "fejer");
  m.def("herglotz_inverse", &herglotz_inverse, py::arg("measure"), py::arg("h"));
  m.def(
      "detect_atoms",
      [](const GridPtr& g, const Eigen::MatrixXcd& frames, double alpha, int neighbours) {
        py::list out;
        for (const auto& a : detect_atoms(make_series(g, frames, std::nullopt), alpha, neighbours))
          out.append(py::make_tuple(a.frequency, a.jump));
        return out;
      },
      py::arg("grid"), py::arg("frames"), py::arg("alpha") = 0.01, py::arg("neighbours") = 8);

  py::class_<FrequencyEigens>(m, "FrequencyEigens")
      .def_property_readonly("num_freqs", &FrequencyEigens::num_freqs)
      .def("eigenvalues", [](const FrequencyEigens& e, int k) { return e.densities.at(static_cast<std::size_t>(k)).eigenvalues; })
      .def("atom_eigenvalues", [](const FrequencyEigens& e, int l) { return e.atoms.at(static_cast<std::size_t>(l)).eigenvalues; });
  py::class_<RankSchedule>(m, "RankSchedule")
      .def_readwrite("density_ranks", &RankSchedule::density_ranks)
      .def_readwrite("atom_ranks", &RankSchedule::atom_ranks);

  m.def("eigendecompose_measure", &eigendecompose_measure, py::arg("measure"));
  m.def("select_ranks", &select_ranks, py::arg("eigens"), py::arg("alpha"));
  m.def("fixed_ranks", &fixed_ranks, py::arg("eigens"), py::arg("p"));
  m.def(
      "truncation_error",
      [](const FrequencyEigens& e, const RankSchedule& r) { return truncation_error(e, r, e.delta()); }, py::arg("eigens"),
      py::arg("ranks"));
  m.def(
      "optimal_filter",
      [](const GridPtr& g, const Eigen::MatrixXcd& frames, const FrequencyEigens& e, const RankSchedule& r) {
        return frames_of(optimal_filter(make_series(g, frames, std::nullopt), e, r));
      },
      py::arg("grid"), py::arg("frames"), py::arg("eigens"), py::arg("ranks"));

  m.def(
      "mean_squared_error",
      [](const GridPtr& g, const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
        return mean_squared_error(make_series(g, x, std::nullopt), make_series(g, y, std::nullopt));
      },
      py::arg("grid"), py::arg("x"), py::arg("y"));

  m.def(
      "run_command",
      [](const std::string& name, std::optional<std::filesystem::path> config, std::optional<std::filesystem::path> out,
         std::optional<std::uint64_t> seed, std::optional<double> tol, std::vector<std::filesystem::path> inputs) {
        cli::CommandOptions o{config, out, seed, tol, inputs};
        std::ostringstream so, se;
        const int code = cli::run_command(name, o, so, se);
        return py::make_tuple(code, so.str(), se.str());
      },
      py::arg("name"), py::arg("config") = py::none(), py::arg("out") = py::none(), py::arg("seed") = py::none(),
      py::arg("tol") = py::none(), py::arg("inputs") = std::vector<std::filesystem::path>{},
      "Runs a CLI command in-process; returns (exit_code, stdout, stderr).");
  m.def("config_schema", [] { return std::string(config_schema()); });
}
