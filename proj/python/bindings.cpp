#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "calasso/ca.hpp"
#include "calasso/classical.hpp"
#include "calasso/cluster.hpp"
#include "calasso/dataset.hpp"
#include "calasso/error.hpp"
#include "calasso/linalg.hpp"
#include "calasso/prox.hpp"
#include "calasso/runner.hpp"

namespace py = pybind11;
using namespace calasso;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DoubleArray& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

Dataset dataset_from_dense(const DoubleArray& X, const DoubleArray& y) {
  if (X.ndim() != 2) throw DimensionError("X must be 2-D with shape (d, n)");
  const auto d = static_cast<std::size_t>(X.shape(0));
  const auto n = static_cast<std::size_t>(X.shape(1));
  std::vector<double> column_major(d * n);
  auto view = X.unchecked<2>();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < d; ++r) column_major[i * d + r] = view(r, i);
  }
  return Dataset::from_dense(d, n, column_major, to_vector(y));
}

py::array_t<double> dataset_to_dense(const Dataset& data) {
  const auto flat = data.to_dense();
  const auto d = data.features();
  const auto n = data.samples();
  py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(d), static_cast<py::ssize_t>(n)});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < d; ++r) view(r, i) = flat[i * d + r];
  }
  return out;
}

py::dict trace_to_dict(const RunTrace& trace) {
  const std::size_t rows = trace.rows.size();
  const auto shape = std::vector<py::ssize_t>{static_cast<py::ssize_t>(rows)};
  py::array_t<std::uint64_t> iteration(shape), flops(shape), messages(shape), words(shape), memory(shape);
  py::array_t<double> objective(shape), rel(shape), time(shape);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& r = trace.rows[i];
    iteration.mutable_data()[i] = r.iteration;
    objective.mutable_data()[i] = r.objective;
    rel.mutable_data()[i] = r.rel_sol_err.value_or(std::numeric_limits<double>::quiet_NaN());
    flops.mutable_data()[i] = r.counters.flops;
    messages.mutable_data()[i] = r.counters.messages;
    words.mutable_data()[i] = r.counters.words;
    memory.mutable_data()[i] = r.counters.memory_peak;
    time.mutable_data()[i] = r.modeled_time;
  }
  py::dict out;
  out["iteration"] = iteration;
  out["objective"] = objective;
  out["rel_sol_err"] = rel;
  out["F"] = flops;
  out["L"] = messages;
  out["W"] = words;
  out["M_peak"] = memory;
  out["modeled_time"] = time;
  out["solution"] = to_array(trace.solution);
  out["reached_tolerance"] = trace.reached_tolerance;
  out["csv"] = trace_csv(trace);
  return out;
}

}  // namespace

PYBIND11_MODULE(_calasso, m) {
  m.doc() = "Communication-avoiding stochastic FISTA and proximal Newton LASSO solvers";

  py::register_exception<Error>(m, "CalassoError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<UndefinedReferenceError>(m, "UndefinedReferenceError", PyExc_ValueError);

  py::class_<Dataset>(m, "Dataset")
      .def_static("from_dense", &dataset_from_dense, py::arg("X"), py::arg("y"),
                  "Build from a (d, n) array whose columns are samples.")
      .def_static(
          "from_libsvm",
          [](const std::string& text, std::optional<std::size_t> features) { return parse_libsvm(text, features); },
          py::arg("text"), py::arg("features") = std::nullopt)
      .def_static("load_libsvm", &load_libsvm, py::arg("path"), py::arg("features") = std::nullopt)
      .def_property_readonly("d", &Dataset::features)
      .def_property_readonly("n", &Dataset::samples)
      .def_property_readonly("nnz", py::overload_cast<>(&Dataset::nnz, py::const_))
      .def_property_readonly("labels", [](const Dataset& d) { return to_array({d.labels().begin(), d.labels().end()}); })
      .def("to_dense", &dataset_to_dense)
      .def("fingerprint", &Dataset::fingerprint)
      .def("to_libsvm",
           [](const Dataset& d) {
             std::ostringstream out;
             write_libsvm(d, out);
             return out.str();
           })
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def(
      "synthesize",
      [](std::size_t d, std::size_t n, double sparsity, double noise, std::uint64_t seed, double scale_decades) {
        auto problem = synthesize({d, n, sparsity, noise, seed, scale_decades});
        return py::make_tuple(std::move(problem.data), to_array(problem.w_true));
      },
      py::arg("d"), py::arg("n"), py::arg("sparsity") = 0.25, py::arg("noise") = 0.0, py::arg("seed") = 0,
      py::arg("scale_decades") = 0.0);

  m.def(
      "partition_columns",
      [](const Dataset& data, std::size_t processors) { return partition_columns(data, processors).boundaries; },
      py::arg("data"), py::arg("processors"));

  py::class_<Sampler>(m, "Sampler")
      .def(py::init<std::uint64_t, double, std::size_t>(), py::arg("seed"), py::arg("b"), py::arg("n"))
      .def_property_readonly("m", &Sampler::sample_size)
      .def("indices", &Sampler::indices, py::arg("iteration"));

  m.def(
      "soft_threshold",
      [](const DoubleArray& v, double threshold) { return to_array(soft_threshold(to_vector(v), threshold)); },
      py::arg("v"), py::arg("threshold"));
  m.def(
      "objective",
      [](const Dataset& data, double lambda, const DoubleArray& w) {
        return objective(LassoProblem(data, lambda), to_vector(w));
      },
      py::arg("data"), py::arg("lam"), py::arg("w"));
  m.def(
      "full_gradient",
      [](const Dataset& data, const DoubleArray& w) { return to_array(full_gradient(LassoProblem(data, 0.0), to_vector(w))); },
      py::arg("data"), py::arg("w"));
  m.def(
      "kkt_residual",
      [](const Dataset& data, double lambda, const DoubleArray& w) {
        return kkt_residual(LassoProblem(data, lambda), to_vector(w));
      },
      py::arg("data"), py::arg("lam"), py::arg("w"));
  m.def(
      "relative_solution_error",
      [](const DoubleArray& w, const DoubleArray& w_op) { return relative_solution_error(to_vector(w), to_vector(w_op)); },
      py::arg("w"), py::arg("w_op"));
  m.def("estimate_lipschitz", [](const Dataset& data) { return estimate_lipschitz(data); }, py::arg("data"));
  m.def("lambda_max", &lambda_max, py::arg("data"));
  m.def(
      "modeled_time",
      [](std::uint64_t F, std::uint64_t L, std::uint64_t W, double gamma, double alpha, double beta) {
        return modeled_time(CostCounters{F, L, W, 0}, MachineParams{gamma, alpha, beta});
      },
      py::arg("F"), py::arg("L"), py::arg("W"), py::arg("gamma"), py::arg("alpha"), py::arg("beta"));

  m.def(
      "solve_reference",
      [](const Dataset& data, double lambda) {
        const auto ref = solve_reference(LassoProblem(data, lambda));
        py::dict out;
        out["w_op"] = to_array(ref.w_op);
        out["kkt_residual"] = ref.kkt_residual;
        out["iterations"] = ref.iterations;
        return out;
      },
      py::arg("data"), py::arg("lam"));

  m.def(
      "run",
      [](const Dataset& data, const std::string& algorithm, double lambda, double b, std::size_t k, std::size_t q,
         std::size_t iterations, std::size_t processors, std::uint64_t seed, double step,
         std::tuple<double, double, double> machine, unsigned threads, std::optional<DoubleArray> reference,
         std::optional<double> tol) {
        const LassoProblem problem(data, lambda);
        SolverConfig config;
        config.sampling_fraction = b;
        config.block_size = k;
        config.inner_iterations = q;
        config.iterations = iterations;
        config.seed = seed;
        config.step = step > 0.0 ? step : default_step(data);
        config.record_iterates = false;
        if (tol) {
          config.stopping = StoppingMode::tolerance;
          config.tolerance = *tol;
        }
        const auto [gamma, alpha, beta] = machine;
        VirtualCluster cluster = VirtualCluster::for_dataset(data, processors, {gamma, alpha, beta}, threads);
        std::vector<double> w_op;
        if (reference) w_op = to_vector(*reference);
        RunTrace trace;
        {
          py::gil_scoped_release release;
          trace = run_algorithm(parse_algorithm(algorithm), problem, config, cluster, w_op);
        }
        return trace_to_dict(trace);
      },
      py::arg("data"), py::arg("algorithm"), py::arg("lam"), py::arg("b") = 1.0, py::arg("k") = 1, py::arg("q") = 1,
      py::arg("iterations") = 100, py::arg("processors") = 1, py::arg("seed") = 0, py::arg("step") = 0.0,
      py::arg("machine") = std::make_tuple(0.0, 0.0, 0.0), py::arg("threads") = 1,
      py::arg("reference") = std::nullopt, py::arg("tol") = std::nullopt,
      "Run sfista, spnm, ca-sfista or ca-spnm on a virtual cluster; returns the per-iteration trace.");
}
