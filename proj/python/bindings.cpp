#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "taylorpn/estimate.hpp"
#include "taylorpn/experiments.hpp"
#include "taylorpn/filters.hpp"
#include "taylorpn/gp.hpp"
#include "taylorpn/io.hpp"
#include "taylorpn/kernels.hpp"
#include "taylorpn/multiindex.hpp"
#include "taylorpn/odesolve.hpp"

namespace py = pybind11;
using namespace taylorpn;

namespace {

MultiIndex make_index(const std::vector<int>& idx) { return MultiIndex(idx); }

DerivativeData make_data(const Eigen::VectorXd& a, int n, const std::vector<double>& values,
                         const std::optional<std::vector<double>>& noise) {
    return DerivativeData(a, n, values, noise);
}

}  // namespace

PYBIND11_MODULE(_taylorpn, m) {
    m.doc() = "Gaussian-process Taylor expansions with derivative data, plus the Taylor EKF "
              "and the probabilistic Euler method built on them";
    m.attr("__version__") = kLibraryVersion;

    // ----------------------------------------------------------- multiindex
    py::class_<MultiIndex>(m, "MultiIndex")
        .def(py::init(&make_index), py::arg("indices"))
        .def_property_readonly("indices", &MultiIndex::indices)
        .def_property_readonly("order", &MultiIndex::order)
        .def_property_readonly("dim", &MultiIndex::dim)
        .def("__eq__", [](const MultiIndex& a, const MultiIndex& b) { return a == b; })
        .def("__repr__", [](const MultiIndex& a) {
            std::string s = "MultiIndex([";
            for (int j = 0; j < a.dim(); ++j) s += (j ? "," : "") + std::to_string(a[j]);
            return s + "])";
        });
    m.def("enumerate_upto", &enumerate_upto, py::arg("dim"), py::arg("order"));
    m.def("count_upto", &count_upto, py::arg("dim"), py::arg("order"));
    m.def("factorial_multi", &factorial_multi, py::arg("alpha"));
    m.def("monomial", &monomial, py::arg("x"), py::arg("a"), py::arg("alpha"));

    // -------------------------------------------------------------- kernels
    py::class_<KernelSpec>(m, "KernelSpec")
        .def_static("exponential",
                    py::overload_cast<double, Eigen::VectorXd>(&KernelSpec::exponential),
                    py::arg("sigma2"), py::arg("lambda"))
        .def_static("szego", py::overload_cast<double, Eigen::VectorXd, double>(&KernelSpec::szego),
                    py::arg("sigma2"), py::arg("lambda"), py::arg("radius") = 1.0)
        .def_static("bergman",
                    py::overload_cast<double, Eigen::VectorXd, double>(&KernelSpec::bergman),
                    py::arg("sigma2"), py::arg("lambda"), py::arg("radius") = 1.0)
        .def_property_readonly("dim", &KernelSpec::dim)
        .def_property_readonly("sigma2", &KernelSpec::sigma2)
        .def_property_readonly("lambda_", &KernelSpec::lambda)
        .def_property_readonly("radius", &KernelSpec::radius)
        .def("coefficient", &KernelSpec::coefficient, py::arg("alpha"))
        .def("coeff_total", &KernelSpec::coeff_total, py::arg("p"));
    m.def("kernel_eval", &kernel_eval, py::arg("spec"), py::arg("a"), py::arg("x"), py::arg("y"));
    m.def("kernel_mixed_derivative", &kernel_mixed_derivative, py::arg("spec"), py::arg("a"),
          py::arg("beta"), py::arg("gamma"), py::arg("x"), py::arg("y"));
    m.def("series_tail", &series_tail, py::arg("spec"), py::arg("h"), py::arg("n"));
    m.def("parse_kernel_config", &parse_kernel_config, py::arg("text"));

    // ------------------------------------------------------------------- gp
    py::class_<PriorMean>(m, "PriorMean")
        .def(py::init<>())
        .def("set_term", &PriorMean::set_term, py::arg("alpha"), py::arg("coeff"),
             py::return_value_policy::reference_internal)
        .def("__call__", &PriorMean::operator(), py::arg("x"))
        .def("derivative_at", &PriorMean::derivative_at, py::arg("alpha"), py::arg("a"));
    py::class_<DerivativeData>(m, "DerivativeData")
        .def(py::init(&make_data), py::arg("a"), py::arg("n"), py::arg("values"),
             py::arg("noise") = std::nullopt)
        .def_readonly("a", &DerivativeData::a)
        .def_readonly("order", &DerivativeData::order)
        .def_readonly("values", &DerivativeData::values)
        .def_property_readonly("noisy", &DerivativeData::noisy)
        .def("to_json", &derivative_data_to_json)
        .def_static("from_json", &derivative_data_from_json, py::arg("text"));
    py::class_<TaylorPosterior>(m, "TaylorPosterior")
        .def("mean", &TaylorPosterior::mean, py::arg("x"))
        .def("cov", &TaylorPosterior::cov, py::arg("x"), py::arg("y"))
        .def("var", &TaylorPosterior::var, py::arg("x"));
    m.def("condition", &condition, py::arg("spec"), py::arg("prior"), py::arg("data"));
    m.def("condition_generic", &condition_generic, py::arg("spec"), py::arg("prior"), py::arg("data"));
    m.def("variance_bound_constant", &variance_bound_constant, py::arg("spec"), py::arg("n"),
          py::arg("evaluation_radius") = -1.0);

    // ------------------------------------------------------------- estimate
    m.def("sigma_ml", &sigma_ml, py::arg("spec"), py::arg("prior"), py::arg("data"));
    m.def("lambda_ml_n1", &lambda_ml_n1, py::arg("spec"), py::arg("prior"), py::arg("data"));
    m.def("lambda_ml_n2_uniform", &lambda_ml_n2_uniform, py::arg("spec"), py::arg("prior"),
          py::arg("data"));
    m.def("lambda_ml_n2_aniso", &lambda_ml_n2_aniso, py::arg("spec"), py::arg("prior"), py::arg("data"));
    m.def("sigma_ml_noisy_n1", &sigma_ml_noisy_n1, py::arg("c0"), py::arg("c1"), py::arg("lambda"),
          py::arg("y0"), py::arg("y1"), py::arg("eps0sq"), py::arg("eps1sq"), py::arg("sigma_min"));
    m.def(
        "solve_cubic_real",
        [](double a3, double a2, double a1, double a0) {
            return solve_cubic_real(CubicCoefficients{a3, a2, a1, a0});
        },
        py::arg("a3"), py::arg("a2"), py::arg("a1"), py::arg("a0"));

    // ------------------------------------------------------------- odesolve
    py::enum_<SolveMode>(m, "SolveMode")
        .value("Classical", SolveMode::Classical)
        .value("Probabilistic", SolveMode::Probabilistic);
    py::class_<EulerState>(m, "EulerState")
        .def_readonly("t", &EulerState::t)
        .def_readonly("y", &EulerState::y)
        .def_readonly("eps2", &EulerState::eps2)
        .def_readonly("sigma2", &EulerState::sigma2)
        .def_readonly("a", &EulerState::a)
        .def_readonly("b", &EulerState::b);

    // f(t, y_values) -> dy/dt as plain doubles; per-coordinate slopes come
    // from one-sided differences inside the wrapper below, so the Python
    // surface stays free of the Dual2 machinery
    m.def(
        "solve_ode",
        [](const std::function<std::vector<double>(double, std::vector<double>)>& f, double t_end,
           const Eigen::VectorXd& y0, int steps, const KernelSpec& kernel, double sigma_min,
           SolveMode mode) {
            ODEProblem problem;
            problem.dim = static_cast<int>(y0.size());
            problem.t_end = t_end;
            problem.y0 = y0;
            problem.rhs = [f, dim = problem.dim](double t, const std::vector<Dual2>& y) {
                std::vector<double> yv(y.size());
                for (std::size_t i = 0; i < y.size(); ++i) yv[i] = y[i].val;
                const std::vector<double> base = f(t, yv);
                std::vector<Dual2> out;
                out.reserve(base.size());
                for (std::size_t i = 0; i < base.size(); ++i) {
                    // forward difference in coordinate i only (the solver
                    // uses just df_i/dy_i)
                    std::vector<double> bumped = yv;
                    const double step = 1e-7 * (1.0 + std::abs(yv[i]));
                    bumped[i] += step;
                    const double slope = (f(t, bumped)[i] - base[i]) / step;
                    Dual2 d(base[i], dim);
                    d.grad[static_cast<Eigen::Index>(i)] = slope;
                    out.push_back(std::move(d));
                }
                return out;
            };
            SolverConfig config;
            config.steps = steps;
            config.kernel = kernel;
            config.sigma_min = sigma_min;
            config.mode = mode;
            return solve(problem, config);
        },
        py::arg("f"), py::arg("t_end"), py::arg("y0"), py::arg("steps"), py::arg("kernel"),
        py::arg("sigma_min") = 1e-6, py::arg("mode") = SolveMode::Probabilistic);

    // ---------------------------------------------------------- experiments
    m.def(
        "run_experiment",
        [](const std::string& experiment, std::uint64_t seed, const std::string& out_dir,
           const std::map<std::string, std::string>& overrides) {
            ExperimentConfig config;
            config.experiment = experiment;
            config.seed = seed;
            config.out_dir = out_dir;
            config.overrides = overrides;
            std::vector<std::string> files;
            for (const auto& f : run_experiment(config)) files.push_back(f.string());
            return files;
        },
        py::arg("experiment"), py::arg("seed") = 0, py::arg("out_dir") = ".",
        py::arg("overrides") = std::map<std::string, std::string>{});
}
