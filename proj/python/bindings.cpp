#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <utility>

#include "flowspec/dyson.hpp"
#include "flowspec/io.hpp"
#include "flowspec/model.hpp"
#include "flowspec/outlier.hpp"
#include "flowspec/scans.hpp"
#include "flowspec/simulate.hpp"

namespace py = pybind11;
using namespace flowspec;

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Spectral theory and Monte Carlo for gradient-flow weight matrices";
  m.attr("__version__") = version_string();

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init([](double gamma, double alpha, double lambda_minus,
                       double theta) {
             ModelParams p;
             p.gamma = gamma;
             p.alpha = alpha;
             p.lambda_minus = lambda_minus;
             p.theta = theta;
             p.validate();
             return p;
           }),
           py::arg("gamma") = 1.0, py::arg("alpha") = 0.5,
           py::arg("lambda_minus") = 1.0, py::arg("theta") = 0.0)
      .def_readwrite("gamma", &ModelParams::gamma)
      .def_readwrite("alpha", &ModelParams::alpha)
      .def_readwrite("lambda_minus", &ModelParams::lambda_minus)
      .def_readwrite("theta", &ModelParams::theta)
      .def_readonly("lambda_plus", &ModelParams::lambda_plus)
      .def("has_null_block", &ModelParams::has_null_block)
      .def("validate", &ModelParams::validate)
      .def("__repr__", [](const ModelParams& p) {
        std::ostringstream ss;
        ss << "ModelParams(gamma=" << p.gamma << ", alpha=" << p.alpha
           << ", lambda_minus=" << p.lambda_minus << ", theta=" << p.theta
           << ")";
        return ss.str();
      });

  py::class_<DensityCurve>(m, "DensityCurve")
      .def_readonly("grid", &DensityCurve::grid)
      .def_readonly("rho", &DensityCurve::rho)
      .def_readonly("epsilon", &DensityCurve::epsilon)
      .def_readonly("t", &DensityCurve::t);

  m.def(
      "spectral_density",
      [](const ModelParams& p, double t, const std::vector<double>& grid,
         double epsilon) { return spectral_density(p, t, grid, epsilon); },
      py::arg("params"), py::arg("t"), py::arg("grid"),
      py::arg("epsilon") = 1e-2,
      "Smoothed spectral density on a grid of real points");

  py::class_<BulkEdges>(m, "BulkEdges")
      .def_readonly("lower", &BulkEdges::lower)
      .def_readonly("upper", &BulkEdges::upper);

  m.def(
      "bulk_edges",
      [](const ModelParams& p, double t) { return bulk_edges(p, t); },
      py::arg("params"), py::arg("t"),
      "Support endpoints of the bulk density");

  py::class_<QuadraticForms>(m, "QuadraticForms")
      .def_readonly("phi", &QuadraticForms::phi)
      .def_readonly("psi", &QuadraticForms::psi)
      .def_readonly("chi", &QuadraticForms::chi)
      .def_readonly("dphi", &QuadraticForms::dphi)
      .def_readonly("dpsi", &QuadraticForms::dpsi)
      .def_readonly("dchi", &QuadraticForms::dchi)
      .def_readonly("z", &QuadraticForms::z)
      .def_readonly("t", &QuadraticForms::t);

  m.def("quadratic_forms", &quadratic_forms, py::arg("params"), py::arg("t"),
        py::arg("z"),
        "Resolvent quadratic forms and derivatives at a real point outside "
        "the bulk");

  py::class_<EdgeFactors>(m, "EdgeFactors")
      .def_readonly("location", &EdgeFactors::location)
      .def_readonly("e_plus", &EdgeFactors::e_plus)
      .def_readonly("e_minus", &EdgeFactors::e_minus);

  py::class_<EdgeAnalysis>(m, "EdgeAnalysis")
      .def_readonly("t", &EdgeAnalysis::t)
      .def_readonly("upper", &EdgeAnalysis::upper)
      .def_readonly("lower", &EdgeAnalysis::lower);

  m.def(
      "analyze_edges",
      [](const ModelParams& p, double t) { return analyze_edges(p, t); },
      py::arg("params"), py::arg("t"),
      "Refined bulk edges with their threshold factors");

  m.def("critical_theta",
        py::overload_cast<const ModelParams&, double>(&critical_theta),
        py::arg("params"), py::arg("t"));
  m.def("critical_theta",
        py::overload_cast<const EdgeAnalysis&>(&critical_theta),
        py::arg("edges"));
  m.def(
      "critical_theta_lower",
      [](const ModelParams& p, double t) {
        return critical_theta_lower(analyze_edges(p, t));
      },
      py::arg("params"), py::arg("t"));
  m.def("critical_theta_lower",
        py::overload_cast<const EdgeAnalysis&>(&critical_theta_lower),
        py::arg("edges"));
  m.def("edge_discriminant",
        py::overload_cast<const ModelParams&, double>(&edge_discriminant),
        py::arg("params"), py::arg("t"));

  py::enum_<OutlierSide>(m, "OutlierSide")
      .value("upper", OutlierSide::upper)
      .value("lower", OutlierSide::lower);

  py::class_<OutlierResult>(m, "OutlierResult")
      .def_readonly("exists", &OutlierResult::exists)
      .def_readonly("xi", &OutlierResult::xi)
      .def_readonly("side", &OutlierResult::side)
      .def_readonly("margin", &OutlierResult::margin);

  m.def("outlier_location",
        py::overload_cast<const ModelParams&, double>(&outlier_location),
        py::arg("params"), py::arg("t"),
        "Outermost detached eigenvalue, if any");
  m.def("outlier_side", &outlier_side, py::arg("params"), py::arg("edges"),
        py::arg("side"));
  m.def("overlap_theory",
        py::overload_cast<const ModelParams&, double>(&overlap_theory),
        py::arg("params"), py::arg("t"),
        "Squared teacher overlap of the upper outlier eigenvector");

  py::enum_<Regime>(m, "Regime")
      .value("weak", Regime::weak)
      .value("persistent", Regime::persistent)
      .value("transient", Regime::transient);

  py::class_<RegimeReport>(m, "RegimeReport")
      .def_readonly("regime", &RegimeReport::regime)
      .def_readonly("t1", &RegimeReport::t1)
      .def_readonly("t2", &RegimeReport::t2)
      .def_readonly("t_opt", &RegimeReport::t_opt)
      .def_readonly("q_max", &RegimeReport::q_max);

  m.def(
      "classify_regime",
      [](const ModelParams& p, std::pair<double, double> t_range,
         int grid_size) { return classify_regime(p, t_range, grid_size); },
      py::arg("params"), py::arg("t_range") = std::make_pair(0.05, 3000.0),
      py::arg("grid_size") = 60,
      "Weak / persistent / transient classification with transition times");

  py::class_<StoppingResult>(m, "StoppingResult")
      .def_readonly("t_opt", &StoppingResult::t_opt)
      .def_readonly("q_max", &StoppingResult::q_max)
      .def_readonly("multimodal", &StoppingResult::multimodal);

  m.def(
      "optimal_stopping",
      [](const ModelParams& p, std::pair<double, double> window) {
        return optimal_stopping(p, window);
      },
      py::arg("params"), py::arg("window"),
      "Overlap-maximizing time inside a window");

  py::enum_<CellStatus>(m, "CellStatus")
      .value("ok", CellStatus::ok)
      .value("infinite", CellStatus::infinite)
      .value("failed", CellStatus::failed);

  py::class_<ThetaCPoint>(m, "ThetaCPoint")
      .def_readonly("t", &ThetaCPoint::t)
      .def_readonly("theta_c", &ThetaCPoint::theta_c)
      .def_readonly("status", &ThetaCPoint::status);

  py::class_<ThetaCCurve>(m, "ThetaCCurve")
      .def_readonly("points", &ThetaCCurve::points);

  m.def("theta_c_curve", &theta_c_curve, py::arg("params"),
        py::arg("time_grid"), "Critical signal strength along a time grid");

  py::class_<TransitionRow>(m, "TransitionRow")
      .def_readonly("theta", &TransitionRow::theta)
      .def_readonly("status", &TransitionRow::status)
      .def_readonly("regime", &TransitionRow::regime)
      .def_readonly("t1", &TransitionRow::t1)
      .def_readonly("t2", &TransitionRow::t2)
      .def_readonly("t_opt", &TransitionRow::t_opt)
      .def_readonly("q_max", &TransitionRow::q_max);

  py::class_<PhaseDiagramTT>(m, "PhaseDiagramTT")
      .def_readonly("theta_grid", &PhaseDiagramTT::theta_grid)
      .def_readonly("time_grid", &PhaseDiagramTT::time_grid)
      .def_readonly("boundary", &PhaseDiagramTT::boundary)
      .def_readonly("rows", &PhaseDiagramTT::rows);

  m.def("phase_diagram_theta_time", &phase_diagram_theta_time,
        py::arg("base"), py::arg("theta_grid"), py::arg("time_grid"));

  py::class_<PhaseDiagramTL>(m, "PhaseDiagramTL")
      .def_readonly("theta_grid", &PhaseDiagramTL::theta_grid)
      .def_readonly("lambda_minus_grid", &PhaseDiagramTL::lambda_minus_grid)
      .def_readonly("regime_label", &PhaseDiagramTL::regime_label)
      .def_readonly("status", &PhaseDiagramTL::status);

  m.def("phase_diagram_theta_lambda", &phase_diagram_theta_lambda,
        py::arg("gamma"), py::arg("alpha"), py::arg("theta_grid"),
        py::arg("lambda_minus_grid"),
        py::arg("time_window") = std::make_pair(0.05, 3000.0),
        py::arg("time_grid_size") = 60);

  m.def("log_grid", &log_grid, py::arg("lo"), py::arg("hi"), py::arg("n"));
  m.def("refine_transition", &refine_transition, py::arg("params"),
        py::arg("bracket"),
        "Bisect a sign change of the edge discriminant in time");

  py::enum_<SpectrumKind>(m, "SpectrumKind")
      .value("two_block", SpectrumKind::two_block)
      .value("power_law", SpectrumKind::power_law);

  py::class_<PowerLawSpec>(m, "PowerLawSpec")
      .def(py::init([](double beta, double lambda_min, double lambda_max) {
             return PowerLawSpec{beta, lambda_min, lambda_max};
           }),
           py::arg("beta") = 1.5, py::arg("lambda_min") = 0.1,
           py::arg("lambda_max") = 5.0)
      .def_readwrite("beta", &PowerLawSpec::beta)
      .def_readwrite("lambda_min", &PowerLawSpec::lambda_min)
      .def_readwrite("lambda_max", &PowerLawSpec::lambda_max);

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init([](int n, const ModelParams& params, SpectrumKind kind,
                       const PowerLawSpec& power_law, int n_realizations,
                       std::vector<double> times, std::uint64_t seed) {
             SimConfig c;
             c.n = n;
             c.params = params;
             c.spectrum_kind = kind;
             c.power_law = power_law;
             c.n_realizations = n_realizations;
             c.times = std::move(times);
             c.seed = seed;
             c.validate();
             return c;
           }),
           py::arg("n"), py::arg("params"),
           py::arg("spectrum_kind") = SpectrumKind::two_block,
           py::arg("power_law") = PowerLawSpec{}, py::arg("n_realizations") = 1,
           py::arg("times") = std::vector<double>{0.0}, py::arg("seed") = 1)
      .def_readwrite("n", &SimConfig::n)
      .def_readwrite("params", &SimConfig::params)
      .def_readwrite("spectrum_kind", &SimConfig::spectrum_kind)
      .def_readwrite("power_law", &SimConfig::power_law)
      .def_readwrite("n_realizations", &SimConfig::n_realizations)
      .def_readwrite("times", &SimConfig::times)
      .def_readwrite("seed", &SimConfig::seed)
      .def("validate", &SimConfig::validate);

  py::class_<SpectrumSample>(m, "SpectrumSample")
      .def_readonly("eigenvalues", &SpectrumSample::eigenvalues)
      .def_readonly("top_overlap", &SpectrumSample::top_overlap)
      .def_readonly("t", &SpectrumSample::t)
      .def_readonly("realization_id", &SpectrumSample::realization_id)
      .def_readonly("seed_used", &SpectrumSample::seed_used);

  py::class_<Histogram>(m, "Histogram")
      .def_readonly("bin_edges", &Histogram::bin_edges)
      .def_readonly("counts", &Histogram::counts)
      .def_readonly("n_samples", &Histogram::n_samples);

  py::class_<OverlapCurve>(m, "OverlapCurve")
      .def_readonly("times", &OverlapCurve::times)
      .def_readonly("mean", &OverlapCurve::mean)
      .def_readonly("std_error", &OverlapCurve::std_error)
      .def_readonly("n_realizations", &OverlapCurve::n_realizations);

  m.def("realization_seed", &realization_seed, py::arg("base"),
        py::arg("realization_id"));
  m.def("sample_two_block", &sample_two_block, py::arg("config"),
        py::arg("realization_id"),
        "Eigenvalues and teacher overlap along the flow, one realization");
  m.def("sample_two_block_original", &sample_two_block_original,
        py::arg("config"), py::arg("realization_id"));
  m.def("powerlaw_singular_values", &powerlaw_singular_values,
        py::arg("beta"), py::arg("lambda_min"), py::arg("lambda_max"),
        py::arg("n"), py::arg("seed"));
  m.def("sample_powerlaw_flow", &sample_powerlaw_flow, py::arg("config"),
        py::arg("realization_id"));
  m.def("empirical_density", &empirical_density, py::arg("samples"),
        py::arg("bins"));
  m.def("empirical_overlap_curve", &empirical_overlap_curve,
        py::arg("config"));
}
