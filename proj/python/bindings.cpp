#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pulsedeconv/baselines.hpp"
#include "pulsedeconv/certificate.hpp"
#include "pulsedeconv/error.hpp"
#include "pulsedeconv/harness.hpp"
#include "pulsedeconv/kernels.hpp"
#include "pulsedeconv/metrics.hpp"
#include "pulsedeconv/recovery.hpp"
#include "pulsedeconv/signal.hpp"

namespace py = pybind11;
namespace pd = pulsedeconv;
using namespace pybind11::literals;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw pd::InvalidArgument("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparse deconvolution of pulse streams by l1 minimization";

  py::register_exception<pd::InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<pd::ConstructionFailed>(m, "ConstructionFailed", PyExc_RuntimeError);
  py::register_exception<pd::SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<pd::IoError>(m, "IoError", PyExc_OSError);

  py::class_<pd::Kernel>(m, "Kernel")
      .def_static("gaussian", &pd::Kernel::gaussian)
      .def_static("cauchy", &pd::Kernel::cauchy)
      .def_static("from_name", &pd::Kernel::from_name, "name"_a)
      .def("eval", &pd::Kernel::eval, "t"_a, "order"_a = 0)
      .def_property_readonly("name", &pd::Kernel::name)
      .def_property_readonly("nominal_nu", &pd::Kernel::nominal_nu)
      .def("__repr__", [](const pd::Kernel& k) { return "<Kernel " + k.name() + ">"; });

  py::class_<pd::AdmissibilityReport>(m, "AdmissibilityReport")
      .def_readonly("C", &pd::AdmissibilityReport::C)
      .def_readonly("epsilon", &pd::AdmissibilityReport::epsilon)
      .def_readonly("beta", &pd::AdmissibilityReport::beta)
      .def_readonly("nu_empirical", &pd::AdmissibilityReport::nu_empirical)
      .def_readonly("g0", &pd::AdmissibilityReport::g0)
      .def_readonly("passed", &pd::AdmissibilityReport::passed)
      .def_readonly("failures", &pd::AdmissibilityReport::failures);

  m.def(
      "verify_admissibility",
      [](const pd::Kernel& k, double t_max, double step, std::optional<double> epsilon, std::optional<double> nu) {
        return pd::verify_admissibility(k, {t_max, step}, epsilon, nu);
      },
      "kernel"_a, "t_max"_a = 20.0, "step"_a = 1e-3, "epsilon"_a = py::none(), "nu"_a = py::none());

  py::class_<pd::SampledKernel>(m, "SampledKernel")
      .def_property_readonly("taps", [](const pd::SampledKernel& s) { return to_array(s.taps); })
      .def_readonly("sigma", &pd::SampledKernel::sigma)
      .def_readonly("N", &pd::SampledKernel::N)
      .def_readonly("radius", &pd::SampledKernel::radius)
      .def_readonly("tail_bound", &pd::SampledKernel::tail_bound)
      .def("at", &pd::SampledKernel::at, "k"_a)
      .def("__len__", &pd::SampledKernel::size);

  m.def("sample_kernel", py::overload_cast<const pd::Kernel&, double, int, double>(&pd::sample_kernel), "kernel"_a,
        "sigma"_a, "N"_a, "trunc_tol"_a = 1e-2);

  py::class_<pd::Spike>(m, "Spike")
      .def(py::init<long, double>(), "location"_a, "amplitude"_a)
      .def_readwrite("location", &pd::Spike::location)
      .def_readwrite("amplitude", &pd::Spike::amplitude)
      .def(py::self == py::self)
      .def("__repr__", [](const pd::Spike& s) {
        std::ostringstream os;
        os << "Spike(" << s.location << ", " << s.amplitude << ")";
        return os.str();
      });

  py::class_<pd::SpikeTrain>(m, "SpikeTrain")
      .def(py::init<std::vector<pd::Spike>, std::size_t>(), "spikes"_a, "grid_len"_a)
      .def_static(
          "from_dense", [](const Array& x, double floor) { return pd::SpikeTrain::from_dense(to_vector(x), floor); },
          "x"_a, "floor"_a = 0.0)
      .def_property_readonly("spikes",
                             [](const pd::SpikeTrain& s) { return std::vector<pd::Spike>(s.spikes().begin(), s.spikes().end()); })
      .def_property_readonly("grid_len", &pd::SpikeTrain::grid_len)
      .def("locations", &pd::SpikeTrain::locations)
      .def("dense", [](const pd::SpikeTrain& s) { return to_array(s.dense()); })
      .def("l1_norm", &pd::SpikeTrain::l1_norm)
      .def("__len__", &pd::SpikeTrain::size);

  py::class_<pd::L1Budget>(m, "L1Budget")
      .def(py::init<double, std::uint64_t>(), "delta"_a, "seed"_a = 0)
      .def_readwrite("delta", &pd::L1Budget::delta)
      .def_readwrite("seed", &pd::L1Budget::seed);

  py::class_<pd::GaussianSnr>(m, "GaussianSnr")
      .def(py::init<double, std::uint64_t>(), "snr_db"_a, "seed"_a = 0)
      .def_readwrite("snr_db", &pd::GaussianSnr::snr_db)
      .def_readwrite("seed", &pd::GaussianSnr::seed);

  py::enum_<pd::DeltaMode>(m, "DeltaMode")
      .value("EtaL1", pd::DeltaMode::EtaL1)
      .value("EtaConvGL1", pd::DeltaMode::EtaConvGL1);

  py::class_<pd::Measurements>(m, "Measurements")
      .def_property_readonly("y", [](const pd::Measurements& s) { return to_array(s.y); })
      .def_readonly("delta", &pd::Measurements::delta)
      .def_readonly("sigma", &pd::Measurements::sigma)
      .def_readonly("N", &pd::Measurements::N)
      .def_readonly("seed", &pd::Measurements::seed)
      .def_readonly("noise_l1", &pd::Measurements::noise_l1)
      .def_readonly("snr_db", &pd::Measurements::snr_db);

  m.def("synthesize", &pd::synthesize, "spikes"_a, "kernel"_a, "noise"_a, "delta_mode"_a = pd::DeltaMode::EtaL1);
  m.def("check_separation", &pd::check_separation, "spikes"_a, "nu"_a, "sigma"_a, "N"_a);
  m.def(
      "convolve_same", [](const Array& x, const pd::SampledKernel& k) { return to_array(pd::convolve_same(to_vector(x), k)); },
      "x"_a, "kernel"_a);

  py::enum_<pd::SolverStatus>(m, "SolverStatus")
      .value("Optimal", pd::SolverStatus::Optimal)
      .value("Inaccurate", pd::SolverStatus::Inaccurate)
      .value("MaxIterations", pd::SolverStatus::MaxIterations)
      .value("NumericalFailure", pd::SolverStatus::NumericalFailure);

  py::class_<pd::RecoverySolution>(m, "RecoverySolution")
      .def_property_readonly("x_hat", [](const pd::RecoverySolution& s) { return to_array(s.x_hat); })
      .def_readonly("support", &pd::RecoverySolution::support)
      .def_readonly("objective", &pd::RecoverySolution::objective)
      .def_readonly("dual_objective", &pd::RecoverySolution::dual_objective)
      .def_readonly("residual_l1", &pd::RecoverySolution::residual_l1)
      .def_readonly("support_floor", &pd::RecoverySolution::support_floor)
      .def_readonly("status", &pd::RecoverySolution::status)
      .def_readonly("iterations", &pd::RecoverySolution::iterations)
      .def_readonly("relative_gap", &pd::RecoverySolution::relative_gap)
      .def("estimate", &pd::RecoverySolution::estimate);

  m.def(
      "solve_l1_deconvolution",
      [](const Array& y, const pd::SampledKernel& kernel, double delta, double solver_tol, int max_iterations,
         std::optional<double> support_floor) {
        pd::RecoveryProblem p;
        p.y = to_vector(y);
        p.kernel = kernel;
        p.delta = delta;
        p.solver_tol = solver_tol;
        p.max_iterations = max_iterations;
        py::gil_scoped_release release;
        return pd::solve_l1_deconvolution(p, support_floor);
      },
      "y"_a, "kernel"_a, "delta"_a, "solver_tol"_a = 1e-10, "max_iterations"_a = 300, "support_floor"_a = py::none());

  py::class_<pd::DualCertificate>(m, "DualCertificate")
      .def_readonly("nodes", &pd::DualCertificate::nodes)
      .def_readonly("signs", &pd::DualCertificate::signs)
      .def_readonly("coeffs_a", &pd::DualCertificate::coeffs_a)
      .def_readonly("coeffs_b", &pd::DualCertificate::coeffs_b)
      .def_readonly("sigma", &pd::DualCertificate::sigma)
      .def_readonly("condition_number", &pd::DualCertificate::condition_number)
      .def("eval", &pd::DualCertificate::eval, "t"_a, "order"_a = 0);

  m.def("build_certificate", &pd::build_certificate, "nodes"_a, "signs"_a, "kernel"_a, "sigma"_a);

  py::class_<pd::CertificateReport>(m, "CertificateReport")
      .def_readonly("max_abs_q", &pd::CertificateReport::max_abs_q)
      .def_readonly("argmax_t", &pd::CertificateReport::argmax_t)
      .def_readonly("tail_bound", &pd::CertificateReport::tail_bound)
      .def_readonly("interpolation_residual", &pd::CertificateReport::interpolation_residual)
      .def_readonly("stationarity_residual", &pd::CertificateReport::stationarity_residual)
      .def_readonly("quadratic_violation", &pd::CertificateReport::quadratic_violation)
      .def_readonly("bounded", &pd::CertificateReport::bounded)
      .def_readonly("interpolates", &pd::CertificateReport::interpolates)
      .def_readonly("quadratic", &pd::CertificateReport::quadratic)
      .def_readonly("passed", &pd::CertificateReport::passed);

  m.def(
      "verify_certificate",
      [](const pd::DualCertificate& cert, double epsilon, double beta, double t_max) {
        pd::CertificateGrid grid;
        grid.t_max = t_max;
        return pd::verify_certificate(cert, epsilon, beta, grid);
      },
      "cert"_a, "epsilon"_a, "beta"_a, "t_max"_a = 20.0);

  py::class_<pd::SeparationResult>(m, "SeparationResult")
      .def_readonly("nu", &pd::SeparationResult::nu)
      .def_readonly("worst_pattern", &pd::SeparationResult::worst_pattern)
      .def_readonly("probes", &pd::SeparationResult::probes);

  m.def(
      "empirical_min_separation",
      [](const pd::Kernel& k, int M, int random_patterns, double tol, std::uint64_t seed) {
        pd::SeparationSearch s;
        s.M = M;
        s.random_patterns = random_patterns;
        s.tol = tol;
        s.seed = seed;
        py::gil_scoped_release release;
        return pd::empirical_min_separation(k, s);
      },
      "kernel"_a, "M"_a = 8, "random_patterns"_a = 4, "tol"_a = 1e-3, "seed"_a = 0);

  m.def("localization_error", &pd::localization_error, "truth"_a, "estimate"_a);
  m.def("l1_distance", &pd::l1_distance, "truth"_a, "estimate"_a);
  m.def(
      "spearman", [](const Array& x, const Array& y) { return pd::spearman(to_vector(x), to_vector(y)); }, "x"_a,
      "y"_a);

  py::class_<pd::OmpResult>(m, "OmpResult")
      .def_readonly("estimate", &pd::OmpResult::estimate)
      .def_readonly("residual_norms", &pd::OmpResult::residual_norms)
      .def_readonly("iterations", &pd::OmpResult::iterations)
      .def_readonly("rank_deficient", &pd::OmpResult::rank_deficient);

  m.def(
      "omp_deconvolution",
      [](const Array& y, const pd::SampledKernel& k, int max_atoms, double residual_tol) {
        return pd::omp_deconvolution(to_vector(y), k, {max_atoms, residual_tol});
      },
      "y"_a, "kernel"_a, "max_atoms"_a, "residual_tol"_a = 0.0);

  py::class_<pd::MusicResult>(m, "MusicResult")
      .def_readonly("locations", &pd::MusicResult::locations)
      .def_property_readonly("pseudospectrum", [](const pd::MusicResult& r) { return to_array(r.pseudospectrum); })
      .def_readonly("warnings", &pd::MusicResult::warnings)
      .def_readonly("numerical_rank", &pd::MusicResult::numerical_rank)
      .def_readonly("singular_values", &pd::MusicResult::singular_values);

  m.def(
      "music_deconvolution",
      [](const Array& y, const pd::SampledKernel& k, int model_order, double regularization, int hankel_rows) {
        return pd::music_deconvolution(to_vector(y), k, {model_order, regularization, hankel_rows});
      },
      "y"_a, "kernel"_a, "model_order"_a, "regularization"_a = 1e-3, "hankel_rows"_a = 0);

  py::class_<pd::SummaryRow>(m, "SummaryRow")
      .def_readonly("noise_level", &pd::SummaryRow::noise_level)
      .def_readonly("mean_snr_db", &pd::SummaryRow::mean_snr_db)
      .def_readonly("separation", &pd::SummaryRow::separation)
      .def_readonly("sigma", &pd::SummaryRow::sigma)
      .def_property_readonly("method", [](const pd::SummaryRow& r) { return pd::to_string(r.method); })
      .def_readonly("trials", &pd::SummaryRow::trials)
      .def_readonly("detections", &pd::SummaryRow::detections)
      .def_readonly("misses", &pd::SummaryRow::misses)
      .def_readonly("mean_loc_error", &pd::SummaryRow::mean_loc_error)
      .def_readonly("std_loc_error", &pd::SummaryRow::std_loc_error)
      .def_readonly("max_loc_error", &pd::SummaryRow::max_loc_error)
      .def_readonly("mean_far_amp", &pd::SummaryRow::mean_far_amp)
      .def_readonly("mean_l1_err", &pd::SummaryRow::mean_l1_err)
      .def_readonly("violations", &pd::SummaryRow::violations)
      .def_readonly("unchecked", &pd::SummaryRow::unchecked);

  m.def(
      "run_summary",
      [](const std::string& config_json) {
        const auto config = pd::config_from_json(nlohmann::json::parse(config_json));
        py::gil_scoped_release release;
        return pd::aggregate(pd::run_experiment(config), config.noise);
      },
      "config_json"_a, "Runs an experiment from a JSON config and returns the per-cell summary.");
}
