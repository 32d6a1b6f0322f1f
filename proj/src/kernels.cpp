#include "pulsedeconv/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <utility>

#include "pulsedeconv/error.hpp"

namespace pulsedeconv {

namespace {

double gaussian_eval(double t, int order) {
  const double e = std::exp(-0.5 * t * t);
  switch (order) {
    case 0: return e;
    case 1: return -t * e;
    case 2: return (t * t - 1.0) * e;
    case 3: return (3.0 * t - t * t * t) * e;
    default: break;
  }
  throw InvalidArgument("kernel derivative order must be in 0..3, got " + std::to_string(order));
}

double cauchy_eval(double t, int order) {
  const double d = 1.0 + t * t;
  switch (order) {
    case 0: return 1.0 / d;
    case 1: return -2.0 * t / (d * d);
    case 2: return (6.0 * t * t - 2.0) / (d * d * d);
    case 3: return 24.0 * t * (1.0 - t * t) / (d * d * d * d);
    default: break;
  }
  throw InvalidArgument("kernel derivative order must be in 0..3, got " + std::to_string(order));
}

void check_order(int order) {
  if (order < 0 || order > 3) {
    throw InvalidArgument("kernel derivative order must be in 0..3, got " + std::to_string(order));
  }
}

std::size_t grid_count(const AdmissibilityGrid& grid) {
  if (!(grid.step > 0.0) || !(grid.t_max > 0.0)) {
    throw InvalidArgument("admissibility grid needs positive t_max and step");
  }
  return static_cast<std::size_t>(std::floor(grid.t_max / grid.step + 1e-9));
}

}  // namespace

Kernel::Kernel(KernelFamily family, std::string name, Evaluator evaluator, double nominal_nu)
    : family_(family), name_(std::move(name)), evaluator_(std::move(evaluator)), nominal_nu_(nominal_nu) {}

Kernel Kernel::gaussian() { return Kernel(KernelFamily::Gaussian, "gaussian", gaussian_eval, 1.1); }

Kernel Kernel::cauchy() { return Kernel(KernelFamily::Cauchy, "cauchy", cauchy_eval, 0.45); }

Kernel Kernel::custom(std::string name, Evaluator evaluator, double nominal_nu) {
  if (!evaluator) throw InvalidArgument("custom kernel needs an evaluator");
  if (!(nominal_nu > 0.0)) throw InvalidArgument("custom kernel needs a positive nominal nu");
  return Kernel(KernelFamily::Custom, std::move(name), std::move(evaluator), nominal_nu);
}

Kernel Kernel::from_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "gaussian") return gaussian();
  if (lower == "cauchy") return cauchy();
  throw InvalidArgument("unknown kernel '" + std::string(name) + "' (expected gaussian or cauchy)");
}

double Kernel::eval(double t, int order) const {
  check_order(order);
  return evaluator_(t, order);
}

double eval_kernel(const Kernel& kernel, double t, int order) { return kernel.eval(t, order); }

double decay_constant(const Kernel& kernel, int order, AdmissibilityGrid grid) {
  check_order(order);
  const std::size_t half = grid_count(grid);
  double sup = 0.0;
  for (std::size_t i = 0; i <= half; ++i) {
    const double t = static_cast<double>(i) * grid.step;
    const double w = 1.0 + t * t;
    sup = std::max({sup, std::abs(kernel.eval(t, order)) * w, std::abs(kernel.eval(-t, order)) * w});
  }
  return sup;
}

AdmissibilityReport verify_admissibility(const Kernel& kernel, AdmissibilityGrid grid,
                                         std::optional<double> epsilon, std::optional<double> nu) {
  AdmissibilityReport report;
  const std::size_t half = grid_count(grid);
  report.nu_empirical = nu.value_or(kernel.nominal_nu());
  report.g0 = kernel.eval(0.0, 0);
  for (int l = 0; l < 4; ++l) report.C[static_cast<std::size_t>(l)] = decay_constant(kernel, l, grid);

  auto fail = [&report](std::string msg) { report.failures.push_back(std::move(msg)); };

  const double nu_value = report.nu_empirical;
  if (!(nu_value > 0.0)) fail("separation constant nu must be positive");

  // Evenness and global decay.
  double scale = std::abs(report.g0);
  for (std::size_t i = 1; i <= half; ++i) {
    const double t = static_cast<double>(i) * grid.step;
    scale = std::max(scale, std::abs(kernel.eval(t, 0)));
  }
  for (std::size_t i = 1; i <= half; ++i) {
    const double t = static_cast<double>(i) * grid.step;
    if (std::abs(kernel.eval(t, 0) - kernel.eval(-t, 0)) > 1e-12 * scale) {
      fail("kernel is not even at t = " + std::to_string(t));
      break;
    }
  }
  for (int l = 0; l < 4; ++l) {
    const double c = report.C[static_cast<std::size_t>(l)];
    if (!std::isfinite(c) || !(c > 0.0)) fail("decay constant C" + std::to_string(l) + " is not finite and positive");
  }

  // Concave core: grid points from the origin outwards while g'' < 0.
  std::size_t concave = 0;
  while (concave + 1 <= half) {
    const double t = static_cast<double>(concave + 1) * grid.step;
    if (!(kernel.eval(t, 2) < 0.0) || !(kernel.eval(-t, 2) < 0.0)) break;
    ++concave;
  }
  const double nu_cap = 0.99 * nu_value;
  auto curvature_floor = [&](double eps) {
    // min of -g'' on [-eps, eps], sampled on the grid plus the endpoint itself
    double lo = std::min(-kernel.eval(eps, 2), -kernel.eval(-eps, 2));
    for (std::size_t i = 0; static_cast<double>(i) * grid.step <= eps; ++i) {
      const double t = static_cast<double>(i) * grid.step;
      lo = std::min({lo, -kernel.eval(t, 2), -kernel.eval(-t, 2)});
    }
    return lo;
  };

  if (!(kernel.eval(0.0, 2) < 0.0)) {
    fail("kernel is not strictly concave at the origin");
  } else if (epsilon) {
    report.epsilon = *epsilon;
    if (!(report.epsilon > 0.0)) fail("epsilon must be positive");
    report.beta = std::min(curvature_floor(report.epsilon), nu_cap);
  } else {
    // Running minimum of the curvature keeps this a single pass.
    double best = -1.0;
    double running = -kernel.eval(0.0, 2);
    for (std::size_t i = 1; i <= concave; ++i) {
      const double t = static_cast<double>(i) * grid.step;
      if (t >= nu_cap) break;
      running = std::min({running, -kernel.eval(t, 2), -kernel.eval(-t, 2)});
      const double beta = std::min(running, nu_cap);
      if (t * beta > best) {
        best = t * beta;
        report.epsilon = t;
        report.beta = beta;
      }
    }
  }

  if (report.epsilon > 0.0) {
    if (!(report.beta > 0.0)) fail("no positive curvature bound beta on [-epsilon, epsilon]");
    if (!(report.epsilon < nu_value)) fail("epsilon must be below nu");
    if (!(report.beta < nu_value)) fail("beta must be below nu");
    const double g_eps = kernel.eval(report.epsilon, 0);
    for (std::size_t i = 0; i <= half; ++i) {
      const double t = static_cast<double>(i) * grid.step;
      const double gp = kernel.eval(t, 0);
      const double gm = kernel.eval(-t, 0);
      if (t <= report.epsilon) {
        if (!(gp > 0.0) || !(gm > 0.0)) {
          fail("kernel is not positive on [-epsilon, epsilon]");
          break;
        }
        if (kernel.eval(t, 2) > -report.beta || kernel.eval(-t, 2) > -report.beta) {
          fail("g'' exceeds -beta inside [-epsilon, epsilon]");
          break;
        }
      } else if (!(gp < g_eps) || !(gm < g_eps)) {
        fail("g(t) >= g(epsilon) for some |t| > epsilon");
        break;
      }
    }
  } else if (report.failures.empty()) {
    fail("no feasible (epsilon, beta) pair below nu");
  }

  report.passed = report.failures.empty();
  return report;
}

SampledKernel sample_kernel(const Kernel& kernel, double sigma, int N, double trunc_tol) {
  if (!(trunc_tol > 0.0)) throw InvalidArgument("trunc_tol must be positive");
  return sample_kernel(kernel, sigma, N, trunc_tol, decay_constant(kernel, 0));
}

SampledKernel sample_kernel(const Kernel& kernel, double sigma, int N, double trunc_tol, double c0) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (N < 1) throw InvalidArgument("N must be at least 1");
  if (!(trunc_tol > 0.0)) throw InvalidArgument("trunc_tol must be positive");
  if (!(c0 > 0.0)) throw InvalidArgument("C_0 must be positive");

  const double width = sigma * N;
  auto tail = [&](long r) {
    const double u = static_cast<double>(r) / width;
    return c0 / (1.0 + u * u);
  };
  // Closed-form guess, then settle on the exact smallest radius.
  long radius = 1;
  if (c0 / trunc_tol > 1.0) {
    radius = std::max(1L, static_cast<long>(std::floor(width * std::sqrt(c0 / trunc_tol - 1.0))));
  }
  while (radius > 1 && tail(radius - 1) < trunc_tol) --radius;
  while (!(tail(radius) < trunc_tol)) ++radius;
  if (radius > std::numeric_limits<int>::max() / 4) throw InvalidArgument("kernel radius too large for trunc_tol");

  SampledKernel sampled;
  sampled.sigma = sigma;
  sampled.N = N;
  sampled.radius = static_cast<int>(radius);
  sampled.tail_bound = tail(radius);
  sampled.taps.resize(static_cast<std::size_t>(2 * radius + 1));
  for (long k = -radius; k <= radius; ++k) {
    sampled.taps[static_cast<std::size_t>(k + radius)] = kernel.eval(static_cast<double>(k) / width, 0);
  }
  return sampled;
}

}  // namespace pulsedeconv
