#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pulsedeconv {

enum class KernelFamily { Gaussian, Cauchy, Custom };

/// An even pulse shape g(t) with closed-form derivatives up to order 3.
///
/// Built-in families are the Gaussian e^{-t^2/2} and the Cauchy 1/(1+t^2).
/// Custom kernels must provide their own derivatives; nothing is
/// differentiated numerically. Instances are immutable and cheap to copy.
class Kernel {
 public:
  /// Callback returning g^(order)(t) for order in 0..3.
  using Evaluator = std::function<double(double t, int order)>;

  static Kernel gaussian();
  static Kernel cauchy();
  /// `nominal_nu` is the separation constant the caller expects the kernel to need.
  static Kernel custom(std::string name, Evaluator evaluator, double nominal_nu);
  /// "gaussian" or "cauchy" (case-insensitive).
  static Kernel from_name(std::string_view name);

  /// g^(order)(t). Throws InvalidArgument for order outside 0..3.
  double eval(double t, int order = 0) const;

  KernelFamily family() const { return family_; }
  const std::string& name() const { return name_; }
  /// Minimal empirical separation constant tabulated for the built-in kernels.
  double nominal_nu() const { return nominal_nu_; }

 private:
  Kernel(KernelFamily family, std::string name, Evaluator evaluator, double nominal_nu);

  KernelFamily family_;
  std::string name_;
  Evaluator evaluator_;
  double nominal_nu_;
};

double eval_kernel(const Kernel& kernel, double t, int order);

struct AdmissibilityGrid {
  double t_max = 20.0;
  double step = 1e-3;
};

struct AdmissibilityReport {
  std::array<double, 4> C{};  ///< sup |g^(l)(t)| (1 + t^2) over the grid
  double epsilon = 0.0;
  double beta = 0.0;
  double nu_empirical = 0.0;
  double g0 = 0.0;  ///< g(0)
  bool passed = false;
  std::vector<std::string> failures;  ///< human-readable clause violations
};

/// Checks the admissibility clauses numerically on a symmetric grid.
///
/// When `epsilon` is not given it is chosen to maximise epsilon * beta(epsilon)
/// over the concave region around the origin, where beta(epsilon) is the
/// smallest curvature -g''(t) on [-epsilon, epsilon]. Both are kept strictly
/// below nu, which defaults to the kernel's nominal_nu().
AdmissibilityReport verify_admissibility(const Kernel& kernel, AdmissibilityGrid grid = {},
                                         std::optional<double> epsilon = std::nullopt,
                                         std::optional<double> nu = std::nullopt);

/// sup over |t| <= t_max of |g^(order)(t)| (1 + t^2).
double decay_constant(const Kernel& kernel, int order, AdmissibilityGrid grid = {});

/// Kernel samples g(k / (sigma N)) for k in [-radius, radius].
struct SampledKernel {
  std::vector<double> taps;  ///< taps[k + radius] = g(k / (sigma N))
  double sigma = 1.0;
  int N = 1;
  int radius = 0;
  double tail_bound = 0.0;  ///< C_0 / (1 + (radius / (sigma N))^2)

  double at(int k) const {
    return (k < -radius || k > radius) ? 0.0 : taps[static_cast<std::size_t>(k + radius)];
  }
  double width() const { return sigma * N; }
  std::size_t size() const { return taps.size(); }
};

/// Samples g_sigma[k] on the smallest radius R for which the decay envelope
/// C_0 / (1 + (R / (sigma N))^2) drops below trunc_tol.
SampledKernel sample_kernel(const Kernel& kernel, double sigma, int N, double trunc_tol);

/// Same as above with an explicit C_0 (avoids rescanning the decay envelope).
SampledKernel sample_kernel(const Kernel& kernel, double sigma, int N, double trunc_tol, double c0);

}  // namespace pulsedeconv
