#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pulsedeconv/kernels.hpp"

namespace pulsedeconv {

/// q(t) = sum_m a_m g((t - t_m) / sigma) + b_m g'((t - t_m) / sigma), built so
/// that q(t_m) = u_m and q'(t_m) = 0 at every node.
struct DualCertificate {
  std::vector<double> nodes;
  std::vector<double> signs;
  std::vector<double> coeffs_a;
  std::vector<double> coeffs_b;
  double sigma = 1.0;
  Kernel kernel = Kernel::gaussian();
  double condition_number = 1.0;   ///< 2-norm condition of the interpolation system
  double system_residual = 0.0;    ///< max |q(t_j) - u_j|, |q'(t_j)| over nodes

  /// d^order q / dt^order at t, order in 0..2.
  double eval(double t, int order = 0) const;
};

/// Largest condition number accepted by build_certificate.
inline constexpr double kMaxCertificateCondition = 1e12;

/// Solves the 2M x 2M interpolation-plus-stationarity system. Throws
/// ConstructionFailed when the system is numerically singular, naming the
/// closest node pair.
DualCertificate build_certificate(std::vector<double> nodes, std::vector<double> signs, const Kernel& kernel,
                                  double sigma);

double eval_certificate(const DualCertificate& cert, double t);

struct CertificateGrid {
  double t_max = 20.0;        ///< scan reaches t_max * sigma beyond the outermost nodes
  double near_step = 1e-3;    ///< in units of sigma, within one sigma of a node
  double far_step = 1e-2;     ///< in units of sigma, elsewhere
};

struct CertificateReport {
  double max_abs_q = 0.0;
  double argmax_t = 0.0;
  double tail_bound = 0.0;               ///< envelope bound on |q| beyond the scanned range
  double interpolation_residual = 0.0;   ///< max_m |q(t_m) - u_m|
  double stationarity_residual = 0.0;    ///< max_m |q'(t_m)|
  double quadratic_violation = 0.0;      ///< max over near-node samples of |q| - (1 - beta (t - t_m)^2 / (4 g(0) sigma^2)), clipped at 0
  double quadratic_violation_t = 0.0;
  bool bounded = false;                  ///< max_abs_q and tail_bound <= 1 + bound_tol
  bool interpolates = false;             ///< both residuals <= residual_tol
  bool quadratic = false;                ///< quadratic_violation <= bound_tol
  bool passed = false;
};

CertificateReport verify_certificate(const DualCertificate& cert, double epsilon, double beta,
                                     CertificateGrid grid = {}, double bound_tol = 1e-6,
                                     double residual_tol = 1e-9);

struct SeparationSearch {
  int M = 8;
  bool alternating = true;     ///< +1, -1, +1, ...
  bool equal = true;           ///< all +1
  int random_patterns = 4;     ///< additional random sign patterns
  std::uint64_t seed = 0;
  double lower = 0.05;         ///< bracket in units of sigma
  double upper = 5.0;
  double tol = 1e-3;
  /// Local-curvature parameters for the quadratic clause. Zero means taken
  /// from verify_admissibility of the kernel.
  double epsilon = 0.0;
  double beta = 0.0;
  CertificateGrid grid{};
  double bound_tol = 1e-6;
};

struct SeparationResult {
  double nu = 0.0;
  /// Sign pattern that failed last at the largest failing spacing.
  std::vector<double> worst_pattern;
  int probes = 0;
};

/// Smallest spacing nu (uniform spacing nu * sigma, sigma = 1) at which the
/// certificate passes verification for every configured sign pattern,
/// by bisection to resolution tol. With M = 1 the lower bracket is returned.
/// Throws InvalidArgument when the lower bracket already passes or the upper
/// bracket fails.
SeparationResult empirical_min_separation(const Kernel& kernel, const SeparationSearch& config);

}  // namespace pulsedeconv
