#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pulsedeconv/kernels.hpp"
#include "pulsedeconv/signal.hpp"

namespace pulsedeconv {

/// min ||x||_1  subject to  ||y - g_sigma * x||_1 <= delta, on the grid of y.
struct RecoveryProblem {
  std::vector<double> y;
  SampledKernel kernel;
  double delta = 0.0;
  double solver_tol = 1e-10;       ///< relative duality gap
  double feasibility_tol = 1e-7;   ///< relative primal and dual infeasibility
  int max_iterations = 300;

  static RecoveryProblem from(const Measurements& m, const SampledKernel& kernel, double solver_tol = 1e-10);
};

enum class SolverStatus {
  Optimal,        ///< all convergence tolerances met
  Inaccurate,     ///< progress stalled at reduced accuracy
  MaxIterations,
  NumericalFailure
};

std::string to_string(SolverStatus status);

struct RecoverySolution {
  std::vector<double> x_hat;
  std::vector<Spike> support;
  double objective = 0.0;       ///< sum |x_hat[k]|
  double dual_objective = 0.0;  ///< lower bound on the optimum from the dual iterate
  double residual_l1 = 0.0;     ///< ||y - g_sigma * x_hat||_1
  double support_floor = 0.0;
  SolverStatus status = SolverStatus::Optimal;
  int iterations = 0;
  double primal_infeasibility = 0.0;  ///< relative, at termination
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;

  SpikeTrain estimate() const;
};

/// Solves the program exactly as a linear program with x = x+ - x- and residual
/// slacks e+, e- summing to at most delta, by a primal-dual interior-point
/// method. delta = 0 is handled as the equality-constrained program y = g * x.
///
/// The default support floor is 1e-8 * max |x_hat|.
RecoverySolution solve_l1_deconvolution(const RecoveryProblem& problem,
                                        std::optional<double> support_floor = std::nullopt);

/// Entries with |x_hat[k]| > support_floor, in increasing location order.
std::vector<Spike> extract_support(std::span<const double> x_hat, double support_floor);

}  // namespace pulsedeconv
