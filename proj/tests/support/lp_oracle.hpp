#pragma once

#include <span>
#include <vector>

#include "pulsedeconv/kernels.hpp"

namespace pulsedeconv::testing {

struct OracleResult {
  bool optimal = false;
  double objective = 0.0;
  std::vector<double> x;
};

/// Two-phase revised simplex (Bland's rule, extended-precision basis
/// refactorization) for min c'z, A z = b, z >= 0.
/// A is row-major with `cols` columns.
OracleResult dense_simplex(const std::vector<double>& A, std::size_t cols, const std::vector<double>& b,
                           const std::vector<double>& c);

/// min ||x||_1 s.t. ||y - G x||_1 <= delta, with G[k][j] = g_sigma[k - j] on
/// the grid of y, assembled as a dense LP and handed to dense_simplex.
OracleResult l1_deconvolution_oracle(std::span<const double> y, const SampledKernel& kernel, double delta);

}  // namespace pulsedeconv::testing
