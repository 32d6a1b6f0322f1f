#pragma once

#include <span>
#include <string>
#include <vector>

#include "pulsedeconv/kernels.hpp"
#include "pulsedeconv/signal.hpp"

namespace pulsedeconv {

struct OmpConfig {
  int max_atoms = 1;
  double residual_tol = 0.0;
};

struct OmpResult {
  SpikeTrain estimate;
  std::vector<double> residual_norms;  ///< ||r||_2 before the first and after each accepted atom
  int iterations = 0;
  bool rank_deficient = false;         ///< stopped because the selected atoms became dependent
};

/// Orthogonal matching pursuit over all integer shifts of the kernel on the
/// grid of y (atoms truncated at the edges), with a least-squares refit after
/// every selection.
OmpResult omp_deconvolution(std::span<const double> y, const SampledKernel& kernel, const OmpConfig& cfg);

struct MusicConfig {
  int model_order = 1;
  double deconv_regularization = 1e-3;  ///< Tikhonov weight relative to max |H|^2
  int hankel_rows = 0;                  ///< 0 selects half the usable band
};

struct MusicResult {
  std::vector<long> locations;      ///< increasing
  std::vector<double> pseudospectrum;  ///< one value per grid index
  std::vector<std::string> warnings;
  int band_low = 0;                 ///< first usable frequency bin (may be negative)
  int band_size = 0;
  int hankel_rows = 0;
  int numerical_rank = 0;
  std::vector<double> singular_values;  ///< of the Hankel matrix, decreasing
};

/// Tikhonov-regularized spectral division of y by the kernel transfer
/// function, a Hankel matrix of the resulting frequency samples over the band
/// where |H|^2 >= deconv_regularization * max |H|^2, and the noise-subspace
/// pseudospectrum over grid locations. Returns the model_order largest peaks.
MusicResult music_deconvolution(std::span<const double> y, const SampledKernel& kernel, const MusicConfig& cfg);

/// Kernel taps multiplied by cos(2 pi f_c k / f_s), the pulse seen on RF data.
SampledKernel modulate_kernel(const SampledKernel& kernel, double carrier_hz, double sample_hz);

}  // namespace pulsedeconv
