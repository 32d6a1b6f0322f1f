#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "pulsedeconv/kernels.hpp"

namespace pulsedeconv {

struct Spike {
  long location = 0;
  double amplitude = 0.0;

  friend bool operator==(const Spike&, const Spike&) = default;
};

/// Spikes on the integer grid [0, grid_len), strictly increasing in location.
/// Zero amplitudes are dropped at construction.
class SpikeTrain {
 public:
  SpikeTrain() = default;
  SpikeTrain(std::vector<Spike> spikes, std::size_t grid_len);

  /// Keeps entries with |x[k]| > floor.
  static SpikeTrain from_dense(std::span<const double> x, double floor = 0.0);

  std::span<const Spike> spikes() const { return spikes_; }
  std::size_t size() const { return spikes_.size(); }
  bool empty() const { return spikes_.empty(); }
  std::size_t grid_len() const { return grid_len_; }
  const Spike& operator[](std::size_t i) const { return spikes_[i]; }

  std::vector<long> locations() const;
  std::vector<double> dense() const;
  double l1_norm() const;

 private:
  std::vector<Spike> spikes_;
  std::size_t grid_len_ = 0;
};

/// Sampled stream of pulses y with its noise budget.
struct Measurements {
  std::vector<double> y;
  double delta = 0.0;
  double sigma = 1.0;
  int N = 1;
  std::uint64_t seed = 0;
  double noise_l1 = 0.0;     ///< ||eta||_1 of the realized noise
  double snr_db = 0.0;       ///< realized clean-to-noise power ratio (inf when noiseless)
};

/// Noise with a prescribed l1 norm: a white Gaussian direction rescaled to ||eta||_1 = delta.
struct L1Budget {
  double delta = 0.0;
  std::uint64_t seed = 0;
};

/// White Gaussian noise at a given clean-signal to noise power ratio.
struct GaussianSnr {
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

using NoiseSpec = std::variant<L1Budget, GaussianSnr>;

/// How delta is derived from the realized noise.
enum class DeltaMode {
  EtaL1,      ///< delta = ||eta||_1
  EtaConvGL1  ///< delta = ||eta * g||_1, the experimental convention
};

/// true iff every pair of spikes is at least N * nu * sigma apart.
bool check_separation(const SpikeTrain& spikes, double nu, double sigma, int N);

/// Noiseless stream g_sigma * x on the spike train's grid ("same" convolution).
std::vector<double> convolve_same(std::span<const double> x, const SampledKernel& kernel);

/// ||eta * g_sigma||_1 with the full (untruncated) linear convolution.
double full_convolution_l1(std::span<const double> eta, const SampledKernel& kernel);

/// y = g_sigma * x + eta. Every spike must sit at least one kernel radius from both grid edges.
Measurements synthesize(const SpikeTrain& spikes, const SampledKernel& kernel, const NoiseSpec& noise,
                        DeltaMode delta_mode = DeltaMode::EtaL1);

struct FirSpec {
  double cutoff_hz = 0.0;
  double transition_hz = 0.0;
  double stopband_db = 60.0;
};

/// Kaiser-windowed sinc low-pass, odd length, unit DC gain.
std::vector<double> design_lowpass(const FirSpec& fir, double sample_hz);

/// Baseband envelope: (rf[k] cos(2 pi f_c k / f_s)) filtered by the low-pass, zero phase.
/// A tone A cos(2 pi f_c t) demodulates to A / 2.
std::vector<double> demodulate(std::span<const double> rf, double carrier_hz, double sample_hz, const FirSpec& fir);

/// envelope[k] cos(2 pi f_c k / f_s).
std::vector<double> modulate(std::span<const double> envelope, double carrier_hz, double sample_hz);

}  // namespace pulsedeconv
