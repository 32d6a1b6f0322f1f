#include "pulsedeconv/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "pulsedeconv/error.hpp"

namespace pulsedeconv {

SpikeTrain::SpikeTrain(std::vector<Spike> spikes, std::size_t grid_len) : grid_len_(grid_len) {
  if (grid_len == 0) throw InvalidArgument("spike train grid_len must be positive");
  spikes_.reserve(spikes.size());
  for (const Spike& s : spikes) {
    if (s.location < 0 || static_cast<std::size_t>(s.location) >= grid_len) {
      throw InvalidArgument("spike location " + std::to_string(s.location) + " outside [0, " +
                            std::to_string(grid_len) + ")");
    }
    if (!std::isfinite(s.amplitude)) throw InvalidArgument("spike amplitude must be finite");
    if (!spikes_.empty() && s.location <= spikes_.back().location) {
      throw InvalidArgument("spike locations must be strictly increasing");
    }
    if (s.amplitude != 0.0) spikes_.push_back(s);
  }
}

SpikeTrain SpikeTrain::from_dense(std::span<const double> x, double floor) {
  std::vector<Spike> spikes;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (std::abs(x[k]) > floor) spikes.push_back({static_cast<long>(k), x[k]});
  }
  return SpikeTrain(std::move(spikes), std::max<std::size_t>(x.size(), 1));
}

std::vector<long> SpikeTrain::locations() const {
  std::vector<long> out;
  out.reserve(spikes_.size());
  for (const Spike& s : spikes_) out.push_back(s.location);
  return out;
}

std::vector<double> SpikeTrain::dense() const {
  std::vector<double> x(grid_len_, 0.0);
  for (const Spike& s : spikes_) x[static_cast<std::size_t>(s.location)] = s.amplitude;
  return x;
}

double SpikeTrain::l1_norm() const {
  double sum = 0.0;
  for (const Spike& s : spikes_) sum += std::abs(s.amplitude);
  return sum;
}

bool check_separation(const SpikeTrain& spikes, double nu, double sigma, int N) {
  if (!(nu > 0.0) || !(sigma > 0.0) || N < 1) {
    throw InvalidArgument("check_separation needs nu > 0, sigma > 0 and N >= 1");
  }
  const double required = static_cast<double>(N) * nu * sigma;
  const auto s = spikes.spikes();
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (static_cast<double>(s[i].location - s[i - 1].location) < required) return false;
  }
  return true;
}

std::vector<double> convolve_same(std::span<const double> x, const SampledKernel& kernel) {
  const long n = static_cast<long>(x.size());
  const long r = kernel.radius;
  std::vector<double> y(x.size(), 0.0);
  for (long j = 0; j < n; ++j) {
    const double xj = x[static_cast<std::size_t>(j)];
    if (xj == 0.0) continue;
    const long lo = std::max(0L, j - r);
    const long hi = std::min(n - 1, j + r);
    for (long k = lo; k <= hi; ++k) y[static_cast<std::size_t>(k)] += xj * kernel.taps[static_cast<std::size_t>(k - j + r)];
  }
  return y;
}

namespace {

double l1(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += std::abs(a);
  return s;
}

double mean_square(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double a : v) s += a * a;
  return s / static_cast<double>(v.size());
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> eta(n);
  for (double& e : eta) e = normal(rng);
  return eta;
}

}  // namespace

double full_convolution_l1(std::span<const double> eta, const SampledKernel& kernel) {
  const long n = static_cast<long>(eta.size());
  const long r = kernel.radius;
  double total = 0.0;
  for (long k = -r; k < n + r; ++k) {
    double acc = 0.0;
    const long lo = std::max(0L, k - r);
    const long hi = std::min(n - 1, k + r);
    for (long j = lo; j <= hi; ++j) acc += eta[static_cast<std::size_t>(j)] * kernel.taps[static_cast<std::size_t>(k - j + r)];
    total += std::abs(acc);
  }
  return total;
}

Measurements synthesize(const SpikeTrain& spikes, const SampledKernel& kernel, const NoiseSpec& noise,
                        DeltaMode delta_mode) {
  const std::size_t n = spikes.grid_len();
  const long r = kernel.radius;
  for (const Spike& s : spikes.spikes()) {
    if (s.location < r || s.location + r >= static_cast<long>(n)) {
      throw InvalidArgument("grid of length " + std::to_string(n) + " cannot hold spike at " +
                            std::to_string(s.location) + " with kernel radius " + std::to_string(r));
    }
  }

  Measurements m;
  m.sigma = kernel.sigma;
  m.N = kernel.N;
  const std::vector<double> x = spikes.dense();
  m.y = convolve_same(x, kernel);
  const double signal_power = mean_square(m.y);

  std::vector<double> eta;
  if (const auto* budget = std::get_if<L1Budget>(&noise)) {
    if (!(budget->delta >= 0.0) || !std::isfinite(budget->delta)) throw InvalidArgument("noise delta must be >= 0");
    m.seed = budget->seed;
    if (budget->delta > 0.0) {
      eta = white_noise(n, budget->seed);
      const double norm = l1(eta);
      for (double& e : eta) e *= budget->delta / norm;
      while (l1(eta) > budget->delta) {
        for (double& e : eta) e *= 1.0 - 1e-15;
      }
    }
  } else {
    const auto& snr = std::get<GaussianSnr>(noise);
    if (!std::isfinite(snr.snr_db)) throw InvalidArgument("snr_db must be finite");
    m.seed = snr.seed;
    const double target = signal_power / std::pow(10.0, snr.snr_db / 10.0);
    eta = white_noise(n, snr.seed);
    // Rescale the draw so the realized SNR equals the requested one.
    const double drawn = mean_square(eta);
    const double scale = drawn > 0.0 ? std::sqrt(target / drawn) : 0.0;
    for (double& e : eta) e *= scale;
  }

  if (eta.empty()) {
    m.noise_l1 = 0.0;
    m.delta = 0.0;
    m.snr_db = std::numeric_limits<double>::infinity();
    return m;
  }
  for (std::size_t k = 0; k < n; ++k) m.y[k] += eta[k];
  m.noise_l1 = l1(eta);
  const double noise_power = mean_square(eta);
  m.snr_db = noise_power > 0.0 ? 10.0 * std::log10(signal_power / noise_power)
                               : std::numeric_limits<double>::infinity();
  if (delta_mode == DeltaMode::EtaConvGL1) {
    m.delta = full_convolution_l1(eta, kernel);
  } else if (const auto* budget = std::get_if<L1Budget>(&noise)) {
    m.delta = budget->delta;
  } else {
    m.delta = m.noise_l1;
  }
  return m;
}

std::vector<double> design_lowpass(const FirSpec& fir, double sample_hz) {
  const double nyquist = sample_hz / 2.0;
  if (!(sample_hz > 0.0)) throw InvalidArgument("sample rate must be positive");
  if (!(fir.cutoff_hz > 0.0) || !(fir.cutoff_hz < nyquist)) {
    throw InvalidArgument("low-pass cutoff must lie in (0, Nyquist)");
  }
  if (!(fir.transition_hz > 0.0)) throw InvalidArgument("transition width must be positive");
  if (!(fir.stopband_db > 0.0)) throw InvalidArgument("stopband attenuation must be positive");

  // Kaiser's design formulas.
  const double a = fir.stopband_db;
  double kaiser_beta = 0.0;
  if (a > 50.0) {
    kaiser_beta = 0.1102 * (a - 8.7);
  } else if (a >= 21.0) {
    kaiser_beta = 0.5842 * std::pow(a - 21.0, 0.4) + 0.07886 * (a - 21.0);
  }
  const double dw = 2.0 * std::numbers::pi * fir.transition_hz / sample_hz;
  long order = static_cast<long>(std::ceil((a - 8.0) / (2.285 * dw)));
  if (order % 2 != 0) ++order;
  order = std::max(order, 2L);

  const double fc = fir.cutoff_hz / sample_hz;
  const double half = static_cast<double>(order) / 2.0;
  const double i0_beta = std::cyl_bessel_i(0.0, kaiser_beta);
  std::vector<double> h(static_cast<std::size_t>(order + 1));
  double dc = 0.0;
  for (long i = 0; i <= order; ++i) {
    const double m = static_cast<double>(i) - half;
    const double sinc = m == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    const double ratio = m / half;
    const double w = std::cyl_bessel_i(0.0, kaiser_beta * std::sqrt(std::max(0.0, 1.0 - ratio * ratio))) / i0_beta;
    h[static_cast<std::size_t>(i)] = sinc * w;
    dc += sinc * w;
  }
  for (double& v : h) v /= dc;
  return h;
}

std::vector<double> modulate(std::span<const double> envelope, double carrier_hz, double sample_hz) {
  std::vector<double> out(envelope.size());
  const double w = 2.0 * std::numbers::pi * carrier_hz / sample_hz;
  for (std::size_t k = 0; k < envelope.size(); ++k) out[k] = envelope[k] * std::cos(w * static_cast<double>(k));
  return out;
}

std::vector<double> demodulate(std::span<const double> rf, double carrier_hz, double sample_hz, const FirSpec& fir) {
  if (!(carrier_hz > 0.0) || !(carrier_hz < sample_hz / 2.0)) {
    throw InvalidArgument("carrier frequency must lie in (0, Nyquist)");
  }
  const std::vector<double> h = design_lowpass(fir, sample_hz);
  const std::vector<double> mixed = modulate(rf, carrier_hz, sample_hz);
  const long n = static_cast<long>(mixed.size());
  const long half = static_cast<long>(h.size() / 2);
  std::vector<double> out(mixed.size(), 0.0);
  for (long k = 0; k < n; ++k) {
    double acc = 0.0;
    const long lo = std::max(0L, k - half);
    const long hi = std::min(n - 1, k + half);
    for (long j = lo; j <= hi; ++j) acc += mixed[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(k - j + half)];
    out[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

}  // namespace pulsedeconv
