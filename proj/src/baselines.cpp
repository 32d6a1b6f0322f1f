#include "pulsedeconv/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "pulsedeconv/error.hpp"

namespace pulsedeconv {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

}  // namespace

OmpResult omp_deconvolution(std::span<const double> y, const SampledKernel& kernel, const OmpConfig& cfg) {
  if (cfg.max_atoms < 1) throw InvalidArgument("OMP max_atoms must be >= 1");
  if (!(cfg.residual_tol >= 0.0)) throw InvalidArgument("OMP residual_tol must be >= 0");
  if (y.empty()) throw InvalidArgument("measurements are empty");
  const long n = static_cast<long>(y.size());
  const long r = kernel.radius;

  // Column norms of the truncated atoms.
  std::vector<double> col_norm(y.size());
  for (long j = 0; j < n; ++j) {
    double s = 0.0;
    for (long k = std::max(0L, j - r); k <= std::min(n - 1, j + r); ++k) {
      const double g = kernel.at(static_cast<int>(k - j));
      s += g * g;
    }
    col_norm[static_cast<std::size_t>(j)] = std::sqrt(s);
  }

  OmpResult out;
  std::vector<double> residual(y.begin(), y.end());
  out.residual_norms.push_back(norm2(residual));
  std::vector<long> selected;
  Eigen::VectorXd coef;

  while (static_cast<int>(selected.size()) < cfg.max_atoms && out.residual_norms.back() > cfg.residual_tol) {
    long best = -1;
    double best_corr = 0.0;
    for (long j = 0; j < n; ++j) {
      if (col_norm[static_cast<std::size_t>(j)] == 0.0) continue;
      if (std::find(selected.begin(), selected.end(), j) != selected.end()) continue;
      double c = 0.0;
      for (long k = std::max(0L, j - r); k <= std::min(n - 1, j + r); ++k) {
        c += residual[static_cast<std::size_t>(k)] * kernel.at(static_cast<int>(k - j));
      }
      c = std::abs(c) / col_norm[static_cast<std::size_t>(j)];
      if (c > best_corr) {
        best_corr = c;
        best = j;
      }
    }
    if (best < 0) break;

    std::vector<long> trial = selected;
    trial.push_back(best);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(trial.size()));
    for (std::size_t c = 0; c < trial.size(); ++c) {
      const long j = trial[c];
      for (long k = std::max(0L, j - r); k <= std::min(n - 1, j + r); ++k) {
        A(k, static_cast<Eigen::Index>(c)) = kernel.at(static_cast<int>(k - j));
      }
    }
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(trial.size())) {
      out.rank_deficient = true;
      break;
    }
    coef = qr.solve(yv);
    selected = std::move(trial);
    const Eigen::VectorXd res = yv - A * coef;
    std::copy(res.data(), res.data() + n, residual.begin());
    out.residual_norms.push_back(res.norm());
    ++out.iterations;
  }

  std::vector<Spike> spikes;
  for (std::size_t c = 0; c < selected.size(); ++c) spikes.push_back({selected[c], coef(static_cast<Eigen::Index>(c))});
  std::sort(spikes.begin(), spikes.end(), [](const Spike& a, const Spike& b) { return a.location < b.location; });
  out.estimate = SpikeTrain(std::move(spikes), y.size());
  return out;
}

MusicResult music_deconvolution(std::span<const double> y, const SampledKernel& kernel, const MusicConfig& cfg) {
  if (cfg.model_order < 0) throw InvalidArgument("MUSIC model_order must be >= 0");
  if (!(cfg.deconv_regularization > 0.0)) throw InvalidArgument("MUSIC deconv_regularization must be positive");
  if (cfg.hankel_rows < 0) throw InvalidArgument("MUSIC hankel_rows must be >= 0");
  const std::size_t n = y.size();
  if (n == 0) throw InvalidArgument("measurements are empty");
  if (n <= 2 * static_cast<std::size_t>(kernel.radius)) {
    throw InvalidArgument("grid must be longer than the kernel support for spectral division");
  }

  MusicResult out;
  out.pseudospectrum.assign(n, 0.0);
  if (cfg.model_order == 0) return out;

  using cd = std::complex<double>;
  Eigen::FFT<double> fft;
  std::vector<cd> ty(n), th(n, cd(0.0)), Y, H;
  for (std::size_t k = 0; k < n; ++k) ty[k] = y[k];
  const long r = kernel.radius;
  for (long k = -r; k <= r; ++k) {
    const auto idx = static_cast<std::size_t>((k + static_cast<long>(n)) % static_cast<long>(n));
    th[idx] += kernel.at(static_cast<int>(k));
  }
  fft.fwd(Y, ty);
  fft.fwd(H, th);

  // Signed frequency f in (-n/2, n/2] maps to bin (f mod n).
  auto bin = [n](long f) { return static_cast<std::size_t>(((f % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n)); };
  const long f_max = static_cast<long>(n / 2);
  const long f_min = f_max - static_cast<long>(n) + 1;
  double h_peak = 0.0;
  long f_peak = 0;
  for (long f = 0; f <= f_max; ++f) {
    const double a = std::norm(H[bin(f)]);
    if (a > h_peak) {
      h_peak = a;
      f_peak = f;
    }
  }
  const double floor = cfg.deconv_regularization * h_peak;
  long lo = f_peak;
  long hi = f_peak;
  while (lo - 1 >= f_min && std::norm(H[bin(lo - 1)]) >= floor) --lo;
  while (hi + 1 <= f_max && std::norm(H[bin(hi + 1)]) >= floor) ++hi;
  const long P = hi - lo + 1;
  out.band_low = static_cast<int>(lo);
  out.band_size = static_cast<int>(P);

  std::vector<cd> s(static_cast<std::size_t>(P));
  for (long i = 0; i < P; ++i) {
    const cd h = H[bin(lo + i)];
    s[static_cast<std::size_t>(i)] = Y[bin(lo + i)] * std::conj(h) / (std::norm(h) + floor);
  }

  long L = cfg.hankel_rows > 0 ? cfg.hankel_rows : P / 2;
  if (cfg.model_order > L) throw InvalidArgument("MUSIC model_order exceeds hankel_rows");
  if (L >= P) throw InvalidArgument("MUSIC hankel_rows must be smaller than the usable band (" + std::to_string(P) + ")");
  const long cols = P - L + 1;
  out.hankel_rows = static_cast<int>(L);
  Eigen::MatrixXcd hank(L, cols);
  for (long i = 0; i < L; ++i) {
    for (long j = 0; j < cols; ++j) hank(i, j) = s[static_cast<std::size_t>(i + j)];
  }
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(hank, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0)) {
    out.warnings.push_back("no signal subspace: the deconvolved spectrum is zero");
    return out;
  }
  out.singular_values.assign(sv.data(), sv.data() + sv.size());
  // Tikhonov distortion alone leaves singular values near sqrt(reg) * sv0.
  out.numerical_rank = static_cast<int>((sv.array() > sv(0) * std::sqrt(cfg.deconv_regularization)).count());
  if (cfg.model_order > out.numerical_rank) {
    out.warnings.push_back("model_order " + std::to_string(cfg.model_order) + " exceeds numerical rank " +
                           std::to_string(out.numerical_rank));
  }

  // ||U_n^H v||^2 = ||v||^2 - ||U_s^H v||^2 with v_i = exp(-2 pi i k i / n).
  const Eigen::MatrixXcd Us = svd.matrixU().leftCols(cfg.model_order);
  Eigen::VectorXcd v(L);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    for (long i = 0; i < L; ++i) v(i) = std::polar(1.0, w * static_cast<double>(i));
    const double proj = (Us.adjoint() * v).squaredNorm();
    const double noise = std::max(static_cast<double>(L) - proj, 1e-300);
    out.pseudospectrum[k] = 1.0 / noise;
  }

  std::vector<std::size_t> peaks;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = out.pseudospectrum[k];
    const bool left = k == 0 || p > out.pseudospectrum[k - 1];
    const bool right = k + 1 == n || p >= out.pseudospectrum[k + 1];
    if (left && right) peaks.push_back(k);
  }
  std::sort(peaks.begin(), peaks.end(),
            [&](std::size_t a, std::size_t b) { return out.pseudospectrum[a] > out.pseudospectrum[b]; });
  if (static_cast<int>(peaks.size()) < cfg.model_order) {
    out.warnings.push_back("pseudospectrum has fewer peaks than model_order");
  }
  peaks.resize(std::min(peaks.size(), static_cast<std::size_t>(cfg.model_order)));
  for (std::size_t k : peaks) out.locations.push_back(static_cast<long>(k));
  std::sort(out.locations.begin(), out.locations.end());
  return out;
}

SampledKernel modulate_kernel(const SampledKernel& kernel, double carrier_hz, double sample_hz) {
  if (!(carrier_hz > 0.0) || !(carrier_hz < sample_hz / 2.0)) {
    throw InvalidArgument("carrier frequency must lie in (0, Nyquist)");
  }
  SampledKernel out = kernel;
  const double w = 2.0 * std::numbers::pi * carrier_hz / sample_hz;
  for (int k = -kernel.radius; k <= kernel.radius; ++k) {
    out.taps[static_cast<std::size_t>(k + kernel.radius)] *= std::cos(w * static_cast<double>(k));
  }
  return out;
}

}  // namespace pulsedeconv
