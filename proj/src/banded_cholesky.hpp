#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace pulsedeconv::detail {

/// Symmetric positive (semi)definite band matrix, lower band stored row-wise:
/// entry (i, j) with 0 <= i - j <= bandwidth lives at data[i * (bandwidth + 1) + (i - j)].
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(std::size_t n, std::size_t bandwidth) { reset(n, bandwidth); }

  void reset(std::size_t n, std::size_t bandwidth) {
    n_ = n;
    bw_ = std::min(bandwidth, n == 0 ? 0 : n - 1);
    data_.assign(n_ * (bw_ + 1), 0.0);
  }
  void zero() { std::fill(data_.begin(), data_.end(), 0.0); }

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return bw_; }

  /// Requires i >= j and i - j <= bandwidth.
  double& lower(std::size_t i, std::size_t j) { return data_[i * (bw_ + 1) + (i - j)]; }
  double lower(std::size_t i, std::size_t j) const { return data_[i * (bw_ + 1) + (i - j)]; }

 private:
  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<double> data_;
};

/// In-place band Cholesky L L^T. Pivots that collapse below `pivot_floor`
/// times the original diagonal are replaced by a huge value, which pins the
/// corresponding solution component to ~0 (the usual interior-point device
/// for near-singular normal equations). Returns the number of such pivots.
inline std::size_t band_cholesky(BandMatrix& a, double pivot_floor = 1e-30) {
  const std::size_t n = a.size();
  const std::size_t bw = a.bandwidth();
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t first = i > bw ? i - bw : 0;
    for (std::size_t j = first; j <= i; ++j) {
      double s = a.lower(i, j);
      const std::size_t kfirst = std::max(first, j > bw ? j - bw : 0);
      for (std::size_t k = kfirst; k < j; ++k) s -= a.lower(i, k) * a.lower(j, k);
      if (i == j) {
        const double diag = a.lower(i, i);
        if (!(s > pivot_floor * std::max(diag, 1e-300))) {
          s = 1e128;
          ++skipped;
        }
        a.lower(i, i) = std::sqrt(s);
      } else {
        a.lower(i, j) = s / a.lower(j, j);
      }
    }
  }
  return skipped;
}

/// Solves L L^T x = b in place given the factor from band_cholesky.
inline void band_solve(const BandMatrix& l, std::span<double> b) {
  const std::size_t n = l.size();
  const std::size_t bw = l.bandwidth();
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    const std::size_t first = i > bw ? i - bw : 0;
    for (std::size_t k = first; k < i; ++k) s -= l.lower(i, k) * b[k];
    b[i] = s / l.lower(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    const std::size_t last = std::min(n - 1, ii + bw);
    for (std::size_t k = ii + 1; k <= last; ++k) s -= l.lower(k, ii) * b[k];
    b[ii] = s / l.lower(ii, ii);
  }
}

}  // namespace pulsedeconv::detail
