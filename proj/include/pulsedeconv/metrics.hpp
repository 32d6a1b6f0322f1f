#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pulsedeconv/kernels.hpp"
#include "pulsedeconv/signal.hpp"

namespace pulsedeconv {

/// For each true spike, the distance in samples to the nearest estimated
/// spike; +infinity when the estimate is empty.
std::vector<double> localization_error(const SpikeTrain& truth, const SpikeTrain& estimate);

/// Nearest estimated location for each true spike (nullopt when the estimate is empty).
std::vector<std::optional<long>> nearest_estimates(const SpikeTrain& truth, const SpikeTrain& estimate);

/// Near set: union of Z_m = {k : |k - k_m| <= N epsilon sigma}; far set: the rest of the grid.
class Partition {
 public:
  Partition(std::size_t grid_len, std::vector<char> near_mask);

  std::size_t grid_len() const { return mask_.size(); }
  bool is_near(long k) const;
  std::vector<long> near() const;
  std::vector<long> far() const;
  std::size_t near_count() const;
  double half_width() const { return half_width_; }

 private:
  friend Partition partition_near_far(const SpikeTrain&, double, double, int);
  std::vector<char> mask_;
  double half_width_ = 0.0;
};

Partition partition_near_far(const SpikeTrain& truth, double epsilon, double sigma, int N);

/// Sum of |c_hat| over estimated spikes in the far set.
double far_false_amplitude(const SpikeTrain& estimate, const Partition& partition);

/// ||x_hat - x||_1 over the grid.
double l1_distance(const SpikeTrain& truth, const SpikeTrain& estimate);

struct BoundSet {
  double gamma = 0.0;
  double l1_bound = 0.0;
  /// One entry per true spike; nullopt where |c_m| <= l1_bound.
  std::vector<std::optional<double>> loc_bound_per_spike;
  double far_amp_bound = 0.0;
  double weighted_d2_bound = 0.0;
};

/// gamma = max(N sigma, 1 / epsilon); l1 and far bounds 16 gamma^2 delta / beta;
/// localization (8 gamma^2 / beta) sqrt(g0 delta / (|c_m| - l1_bound));
/// weighted squared distance 64 g0 gamma^4 delta / beta^2.
BoundSet compute_bounds(const AdmissibilityReport& report, double sigma, int N, double delta, const SpikeTrain& truth,
                        double g0);

struct Lemma21Check {
  double lhs = 0.0;
  bool holds = true;
};

/// lhs = sum over near estimated spikes of |c_hat| d^2(k_hat, K).
Lemma21Check check_lemma21(const SpikeTrain& truth, const SpikeTrain& estimate, const Partition& partition,
                           double bound);

/// Spearman rank correlation with average ranks for ties; NaN when either
/// input is constant or the sizes differ or are below 2.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace pulsedeconv
