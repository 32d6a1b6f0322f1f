#include "pulsedeconv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pulsedeconv/error.hpp"

namespace pulsedeconv {

std::vector<std::optional<long>> nearest_estimates(const SpikeTrain& truth, const SpikeTrain& estimate) {
  std::vector<std::optional<long>> out;
  out.reserve(truth.size());
  const std::vector<long> est = estimate.locations();
  for (const Spike& s : truth.spikes()) {
    if (est.empty()) {
      out.emplace_back();
      continue;
    }
    auto it = std::lower_bound(est.begin(), est.end(), s.location);
    long best = it == est.end() ? est.back() : *it;
    if (it != est.begin() && s.location - *std::prev(it) <= std::abs(best - s.location)) best = *std::prev(it);
    out.emplace_back(best);
  }
  return out;
}

std::vector<double> localization_error(const SpikeTrain& truth, const SpikeTrain& estimate) {
  const auto nearest = nearest_estimates(truth, estimate);
  std::vector<double> err(truth.size());
  for (std::size_t m = 0; m < truth.size(); ++m) {
    err[m] = nearest[m] ? static_cast<double>(std::abs(*nearest[m] - truth[m].location))
                        : std::numeric_limits<double>::infinity();
  }
  return err;
}

Partition::Partition(std::size_t grid_len, std::vector<char> near_mask) : mask_(std::move(near_mask)) {
  if (mask_.size() != grid_len) throw InvalidArgument("partition mask length must equal grid_len");
}

bool Partition::is_near(long k) const {
  return k >= 0 && static_cast<std::size_t>(k) < mask_.size() && mask_[static_cast<std::size_t>(k)] != 0;
}

std::vector<long> Partition::near() const {
  std::vector<long> out;
  for (std::size_t k = 0; k < mask_.size(); ++k) {
    if (mask_[k]) out.push_back(static_cast<long>(k));
  }
  return out;
}

std::vector<long> Partition::far() const {
  std::vector<long> out;
  for (std::size_t k = 0; k < mask_.size(); ++k) {
    if (!mask_[k]) out.push_back(static_cast<long>(k));
  }
  return out;
}

std::size_t Partition::near_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), char{1}));
}

Partition partition_near_far(const SpikeTrain& truth, double epsilon, double sigma, int N) {
  if (!(epsilon >= 0.0) || !(sigma > 0.0) || N < 1) {
    throw InvalidArgument("partition needs epsilon >= 0, sigma > 0 and N >= 1");
  }
  const double half = static_cast<double>(N) * epsilon * sigma;
  // Small slack so that N eps sigma landing on an integer is not lost to rounding.
  const auto reach = static_cast<long>(std::floor(half + 1e-9));
  const long n = static_cast<long>(truth.grid_len());
  std::vector<char> mask(truth.grid_len(), 0);
  for (const Spike& s : truth.spikes()) {
    for (long k = std::max(0L, s.location - reach); k <= std::min(n - 1, s.location + reach); ++k) {
      mask[static_cast<std::size_t>(k)] = 1;
    }
  }
  Partition p(truth.grid_len(), std::move(mask));
  p.half_width_ = half;
  return p;
}

double far_false_amplitude(const SpikeTrain& estimate, const Partition& partition) {
  double total = 0.0;
  for (const Spike& s : estimate.spikes()) {
    if (!partition.is_near(s.location)) total += std::abs(s.amplitude);
  }
  return total;
}

double l1_distance(const SpikeTrain& truth, const SpikeTrain& estimate) {
  const auto a = truth.spikes();
  const auto b = estimate.spikes();
  double total = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].location < b[j].location)) {
      total += std::abs(a[i++].amplitude);
    } else if (i == a.size() || b[j].location < a[i].location) {
      total += std::abs(b[j++].amplitude);
    } else {
      total += std::abs(a[i++].amplitude - b[j++].amplitude);
    }
  }
  return total;
}

BoundSet compute_bounds(const AdmissibilityReport& report, double sigma, int N, double delta, const SpikeTrain& truth,
                        double g0) {
  if (!(delta >= 0.0)) throw InvalidArgument("delta must be >= 0");
  if (!(report.epsilon > 0.0) || !(report.beta > 0.0)) {
    throw InvalidArgument("admissibility report needs positive epsilon and beta");
  }
  BoundSet b;
  b.gamma = std::max(static_cast<double>(N) * sigma, 1.0 / report.epsilon);
  const double g2 = b.gamma * b.gamma;
  b.l1_bound = 16.0 * g2 * delta / report.beta;
  b.far_amp_bound = b.l1_bound;
  b.weighted_d2_bound = 64.0 * g0 * g2 * g2 * delta / (report.beta * report.beta);
  b.loc_bound_per_spike.reserve(truth.size());
  for (const Spike& s : truth.spikes()) {
    const double margin = std::abs(s.amplitude) - b.l1_bound;
    if (margin > 0.0) {
      b.loc_bound_per_spike.emplace_back(8.0 * g2 / report.beta * std::sqrt(g0 * delta / margin));
    } else {
      b.loc_bound_per_spike.emplace_back();
    }
  }
  return b;
}

Lemma21Check check_lemma21(const SpikeTrain& truth, const SpikeTrain& estimate, const Partition& partition,
                           double bound) {
  Lemma21Check out;
  if (truth.empty()) return out;
  const std::vector<long> locs = truth.locations();
  for (const Spike& s : estimate.spikes()) {
    if (!partition.is_near(s.location)) continue;
    auto it = std::lower_bound(locs.begin(), locs.end(), s.location);
    long d = std::numeric_limits<long>::max();
    if (it != locs.end()) d = *it - s.location;
    if (it != locs.begin()) d = std::min(d, s.location - *std::prev(it));
    const auto dd = static_cast<double>(d);
    out.lhs += std::abs(s.amplitude) * dd * dd;
  }
  out.holds = out.lhs <= bound;
  return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (x.size() != y.size() || x.size() < 2) return nan;
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return nan;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace pulsedeconv
