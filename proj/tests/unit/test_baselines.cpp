#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "pulsedeconv/baselines.hpp"
#include "pulsedeconv/error.hpp"

namespace pd = pulsedeconv;

namespace {

pd::SampledKernel gauss_kernel() { return pd::sample_kernel(pd::Kernel::gaussian(), 1.0, 4, 1e-2); }

std::vector<double> noiseless(const pd::SpikeTrain& x, const pd::SampledKernel& g) {
  return pd::synthesize(x, g, pd::L1Budget{0.0, 0}).y;
}

}  // namespace

TEST(Omp, SingleAtomExact) {
  const auto g = gauss_kernel();
  const auto y = noiseless(pd::SpikeTrain({{70, -4.5}}, 160), g);
  const auto r = pd::omp_deconvolution(y, g, {1, 0.0});
  EXPECT_EQ(r.iterations, 1);
  ASSERT_EQ(r.estimate.size(), 1u);
  EXPECT_EQ(r.estimate[0].location, 70);
  EXPECT_NEAR(r.estimate[0].amplitude, -4.5, 1e-12);
}

TEST(Omp, ZeroInputGivesEmptyEstimate) {
  const auto r = pd::omp_deconvolution(std::vector<double>(100, 0.0), gauss_kernel(), {3, 0.0});
  EXPECT_TRUE(r.estimate.empty());
}

TEST(Omp, TwoSeparatedAtomsMatchDirectFit) {
  const auto g = gauss_kernel();
  const pd::SpikeTrain x({{60, 3.0}, {100, -2.0}}, 180);
  const auto y = noiseless(x, g);
  const auto r = pd::omp_deconvolution(y, g, {2, 0.0});
  EXPECT_LE(r.iterations, 2);
  ASSERT_EQ(r.estimate.locations(), x.locations());
  // Direct two-atom least squares.
  Eigen::MatrixXd A(180, 2);
  Eigen::VectorXd b(180);
  for (int k = 0; k < 180; ++k) {
    A(k, 0) = g.at(k - 60);
    A(k, 1) = g.at(k - 100);
    b(k) = y[static_cast<std::size_t>(k)];
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  EXPECT_NEAR(r.estimate[0].amplitude, c(0), 1e-9);
  EXPECT_NEAR(r.estimate[1].amplitude, c(1), 1e-9);
  EXPECT_NEAR(r.estimate[0].amplitude, 3.0, 1e-9);
}

TEST(Omp, ResidualNormNonIncreasing) {
  const auto g = gauss_kernel();
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = pd::synthesize(pd::SpikeTrain({{50, 5.0}, {58, -6.0}, {90, 7.0}, {140, -5.5}}, 200), g,
                                  pd::GaussianSnr{15.0, rng()});
    const auto r = pd::omp_deconvolution(m.y, g, {8, 0.0});
    for (std::size_t i = 1; i < r.residual_norms.size(); ++i) {
      EXPECT_LE(r.residual_norms[i], r.residual_norms[i - 1] * (1.0 + 1e-12));
    }
  }
}

TEST(Omp, ResidualToleranceStopsEarly) {
  const auto g = gauss_kernel();
  const auto y = noiseless(pd::SpikeTrain({{70, 2.0}}, 160), g);
  const auto r = pd::omp_deconvolution(y, g, {5, 1e-8});
  EXPECT_EQ(r.iterations, 1);
}

TEST(Music, TwoNoiselessSpikesLocated) {
  const auto g = gauss_kernel();
  const pd::SpikeTrain x({{100, 6.0}, {140, -8.0}}, 256);
  const auto r = pd::music_deconvolution(noiseless(x, g), g, {2, 1e-3, 0});
  ASSERT_EQ(r.locations.size(), 2u);
  EXPECT_LE(std::abs(r.locations[0] - 100), 1);
  EXPECT_LE(std::abs(r.locations[1] - 140), 1);
  EXPECT_EQ(r.pseudospectrum.size(), 256u);
}

TEST(Music, ZeroOrderGivesEmpty) {
  const auto g = gauss_kernel();
  const auto y = noiseless(pd::SpikeTrain({{100, 6.0}}, 256), g);
  EXPECT_TRUE(pd::music_deconvolution(y, g, {0, 1e-3, 0}).locations.empty());
}

TEST(Music, ZeroSpectrumWarns) {
  const auto r = pd::music_deconvolution(std::vector<double>(256, 0.0), gauss_kernel(), {2, 1e-3, 0});
  EXPECT_TRUE(r.locations.empty());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Music, ScaleInvariantPeaks) {
  const auto g = gauss_kernel();
  const auto m = pd::synthesize(pd::SpikeTrain({{80, 6.0}, {120, -7.0}, {170, 9.0}}, 256), g, pd::GaussianSnr{25.0, 4});
  const auto base = pd::music_deconvolution(m.y, g, {3, 1e-3, 0});
  for (double s : {1e-3, 0.5, 42.0}) {
    std::vector<double> scaled(m.y);
    for (double& v : scaled) v *= s;
    EXPECT_EQ(pd::music_deconvolution(scaled, g, {3, 1e-3, 0}).locations, base.locations) << "scale " << s;
  }
}

TEST(Music, OrderAboveRankWarnsButReturnsPeaks) {
  const auto g = gauss_kernel();
  const auto y = noiseless(pd::SpikeTrain({{128, 5.0}}, 256), g);
  const auto r = pd::music_deconvolution(y, g, {4, 1e-3, 0});
  EXPECT_EQ(r.numerical_rank, 1);
  EXPECT_FALSE(r.warnings.empty());
  ASSERT_EQ(r.locations.size(), 4u);
  EXPECT_TRUE(std::any_of(r.locations.begin(), r.locations.end(), [](long k) { return std::abs(k - 128) <= 1; }));
}

TEST(Music, NoiselessRankMatchesSpikeCount) {
  const auto g = gauss_kernel();
  for (int count : {1, 2, 3}) {
    std::vector<pd::Spike> spikes;
    for (int i = 0; i < count; ++i) spikes.push_back({100 + 25 * i, 5.0 - 2.0 * i});
    const auto r = pd::music_deconvolution(noiseless(pd::SpikeTrain(spikes, 256), g), g, {count, 1e-3, 0});
    EXPECT_EQ(r.numerical_rank, count);
    EXPECT_TRUE(r.warnings.empty());
    ASSERT_EQ(r.singular_values.size(), static_cast<std::size_t>(r.hankel_rows));
    for (std::size_t i = 1; i < r.singular_values.size(); ++i) EXPECT_LE(r.singular_values[i], r.singular_values[i - 1]);
  }
}

TEST(Music, RejectsOversizedHankel) {
  const auto g = gauss_kernel();
  const auto y = noiseless(pd::SpikeTrain({{128, 5.0}}, 256), g);
  EXPECT_THROW(pd::music_deconvolution(y, g, {1, 1e-3, 100000}), pd::InvalidArgument);
}

TEST(ModulateKernel, MultipliesByCarrier) {
  const auto g = gauss_kernel();
  const auto h = pd::modulate_kernel(g, 5e6, 40e6);
  EXPECT_EQ(h.radius, g.radius);
  for (int k = -g.radius; k <= g.radius; ++k) {
    EXPECT_NEAR(h.at(k), g.at(k) * std::cos(2.0 * M_PI * 5e6 * k / 40e6), 1e-15);
  }
}
