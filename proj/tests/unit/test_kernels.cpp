#include <cmath>

#include <gtest/gtest.h>

#include "pulsedeconv/error.hpp"
#include "pulsedeconv/kernels.hpp"

namespace pd = pulsedeconv;

namespace {

double gauss(double t) { return std::exp(-t * t / 2.0); }

}  // namespace

TEST(EvalKernel, GaussianClosedForms) {
  const auto g = pd::Kernel::gaussian();
  EXPECT_DOUBLE_EQ(g.eval(0.0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g.eval(0.0, 2), -1.0);
  EXPECT_NEAR(g.eval(0.5, 0), std::exp(-0.125), 1e-15);
  EXPECT_NEAR(g.eval(0.5, 0), 0.882497, 1e-6);
}

TEST(EvalKernel, CauchyClosedForms) {
  const auto g = pd::Kernel::cauchy();
  EXPECT_DOUBLE_EQ(g.eval(1.0, 0), 0.5);
  EXPECT_DOUBLE_EQ(g.eval(0.0, 2), -2.0);
}

TEST(EvalKernel, RejectsUnsupportedOrder) {
  const auto g = pd::Kernel::gaussian();
  EXPECT_THROW(g.eval(0.0, 4), pd::InvalidArgument);
  EXPECT_THROW(g.eval(0.0, -1), pd::InvalidArgument);
}

TEST(EvalKernel, FromNameIsCaseInsensitive) {
  EXPECT_EQ(pd::Kernel::from_name("Gaussian").family(), pd::KernelFamily::Gaussian);
  EXPECT_EQ(pd::Kernel::from_name("CAUCHY").family(), pd::KernelFamily::Cauchy);
  EXPECT_THROW(pd::Kernel::from_name("boxcar"), pd::InvalidArgument);
}

TEST(EvalKernel, DerivativesMatchFiniteDifferences) {
  const double h = 1e-5;
  for (const auto& g : {pd::Kernel::gaussian(), pd::Kernel::cauchy()}) {
    for (double t = -3.0; t <= 3.0; t += 0.173) {
      for (int order = 1; order <= 3; ++order) {
        const double fd = (g.eval(t + h, order - 1) - g.eval(t - h, order - 1)) / (2.0 * h);
        const double exact = g.eval(t, order);
        EXPECT_NEAR(fd, exact, 1e-6 * std::max(1.0, std::abs(exact))) << g.name() << " t=" << t << " order=" << order;
      }
    }
  }
}

TEST(EvalKernel, EvenOddSymmetry) {
  for (const auto& g : {pd::Kernel::gaussian(), pd::Kernel::cauchy()}) {
    for (double t : {0.3, 1.7, 4.2}) {
      EXPECT_DOUBLE_EQ(g.eval(t, 0), g.eval(-t, 0));
      EXPECT_DOUBLE_EQ(g.eval(t, 1), -g.eval(-t, 1));
      EXPECT_DOUBLE_EQ(g.eval(t, 2), g.eval(-t, 2));
      EXPECT_DOUBLE_EQ(g.eval(t, 3), -g.eval(-t, 3));
    }
  }
}

TEST(VerifyAdmissibility, GaussianDecayConstants) {
  const auto r = pd::verify_admissibility(pd::Kernel::gaussian());
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.C[0], 1.22, 0.01);
  EXPECT_NEAR(r.C[1], 1.59, 0.01);
  EXPECT_NEAR(r.C[2], 2.04, 0.01);
  EXPECT_NEAR(r.C[3], 2.6, 0.01);
  EXPECT_DOUBLE_EQ(r.g0, 1.0);
}

TEST(VerifyAdmissibility, CauchyDecayConstants) {
  const auto r = pd::verify_admissibility(pd::Kernel::cauchy());
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.C[0], 1.0, 0.01);
  EXPECT_NEAR(r.C[1], 1.0, 0.01);
  EXPECT_NEAR(r.C[2], 2.0, 0.01);
  EXPECT_NEAR(r.C[3], 5.22, 0.01);
}

TEST(VerifyAdmissibility, GaussianCurvatureAtGivenEpsilon) {
  const auto r = pd::verify_admissibility(pd::Kernel::gaussian(), {}, 0.5);
  const double expected = (1.0 - 0.25) * std::exp(-0.125);
  EXPECT_NEAR(r.beta, expected, 1e-3);
  EXPECT_NEAR(r.beta, 0.662, 1e-3);
  EXPECT_DOUBLE_EQ(r.epsilon, 0.5);
}

TEST(VerifyAdmissibility, DecayEnvelopeHoldsPointwise) {
  for (const auto& g : {pd::Kernel::gaussian(), pd::Kernel::cauchy()}) {
    const auto r = pd::verify_admissibility(g);
    for (double t = -20.0; t <= 20.0; t += 0.0137) {
      for (int l = 0; l <= 3; ++l) {
        EXPECT_LE(std::abs(g.eval(t, l)) * (1.0 + t * t), r.C[static_cast<std::size_t>(l)] * (1.0 + 1e-9))
            << g.name() << " t=" << t << " l=" << l;
      }
    }
  }
}

TEST(VerifyAdmissibility, CurvatureHoldsOnNeighbourhood) {
  for (const auto& g : {pd::Kernel::gaussian(), pd::Kernel::cauchy()}) {
    const auto r = pd::verify_admissibility(g);
    ASSERT_GT(r.epsilon, 0.0);
    ASSERT_GT(r.beta, 0.0);
    EXPECT_LT(r.epsilon, g.nominal_nu());
    for (double t = -r.epsilon; t <= r.epsilon; t += r.epsilon / 200.0) {
      EXPECT_LE(g.eval(t, 2), -r.beta + 1e-12);
    }
  }
}

TEST(VerifyAdmissibility, NonConcaveKernelFails) {
  // g(t) = (1 + t^2) e^{-t^2 / 2} has g''(0) = 1 > 0.
  const auto bump = pd::Kernel::custom(
      "bump",
      [](double t, int order) {
        const double e = std::exp(-t * t / 2.0);
        const double t2 = t * t;
        switch (order) {
          case 0: return (1.0 + t2) * e;
          case 1: return t * (1.0 - t2) * e;
          case 2: return (1.0 - 4.0 * t2 + t2 * t2) * e;
          default: return t * (-9.0 + 7.0 * t2 - t2 * t2) * e;
        }
      },
      1.0);
  const auto r = pd::verify_admissibility(bump);
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(r.failures.empty());
}

TEST(SampleKernel, GaussianTaps) {
  const auto s = pd::sample_kernel(pd::Kernel::gaussian(), 1.0, 4, 1e-2);
  EXPECT_DOUBLE_EQ(s.at(0), 1.0);
  EXPECT_NEAR(s.at(4), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(s.at(4), 0.606531, 1e-6);
  EXPECT_EQ(s.size(), static_cast<std::size_t>(2 * s.radius + 1));
}

TEST(SampleKernel, CauchyTaps) {
  const auto s = pd::sample_kernel(pd::Kernel::cauchy(), 1.0, 1, 1e-2);
  EXPECT_DOUBLE_EQ(s.at(1), 0.5);
}

TEST(SampleKernel, RadiusIsSmallestSatisfyingTailBound) {
  const auto g = pd::Kernel::gaussian();
  const double c0 = pd::verify_admissibility(g).C[0];
  const auto s = pd::sample_kernel(g, 1.0, 4, 1e-6);
  int expected = 0;
  while (c0 / (1.0 + (expected / 4.0) * (expected / 4.0)) >= 1e-6) ++expected;
  EXPECT_EQ(s.radius, expected);
  EXPECT_GE(s.radius, 4 * 4);
  EXPECT_LT(s.tail_bound, 1e-6);
}

TEST(SampleKernel, TapsAreSymmetric) {
  for (const auto& g : {pd::Kernel::gaussian(), pd::Kernel::cauchy()}) {
    const auto s = pd::sample_kernel(g, 1.7, 3, 1e-3);
    for (int k = 0; k <= s.radius; ++k) EXPECT_DOUBLE_EQ(s.at(k), s.at(-k));
    EXPECT_DOUBLE_EQ(s.at(s.radius + 1), 0.0);
  }
}

TEST(SampleKernel, TapsMatchClosedForm) {
  const auto s = pd::sample_kernel(pd::Kernel::gaussian(), 2.0, 3, 1e-3);
  for (int k = -s.radius; k <= s.radius; ++k) EXPECT_NEAR(s.at(k), gauss(k / 6.0), 1e-15);
}

TEST(SampleKernel, RejectsBadArguments) {
  const auto g = pd::Kernel::gaussian();
  EXPECT_THROW(pd::sample_kernel(g, 1.0, 4, 0.0), pd::InvalidArgument);
  EXPECT_THROW(pd::sample_kernel(g, 1.0, 4, -1.0), pd::InvalidArgument);
  EXPECT_THROW(pd::sample_kernel(g, 0.0, 4, 1e-2), pd::InvalidArgument);
  EXPECT_THROW(pd::sample_kernel(g, 1.0, 0, 1e-2), pd::InvalidArgument);
}
