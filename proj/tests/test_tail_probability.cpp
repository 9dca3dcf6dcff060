// Chebyshev safety bound and its inversion
#include <gtest/gtest.h>

#include <random>

#include "momentprop/tail_probability.hpp"

using namespace momentprop;

namespace {

TailInputs scalar(double x1, double x2, double eps, double eps_i, double eps_ii) {
  return TailInputs{Vector::Constant(1, x1), Vector::Constant(1, x2), eps, Vector::Constant(1, eps_i), Vector::Constant(1, eps_ii)};
}

TailInputs random_inputs(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TailInputs in;
  in.x1 = Vector(n);
  in.x2_diag = Vector(n);
  in.eps_i = Vector(n);
  in.eps_ii = Vector(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    in.x1[i] = 2 * u(rng) - 1;
    in.x2_diag[i] = in.x1[i] * in.x1[i] + u(rng);
    in.eps_i[i] = 0.1 * u(rng);
    in.eps_ii[i] = 0.1 * u(rng);
  }
  in.eps = in.eps_i.norm();
  return in;
}

}  // namespace

TEST(SafetyBound, PlainChebyshev) { EXPECT_DOUBLE_EQ(safety_bound(scalar(0, 1, 0, 0, 0), 2.0), 0.25); }

TEST(SafetyBound, WithErrorTerms) {
  const auto in = scalar(0.5, 0.26, 0.05, 0.02, 0.01);
  EXPECT_NEAR(tail_numerator(in), 0.27 - 0.2304, 1e-15);
  EXPECT_NEAR(safety_bound(in, 0.5), (0.27 - 0.2304) / 0.2025, 1e-15);
  EXPECT_NEAR(safety_bound(in, 0.5), 0.1956, 1e-4);
}

TEST(SafetyBound, RadiusMustExceedEps) {
  const auto in = scalar(0.5, 0.26, 0.05, 0.02, 0.01);
  EXPECT_THROW(safety_bound(in, 0.05), PreconditionError);
  EXPECT_THROW(safety_bound(in, 0.01), PreconditionError);
}

TEST(SafetyBound, NegativeErrorInputsRejected) {
  EXPECT_THROW(safety_bound(scalar(0.5, 0.26, -0.1, 0.0, 0.0), 1.0), PreconditionError);
  EXPECT_THROW(safety_bound(scalar(0.5, 0.26, 0.0, -0.1, 0.0), 1.0), PreconditionError);
}

TEST(SafetyBound, ZeroErrorsIsStandardChebyshev) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_inputs(rng, 3);
    in.eps = 0;
    in.eps_i.setZero();
    in.eps_ii.setZero();
    const double var = (in.x2_diag - in.x1.cwiseAbs2()).sum();
    EXPECT_NEAR(safety_bound(in, 1.7), var / (1.7 * 1.7), 1e-15);
  }
}

TEST(SafetyBound, Monotonicity) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_inputs(rng, 2);
    const double a = in.eps + 0.5;
    EXPECT_GE(safety_bound(in, a), safety_bound(in, a + 0.1));
    // on |x1_i| >= eps_i, growing any error input cannot lower the bound
    if ((in.x1.cwiseAbs() - in.eps_i).minCoeff() < 0.02) continue;
    auto more = in;
    more.eps += 0.01;
    EXPECT_GE(safety_bound(more, a), safety_bound(in, a));
    more = in;
    more.eps_i[0] += 0.01;
    EXPECT_GE(safety_bound(more, a), safety_bound(in, a));
    more = in;
    more.eps_ii[1] += 0.01;
    EXPECT_GE(safety_bound(more, a), safety_bound(in, a));
  }
}

TEST(SafetyRadius, UnitVariance) { EXPECT_NEAR(safety_radius(scalar(0, 1, 0, 0, 0), 0.05), std::sqrt(20.0), 1e-14); }

TEST(SafetyRadius, ZeroNumeratorGivesEps) {
  EXPECT_DOUBLE_EQ(safety_radius(scalar(0.5, 0.25, 0.1, 0.0, 0.0), 1.0), 0.1);
  // a negative numerator clamps to zero
  EXPECT_DOUBLE_EQ(safety_radius(scalar(0.5, 0.2, 0.1, 0.0, 0.0), 0.3), 0.1);
}

TEST(SafetyRadius, InvalidProbabilityRejected) {
  EXPECT_THROW(safety_radius(scalar(0, 1, 0, 0, 0), 0.0), PreconditionError);
  EXPECT_THROW(safety_radius(scalar(0, 1, 0, 0, 0), 1.5), PreconditionError);
}

TEST(SafetyRadius, RoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> p(0.001, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto in = random_inputs(rng, 1 + trial % 4);
    if (tail_numerator(in) <= 0) continue;
    const double pm = p(rng);
    const double alpha = safety_radius(in, pm);
    EXPECT_LE(safety_bound(in, alpha), pm * (1 + 1e-12));
    EXPECT_GT(safety_bound(in, in.eps + 0.999 * (alpha - in.eps)), pm);
  }
}

TEST(ClampProbability, Range) {
  EXPECT_EQ(clamp_probability(3.0), 1.0);
  EXPECT_EQ(clamp_probability(-0.1), 0.0);
  EXPECT_EQ(clamp_probability(0.3), 0.3);
}
