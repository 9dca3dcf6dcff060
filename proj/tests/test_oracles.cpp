// Monte Carlo and exact enumeration oracles
#include <gtest/gtest.h>

#include <cstring>
#include <numbers>

#include "momentprop/oracles.hpp"
#include "momentprop/propagation.hpp"

using namespace momentprop;

namespace {

PolynomialSystemSpec reference_logistic() {
  return build_logistic_model(ScalarDistribution::uniform(0.3, 0.7), ScalarDistribution::truncated_gaussian(0.5, 0.1, 0.0, 1.0));
}

PolynomialSystemSpec two_point() {
  return build_logistic_model(ScalarDistribution::finite({0.4, 0.6}, {0.5, 0.5}), ScalarDistribution::point(0.5));
}

bool bit_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST(Rng, UniformInOpenInterval) {
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const double u = stream_uniform(1, s, 2, 3);
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_NE(stream_uniform(1, 0, 0, 0), stream_uniform(1, 0, 0, 1));
  EXPECT_NE(stream_uniform(1, 0, 0, 0), stream_uniform(2, 0, 0, 0));
}

TEST(SampleTrajectory, DeterministicLogistic) {
  const auto spec = build_logistic_model(ScalarDistribution::point(0.5), ScalarDistribution::point(0.5));
  const auto xs = sample_trajectory(spec, 2, 123);
  ASSERT_EQ(xs.size(), 3u);
  EXPECT_EQ(xs[0][0], 0.5);
  EXPECT_EQ(xs[1][0], 0.125);
  EXPECT_EQ(xs[2][0], 0.0546875);
}

TEST(SampleTrajectory, IdentitySystemIsConstant) {
  auto m = CoefficientModel::zeros(2, 1, {});
  m.constants[1] = Matrix::Identity(2, 2);
  PolynomialSystemSpec spec{"id", m, InitialStateModel{{ScalarDistribution::gaussian(0, 1)}, {Expr::source(0), Expr::constant(2)}}};
  const auto xs = sample_trajectory(spec, 5, 9);
  for (const auto& x : xs) EXPECT_EQ(x, xs[0]);
}

TEST(SampleTrajectory, SameSeedSamePath) {
  const BicycleParams bp{0.1, std::numbers::pi / 8, 2.5};
  const auto spec = build_bicycle_model(bp, ScalarDistribution::uniform(0.9, 1.0), bicycle_initial_state(bp.beta, 0.1));
  const auto a = sample_trajectory(spec, 10, 42, 3);
  const auto b = sample_trajectory(spec, 10, 42, 3);
  const auto c = sample_trajectory(spec, 10, 43, 3);
  for (std::size_t t = 0; t <= 10; ++t) EXPECT_TRUE(bit_equal(a[t], b[t]));
  EXPECT_FALSE(bit_equal(a[10], c[10]));
}

TEST(SampleTrajectory, DivergenceReported) {
  const auto spec = build_logistic_model(ScalarDistribution::point(4.0), ScalarDistribution::point(1e200));
  EXPECT_THROW(sample_trajectory(spec, 3, 1), DivergenceError);
}

TEST(EmpiricalMoments, DeterministicHasZeroError) {
  const auto spec = build_logistic_model(ScalarDistribution::point(0.5), ScalarDistribution::point(0.5));
  const auto mc = empirical_moments(spec, 1, 2, 100, 1);
  EXPECT_EQ(mc.mean[0], 0.0546875);
  EXPECT_EQ(mc.standard_error[0], 0.0);
  EXPECT_EQ(mc.samples, 100u);
}

TEST(EmpiricalMoments, NeedsTwoSamples) { EXPECT_THROW(empirical_moments(reference_logistic(), 1, 1, 1, 1), PreconditionError); }

TEST(EmpiricalMoments, DivergentSamplesExcludedAndCounted) {
  const auto spec = build_logistic_model(ScalarDistribution::point(4.0),
                                         ScalarDistribution::finite({0.5, 1e200}, {0.5, 0.5}));
  const auto mc = empirical_moments(spec, 1, 3, 400, 5);
  EXPECT_GT(mc.diverged, 100u);
  EXPECT_EQ(mc.samples + mc.diverged, 400u);
  EXPECT_TRUE(mc.mean.allFinite());
}

TEST(EmpiricalMoments, ThreadCountDoesNotChangeResult) {
  const auto a = empirical_moments(reference_logistic(), 2, 4, 5000, 17, 1);
  const auto b = empirical_moments(reference_logistic(), 2, 4, 5000, 17, 4);
  EXPECT_TRUE(bit_equal(a.mean, b.mean));
  EXPECT_TRUE(bit_equal(a.standard_error, b.standard_error));
}

TEST(EmpiricalMoments, AgreesWithPropagationWithinFourSE) {
  const auto spec = reference_logistic();
  const auto traj = propagate(make_propagator(spec.coeffs, 16), init_state(spec.init, 16), 4);
  const auto mc = empirical_moment_trajectory(spec, 1, 4, 10'000, 31);
  for (std::size_t t = 0; t <= 4; ++t) {
    EXPECT_LE(std::abs(mc[t].mean[0] - extract_moment(traj[t], 1)[0]), 4 * mc[t].standard_error[0]) << "t=" << t;
  }
}

TEST(ExactEnumeration, TwoPointHandValue) { EXPECT_NEAR(exact_enumeration_moments(two_point(), 1, 2)[0], 0.054375, 1e-15); }

TEST(ExactEnumeration, DeterministicMatchesTrajectory) {
  const auto spec = build_logistic_model(ScalarDistribution::point(3.7), ScalarDistribution::point(0.3));
  const auto xs = sample_trajectory(spec, 6, 0);
  for (std::size_t t = 0; t <= 6; ++t) EXPECT_EQ(exact_enumeration_moments(spec, 1, t)[0], xs[t][0]);
}

TEST(ExactEnumeration, RejectsContinuousDistributions) {
  EXPECT_THROW(exact_enumeration_moments(reference_logistic(), 1, 2), PreconditionError);
  EXPECT_THROW(exact_enumeration_moments(build_logistic_model(ScalarDistribution::finite({0.4, 0.6}, {0.5, 0.5}),
                                                              ScalarDistribution::uniform(0, 1)),
                                         1, 2),
               PreconditionError);
}

TEST(ExactEnumeration, PathLimit) {
  const auto spec = build_logistic_model(ScalarDistribution::finite({0.1, 0.2, 0.3, 0.4}, {0.25, 0.25, 0.25, 0.25}),
                                         ScalarDistribution::point(0.5));
  EXPECT_NO_THROW(exact_enumeration_moments(spec, 1, 9));  // 4^9 = 262144
  EXPECT_THROW(exact_enumeration_moments(spec, 1, 10), SizeLimitError);
}

TEST(ExactEnumeration, AgreesWithMonteCarloWithinFourSE) {
  const auto spec = build_logistic_model(ScalarDistribution::finite({0.5, 2.0, 3.5}, {0.2, 0.5, 0.3}),
                                         ScalarDistribution::finite({0.3, 0.6}, {0.5, 0.5}));
  for (std::size_t j = 1; j <= 2; ++j) {
    const auto mc = empirical_moment_trajectory(spec, j, 5, 20'000, 8);
    for (std::size_t t = 0; t <= 5; ++t) {
      EXPECT_LE(std::abs(mc[t].mean[0] - exact_enumeration_moments(spec, j, t)[0]), 4 * mc[t].standard_error[0])
          << "j=" << j << " t=" << t;
    }
  }
}

TEST(EmpiricalTail, Extremes) {
  const auto spec = reference_logistic();
  const Vector c = Vector::Constant(1, 0.05);
  EXPECT_EQ(empirical_tail(spec, c, 0.0, 3, 1000, 1).frequency, 1.0);
  EXPECT_EQ(empirical_tail(spec, c, 1e9, 3, 1000, 1).frequency, 0.0);
  EXPECT_THROW(empirical_tail(spec, c, 1.0, 3, 0, 1), PreconditionError);
}

TEST(EmpiricalTail, Reproducible) {
  const auto spec = reference_logistic();
  const Vector c = Vector::Constant(1, 0.025);
  const auto a = empirical_tail(spec, c, 0.01, 3, 5000, 77, 1);
  const auto b = empirical_tail(spec, c, 0.01, 3, 5000, 77, 3);
  EXPECT_EQ(a.frequency, b.frequency);
  EXPECT_GT(a.frequency, 0.0);
  EXPECT_LT(a.frequency, 1.0);
  EXPECT_NEAR(a.standard_error, std::sqrt(a.frequency * (1 - a.frequency) / 5000), 1e-15);
}
