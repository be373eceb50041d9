#include "nsmpc/prox.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nsmpc/testing/oracles.hpp"

namespace nsmpc {
namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

TEST(SoftThreshold, HandEvaluatedExample) {
  const Vector out = soft_threshold(vec({2.0, -0.5, 0.0}), 1.0);
  EXPECT_EQ(out, vec({1.0, 0.0, 0.0}));
}

TEST(SoftThreshold, ZeroThresholdIsIdentity) {
  const Vector v = vec({1.5, -2.25, 0.0, 1e-300});
  EXPECT_EQ(soft_threshold(v, 0.0), v);
}

TEST(SoftThreshold, BoundaryMapsToExactZero) {
  const Vector out = soft_threshold(vec({-3.0}), 3.0);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_FALSE(std::signbit(out[0]));
}

TEST(ProxEval, ZeroRegularizerIsIdentity) {
  const Vector v = vec({0.3, -7.0, 2.0});
  EXPECT_EQ(prox_eval(Regularizer::zero(), v, 0.7), v);
}

TEST(ProxEval, ScaledL1MatchesBruteForceMinimizer) {
  const Vector v = vec({1.0, -3.0});
  const Vector out = prox_eval(Regularizer::l1(4.0), v, 0.5);
  // Frozen from a grid minimization of 4|x| + (x - v)^2.
  EXPECT_EQ(out, vec({0.0, -1.0}));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    EXPECT_NEAR(out[i], testing::brute_force_l1_prox(4.0, v[i], 0.5), 1e-9);
  }
}

TEST(ProxEval, ScaledL1RandomAgainstBruteForce) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> vdist(-6.0, 6.0), gdist(0.05, 2.0), wdist(0.1, 5.0);
  for (int s = 0; s < 50; ++s) {
    const double v = vdist(rng), gamma = gdist(rng), w = wdist(rng);
    const double got = prox_eval(Regularizer::l1(w), vec({v}), gamma)[0];
    EXPECT_NEAR(got, testing::brute_force_l1_prox(w, v, gamma), 1e-9);
  }
}

TEST(ProxEval, ZeroIsFixedPoint) {
  EXPECT_EQ(prox_eval(Regularizer::l1(1.0), vec({0.0}), 0.3)[0], 0.0);
}

TEST(ProxEval, RejectsNonPositiveGamma) {
  EXPECT_THROW(prox_eval(Regularizer::l1(1.0), vec({1.0}), 0.0), ConfigError);
  EXPECT_THROW(prox_eval(Regularizer::zero(), vec({1.0}), -1.0), ConfigError);
}

TEST(ProxEval, CustomCallbackAndLengthCheck) {
  CustomRegularizer c;
  c.prox = [](const Vector& v, double) -> Vector { return v.cwiseMax(0.0); };
  const Regularizer reg(c);
  EXPECT_EQ(prox_eval(reg, vec({-1.0, 2.0}), 1.0), vec({0.0, 2.0}));

  CustomRegularizer bad;
  bad.prox = [](const Vector&, double) -> Vector { return Vector::Zero(3); };
  EXPECT_THROW(prox_eval(Regularizer(bad), vec({1.0}), 1.0), DimensionError);
}

TEST(Regularizer, RejectsNonPositiveWeight) {
  EXPECT_THROW(Regularizer::l1(0.0), ConfigError);
  EXPECT_THROW(Regularizer::l1(-2.0), ConfigError);
  EXPECT_THROW(Regularizer(CustomRegularizer{}), ConfigError);
}

TEST(SubgradientContains, L1NormExample) {
  const Regularizer l1 = Regularizer::l1(1.0);
  const Vector x = vec({0.0, -2.0, 3.0});
  EXPECT_TRUE(subgradient_contains(l1, x, vec({0.5, -1.0, 1.0})));
  EXPECT_FALSE(subgradient_contains(l1, x, vec({0.5, 1.0, 1.0})));
  EXPECT_TRUE(subgradient_contains(l1, x, vec({-1.0, -1.0, 1.0})));
  EXPECT_FALSE(subgradient_contains(l1, x, vec({1.01, -1.0, 1.0})));
}

TEST(SubgradientContains, ZeroRegularizer) {
  EXPECT_TRUE(subgradient_contains(Regularizer::zero(), vec({1.0, 2.0}), Vector::Zero(2)));
  EXPECT_FALSE(subgradient_contains(Regularizer::zero(), vec({1.0, 2.0}), vec({0.0, 1e-3})));
}

TEST(SubgradientContains, ErrorPaths) {
  EXPECT_THROW(subgradient_contains(Regularizer::l1(1.0), vec({1.0}), vec({1.0, 2.0})),
               DimensionError);
  CustomRegularizer c;
  c.prox = [](const Vector& v, double) -> Vector { return v; };
  EXPECT_THROW(subgradient_contains(Regularizer(c), vec({1.0}), vec({0.0})), CapabilityError);
}

TEST(ProxGeneralizedJacobian, DeadZoneAndLinearBranch) {
  const Vector d = prox_generalized_jacobian(Regularizer::l1(4.0), vec({1.0, -3.0}), 0.5);
  EXPECT_EQ(d, vec({0.0, 1.0}));
}

TEST(ProxGeneralizedJacobian, ZeroRegularizerIsAllOnes) {
  EXPECT_EQ(prox_generalized_jacobian(Regularizer::zero(), vec({1.0, -3.0, 0.0}), 0.1),
            Vector::Ones(3));
}

TEST(ProxGeneralizedJacobian, KinkSelectsFlatBranch) {
  EXPECT_EQ(prox_generalized_jacobian(Regularizer::l1(1.0), vec({1.0}), 1.0)[0], 0.0);
  EXPECT_EQ(prox_generalized_jacobian(Regularizer::l1(1.0), vec({-1.0}), 1.0)[0], 0.0);
}

TEST(ProxGeneralizedJacobian, CustomWithoutDerivative) {
  CustomRegularizer c;
  c.prox = [](const Vector& v, double) -> Vector { return v; };
  EXPECT_THROW(prox_generalized_jacobian(Regularizer(c), vec({1.0}), 1.0), CapabilityError);
}

// Properties on random samples.

class ProxProperties : public ::testing::TestWithParam<double> {};

TEST_P(ProxProperties, ForwardEquivalence) {
  const Regularizer reg = Regularizer::l1(GetParam());
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), gdist(0.01, 3.0);
  std::bernoulli_distribution zero(0.4);
  for (int s = 0; s < 500; ++s) {
    Vector x(4), g(4);
    for (int i = 0; i < 4; ++i) {
      x[i] = zero(rng) ? 0.0 : 10.0 * unit(rng);
      g[i] = x[i] == 0.0 ? GetParam() * unit(rng) : std::copysign(GetParam(), x[i]);
    }
    ASSERT_TRUE(subgradient_contains(reg, x, g));
    const double gamma = gdist(rng);
    EXPECT_LE((prox_eval(reg, x + gamma * g, gamma) - x).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST_P(ProxProperties, ReverseEquivalence) {
  const Regularizer reg = Regularizer::l1(GetParam());
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> unit(-10.0, 10.0), gdist(0.01, 3.0);
  for (int s = 0; s < 500; ++s) {
    Vector v(3);
    for (int i = 0; i < 3; ++i) v[i] = unit(rng);
    const double gamma = gdist(rng);
    const Vector x = prox_eval(reg, v, gamma);
    EXPECT_TRUE(subgradient_contains(reg, x, (v - x) / gamma, 1e-10));
  }
}

TEST_P(ProxProperties, Nonexpansive) {
  const Regularizer reg = Regularizer::l1(GetParam());
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(-5.0, 5.0), gdist(0.01, 3.0);
  for (int s = 0; s < 1000; ++s) {
    Vector v(3), w(3);
    for (int i = 0; i < 3; ++i) {
      v[i] = unit(rng);
      w[i] = unit(rng);
    }
    const double gamma = gdist(rng);
    EXPECT_LE((prox_eval(reg, v, gamma) - prox_eval(reg, w, gamma)).norm(),
              (v - w).norm() + 1e-14);
  }
}

TEST_P(ProxProperties, GeneralizedJacobianMatchesFiniteDifferences) {
  const Regularizer reg = Regularizer::l1(GetParam());
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unit(-5.0, 5.0), gdist(0.05, 2.0);
  int checked = 0;
  while (checked < 200) {
    const double gamma = gdist(rng);
    const double v = unit(rng);
    if (std::abs(std::abs(v) - gamma * GetParam()) <= 1e-6 + 1e-5) continue;
    ++checked;
    const double slope = testing::central_difference(
        [&](double t) { return prox_eval(reg, vec({t}), gamma)[0]; }, v, 1e-7);
    EXPECT_NEAR(prox_generalized_jacobian(reg, vec({v}), gamma)[0], slope, 1e-6);
  }
}

INSTANTIATE_TEST_SUITE_P(Weights, ProxProperties, ::testing::Values(0.25, 1.0, 4.0));

}  // namespace
}  // namespace nsmpc
