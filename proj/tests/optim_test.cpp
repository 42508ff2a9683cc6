#include <gtest/gtest.h>

#include <cmath>

#include "imbf/optim.hpp"

using namespace imbf;

namespace {

// A one-parameter model: single 1x1 group.
ParamSet<double> scalar_model(double theta) {
  ParamSet<double> p;
  ParamGroup<double> g;
  g.name = "head";
  g.weight = Matrix<double>(1, 1);
  g.weight(0, 0) = theta;
  g.bias = {0.0};
  p.groups.push_back(std::move(g));
  return p;
}

GradientSet<double> scalar_grad(double g) {
  GradientSet<double> grads(1);
  grads[0].weight = Matrix<double>(1, 1);
  grads[0].weight(0, 0) = g;
  grads[0].bias = {0.0};
  return grads;
}

// Hand-evaluated Adam recurrence, the oracle for the update rule.
double adam_reference_step(double theta, double g, double lr, uint64_t t, double& m, double& v) {
  const AdamConfig cfg;
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
  const double mhat = m / (1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  const double vhat = v / (1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  return theta - lr * mhat / (std::sqrt(vhat) + cfg.eps);
}

}  // namespace

TEST(Adam, FirstStepMatchesHandRecurrence) {
  auto params = scalar_model(1.0);
  auto state = AdamState<double>::zeros_like(params);
  adam_step(params, scalar_grad(1.0), state, 0.1);
  double m = 0.0, v = 0.0;
  const double expected = adam_reference_step(1.0, 1.0, 0.1, 1, m, v);
  EXPECT_NEAR(params.groups[0].weight(0, 0), expected, 1e-15);
  // Bias-corrected first step moves theta by ~lr.
  EXPECT_NEAR(1.0 - params.groups[0].weight(0, 0), 0.1, 1e-9);
}

TEST(Adam, MultiStepMatchesHandRecurrence) {
  auto params = scalar_model(0.5);
  auto state = AdamState<double>::zeros_like(params);
  double theta = 0.5, m = 0.0, v = 0.0;
  const double grads[] = {1.0, -0.25, 0.7, 0.7, -2.0};
  for (uint64_t t = 1; t <= 5; ++t) {
    adam_step(params, scalar_grad(grads[t - 1]), state, 0.05);
    theta = adam_reference_step(theta, grads[t - 1], 0.05, t, m, v);
    EXPECT_NEAR(params.groups[0].weight(0, 0), theta, 1e-12);
  }
}

TEST(Adam, FrozenGroupsAreUntouchedBitExactly) {
  auto params = scalar_model(1.25);
  params.groups[0].trainable = false;
  auto state = AdamState<double>::zeros_like(params);
  adam_step(params, scalar_grad(3.0), state, 0.1);
  EXPECT_EQ(params.groups[0].weight(0, 0), 1.25);
  EXPECT_EQ(state.groups[0].step, 0u);
  EXPECT_EQ(state.groups[0].m_weight(0, 0), 0.0);
  EXPECT_EQ(state.groups[0].v_weight(0, 0), 0.0);
}

TEST(Adam, DeterministicAcrossIdenticalCalls) {
  auto p1 = scalar_model(2.0);
  auto p2 = scalar_model(2.0);
  auto s1 = AdamState<double>::zeros_like(p1);
  auto s2 = AdamState<double>::zeros_like(p2);
  for (int i = 0; i < 10; ++i) {
    adam_step(p1, scalar_grad(0.3), s1, 0.01);
    adam_step(p2, scalar_grad(0.3), s2, 0.01);
  }
  EXPECT_EQ(p1.groups[0].weight(0, 0), p2.groups[0].weight(0, 0));
}

TEST(Adam, RejectsShapeMismatch) {
  auto params = scalar_model(1.0);
  auto state = AdamState<double>::zeros_like(params);
  GradientSet<double> bad(1);
  bad[0].weight = Matrix<double>(2, 2);
  bad[0].bias = {0.0};
  EXPECT_THROW(adam_step(params, bad, state, 0.1), Error);
}
