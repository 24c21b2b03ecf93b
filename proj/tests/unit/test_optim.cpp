// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "visualgpt/error.hpp"
#include "visualgpt/model.hpp"
#include "visualgpt/optim.hpp"

namespace vgpt {
namespace {

Parameters two_params() {
  Parameters ps;
  Tensor a = Tensor::vector({1.0, -2.0, 0.5});
  Tensor b = Tensor::vector({3.0});
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  ps.set("a", a, Provenance::kFresh);
  ps.set("b", b, Provenance::kFresh);
  return ps;
}

void set_grad(Parameters& ps, const std::string& name, std::vector<double> g) {
  auto dst = ps.at(name).mutable_grad();
  std::copy(g.begin(), g.end(), dst.begin());
}

TEST(AdamwStep, ZeroGradientNoDecayLeavesParametersUnchanged) {
  std::vector<double> p{1.0, -3.0};
  const std::vector<double> g{0.0, 0.0};
  AdamState s;
  for (int i = 0; i < 10; ++i) adamw_step(p, g, s, 0.1, {});
  EXPECT_EQ(p, (std::vector<double>{1.0, -3.0}));
}

TEST(AdamwStep, DecoupledDecayOnly) {
  std::vector<double> p{2.0, -4.0};
  const std::vector<double> g{0.0, 0.0};
  AdamState s;
  AdamHyper h;
  h.weight_decay = 0.1;
  adamw_step(p, g, s, 0.01, h);
  EXPECT_DOUBLE_EQ(p[0], 2.0 * (1.0 - 0.001));
  EXPECT_DOUBLE_EQ(p[1], -4.0 * (1.0 - 0.001));
}

TEST(AdamwStep, FirstStepMovesByLearningRate) {
  // bias correction makes m_hat = g and v_hat = g^2 after one step
  std::vector<double> p{0.0, 0.0};
  const std::vector<double> g{0.3, -7.0};
  AdamState s;
  adamw_step(p, g, s, 0.01, {});
  EXPECT_NEAR(p[0], -0.01 * 0.3 / (0.3 + 1e-8), 1e-15);
  EXPECT_NEAR(p[1], 0.01 * 7.0 / (7.0 + 1e-8), 1e-15);
}

TEST(AdamwStep, ConstantGradientStepApproachesLearningRate) {
  std::vector<double> p{0.0};
  const std::vector<double> g{2.5};
  AdamState s;
  double prev = 0.0;
  for (int i = 0; i < 2000; ++i) {
    prev = p[0];
    adamw_step(p, g, s, 1e-3, {});
  }
  EXPECT_NEAR(prev - p[0], 1e-3, 1e-9);
  EXPECT_EQ(s.t, 2000u);
}

TEST(AdamwStep, SizeMismatch) {
  std::vector<double> p{0.0, 1.0};
  const std::vector<double> g{1.0};
  AdamState s;
  EXPECT_THROW(adamw_step(p, g, s, 0.1, {}), DimensionError);
}

TEST(AdamW, NonFiniteGradientAbortsWithoutTouchingAnything) {
  auto ps = two_params();
  set_grad(ps, "a", {0.1, 0.2, 0.3});
  set_grad(ps, "b", {std::numeric_limits<double>::quiet_NaN()});
  AdamW opt({0.9, 0.999, 1e-8, 0.01});
  try {
    opt.step(ps, 0.1);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos) << e.what();
  }
  EXPECT_EQ(ps.at("a").data()[0], 1.0);
  EXPECT_EQ(opt.steps(), 0u);
}

TEST(AdamW, MatchesPerTensorSteps) {
  auto ps = two_params();
  AdamW opt({0.9, 0.999, 1e-8, 0.05});
  std::vector<double> a{1.0, -2.0, 0.5}, b{3.0};
  AdamState sa, sb;
  for (int i = 0; i < 3; ++i) {
    const std::vector<double> ga{0.1 * i, -0.2, 1.0}, gb{0.5 - i};
    set_grad(ps, "a", ga);
    set_grad(ps, "b", gb);
    opt.step(ps, 0.02);
    adamw_step(a, ga, sa, 0.02, opt.hyper());
    adamw_step(b, gb, sb, 0.02, opt.hyper());
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(ps.at("a").data()[i], a[i]);
  EXPECT_EQ(ps.at("b").data()[0], b[0]);
  EXPECT_EQ(opt.steps(), 3u);
}

TEST(GradNorm, ClipScalesToTheCap) {
  auto ps = two_params();
  set_grad(ps, "a", {3.0, 0.0, 0.0});
  set_grad(ps, "b", {4.0});
  EXPECT_DOUBLE_EQ(grad_norm(ps), 5.0);
  EXPECT_DOUBLE_EQ(clip_grad_norm(ps, 1.0), 5.0);
  EXPECT_NEAR(grad_norm(ps), 1.0, 1e-15);
  EXPECT_NEAR(ps.at("b").grad()[0], 0.8, 1e-15);
  EXPECT_NEAR(clip_grad_norm(ps, 10.0), 1.0, 1e-15);
  EXPECT_NEAR(ps.at("b").grad()[0], 0.8, 1e-15);
}

}  // namespace
}  // namespace vgpt
