// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/test_util.hpp"
#include "visualgpt/error.hpp"
#include "visualgpt/gradcheck.hpp"
#include "visualgpt/ops.hpp"

namespace vgpt {
namespace {

using testing::random_tensor;

void expect_tensor(const Tensor& t, const std::vector<double>& want, double tol = 0.0) {
  ASSERT_EQ(t.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(t.data()[i], want[i], tol) << "index " << i;
}

TEST(Tensor, ShapeMatchesData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  Tensor t = Tensor::zeros({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(Tensor, GradBufferMatchesShape) {
  Tensor t = Tensor::zeros({4, 2});
  t.set_requires_grad(true);
  EXPECT_EQ(t.grad().size(), 8u);
}

TEST(Matmul, IdentityAndBasisSelection) {
  const Tensor eye = Tensor::matrix({{1, 0}, {0, 1}});
  expect_tensor(matmul(eye, Tensor::matrix({{1, 2}, {3, 4}})), {1, 2, 3, 4});
  expect_tensor(matmul(Tensor::matrix({{1, 0}}), Tensor::matrix({{5}, {7}})), {5});
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 2}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4x2]"), std::string::npos) << msg;
  }
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  Tensor a = random_tensor({3, 4}, rng, -1, 1, true);
  Tensor b = random_tensor({4, 2}, rng, -1, 1, true);
  auto f = [&] { return sum(mul(matmul(a, b), matmul(a, b))); };
  EXPECT_LT(finite_diff_check(f, a, 1e-5, 1e-6).max_rel_error, 1e-6);
  EXPECT_LT(finite_diff_check(f, b, 1e-5, 1e-6).max_rel_error, 1e-6);
}

TEST(Softmax, SymmetricInputs) {
  expect_tensor(softmax(Tensor::matrix({{0, 0}})), {0.5, 0.5}, 1e-15);
  expect_tensor(softmax(Tensor::matrix({{1, 1, 1}})), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  const Tensor s = softmax(Tensor::matrix({{1000, 0}}));
  expect_tensor(s, {1.0, 0.0}, 1e-300);
  EXPECT_TRUE(std::isfinite(s.data()[1]));
}

TEST(Softmax, RowsAreProbabilityVectors) {
  std::mt19937_64 rng(2);
  const Tensor s = softmax(random_tensor({6, 9}, rng, -20, 20));
  for (std::size_t r = 0; r < 6; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 9; ++c) {
      const double p = s.at(r, c);
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Softmax, ColumnAxis) {
  const Tensor s = softmax(Tensor::matrix({{0, 5}, {0, 5}}), 0);
  expect_tensor(s, {0.5, 0.5, 0.5, 0.5}, 1e-15);
}

TEST(Sigmoid, KnownValues) {
  expect_tensor(sigmoid(Tensor::vector({0.0, std::log(9.0), -std::log(9.0)})), {0.5, 0.9, 0.1}, 1e-15);
}

TEST(LayerNorm, ConstantRowAndUnitVariance) {
  const Tensor g = Tensor::vector({1, 1, 1}), b = Tensor::vector({0, 0, 0});
  expect_tensor(layer_norm(Tensor::matrix({{3, 3, 3}}), g, b), {0, 0, 0});
  const Tensor g2 = Tensor::vector({1, 1}), b2 = Tensor::vector({0, 0});
  expect_tensor(layer_norm(Tensor::matrix({{1, -1}}), g2, b2), {1, -1}, 1e-5);
}

TEST(LayerNorm, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  Tensor x = random_tensor({2, 5}, rng, -2, 2, true);
  Tensor g = random_tensor({5}, rng, 0.5, 1.5, true);
  Tensor b = random_tensor({5}, rng, -1, 1, true);
  Tensor w = random_tensor({2, 5}, rng);
  auto f = [&] { return sum(mul(layer_norm(x, g, b), w)); };
  EXPECT_LT(finite_diff_check(f, x, 1e-5, 1e-5).max_rel_error, 1e-5);
  EXPECT_LT(finite_diff_check(f, g, 1e-5, 1e-5).max_rel_error, 1e-5);
  EXPECT_LT(finite_diff_check(f, b, 1e-5, 1e-5).max_rel_error, 1e-5);
}

TEST(Elementwise, Definitions) {
  expect_tensor(gelu(Tensor::vector({0.0})), {0.0});
  expect_tensor(mask_fill(Tensor::matrix({{1, 2}}), std::vector<std::uint8_t>{0, 1}), {1, kMaskedLogit});
  const Tensor table = Tensor::matrix({{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {9, 10, 11}});
  expect_tensor(embedding_lookup(table, std::vector<int>{2}), {6, 7, 8});
  EXPECT_THROW(embedding_lookup(table, std::vector<int>{4}), LookupError);
  EXPECT_THROW(embedding_lookup(table, std::vector<int>{-1}), LookupError);
  expect_tensor(transpose(Tensor::matrix({{1, 2, 3}})), {1, 2, 3});
  EXPECT_EQ(transpose(Tensor::matrix({{1, 2, 3}})).shape(), (Shape{3, 1}));
  const std::vector<Tensor> parts{Tensor::matrix({{1, 2}}), Tensor::matrix({{3, 4}})};
  expect_tensor(concat(parts, 0), {1, 2, 3, 4});
  expect_tensor(concat(parts, 1), {1, 2, 3, 4});
  EXPECT_EQ(concat(parts, 1).shape(), (Shape{1, 4}));
}

TEST(Threshold, StrictInequalityAndPiecewiseDerivative) {
  Tensor x = Tensor::vector({0.1, 0.2, 0.3});
  x.set_requires_grad(true);
  Tape tape;
  {
    TapeScope scope(tape);
    const Tensor y = threshold(x, 0.2);
    expect_tensor(y, {0.0, 0.0, 0.3});
    tape.backward(sum(y));
  }
  expect_tensor(Tensor({3}, {x.grad().begin(), x.grad().end()}), {0.0, 0.0, 1.0});
}

// Every differentiable primitive at 20 random points.
class PrimitiveGradients : public ::testing::TestWithParam<int> {};

TEST_P(PrimitiveGradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(100 + GetParam());
  Tensor a = random_tensor({3, 4}, rng, -2, 2, true);
  Tensor b = random_tensor({3, 4}, rng, 0.5, 2, true);
  Tensor m = random_tensor({4, 3}, rng, -1, 1, true);
  Tensor bias = random_tensor({4}, rng, -1, 1, true);
  Tensor w = random_tensor({3, 4}, rng);
  const std::vector<std::uint8_t> mask{0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
  const std::vector<int> ids{2, 0, 2};
  const std::vector<int> picks{1, 3, 0};

  const std::vector<std::pair<const char*, ScalarFn>> cases{
      {"matmul", [&] { return sum(mul(matmul(a, m), matmul(a, m))); }},
      {"transpose", [&] { return sum(mul(transpose(a), m)); }},
      {"add", [&] { return sum(mul(add(a, b), w)); }},
      {"sub", [&] { return sum(mul(sub(a, b), w)); }},
      {"mul", [&] { return sum(mul(mul(a, b), w)); }},
      {"div", [&] { return sum(mul(div(a, b), w)); }},
      {"add_bias", [&] { return sum(mul(add_bias(a, bias), w)); }},
      {"affine", [&] { return sum(mul(affine(a, -1.5, 0.25), a)); }},
      {"sigmoid", [&] { return sum(mul(sigmoid(a), w)); }},
      {"gelu", [&] { return sum(mul(gelu(a), w)); }},
      {"softmax", [&] { return sum(mul(softmax(a), w)); }},
      {"softmax_cols", [&] { return sum(mul(softmax(a, 0), w)); }},
      {"log_softmax", [&] { return sum(mul(log_softmax(a), w)); }},
      {"layer_norm", [&] { return sum(mul(layer_norm(a, bias, bias), w)); }},
      {"mask_fill", [&] { return sum(mul(softmax(mask_fill(a, mask)), w)); }},
      {"embedding", [&] { return sum(mul(embedding_lookup(b, ids), w)); }},
      {"concat", [&] {
         const std::vector<Tensor> p{a, b};
         return sum(mul(concat(p, 0), concat(std::vector<Tensor>{w, w}, 0)));
       }},
      {"slice", [&] { return sum(mul(slice_cols(slice_rows(a, 1, 3), 1, 3), slice_cols(slice_rows(w, 0, 2), 0, 2))); }},
      {"pick", [&] { return sum(mul(pick(a, picks), pick(b, picks))); }},
      {"mean", [&] { return mean(mul(a, b)); }},
      {"mean_of", [&] {
         const std::vector<Tensor> p{a, b, mul(a, a)};
         return sum(mul(mean_of(p), w));
       }},
  };
  for (const auto& [name, f] : cases) {
    for (Tensor* x : {&a, &b, &m, &bias}) {
      const auto rep = finite_diff_check(f, *x);
      EXPECT_LT(rep.max_rel_error, 1e-4) << name << " at index " << rep.worst_index;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(TwentyPoints, PrimitiveGradients, ::testing::Range(0, 20));

TEST(Backward, QuadraticAndConstant) {
  Tensor w = Tensor::vector({1, 2});
  w.set_requires_grad(true);
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(sum(mul(w, w)));
  }
  EXPECT_EQ(w.grad()[0], 2.0);
  EXPECT_EQ(w.grad()[1], 4.0);

  w.zero_grad();
  Tape tape;
  TapeScope scope(tape);
  tape.backward(Tensor::scalar(3.0));
  EXPECT_EQ(w.grad()[0], 0.0);
  EXPECT_EQ(w.grad()[1], 0.0);
}

TEST(Backward, NonScalarLossIsAContractError) {
  Tensor w = Tensor::vector({1, 2});
  w.set_requires_grad(true);
  Tape tape;
  TapeScope scope(tape);
  EXPECT_THROW(tape.backward(mul(w, w)), ContractError);
}

TEST(Backward, TwoUsesAccumulate) {
  Tensor x = Tensor::vector({1.5});
  x.set_requires_grad(true);
  Tape tape;
  TapeScope scope(tape);
  tape.backward(sum(add(x, x)));
  EXPECT_EQ(x.grad()[0], 2.0);
}

TEST(Backward, ReplayTwiceDoublesExactly) {
  std::mt19937_64 rng(4);
  Tensor a = random_tensor({3, 3}, rng, -1, 1, true);
  Tensor b = random_tensor({3, 3}, rng, -1, 1, true);
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(mul(softmax(matmul(a, b)), gelu(a)));
  }
  tape.backward(loss);
  const std::vector<double> once(a.grad().begin(), a.grad().end());
  tape.backward(loss);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(a.grad()[i], 2.0 * once[i]);
}

TEST(Backward, VisitsEachEntryOnce) {
  Tensor x = Tensor::vector({0.3, -0.2});
  x.set_requires_grad(true);
  Tape tape;
  TapeScope scope(tape);
  const Tensor y = sigmoid(x);
  const Tensor loss = sum(mul(y, y));
  tape.backward(loss);
  EXPECT_EQ(tape.last_visit_count(), tape.size());
}

TEST(NoGrad, RecordsNothing) {
  Tensor x = Tensor::vector({1.0});
  x.set_requires_grad(true);
  Tape tape;
  TapeScope scope(tape);
  {
    NoGradScope off;
    sigmoid(x);
  }
  EXPECT_EQ(tape.size(), 0u);
  sigmoid(x);
  EXPECT_EQ(tape.size(), 1u);
}

TEST(GradCheck, LinearFunctionHasNoError) {
  std::mt19937_64 rng(5);
  Tensor x = random_tensor({4, 4}, rng, -3, 3, true);
  const auto rep = finite_diff_check([&] { return sum(x); }, x);
  EXPECT_TRUE(rep.passed);
  EXPECT_LT(rep.max_rel_error, 1e-9);
}

TEST(GradCheck, SigmoidSumPasses) {
  std::mt19937_64 rng(6);
  Tensor x = random_tensor({3, 3}, rng, -3, 3, true);
  EXPECT_TRUE(finite_diff_check([&] { return sum(sigmoid(x)); }, x, 1e-5, 1e-4).passed);
}

TEST(GradCheck, SkipsThresholdBoundary) {
  // sigmoid(0) = 0.5 sits exactly on the threshold of 0.5 - the kink of the
  // indicator; the skip predicate excludes it.
  Tensor x = Tensor::vector({0.0, 1.0});
  x.set_requires_grad(true);
  auto f = [&] { return sum(threshold(sigmoid(x), 0.5)); };
  const auto rep = finite_diff_check(f, x, 1e-5, 1e-4, {}, [](std::size_t i) { return i == 0; });
  EXPECT_EQ(rep.skipped, 1u);
  EXPECT_EQ(rep.checked, 1u);
  EXPECT_TRUE(rep.passed);
}

TEST(GradCheck, DetectsAWrongGradient) {
  EXPECT_GT(gradient_rel_error(1.0, 1.1), 1e-4);
  EXPECT_EQ(gradient_rel_error(0.0, 0.0), 0.0);
}

}  // namespace
}  // namespace vgpt
