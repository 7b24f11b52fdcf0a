#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>

#include "hgl/gradcheck.hpp"
#include "hgl/mlp.hpp"
#include "hgl/ops.hpp"
#include "hgl/rng.hpp"
#include "hgl/tape.hpp"
#include "../gradient_cases.hpp"
#include "../support.hpp"

using namespace hgl;
using hgl::test::max_diff;
using hgl::test::random_tensor;

namespace {

constexpr int kSeeds = 20;

// ---------------------------------------------------------------- Tensor

TEST(Tensor, ShapeMustMatchDataLength) {
  EXPECT_NO_THROW(Tensor({2, 3}, std::vector<double>(6)));
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
}

TEST(Tensor, ItemRequiresSingleElement) {
  EXPECT_EQ(Tensor::scalar(4.5).item(), 4.5);
  EXPECT_THROW(Tensor::zeros(2, 1).item(), ContractError);
}

// ---------------------------------------------------------------- matmul

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Tensor m = Tensor::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(matmul(Tensor::identity(2), m), m);
}

TEST(Matmul, ProjectorKeepsFirstRow) {
  const Tensor p = Tensor::from_rows({{1, 0}, {0, 0}});
  EXPECT_EQ(matmul(p, Tensor::from_rows({{5, 6}, {7, 8}})), Tensor::from_rows({{5, 6}, {0, 0}}));
}

TEST(Matmul, MatchesTripleLoopOracle) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 gen(seed);
    const Tensor a = random_tensor(3, 4, gen);
    const Tensor b = random_tensor(4, 2, gen);
    EXPECT_LE(max_diff(matmul(a, b), test::naive::matmul(a, b)), 1e-14) << "seed " << seed;
  }
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Tensor::zeros(2, 3), Tensor::zeros(4, 5));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4x5]"), std::string::npos) << msg;
  }
}

// ---------------------------------------------------------------- softmax

TEST(Softmax, AllZeroGlobalIsUniform) {
  const Tensor y = softmax(Tensor::zeros(2, 2), SoftmaxMode::kGlobal);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(y[i], 0.25);
}

TEST(Softmax, PerRowClosedForm) {
  const Tensor y = softmax(Tensor::row({0.0, std::log(3.0)}), SoftmaxMode::kPerRow);
  EXPECT_NEAR(y[0], 0.25, 1e-15);
  EXPECT_NEAR(y[1], 0.75, 1e-15);
}

TEST(Softmax, LargeInputsAreShiftInvariant) {
  const Tensor big = softmax(Tensor::row({1000.0, 1001.0}), SoftmaxMode::kPerRow);
  const Tensor small = softmax(Tensor::row({0.0, 1.0}), SoftmaxMode::kPerRow);
  EXPECT_TRUE(big.all_finite());
  EXPECT_LE(max_diff(big, small), 1e-15);
}

TEST(Softmax, EmptyInputIsDomainError) {
  EXPECT_THROW(softmax(Tensor::zeros(0, 3), SoftmaxMode::kGlobal), DomainError);
  EXPECT_THROW(softmax(Tensor::zeros(2, 0), SoftmaxMode::kPerRow), DomainError);
}

TEST(SoftmaxProperty, NormalisedPositiveAndShiftInvariant) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 gen(seed);
    const Tensor x = random_tensor(1 + seed % 5, 1 + seed % 7, gen, -5, 5);
    const double shift = std::uniform_real_distribution<double>(-50, 50)(gen);
    Tensor shifted = x;
    for (auto& v : shifted.data()) v += shift;

    const Tensor g = softmax(x, SoftmaxMode::kGlobal);
    double total = 0.0;
    for (double v : g.data()) {
      EXPECT_GT(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_LE(max_diff(g, softmax(shifted, SoftmaxMode::kGlobal)), 1e-12);
    EXPECT_LE(max_diff(g, test::naive::softmax(x, false)), 1e-12);

    const Tensor r = softmax(x, SoftmaxMode::kPerRow);
    for (std::size_t i = 0; i < r.rows(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < r.cols(); ++j) row += r(i, j);
      EXPECT_NEAR(row, 1.0, 1e-12);
    }
    EXPECT_LE(max_diff(r, softmax(shifted, SoftmaxMode::kPerRow)), 1e-12);
    EXPECT_LE(max_diff(r, test::naive::softmax(x, true)), 1e-12);
  }
}

// ---------------------------------------------------------------- concat

TEST(Concat, Scalars) {
  Tape t;
  EXPECT_EQ(concat_cols(t.constant(Tensor::from_rows({{1}})), t.constant(Tensor::from_rows({{2}}))).value(),
            Tensor::from_rows({{1, 2}}));
}

TEST(Concat, EmptyColumnBlockIsIdentity) {
  Tape t;
  const Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(concat_cols(t.constant(a), t.constant(Tensor::zeros(2, 0))).value(), a);
}

TEST(Concat, IndexMapping) {
  std::mt19937_64 gen(3);
  const Tensor a = random_tensor(2, 2, gen), b = random_tensor(2, 3, gen);
  Tape t;
  const Tensor y = concat_cols(t.constant(a), t.constant(b)).value();
  ASSERT_EQ(y.shape(), (Shape{2, 5}));
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(y(r, c), c < 2 ? a(r, c) : b(r, c - 2));
  }
}

TEST(Concat, LeadingDimensionMismatch) {
  Tape t;
  EXPECT_THROW(concat_cols(t.constant(Tensor::zeros(2, 1)), t.constant(Tensor::zeros(3, 1))), DimensionError);
}

// ---------------------------------------------------------------- nonlinearity

TEST(Nonlinearity, Relu) {
  EXPECT_EQ(activate(Tensor::row({-1, 0, 2}), Activation::kRelu), Tensor::row({0, 0, 2}));
}

TEST(Nonlinearity, TanhOfZero) { EXPECT_EQ(activate(Tensor::row({0.0}), Activation::kTanh)[0], 0.0); }

TEST(Nonlinearity, TanhMatchesExtendedPrecision) {
  std::mt19937_64 gen(11);
  const Tensor x = random_tensor(1, 64, gen, -6, 6);
  const Tensor y = activate(x, Activation::kTanh);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double e2 = std::exp(2.0L * static_cast<long double>(x[i]));
    const double ref = static_cast<double>((e2 - 1.0L) / (e2 + 1.0L));
    EXPECT_NEAR(y[i], ref, 1e-12);
  }
}

// ---------------------------------------------------------------- mlp_apply

TEST(MlpApply, ZeroWeightsGiveZero) {
  ParameterStore store;
  Rng rng(1);
  const Mlp mlp = register_mlp(store, "m", {3, 2}, Activation::kRelu, rng);
  store.value("m.0.w") = Tensor::zeros(3, 2);
  Tape t;
  std::mt19937_64 gen(1);
  EXPECT_EQ(mlp_apply(t.constant(random_tensor(4, 3, gen)), store, mlp).value(), Tensor::zeros(4, 2));
}

TEST(MlpApply, IdentityAffineLeavesInput) {
  ParameterStore store;
  Rng rng(1);
  const Mlp mlp = register_mlp(store, "m", {3, 3}, Activation::kRelu, rng);
  store.value("m.0.w") = Tensor::identity(3);
  std::mt19937_64 gen(2);
  const Tensor x = random_tensor(4, 3, gen);
  Tape t;
  EXPECT_EQ(mlp_apply(t.constant(x), store, mlp).value(), x);
}

TEST(MlpApply, TwoLayersMatchHandComposition) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    ParameterStore store;
    Rng rng(seed);
    const Mlp mlp = register_mlp(store, "m", {3, 5, 2}, Activation::kTanh, rng);
    std::mt19937_64 gen(seed);
    test::randomize(store, gen);
    const Tensor x = random_tensor(4, 3, gen);
    Tape t;
    const Tensor got = mlp_apply(t.constant(x), store, mlp).value();
    namespace nv = test::naive;
    const Tensor h = nv::apply_tanh(nv::affine(x, store.value("m.0.w"), store.value("m.0.b")));
    const Tensor want = nv::affine(h, store.value("m.1.w"), store.value("m.1.b"));
    EXPECT_LE(max_diff(got, want), 1e-14);
  }
}

TEST(MlpApply, MissingParameterIsReported) {
  ParameterStore store;
  Mlp mlp{{{"nope.w", "nope.b"}}, Activation::kRelu};
  Tape t;
  EXPECT_THROW(mlp_apply(t.constant(Tensor::zeros(1, 1)), store, mlp), ContractError);
}

// ---------------------------------------------------------------- backward

TEST(Backward, SumGivesOnes) {
  ParameterStore store;
  store.add("W", Tensor::from_rows({{1, -2}, {3, 4}}));
  Tape t;
  backward(t, sum(t.parameter(store, "W")), store);
  EXPECT_EQ(store.grad("W"), Tensor::filled(2, 2, 1.0));
}

TEST(Backward, SquareGivesTwiceValue) {
  ParameterStore store;
  store.add("W", Tensor::from_rows({{3}}));
  Tape t;
  Var w = t.parameter(store, "W");
  backward(t, sum(mul(w, w)), store);
  EXPECT_EQ(store.grad("W"), Tensor::from_rows({{6}}));
}

TEST(Backward, NonScalarLossIsContractError) {
  ParameterStore store;
  store.add("W", Tensor::zeros(2, 2));
  Tape t;
  EXPECT_THROW(t.backward(t.parameter(store, "W")), ContractError);
}

TEST(Backward, ParametersOffTheTapeGetZero) {
  ParameterStore store;
  store.add("used", Tensor::filled(1, 2, 1.0));
  store.add("unused", Tensor::filled(2, 2, 1.0));
  store.grad("unused") = Tensor::filled(2, 2, 7.0);
  Tape t;
  backward(t, sum(t.parameter(store, "used")), store);
  EXPECT_EQ(store.grad("unused"), Tensor::zeros(2, 2));
}

TEST(Backward, VisitsNodesInReverseTopologicalOrder) {
  ParameterStore store;
  std::mt19937_64 gen(5);
  store.add("a", random_tensor(3, 4, gen));
  store.add("b", random_tensor(4, 2, gen));
  Tape t;
  Var a = t.parameter(store, "a"), b = t.parameter(store, "b");
  Var h = tanh(matmul(a, b));
  Var loss = sum(mul(h, softmax(h, SoftmaxMode::kPerRow)));
  t.backward(loss);
  const auto& order = t.backward_order();
  ASSERT_FALSE(order.empty());
  EXPECT_EQ(order.front(), loss.id());
  for (std::size_t k = 1; k < order.size(); ++k) EXPECT_LT(order[k], order[k - 1]);
}

// ---------------------------------------------------------------- finite_diff_check

TEST(FiniteDiff, LinearFunctionIsExact) {
  ParameterStore store;
  std::mt19937_64 gen(1);
  store.add("w", random_tensor(3, 2, gen));
  const Tensor c = random_tensor(3, 2, gen);
  auto f = [&](Tape& t) { return sum(mul(t.parameter(store, "w"), t.constant(c))); };
  EXPECT_LE(finite_diff_check(f, store).max_rel_error, 1e-9);
}

TEST(FiniteDiff, SoftmaxCrossEntropyToy) {
  ParameterStore store;
  std::mt19937_64 gen(2);
  store.add("w", random_tensor(3, 4, gen));
  const Tensor x = random_tensor(1, 3, gen);
  auto f = [&](Tape& t) { return cross_entropy(matmul(t.constant(x), t.parameter(store, "w")), 2); };
  EXPECT_LE(finite_diff_check(f, store).max_rel_error, 1e-6);
}

TEST(FiniteDiff, ConstantFunctionHasZeroError) {
  ParameterStore store;
  store.add("w", Tensor::filled(2, 2, 1.0));
  auto f = [&](Tape& t) {
    t.parameter(store, "w");
    return t.constant(Tensor::scalar(3.0));
  };
  const auto r = finite_diff_check(f, store);
  EXPECT_EQ(r.max_rel_error, 0.0);
  EXPECT_EQ(r.coords_checked, 4u);
}

TEST(FiniteDiff, RestoresParameters) {
  ParameterStore store;
  std::mt19937_64 gen(3);
  store.add("w", random_tensor(2, 3, gen));
  const Tensor before = store.value("w");
  finite_diff_check([&](Tape& t) { return sum(tanh(t.parameter(store, "w"))); }, store);
  EXPECT_EQ(store.value("w"), before);
}

// ---------------------------------------------------------------- per-op gradients

TEST(GradientProperty, EveryOpMatchesFiniteDifferences) {
  for (const auto& op : test::op_cases()) {
    for (int seed = 0; seed < kSeeds; ++seed) {
      const auto r = test::check_op(op, seed);
      EXPECT_LE(r.max_rel_error, 1e-4) << op.name << " seed " << seed << " worst " << r.worst_param << "["
                                       << r.worst_index << "] analytic " << r.worst_analytic << " numeric "
                                       << r.worst_numeric;
    }
  }
}

TEST(GradientProperty, OutputsStayFinite) {
  for (const auto& op : test::op_cases()) {
    ParameterStore store;
    std::mt19937_64 gen(4);
    op.setup(store, gen);
    Tape t;
    EXPECT_TRUE(op.build(t, store).value().all_finite()) << op.name;
  }
}

// ---------------------------------------------------------------- determinism and replay

TEST(Determinism, IdenticalInputsGiveBitIdenticalValuesAndGradients) {
  auto run = [] {
    ParameterStore store;
    std::mt19937_64 gen(99);
    store.add("a", random_tensor(5, 4, gen));
    store.add("b", random_tensor(4, 3, gen));
    Tape t;
    Var h = softmax(tanh(matmul(t.parameter(store, "a"), t.parameter(store, "b"))), SoftmaxMode::kPerRow);
    Var loss = cross_entropy(mean_rows(h), 1);
    backward(t, loss, store);
    return std::pair{loss.value(), store};
  };
  const auto [l1, s1] = run();
  const auto [l2, s2] = run();
  EXPECT_EQ(std::memcmp(l1.data().data(), l2.data().data(), sizeof(double)), 0);
  for (const auto& name : s1.names()) {
    const auto& g1 = s1.grad(name);
    const auto& g2 = s2.grad(name);
    EXPECT_EQ(std::memcmp(g1.data().data(), g2.data().data(), g1.size() * sizeof(double)), 0) << name;
  }
}

TEST(Replay, ReproducesRecordedValuesBitExactly) {
  ParameterStore store;
  std::mt19937_64 gen(8);
  store.add("a", random_tensor(3, 3, gen));
  Tape t;
  Var a = t.parameter(store, "a");
  Var y = softmax(matmul(tanh(a), transpose(a)), SoftmaxMode::kGlobal);
  (void)y;
  const auto first = t.replay();
  const auto second = t.replay();
  ASSERT_EQ(first.size(), t.size());
  for (std::uint32_t id = 0; id < t.size(); ++id) {
    EXPECT_EQ(first[id], t.value(id)) << t.op_name(id);
    EXPECT_EQ(second[id], first[id]);
  }
}

// ---------------------------------------------------------------- parameter store

TEST(ParameterStore, RejectsDuplicateAndEmptyNames) {
  ParameterStore s;
  s.add("x", Tensor::zeros(1, 1));
  EXPECT_THROW(s.add("x", Tensor::zeros(1, 1)), ContractError);
  EXPECT_THROW(s.add("", Tensor::zeros(1, 1)), ContractError);
}

TEST(ParameterStore, GradientShapeMatchesParameter) {
  ParameterStore s;
  s.add("x", Tensor::zeros(3, 7));
  EXPECT_EQ(s.grad("x").shape(), s.value("x").shape());
}

// ---------------------------------------------------------------- rng

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.next(), b.next());
    EXPECT_EQ(a.normal(), b.normal());
  }
}

TEST(Rng, IndexStaysInRange) {
  Rng r(1);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(r.index(7), 7u);
}

}  // namespace
