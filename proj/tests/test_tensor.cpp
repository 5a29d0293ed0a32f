#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "corefqa/ops.hpp"
#include "corefqa/optim.hpp"
#include "corefqa/rng.hpp"
#include "corefqa/tensor.hpp"

using namespace corefqa;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Independent triple-loop oracle for the matrix product.
std::vector<double> naive_matmul(const Tensor& a, const Tensor& b) {
  std::vector<double> c(a.rows() * b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t p = 0; p < a.cols(); ++p) c[i * b.cols() + j] += a(i, p) * b(p, j);
  return c;
}

// Independent exp-normalize oracle.
std::vector<double> naive_softmax(const std::vector<double>& x) {
  double denom = 0.0;
  for (double v : x) denom += std::exp(v);
  std::vector<double> out;
  for (double v : x) out.push_back(std::exp(v) / denom);
  return out;
}

}  // namespace

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Tensor eye = Tensor::zeros({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
  Tensor a = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  Tensor c = matmul(eye, a);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(c[i], a[i]);
}

TEST(Matmul, OneByOne) {
  Tensor c = matmul(Tensor::from({1, 1}, {2.0}), Tensor::from({1, 1}, {3.0}));
  EXPECT_DOUBLE_EQ(c[0], 6.0);
}

TEST(Matmul, MatchesTripleLoopOracle) {
  Rng rng(11);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  Tensor c = matmul(a, b);
  std::vector<double> want = naive_matmul(a, b);
  ASSERT_EQ(c.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(c[i], want[i], 1e-12);
}

TEST(Matmul, DimensionMismatchNamesBothShapes) {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({4, 2});
  try {
    matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("[2 x 3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4 x 2]"), std::string::npos) << msg;
  }
}

TEST(Matmul, AssociativityOnRandomTriples) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a = random_tensor({3, 5}, rng, -1, 1);
    Tensor b = random_tensor({5, 4}, rng, -1, 1);
    Tensor c = random_tensor({4, 2}, rng, -1, 1);
    Tensor left = matmul(matmul(a, b), c);
    Tensor right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i) EXPECT_NEAR(left[i], right[i], 1e-9);
  }
}

TEST(MatmulNT, MatchesExplicitTranspose) {
  Rng rng(5);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({5, 4}, rng);
  Tensor bt = Tensor::zeros({4, 5});
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) bt(j, i) = b(i, j);
  Tensor got = matmul_nt(a, b);
  std::vector<double> want = naive_matmul(a, bt);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Softmax, SymmetricRow) {
  Tensor s = softmax_rows(Tensor::from({1, 2}, {0.0, 0.0}));
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
}

TEST(Softmax, ShiftInvariance) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = random_tensor({2, 5}, rng, -3, 3);
    Tensor shifted = Tensor::zeros({2, 5});
    const double c = rng.uniform(-10, 10);
    for (std::size_t i = 0; i < x.size(); ++i) shifted[i] = x[i] + c;
    Tensor a = softmax_rows(x);
    Tensor b = softmax_rows(shifted);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(Softmax, MatchesExpNormalizeOracle) {
  Tensor s = softmax_rows(Tensor::from({1, 3}, {1.0, 2.0, 3.0}));
  std::vector<double> want = naive_softmax({1.0, 2.0, 3.0});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(s[i], want[i], 1e-14);
}

TEST(Softmax, RowsSumToOneAndEntriesInUnitInterval) {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    Tensor x = random_tensor({4, 7}, rng, -50, 50);
    Tensor s = softmax_rows(x);
    for (std::size_t i = 0; i < 4; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 7; ++j) {
        EXPECT_GE(s(i, j), 0.0);
        EXPECT_LE(s(i, j), 1.0);
        sum += s(i, j);
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Elementwise, HadamardWithOnesIsIdentity) {
  Rng rng(3);
  Tensor a = random_tensor({3, 3}, rng);
  Tensor c = hadamard(a, Tensor::ones({3, 3}));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(c[i], a[i]);
}

TEST(Elementwise, HadamardShapeMismatch) {
  EXPECT_THROW(hadamard(Tensor::zeros({2, 2}), Tensor::zeros({2, 3})), ShapeError);
}

TEST(Elementwise, ConcatLastDimShapeLaw) {
  Tensor a = Tensor::zeros({4, 3});
  Tensor b = Tensor::zeros({4, 5});
  Tensor c = concat_lastdim(a, b);
  EXPECT_EQ(c.shape(), (Shape{4, 8}));
  EXPECT_THROW(concat_lastdim(Tensor::zeros({4, 3}), Tensor::zeros({5, 3})), ShapeError);
}

TEST(Elementwise, LayerNormOfConstantRowIsZeroBeforeScaleShift) {
  Tensor x = Tensor::full({2, 6}, 3.7);
  Tensor gamma = Tensor::ones({6});
  Tensor beta = Tensor::zeros({6});
  Tensor y = layer_norm(x, gamma, beta);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], 0.0, 1e-10);
}

TEST(Elementwise, LayerNormNormalizesRows) {
  Rng rng(13);
  Tensor x = random_tensor({3, 8}, rng, -4, 4);
  Tensor y = layer_norm(x, Tensor::ones({8}), Tensor::zeros({8}));
  for (std::size_t i = 0; i < 3; ++i) {
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < 8; ++j) mean += y(i, j);
    mean /= 8.0;
    for (std::size_t j = 0; j < 8; ++j) var += (y(i, j) - mean) * (y(i, j) - mean);
    var /= 8.0;
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(var, 1.0, 1e-4);  // eps keeps it slightly under 1
  }
}

TEST(Elementwise, LinearMatchesManualAffine) {
  Tensor x = Tensor::from({2, 3}, {1, 0, -1, 2, 2, 2});
  Tensor w = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from({2}, {10, 20});
  Tensor y = linear(x, w, b);
  EXPECT_DOUBLE_EQ(y(0, 0), 1 * 1 + 0 * 3 + (-1) * 5 + 10);
  EXPECT_DOUBLE_EQ(y(0, 1), 1 * 2 + 0 * 4 + (-1) * 6 + 20);
  EXPECT_DOUBLE_EQ(y(1, 0), 2 * (1 + 3 + 5) + 10);
  EXPECT_DOUBLE_EQ(y(1, 1), 2 * (2 + 4 + 6) + 20);
}

TEST(CrossEntropy, NearDeltaLogitsGiveNearZeroLoss) {
  Tensor logits = Tensor::from({4}, {-30, -30, 30, -30});
  Tensor loss = cross_entropy(logits, 2);
  EXPECT_LT(loss.item(), 1e-9);
  EXPECT_GE(loss.item(), 0.0);
}

TEST(CrossEntropy, UniformLogitsGiveLogN) {
  for (std::size_t n : {2, 3, 7, 31}) {
    Tensor logits = Tensor::full({n}, 0.42);
    EXPECT_NEAR(cross_entropy(logits, n / 2).item(), std::log(static_cast<double>(n)), 1e-12);
  }
}

TEST(CrossEntropy, MatchesExpNormalizeOracle) {
  std::vector<double> probs = naive_softmax({1.0, 2.0, 3.0});
  Tensor loss = cross_entropy(Tensor::from({3}, {1.0, 2.0, 3.0}), 0);
  EXPECT_NEAR(loss.item(), -std::log(probs[0]), 1e-12);
}

TEST(CrossEntropy, OutOfRangeTarget) {
  EXPECT_THROW(cross_entropy(Tensor::from({3}, {1, 2, 3}), 3), IndexError);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Tensor p = Tensor::from({3}, {1.0, -2.0, 0.5});
  std::vector<double> before = p.data();
  AdamState st;
  adam_step(p, {0.0, 0.0, 0.0}, st, 0.1);
  EXPECT_EQ(p.data(), before);
}

TEST(Adam, FirstStepMagnitudeIsApproximatelyLr) {
  Tensor p = Tensor::from({1}, {0.0});
  AdamState st;
  const double lr = 0.01;
  adam_step(p, {3.5}, st, lr);
  // Bias correction makes the first update lr * g / (|g| + eps') ~= lr.
  EXPECT_NEAR(std::abs(p[0]), lr, lr * 1e-4);
  EXPECT_LT(p[0], 0.0);
}

TEST(Adam, DescendsQuadratic) {
  Tensor x = Tensor::from({1}, {1.0});
  AdamState st;
  double prev = x[0] * x[0];
  for (int step = 0; step < 10; ++step) {
    adam_step(x, {2.0 * x[0]}, st, 0.05);
    const double f = x[0] * x[0];
    EXPECT_LT(f, prev);
    prev = f;
  }
}

TEST(Adam, ShapeMismatchRejected) {
  Tensor p = Tensor::from({2}, {1.0, 2.0});
  AdamState st;
  EXPECT_THROW(adam_step(p, {1.0}, st, 0.1), ShapeError);
}

// Forward ops on finite inputs must never produce NaN/Inf, including
// softmax on extreme-but-finite logits.
TEST(Invariants, ForwardOpsStayFinite) {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor a = random_tensor({4, 6}, rng, -700, 700);
    Tensor b = random_tensor({4, 6}, rng, -700, 700);
    Tensor w = random_tensor({6, 3}, rng, -5, 5);
    Tensor bias = random_tensor({3}, rng, -5, 5);
    for (const Tensor& t :
         {softmax_rows(a), add(a, b), hadamard(a, softmax_rows(b)),
          relu(a), layer_norm(a, Tensor::ones({6}), Tensor::zeros({6})),
          linear(softmax_rows(a), w, bias)}) {
      for (std::size_t i = 0; i < t.size(); ++i) EXPECT_TRUE(std::isfinite(t[i]));
    }
  }
}

TEST(TensorBasics, ShapeAndDataInvariant) {
  Tensor t = Tensor::zeros({3, 4});
  EXPECT_EQ(shape_numel(t.shape()), t.data().size());
  EXPECT_THROW(Tensor::from({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
}

TEST(TensorBasics, GradBufferMatchesShape) {
  Tensor t = Tensor::zeros({2, 5}, true);
  EXPECT_EQ(t.grad().size(), t.size());
}
