#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "corefqa/attention.hpp"
#include "corefqa/rng.hpp"
#include "support/gradcheck.hpp"

using namespace corefqa;
using corefqa::testing::gradcheck;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Independent loop-level oracle for vanilla scaled dot-product attention.
std::vector<double> vanilla_attention_oracle(const Tensor& q, const Tensor& k, const Tensor& v) {
  const std::size_t n = q.rows(), d = q.cols();
  std::vector<double> out(n * v.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> scores(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t p = 0; p < d; ++p) scores[j] += q(i, p) * k(j, p);
      scores[j] /= std::sqrt(static_cast<double>(d));
    }
    double denom = 0.0;
    for (double s : scores) denom += std::exp(s);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = std::exp(scores[j]) / denom;
      for (std::size_t c = 0; c < v.cols(); ++c) out[i * v.cols() + c] += w * v(j, c);
    }
  }
  return out;
}

EncoderLayerParams make_layer(std::uint64_t seed, std::size_t d, std::size_t heads,
                              std::size_t d_ff, ParamRegistry& reg) {
  (void)seed;
  return EncoderLayerParams::create(reg, "layer", d, heads, d_ff);
}

}  // namespace

TEST(CorefAttention, AdditiveZeroBiasEqualsVanilla) {
  Rng rng(3);
  Tensor q = random_tensor({4, 3}, rng);
  Tensor k = random_tensor({4, 3}, rng);
  Tensor v = random_tensor({4, 3}, rng);
  Tensor got = coref_attention(q, k, v, identity_bias(4, BiasMode::additive));
  std::vector<double> want = vanilla_attention_oracle(q, k, v);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(CorefAttention, MultiplicativeUnitBiasEqualsVanilla) {
  Rng rng(4);
  Tensor q = random_tensor({5, 2}, rng);
  Tensor k = random_tensor({5, 2}, rng);
  Tensor v = random_tensor({5, 2}, rng);
  Tensor got = coref_attention(q, k, v, identity_bias(5, BiasMode::multiplicative));
  std::vector<double> want = vanilla_attention_oracle(q, k, v);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(CorefAttention, SingletonSequenceReturnsValueRow) {
  Rng rng(5);
  Tensor q = random_tensor({1, 3}, rng);
  Tensor k = random_tensor({1, 3}, rng);
  Tensor v = random_tensor({1, 3}, rng);
  for (BiasMode mode : {BiasMode::additive, BiasMode::multiplicative}) {
    CorefBiasMatrix m = build_bias_matrix(CorefArray{{1}}, 7.0, mode);
    // A lone token's softmax is 1 no matter the bias.
    Tensor out = coref_attention(q, k, v, m);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out[i], v[i], 1e-15);
  }
}

TEST(CorefAttention, AdditiveWeightRaisesBiasedPairAttention) {
  Rng rng(6);
  Tensor q = random_tensor({4, 3}, rng);
  Tensor k = random_tensor({4, 3}, rng);
  Tensor v = random_tensor({4, 3}, rng);
  CorefArray arr{{1, 0, 1, 0}};  // pair (0, 2)
  std::vector<double> attn0, attn5;
  coref_attention(q, k, v, build_bias_matrix(arr, 0.0, BiasMode::additive), &attn0);
  coref_attention(q, k, v, build_bias_matrix(arr, 5.0, BiasMode::additive), &attn5);
  EXPECT_GT(attn5[0 * 4 + 2], attn0[0 * 4 + 2]);
  EXPECT_GT(attn5[2 * 4 + 0], attn0[2 * 4 + 0]);
}

// Softmax mass conservation: raising w for the (i, j) pair cannot raise
// attention from i to tokens outside j's cluster.
TEST(CorefAttention, OffClusterAttentionWeaklyDecreases) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor q = random_tensor({5, 3}, rng);
    Tensor k = random_tensor({5, 3}, rng);
    Tensor v = random_tensor({5, 3}, rng);
    CorefArray arr{{1, 0, 1, 0, 0}};
    std::vector<double> lo, hi;
    coref_attention(q, k, v, build_bias_matrix(arr, 1.0, BiasMode::additive), &lo);
    coref_attention(q, k, v, build_bias_matrix(arr, 3.0, BiasMode::additive), &hi);
    for (std::size_t j : {1, 3, 4})
      EXPECT_LE(hi[0 * 5 + j], lo[0 * 5 + j] + 1e-12);
  }
}

TEST(CorefAttention, RowsSumToOneInBothModes) {
  Rng rng(8);
  Tensor q = random_tensor({6, 4}, rng);
  Tensor k = random_tensor({6, 4}, rng);
  Tensor v = random_tensor({6, 4}, rng);
  CorefArray arr{{1, 1, 0, 2, 2, 0}};
  for (BiasMode mode : {BiasMode::additive, BiasMode::multiplicative}) {
    std::vector<double> attn;
    coref_attention(q, k, v, build_bias_matrix(arr, 2.0, mode), &attn);
    for (std::size_t i = 0; i < 6; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 6; ++j) sum += attn[i * 6 + j];
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(CorefAttention, ShapeMismatchRejected) {
  Tensor q = Tensor::zeros({4, 3});
  Tensor k = Tensor::zeros({4, 3});
  Tensor v = Tensor::zeros({4, 3});
  EXPECT_THROW(coref_attention(q, k, v, identity_bias(5, BiasMode::additive)), ShapeError);
  EXPECT_THROW(coref_attention(q, Tensor::zeros({4, 2}), v, identity_bias(4, BiasMode::additive)),
               ShapeError);
}

TEST(EncoderLayer, ZeroSublayersReduceToComposedLayerNorms) {
  // All-zero projections and feed-forward: attention contributes nothing,
  // so the layer collapses to layer_norm(layer_norm(H)).
  EncoderLayerParams p;
  const std::size_t d = 6, d_ff = 8;
  p.heads = 2;
  p.w_q = Tensor::zeros({d, d});
  p.b_q = Tensor::zeros({d});
  p.w_k = Tensor::zeros({d, d});
  p.b_k = Tensor::zeros({d});
  p.w_v = Tensor::zeros({d, d});
  p.b_v = Tensor::zeros({d});
  p.w_o = Tensor::zeros({d, d});
  p.b_o = Tensor::zeros({d});
  p.w_ff1 = Tensor::zeros({d, d_ff});
  p.b_ff1 = Tensor::zeros({d_ff});
  p.w_ff2 = Tensor::zeros({d_ff, d});
  p.b_ff2 = Tensor::zeros({d});
  p.ln1_gamma = Tensor::ones({d});
  p.ln1_beta = Tensor::zeros({d});
  p.ln2_gamma = Tensor::ones({d});
  p.ln2_beta = Tensor::zeros({d});
  Rng rng(9);
  Tensor h = random_tensor({3, d}, rng);
  Tensor got = coref_encoder_layer(h, identity_bias(3, BiasMode::additive), p);
  Tensor want = layer_norm(layer_norm(h, p.ln1_gamma, p.ln1_beta), p.ln2_gamma, p.ln2_beta);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(EncoderLayer, AdditiveZeroEqualsMultiplicativeOne) {
  ParamRegistry reg(17);
  EncoderLayerParams p = make_layer(17, 8, 2, 16, reg);
  Rng rng(18);
  Tensor h = random_tensor({5, 8}, rng);
  CorefArray arr{{1, 1, 0, 2, 2}};
  Tensor a = coref_encoder_layer(h, build_bias_matrix(arr, 0.0, BiasMode::additive), p);
  Tensor b = coref_encoder_layer(h, build_bias_matrix(arr, 1.0, BiasMode::multiplicative), p);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(EncoderLayer, EveryHeadReceivesTheSameBias) {
  // A dominating additive weight on pair (0, 1) must show up in every head.
  ParamRegistry reg(21);
  EncoderLayerParams p = make_layer(21, 8, 4, 16, reg);
  Rng rng(22);
  Tensor h = random_tensor({3, 8}, rng);
  CorefArray arr{{1, 1, 0}};
  AttentionCapture cap;
  coref_encoder_layer(h, build_bias_matrix(arr, 1000.0, BiasMode::additive), p, &cap);
  ASSERT_EQ(cap.head_attention.size(), 4u);
  for (const auto& attn : cap.head_attention) {
    EXPECT_GT(attn[0 * 3 + 1], 0.99);
    EXPECT_GT(attn[1 * 3 + 0], 0.99);
  }
}

TEST(EncoderLayer, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    ParamRegistry reg(seed);
    EncoderLayerParams p = make_layer(seed, 6, 2, 8, reg);
    Rng rng(seed + 100);
    Tensor h = random_tensor({4, 6}, rng);
    CorefArray arr{{1, 0, 1, 0}};
    CorefBiasMatrix m = build_bias_matrix(arr, 1.5, BiasMode::additive);
    Tensor target = random_tensor({4, 6}, rng);
    auto loss = [&] {
      Tensor out = coref_encoder_layer(h, m, p);
      return sum_all(hadamard(out, target));
    };
    std::vector<Tensor> inputs = reg.tensors();
    inputs.push_back(h);
    auto res = gradcheck(loss, inputs, 1e-5, 1e-4, 6, seed);
    EXPECT_TRUE(res.ok) << "seed " << seed << " rel err " << res.worst_rel_err << " tensor "
                        << res.bad_tensor;
  }
}

TEST(EncoderLayer, WidthNotDivisibleByHeadsRejected) {
  ParamRegistry reg(1);
  EXPECT_THROW(EncoderLayerParams::create(reg, "bad", 10, 3, 16), ConfigError);
}
