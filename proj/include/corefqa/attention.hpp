#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "corefqa/coref_bias.hpp"
#include "corefqa/ops.hpp"
#include "corefqa/params.hpp"

namespace corefqa {

/// One transformer encoder layer: per-head Q/K/V projections, output
/// projection, feed-forward, and two layer norms (post-norm layout).
struct EncoderLayerParams {
  Tensor w_q, b_q, w_k, b_k, w_v, b_v;
  Tensor w_o, b_o;
  Tensor w_ff1, b_ff1, w_ff2, b_ff2;
  Tensor ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
  std::size_t heads = 1;

  std::size_t width() const { return w_q.rows(); }
  std::size_t head_width() const { return width() / heads; }

  static EncoderLayerParams create(ParamRegistry& reg, const std::string& prefix, std::size_t d,
                                   std::size_t heads, std::size_t d_ff) {
    if (heads == 0 || d % heads != 0)
      throw ConfigError("encoder layer " + prefix + ": width " + std::to_string(d) +
                        " is not divisible by " + std::to_string(heads) + " heads");
    EncoderLayerParams p;
    p.heads = heads;
    p.w_q = reg.uniform(prefix + ".w_q", {d, d}, d);
    p.b_q = reg.zeros(prefix + ".b_q", {d});
    p.w_k = reg.uniform(prefix + ".w_k", {d, d}, d);
    p.b_k = reg.zeros(prefix + ".b_k", {d});
    p.w_v = reg.uniform(prefix + ".w_v", {d, d}, d);
    p.b_v = reg.zeros(prefix + ".b_v", {d});
    p.w_o = reg.uniform(prefix + ".w_o", {d, d}, d);
    p.b_o = reg.zeros(prefix + ".b_o", {d});
    p.w_ff1 = reg.uniform(prefix + ".w_ff1", {d, d_ff}, d);
    p.b_ff1 = reg.zeros(prefix + ".b_ff1", {d_ff});
    p.w_ff2 = reg.uniform(prefix + ".w_ff2", {d_ff, d}, d_ff);
    p.b_ff2 = reg.zeros(prefix + ".b_ff2", {d});
    p.ln1_gamma = reg.ones(prefix + ".ln1_gamma", {d});
    p.ln1_beta = reg.zeros(prefix + ".ln1_beta", {d});
    p.ln2_gamma = reg.ones(prefix + ".ln2_gamma", {d});
    p.ln2_beta = reg.zeros(prefix + ".ln2_beta", {d});
    return p;
  }
};

/// Per-head attention probabilities captured for inspection (row-major k x k
/// per head).
struct AttentionCapture {
  std::size_t k = 0;
  std::vector<std::vector<double>> head_attention;
};

/// Scaled dot-product attention over already-projected Q, K, V (k x d_k)
/// with the coreference bias folded into the pre-softmax scores:
/// additive mode adds M, multiplicative mode takes the elementwise product.
inline Tensor coref_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                              const CorefBiasMatrix& m,
                              std::vector<double>* attention_out = nullptr) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.cols() != k.cols() ||
      k.rows() != v.rows() || q.rows() != k.rows()) {
    throw ShapeError("coref_attention: Q " + shape_str(q.shape()) + ", K " +
                     shape_str(k.shape()) + ", V " + shape_str(v.shape()) +
                     " are not conformable");
  }
  const std::size_t kk = q.rows();
  if (m.values.rank() != 2 || m.values.rows() != kk || m.values.cols() != kk)
    throw ShapeError("coref_attention: bias " + shape_str(m.values.shape()) +
                     " does not match sequence length " + std::to_string(kk));
  Tensor scores = scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(q.cols())));
  scores = m.mode == BiasMode::additive ? add(scores, m.values) : hadamard(scores, m.values);
  Tensor probs = softmax_rows(scores);
  if (attention_out) *attention_out = probs.data();
  return matmul(probs, v);
}

/// Post-norm transformer encoder layer with the same coreference bias in
/// every attention head.
inline Tensor coref_encoder_layer(const Tensor& h, const CorefBiasMatrix& m,
                                  const EncoderLayerParams& p,
                                  AttentionCapture* capture = nullptr) {
  if (h.rank() != 2 || h.cols() != p.width())
    throw ShapeError("coref_encoder_layer: input " + shape_str(h.shape()) +
                     " does not match layer width " + std::to_string(p.width()));
  const std::size_t d_k = p.head_width();
  Tensor q = linear(h, p.w_q, p.b_q);
  Tensor k = linear(h, p.w_k, p.b_k);
  Tensor v = linear(h, p.w_v, p.b_v);
  if (capture) {
    capture->k = h.rows();
    capture->head_attention.clear();
  }
  std::vector<Tensor> heads;
  for (std::size_t i = 0; i < p.heads; ++i) {
    Tensor qh = take_cols(q, i * d_k, (i + 1) * d_k);
    Tensor kh = take_cols(k, i * d_k, (i + 1) * d_k);
    Tensor vh = take_cols(v, i * d_k, (i + 1) * d_k);
    std::vector<double> attn;
    heads.push_back(coref_attention(qh, kh, vh, m, capture ? &attn : nullptr));
    if (capture) capture->head_attention.push_back(std::move(attn));
  }
  Tensor attended = linear(concat_lastdim(heads), p.w_o, p.b_o);
  Tensor mid = layer_norm(add(h, attended), p.ln1_gamma, p.ln1_beta);
  Tensor ff = linear(relu(linear(mid, p.w_ff1, p.b_ff1)), p.w_ff2, p.b_ff2);
  return layer_norm(add(mid, ff), p.ln2_gamma, p.ln2_beta);
}

}  // namespace corefqa
