#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "corefqa/ops.hpp"
#include "corefqa/params.hpp"

namespace corefqa {

/// Additive mask value for non-answer positions. Finite, so forward passes
/// stay NaN-free, but far below any reachable logit.
inline constexpr double kPositionMask = -1e30;

struct SpanPrediction {
  struct Span {
    std::size_t start = 0;  // token indices, inclusive
    std::size_t end = 0;
    double score = 0.0;
  };
  std::vector<Span> spans;  // sorted by position, pairwise non-overlapping
  std::size_t predicted_count = 1;
};

struct GoldAnswerSet {
  struct Answer {
    std::size_t start_token = 0;
    std::size_t end_token = 0;
    std::string text;
  };
  std::vector<Answer> answers;

  std::size_t count() const { return answers.size(); }
};

/// Span start/end projections plus the answer-count classifier.
struct QaHeadParams {
  Tensor w_start, b_start;  // d x 1, 1
  Tensor w_end, b_end;      // d x 1, 1
  Tensor w_count, b_count;  // d x n_max, n_max

  std::size_t n_max() const { return w_count.cols(); }

  static QaHeadParams create(ParamRegistry& reg, const std::string& prefix, std::size_t d,
                             std::size_t n_max) {
    if (n_max < 1) throw ConfigError("qa head: n_max must be >= 1");
    QaHeadParams p;
    p.w_start = reg.uniform(prefix + ".w_start", {d, 1}, d);
    p.b_start = reg.zeros(prefix + ".b_start", {1});
    p.w_end = reg.uniform(prefix + ".w_end", {d, 1}, d);
    p.b_end = reg.zeros(prefix + ".b_end", {1});
    p.w_count = reg.uniform(prefix + ".w_count", {d, n_max}, d);
    p.b_count = reg.zeros(prefix + ".b_count", {n_max});
    return p;
  }
};

/// Two linear projections of the fused token representations. Positions
/// where context_mask is false (question, separators, padding) are pushed
/// to kPositionMask so they never win the softmax or the decode.
inline std::pair<Tensor, Tensor> span_logits(const Tensor& e, const QaHeadParams& p,
                                             const std::vector<bool>& context_mask) {
  if (e.rank() != 2 || e.rows() != context_mask.size())
    throw ShapeError("span_logits: representation " + shape_str(e.shape()) +
                     " does not match mask of length " + std::to_string(context_mask.size()));
  const std::size_t k = e.rows();
  Tensor mask = Tensor::zeros({k});
  for (std::size_t i = 0; i < k; ++i) mask[i] = context_mask[i] ? 0.0 : kPositionMask;
  Tensor start = add(reshape(linear(e, p.w_start, p.b_start), {k}), mask);
  Tensor end = add(reshape(linear(e, p.w_end, p.b_end), {k}), mask);
  return {start, end};
}

/// Mean-pools the token representations and maps them to n_max logits;
/// class c stands for "c + 1 answers".
inline Tensor answer_count_logits(const Tensor& e_prlm, const QaHeadParams& p) {
  return reshape(linear(mean_rows(e_prlm), p.w_count, p.b_count), {p.n_max()});
}

/// Multi-answer loss: summed start and end cross-entropies over the gold
/// answers, plus the answer-count cross-entropy, averaged over the 2n + 1
/// terms.
inline Tensor qa_loss(const Tensor& start_logits, const Tensor& end_logits,
                      const Tensor& count_logits, const GoldAnswerSet& gold) {
  const std::size_t n = gold.count();
  if (n == 0) throw ValidationError("qa_loss: gold answer set is empty");
  if (n > count_logits.size())
    throw ValidationError("qa_loss: " + std::to_string(n) + " gold answers exceed n_max = " +
                          std::to_string(count_logits.size()));
  const std::size_t k = start_logits.size();
  for (const GoldAnswerSet::Answer& a : gold.answers) {
    if (a.start_token >= k || a.end_token >= k || a.start_token > a.end_token)
      throw ValidationError("qa_loss: gold span [" + std::to_string(a.start_token) + ", " +
                            std::to_string(a.end_token) + "] out of range for " +
                            std::to_string(k) + " positions");
  }
  Tensor total = cross_entropy(count_logits, n - 1);
  for (const GoldAnswerSet::Answer& a : gold.answers) {
    total = add(total, cross_entropy(start_logits, a.start_token));
    total = add(total, cross_entropy(end_logits, a.end_token));
  }
  return scale(total, 1.0 / static_cast<double>(2 * n + 1));
}

namespace detail {

// Exact maximum-total-score selection of `count` pairwise non-overlapping
// spans with end - start < max_span_len; returns the largest feasible
// cardinality when `count` cannot be met. Suffix DP: f[c][i] = best score
// using c spans entirely within positions [i, k). Ties prefer the
// lexicographically earliest span sequence; the reconstruction compares the
// identical floating-point expressions the DP maximized, so it is exact.
inline std::vector<SpanPrediction::Span> best_span_set(const std::vector<double>& start_logits,
                                                       const std::vector<double>& end_logits,
                                                       std::size_t count,
                                                       std::size_t max_span_len) {
  const std::size_t k = start_logits.size();
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> f(count + 1, std::vector<double>(k + 1, neg_inf));
  for (std::size_t i = 0; i <= k; ++i) f[0][i] = 0.0;
  for (std::size_t c = 1; c <= count; ++c) {
    for (std::size_t i = k; i-- > 0;) {
      double best = f[c][i + 1];
      const std::size_t e_max = std::min(k, i + max_span_len);
      for (std::size_t e = i; e < e_max; ++e) {
        if (f[c - 1][e + 1] == neg_inf) break;
        best = std::max(best, start_logits[i] + end_logits[e] + f[c - 1][e + 1]);
      }
      f[c][i] = best;
    }
  }
  std::size_t use = count;
  while (use > 0 && f[use][0] == neg_inf) --use;

  std::vector<SpanPrediction::Span> spans;
  std::size_t i = 0, c = use;
  while (c > 0) {
    // Earliest span attaining the optimum: scan s ascending, e ascending.
    bool taken = false;
    for (std::size_t s = i; s < k && !taken; ++s) {
      const std::size_t e_max = std::min(k, s + max_span_len);
      for (std::size_t e = s; e < e_max; ++e) {
        if (f[c - 1][e + 1] == neg_inf) break;
        if (start_logits[s] + end_logits[e] + f[c - 1][e + 1] == f[c][i]) {
          spans.push_back({s, e, start_logits[s] + end_logits[e]});
          i = e + 1;
          c -= 1;
          taken = true;
          break;
        }
      }
    }
    if (!taken) break;  // unreachable: f[c][i] finite implies a witness
  }
  return spans;
}

}  // namespace detail

/// Decodes the predicted answer spans: the answer count is
/// argmax(count_logits) + 1 and the spans are the maximum-total-score set of
/// that many non-overlapping spans (score = start logit + end logit,
/// end - start < max_span_len). When fewer spans fit, the largest feasible
/// set is returned and predicted_count follows it.
inline SpanPrediction decode_spans(const std::vector<double>& start_logits,
                                   const std::vector<double>& end_logits,
                                   const std::vector<double>& count_logits,
                                   std::size_t max_span_len) {
  if (start_logits.size() != end_logits.size())
    throw ShapeError("decode_spans: start/end logit lengths disagree: " +
                     std::to_string(start_logits.size()) + " vs " +
                     std::to_string(end_logits.size()));
  if (start_logits.empty()) throw ShapeError("decode_spans: empty logits");
  if (count_logits.empty()) throw ShapeError("decode_spans: empty count logits");
  if (max_span_len == 0) throw ConfigError("decode_spans: max_span_len must be >= 1");
  std::size_t count = 0;
  for (std::size_t c = 1; c < count_logits.size(); ++c)
    if (count_logits[c] > count_logits[count]) count = c;
  count += 1;

  SpanPrediction pred;
  pred.spans = detail::best_span_set(start_logits, end_logits, count, max_span_len);
  if (pred.spans.empty()) {
    // Fall back to the best single token.
    std::size_t best = 0;
    for (std::size_t i = 1; i < start_logits.size(); ++i)
      if (start_logits[i] + end_logits[i] > start_logits[best] + end_logits[best]) best = i;
    pred.spans.push_back({best, best, start_logits[best] + end_logits[best]});
  }
  pred.predicted_count = pred.spans.size();
  return pred;
}

}  // namespace corefqa
