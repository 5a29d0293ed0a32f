#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "corefqa/common.hpp"

namespace corefqa {

/// SQuAD-style answer normalization: lowercase, strip punctuation, drop the
/// articles a/an/the, collapse whitespace.
inline std::string normalize_answer(const std::string& s) {
  std::string lowered;
  for (char c : s) {
    const unsigned char uc = static_cast<unsigned char>(c);
    if (std::ispunct(uc)) continue;
    lowered += static_cast<char>(std::tolower(uc));
  }
  std::istringstream iss(lowered);
  std::string tok, out;
  while (iss >> tok) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

inline std::vector<std::string> normalized_tokens(const std::string& s) {
  std::istringstream iss(normalize_answer(s));
  std::vector<std::string> toks;
  std::string tok;
  while (iss >> tok) toks.push_back(tok);
  return toks;
}

inline bool answer_em(const std::string& pred, const std::string& gold) {
  return normalize_answer(pred) == normalize_answer(gold);
}

/// Word-level F1: harmonic mean of precision/recall over normalized token
/// bags (multiplicity-aware). Empty-vs-empty counts as exact agreement.
inline double answer_f1(const std::string& pred, const std::string& gold) {
  const std::vector<std::string> p = normalized_tokens(pred);
  const std::vector<std::string> g = normalized_tokens(gold);
  if (p.empty() || g.empty()) return p == g ? 1.0 : 0.0;
  std::map<std::string, std::size_t> gold_counts;
  for (const std::string& t : g) ++gold_counts[t];
  std::size_t common = 0;
  for (const std::string& t : p) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      ++common;
      --it->second;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

struct QuestionScore {
  double em = 0.0;
  double f1 = 0.0;
};

/// Scores one question. A single prediction against a single gold is plain
/// EM/F1. With several answers on either side, predictions pair with golds
/// greedily by F1 (one-to-one) and the pair scores average over
/// max(#pred, #gold), so missing and surplus answers both cost.
inline QuestionScore score_question(const std::vector<std::string>& predicted,
                                    const std::vector<std::string>& gold) {
  if (gold.empty()) throw ValidationError("score_question: empty gold answer set");
  if (predicted.empty()) return {0.0, 0.0};
  std::vector<bool> p_used(predicted.size(), false), g_used(gold.size(), false);
  const std::size_t pairs = std::min(predicted.size(), gold.size());
  double em_sum = 0.0, f1_sum = 0.0;
  for (std::size_t round = 0; round < pairs; ++round) {
    double best_f1 = -1.0;
    std::size_t best_p = 0, best_g = 0;
    for (std::size_t pi = 0; pi < predicted.size(); ++pi) {
      if (p_used[pi]) continue;
      for (std::size_t gi = 0; gi < gold.size(); ++gi) {
        if (g_used[gi]) continue;
        const double f1 = answer_f1(predicted[pi], gold[gi]);
        if (f1 > best_f1) {
          best_f1 = f1;
          best_p = pi;
          best_g = gi;
        }
      }
    }
    p_used[best_p] = true;
    g_used[best_g] = true;
    f1_sum += best_f1;
    em_sum += answer_em(predicted[best_p], gold[best_g]) ? 1.0 : 0.0;
  }
  const double denom = static_cast<double>(std::max(predicted.size(), gold.size()));
  return {em_sum / denom, f1_sum / denom};
}

struct SplitScores {
  double em = 0.0;  // mean x 100
  double f1 = 0.0;  // mean x 100
  std::size_t n_questions = 0;
};

/// Dataset-level EM/F1 (x100) over predictions aligned to golds by question
/// id. Every predicted id must exist in the gold set.
inline SplitScores em_f1(const std::map<std::string, std::vector<std::string>>& predicted,
                         const std::map<std::string, std::vector<std::string>>& gold) {
  SplitScores out;
  for (const auto& [qid, preds] : predicted) {
    auto it = gold.find(qid);
    if (it == gold.end())
      throw ValidationError("em_f1: unknown question id \"" + qid + "\"");
    const QuestionScore qs = score_question(preds, it->second);
    out.em += qs.em;
    out.f1 += qs.f1;
    ++out.n_questions;
  }
  if (out.n_questions > 0) {
    out.em = out.em / static_cast<double>(out.n_questions) * 100.0;
    out.f1 = out.f1 / static_cast<double>(out.n_questions) * 100.0;
  }
  return out;
}

}  // namespace corefqa
