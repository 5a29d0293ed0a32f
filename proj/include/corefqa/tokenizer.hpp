#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "corefqa/common.hpp"

namespace corefqa {

/// A word with half-open character offsets into the original text.
struct Word {
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

struct Subword {
  std::string text;  // continuation pieces carry a "##" prefix
  std::size_t word_index = 0;
};

/// Word tokens, subword tokens, and the word -> subword-range map.
/// Ranges are inclusive [first, last] and partition the subword sequence.
struct TokenAlignment {
  std::vector<Word> words;
  std::vector<Subword> subwords;
  std::vector<std::pair<std::size_t, std::size_t>> word_to_subwords;
};

namespace detail {

inline bool is_space_char(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_punct_char(char c) {
  static const std::string punct = R"(!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~)";
  return punct.find(c) != std::string::npos;
}

// Length of the UTF-8 sequence starting at s[i]; 1 for ASCII and malformed bytes.
inline std::size_t utf8_len(const std::string& s, std::size_t i) {
  const unsigned char c = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  if ((c & 0xe0) == 0xc0) len = 2;
  else if ((c & 0xf0) == 0xe0) len = 3;
  else if ((c & 0xf8) == 0xf0) len = 4;
  return std::min(len, s.size() - i);
}

}  // namespace detail

/// Whitespace-and-punctuation splitting: maximal runs of non-space,
/// non-punctuation characters, plus every punctuation character as its own
/// token. Offsets index the original string.
inline std::vector<Word> word_tokenize(const std::string& text) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < text.size()) {
    if (detail::is_space_char(text[i])) {
      ++i;
      continue;
    }
    if (detail::is_punct_char(text[i])) {
      words.push_back({text.substr(i, 1), i, i + 1});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !detail::is_space_char(text[j]) && !detail::is_punct_char(text[j]))
      ++j;
    words.push_back({text.substr(i, j - i), i, j});
    i = j;
  }
  return words;
}

/// Subword vocabulary: one piece per line, line number = id. The first four
/// ids are reserved for [PAD], [UNK], [CLS], [SEP].
class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kCls = 2;
  static constexpr std::size_t kSep = 3;

  Vocab() = default;

  static Vocab from_lines(std::vector<std::string> lines) {
    Vocab v;
    v.pieces_ = std::move(lines);
    for (std::size_t i = 0; i < v.pieces_.size(); ++i) v.ids_[v.pieces_[i]] = i;
    return v;
  }

  static Vocab load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("Vocab::load: cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    return from_lines(std::move(lines));
  }

  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ValidationError("Vocab::save: cannot open " + path);
    for (const std::string& p : pieces_) os << p << '\n';
  }

  /// Builds a vocabulary from a word corpus: specials, every observed
  /// character (bare and "##"-marked, so character fallback is total), then
  /// whole words by descending frequency up to max_size entries.
  static Vocab build(const std::vector<std::string>& corpus_words, std::size_t max_size) {
    std::map<std::string, std::size_t> word_counts;
    std::map<std::string, bool> chars;  // ordered for determinism
    for (const std::string& w : corpus_words) {
      ++word_counts[w];
      std::size_t i = 0;
      while (i < w.size()) {
        const std::size_t len = detail::utf8_len(w, i);
        chars[w.substr(i, len)] = true;
        i += len;
      }
    }
    std::vector<std::string> lines = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
    for (const auto& [c, _] : chars) lines.push_back(c);
    for (const auto& [c, _] : chars) lines.push_back("##" + c);
    std::vector<std::pair<std::string, std::size_t>> by_freq(word_counts.begin(),
                                                             word_counts.end());
    std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    std::map<std::string, bool> have;
    for (const std::string& l : lines) have[l] = true;
    for (const auto& [w, _] : by_freq) {
      if (lines.size() >= max_size) break;
      if (!have[w]) {
        lines.push_back(w);
        have[w] = true;
      }
    }
    return from_lines(std::move(lines));
  }

  bool contains(const std::string& piece) const { return ids_.count(piece) > 0; }

  std::size_t id(const std::string& piece) const {
    auto it = ids_.find(piece);
    return it == ids_.end() ? kUnk : it->second;
  }

  const std::string& piece(std::size_t id) const { return pieces_.at(id); }
  std::size_t size() const { return pieces_.size(); }
  const std::vector<std::string>& pieces() const { return pieces_; }

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, std::size_t> ids_;
};

/// Greedy longest-match wordpiece segmentation with "##" continuation
/// markers. Falls back to single characters, so every word yields at least
/// one subword and marker-stripped concatenation reproduces the word.
inline std::vector<Subword> subword_tokenize(const std::vector<Word>& words, const Vocab& vocab) {
  std::vector<Subword> out;
  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    const std::string& w = words[wi].text;
    std::size_t i = 0;
    while (i < w.size()) {
      std::size_t best = 0;
      for (std::size_t len = w.size() - i; len >= 1; --len) {
        std::string piece = (i > 0 ? "##" : "") + w.substr(i, len);
        if (vocab.contains(piece)) {
          best = len;
          break;
        }
      }
      if (best == 0) best = detail::utf8_len(w, i);  // character fallback
      out.push_back({(i > 0 ? "##" : "") + w.substr(i, best), wi});
      i += best;
    }
  }
  return out;
}

/// Builds the word -> subword map and validates the alignment invariants.
inline TokenAlignment align(std::vector<Word> words, std::vector<Subword> subwords) {
  TokenAlignment a;
  a.word_to_subwords.assign(words.size(), {0, 0});
  std::vector<bool> seen(words.size(), false);
  std::size_t prev_word = 0;
  for (std::size_t si = 0; si < subwords.size(); ++si) {
    const std::size_t wi = subwords[si].word_index;
    if (wi >= words.size())
      throw ValidationError("align: subword " + std::to_string(si) + " names word " +
                            std::to_string(wi) + " past the word count");
    if (si > 0 && wi != prev_word && wi != prev_word + 1)
      throw ValidationError("align: subword ranges are not contiguous at subword " +
                            std::to_string(si));
    if (!seen[wi]) {
      a.word_to_subwords[wi].first = si;
      seen[wi] = true;
    }
    a.word_to_subwords[wi].second = si;
    prev_word = wi;
  }
  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    if (!seen[wi])
      throw ValidationError("align: word " + std::to_string(wi) + " has no subwords");
    std::string rebuilt;
    for (std::size_t si = a.word_to_subwords[wi].first; si <= a.word_to_subwords[wi].second;
         ++si) {
      const std::string& t = subwords[si].text;
      rebuilt += (t.rfind("##", 0) == 0) ? t.substr(2) : t;
    }
    if (rebuilt != words[wi].text)
      throw ValidationError("align: subwords of word " + std::to_string(wi) +
                            " rebuild \"" + rebuilt + "\", expected \"" + words[wi].text + "\"");
  }
  a.words = std::move(words);
  a.subwords = std::move(subwords);
  return a;
}

inline TokenAlignment tokenize_and_align(const std::string& text, const Vocab& vocab) {
  std::vector<Word> words = word_tokenize(text);
  std::vector<Subword> subwords = subword_tokenize(words, vocab);
  return align(std::move(words), std::move(subwords));
}

}  // namespace corefqa
