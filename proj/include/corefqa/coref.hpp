#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "corefqa/tokenizer.hpp"

#include "json.hpp"

namespace corefqa {

/// A mention is an inclusive word span.
struct Mention {
  std::size_t start_word = 0;
  std::size_t end_word = 0;
};

inline bool operator==(const Mention& a, const Mention& b) {
  return a.start_word == b.start_word && a.end_word == b.end_word;
}

/// Mention clusters over word spans. Cluster ids are 1-based: cluster n is
/// clusters[n-1]. Singletons are not coreference clusters and are rejected.
struct CorefClusters {
  std::vector<std::vector<Mention>> clusters;

  bool empty() const { return clusters.empty(); }
  std::size_t size() const { return clusters.size(); }
};

inline void validate_clusters(const CorefClusters& cc, std::size_t word_count) {
  for (std::size_t ci = 0; ci < cc.clusters.size(); ++ci) {
    const auto& cluster = cc.clusters[ci];
    if (cluster.size() < 2)
      throw ValidationError("clusters: cluster " + std::to_string(ci + 1) + " has " +
                            std::to_string(cluster.size()) +
                            " mention(s); a coreference cluster needs at least 2");
    for (std::size_t mi = 0; mi < cluster.size(); ++mi) {
      const Mention& m = cluster[mi];
      if (m.start_word > m.end_word || m.end_word >= word_count)
        throw ValidationError("clusters: cluster " + std::to_string(ci + 1) + " mention " +
                              std::to_string(mi) + " span [" + std::to_string(m.start_word) +
                              ", " + std::to_string(m.end_word) + "] out of range for " +
                              std::to_string(word_count) + " words");
    }
  }
}

/// Parses the cluster JSON schema:
///   { "clusters": [ [ {"start_word": int, "end_word": int, "text": str?}, ... ], ... ] }
/// "text" is advisory; when present and words are supplied it must match the
/// space-joined document words of the span.
inline CorefClusters parse_clusters(const nlohmann::json& j, std::size_t word_count,
                                    const std::vector<Word>* words = nullptr) {
  if (!j.is_object() || !j.contains("clusters") || !j["clusters"].is_array())
    throw ValidationError("clusters: expected an object with a \"clusters\" array");
  CorefClusters cc;
  for (std::size_t ci = 0; ci < j["clusters"].size(); ++ci) {
    const auto& jc = j["clusters"][ci];
    if (!jc.is_array())
      throw ValidationError("clusters: cluster " + std::to_string(ci + 1) + " is not an array");
    std::vector<Mention> cluster;
    for (std::size_t mi = 0; mi < jc.size(); ++mi) {
      const auto& jm = jc[mi];
      if (!jm.is_object() || !jm.contains("start_word") || !jm.contains("end_word"))
        throw ValidationError("clusters: cluster " + std::to_string(ci + 1) + " mention " +
                              std::to_string(mi) + " needs start_word and end_word");
      if (!jm["start_word"].is_number_unsigned() || !jm["end_word"].is_number_unsigned())
        throw ValidationError("clusters: cluster " + std::to_string(ci + 1) + " mention " +
                              std::to_string(mi) + " has non-integer span");
      Mention m{jm["start_word"].get<std::size_t>(), jm["end_word"].get<std::size_t>()};
      if (jm.contains("text") && words != nullptr) {
        if (m.start_word > m.end_word || m.end_word >= words->size())
          throw ValidationError("clusters: cluster " + std::to_string(ci + 1) + " mention " +
                                std::to_string(mi) + " span [" + std::to_string(m.start_word) +
                                ", " + std::to_string(m.end_word) + "] out of range for " +
                                std::to_string(words->size()) + " words");
        std::string joined;
        for (std::size_t wi = m.start_word; wi <= m.end_word; ++wi) {
          if (wi > m.start_word) joined += ' ';
          joined += (*words)[wi].text;
        }
        const std::string want = jm["text"].get<std::string>();
        if (joined != want)
          throw ValidationError("clusters: cluster " + std::to_string(ci + 1) + " mention " +
                                std::to_string(mi) + " text \"" + want +
                                "\" does not match document words \"" + joined + "\"");
      }
      cluster.push_back(m);
    }
    cc.clusters.push_back(std::move(cluster));
  }
  validate_clusters(cc, word_count);
  return cc;
}

inline CorefClusters load_clusters(const std::string& path, std::size_t word_count,
                                   const std::vector<Word>* words = nullptr) {
  std::ifstream is(path);
  if (!is) throw ValidationError("load_clusters: cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("load_clusters: malformed JSON in " + path + ": " + e.what());
  }
  return parse_clusters(j, word_count, words);
}

namespace detail {

inline std::string lower_ascii(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool is_third_person_pronoun(const std::string& token) {
  static const std::set<std::string> pronouns = {"he",   "she", "his",   "her", "him",
                                                 "they", "them", "their", "it",  "its"};
  return pronouns.count(lower_ascii(token)) > 0;
}

inline bool is_capitalized_entity(const std::string& token) {
  if (token.empty() || !std::isupper(static_cast<unsigned char>(token[0]))) return false;
  for (char c : token)
    if (!std::isalpha(static_cast<unsigned char>(c))) return false;
  return !is_third_person_pronoun(token);
}

}  // namespace detail

/// Deterministic rule-based fallback resolver:
///   (a) all occurrences of a repeated capitalized token cluster together;
///   (b) each third-person pronoun attaches to the entity of the nearest
///       preceding capitalized token (creating that cluster if needed).
/// Clusters with fewer than two mentions are dropped. Cluster order follows
/// the entity's first occurrence.
inline CorefClusters rule_resolve(const std::vector<Word>& words) {
  std::map<std::string, std::vector<std::size_t>> entity_mentions;  // text -> word indices
  std::vector<std::string> entity_order;
  auto note_entity = [&](const std::string& text) {
    if (!entity_mentions.count(text)) entity_order.push_back(text);
    return &entity_mentions[text];
  };

  for (std::size_t i = 0; i < words.size(); ++i) {
    if (detail::is_capitalized_entity(words[i].text))
      note_entity(words[i].text)->push_back(i);
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!detail::is_third_person_pronoun(words[i].text)) continue;
    for (std::size_t j = i; j-- > 0;) {
      if (detail::is_capitalized_entity(words[j].text)) {
        entity_mentions[words[j].text].push_back(i);
        break;
      }
    }
    // no preceding capitalized token: the pronoun stays unclustered
  }

  CorefClusters cc;
  for (const std::string& text : entity_order) {
    std::vector<std::size_t>& positions = entity_mentions[text];
    if (positions.size() < 2) continue;
    std::sort(positions.begin(), positions.end());
    std::vector<Mention> cluster;
    for (std::size_t p : positions) cluster.push_back({p, p});
    cc.clusters.push_back(std::move(cluster));
  }
  validate_clusters(cc, words.size());
  return cc;
}

}  // namespace corefqa
