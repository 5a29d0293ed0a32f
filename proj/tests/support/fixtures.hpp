#pragma once

// Shared fixture: a sentence with two overlapping mention clusters and the
// expected per-word cluster ids under the shortest-mention / lower-id
// overlap rule. Word 7 "his" sits in a width-1 mention of cluster 1 and a
// width-2 mention of cluster 2; the shorter mention wins.

#include <string>
#include <vector>

#include "json.hpp"

namespace corefqa::testing {

inline const std::string kClusterSentence =
    "Losing his nerve, Frankie calls up his employers to tell them he wants to quit the job.";

inline const std::vector<std::string> kClusterSentenceWords = {
    "Losing", "his", "nerve", ",",  "Frankie", "calls", "up",  "his", "employers", "to",
    "tell",   "them", "he",   "wants", "to",  "quit",  "the", "job", "."};

inline nlohmann::json cluster_sentence_annotation() {
  return nlohmann::json::parse(R"({
    "clusters": [
      [
        {"start_word": 1, "end_word": 1, "text": "his"},
        {"start_word": 4, "end_word": 4, "text": "Frankie"},
        {"start_word": 7, "end_word": 7, "text": "his"},
        {"start_word": 12, "end_word": 12, "text": "he"}
      ],
      [
        {"start_word": 7, "end_word": 8, "text": "his employers"},
        {"start_word": 11, "end_word": 11, "text": "them"}
      ]
    ]
  })");
}

inline const std::vector<int> kClusterSentenceWordIds = {0, 1, 0, 0, 1, 0, 0, 1, 2, 0,
                                                         0, 2, 1, 0, 0, 0, 0, 0, 0};

}  // namespace corefqa::testing
