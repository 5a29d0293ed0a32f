#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <vector>

#include "corefqa/coref.hpp"
#include "corefqa/tensor.hpp"
#include "corefqa/tokenizer.hpp"

namespace corefqa {

/// Per-subword cluster ids: 0 = outside every mention, n >= 1 = cluster n.
struct CorefArray {
  std::vector<int> ids;

  std::size_t size() const { return ids.size(); }
};

enum class BiasMode { additive, multiplicative };

/// The k x k attention-bias matrix. Symmetric; entries are the coreference
/// weight on distinct same-cluster positions and the mode's identity element
/// (0 additive, 1 multiplicative) everywhere else, including the diagonal.
struct CorefBiasMatrix {
  BiasMode mode = BiasMode::additive;
  Tensor values;  // constant, never requires grad
};

/// Assigns each subword the cluster id of its word. A word inside several
/// mentions takes the shortest enclosing mention; ties go to the lower
/// cluster id. Ids keep the 1-based cluster numbering; if overlap shadowing
/// leaves gaps the used ids are compressed order-preservingly so the nonzero
/// ids always form a contiguous-from-1 set.
inline CorefArray build_coref_array(const TokenAlignment& alignment,
                                    const CorefClusters& clusters) {
  const std::size_t word_count = alignment.words.size();
  validate_clusters(clusters, word_count);

  std::vector<int> word_ids(word_count, 0);
  std::vector<std::size_t> best_width(word_count, 0);
  for (std::size_t ci = 0; ci < clusters.clusters.size(); ++ci) {
    const int id = static_cast<int>(ci) + 1;
    for (const Mention& m : clusters.clusters[ci]) {
      const std::size_t width = m.end_word - m.start_word + 1;
      for (std::size_t wi = m.start_word; wi <= m.end_word; ++wi) {
        if (word_ids[wi] == 0 || width < best_width[wi] ||
            (width == best_width[wi] && id < word_ids[wi])) {
          word_ids[wi] = id;
          best_width[wi] = width;
        }
      }
    }
  }

  // Compress ids if shadowing removed a cluster entirely.
  std::map<int, int> remap;
  for (int id : word_ids)
    if (id != 0 && !remap.count(id)) remap[id] = 0;
  int next = 1;
  for (auto& [id, to] : remap) to = next++;  // std::map iterates in id order
  for (int& id : word_ids)
    if (id != 0) id = remap[id];

  CorefArray arr;
  arr.ids.assign(alignment.subwords.size(), 0);
  for (std::size_t wi = 0; wi < word_count; ++wi) {
    const auto [first, last] = alignment.word_to_subwords[wi];
    for (std::size_t si = first; si <= last; ++si) arr.ids[si] = word_ids[wi];
  }
  return arr;
}

/// Builds M from the coreference array: entry (i, j) is `weight` iff
/// ids[i] == ids[j] != 0 and i != j, otherwise the mode's identity element.
inline CorefBiasMatrix build_bias_matrix(const CorefArray& arr, double weight, BiasMode mode) {
  if (mode == BiasMode::multiplicative && weight <= 0.0)
    throw ConfigError("build_bias_matrix: multiplicative coref_weight must be > 0, got " +
                      std::to_string(weight));
  const std::size_t k = arr.size();
  const double identity = mode == BiasMode::additive ? 0.0 : 1.0;
  Tensor values = Tensor::full({k, k}, identity);
  for (std::size_t i = 0; i < k; ++i) {
    if (arr.ids[i] == 0) continue;
    for (std::size_t j = 0; j < k; ++j) {
      if (i != j && arr.ids[j] == arr.ids[i]) values(i, j) = weight;
    }
  }
  return {mode, values};
}

/// A zero-effect bias of either mode (all identity elements).
inline CorefBiasMatrix identity_bias(std::size_t k, BiasMode mode) {
  return build_bias_matrix(CorefArray{std::vector<int>(k, 0)}, 1.0, mode);
}

}  // namespace corefqa
