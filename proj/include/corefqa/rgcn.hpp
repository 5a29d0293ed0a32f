#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "corefqa/coref_bias.hpp"
#include "corefqa/ops.hpp"
#include "corefqa/params.hpp"

namespace corefqa {

/// Coreference graph over subword nodes plus one global node (index k).
/// Relation 1 links same-cluster subwords; relation 2 links every subword
/// to the global node, both directions. Self-connection is not an edge: it
/// lives in the W_0 term of the convolution.
struct CorefGraph {
  struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;
    int relation = 1;  // 1 = coreference, 2 = global
  };

  std::size_t node_count = 0;
  std::vector<Edge> edges;
  // in_degree[node][relation - 1]
  std::vector<std::array<std::size_t, 2>> in_degree;

  std::size_t global_node() const { return node_count - 1; }
};

enum class ClusterTopology { star, clique };

namespace detail {

// Maximal runs of equal nonzero id, grouped per id. A run is one mention
// group (adjacent mentions of the same cluster merge, which is the best the
// id array can distinguish).
inline std::vector<std::vector<std::pair<std::size_t, std::size_t>>> id_runs(
    const CorefArray& arr, int max_id) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> runs(max_id + 1);
  std::size_t i = 0;
  while (i < arr.size()) {
    if (arr.ids[i] == 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < arr.size() && arr.ids[j + 1] == arr.ids[i]) ++j;
    runs[arr.ids[i]].push_back({i, j});
    i = j + 1;
  }
  return runs;
}

}  // namespace detail

/// Builds the coreference graph from the id array. Star topology links every
/// later mention's subwords to the first mention's subwords (the antecedent);
/// clique links all pairs of subwords from distinct mentions of a cluster.
inline CorefGraph build_graph(const CorefArray& arr,
                              ClusterTopology topology = ClusterTopology::star) {
  const std::size_t k = arr.size();
  CorefGraph g;
  g.node_count = k + 1;
  g.in_degree.assign(g.node_count, {0, 0});
  auto add_edge = [&g](std::size_t src, std::size_t dst, int rel) {
    g.edges.push_back({src, dst, rel});
    g.in_degree[dst][rel - 1] += 1;
  };

  int max_id = 0;
  for (int id : arr.ids) max_id = std::max(max_id, id);
  auto runs = detail::id_runs(arr, max_id);
  for (int id = 1; id <= max_id; ++id) {
    const auto& mention_runs = runs[id];
    for (std::size_t a = 0; a < mention_runs.size(); ++a) {
      const std::size_t b_end = topology == ClusterTopology::star ? 1 : a;
      for (std::size_t b = 0; b < b_end; ++b) {
        if (a == b) continue;
        for (std::size_t s = mention_runs[a].first; s <= mention_runs[a].second; ++s)
          for (std::size_t t = mention_runs[b].first; t <= mention_runs[b].second; ++t) {
            add_edge(s, t, 1);
            add_edge(t, s, 1);
          }
      }
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    add_edge(i, g.global_node(), 2);
    add_edge(g.global_node(), i, 2);
  }
  return g;
}

/// One RGCN layer's parameters with basis decomposition: the relation
/// weights are linear combinations of shared basis matrices,
/// W_r = sum_b coeff[r][b] * basis_b.
struct RgcnLayerParams {
  Tensor w_self;                 // d_in x d_out
  Tensor basis;                  // B x (d_in * d_out), row b is basis matrix b
  std::vector<Tensor> coeff;     // per relation, 1 x B
  std::size_t d_in = 0, d_out = 0, n_basis = 0;

  static RgcnLayerParams create(ParamRegistry& reg, const std::string& prefix, std::size_t d_in,
                                std::size_t d_out, std::size_t n_basis,
                                std::size_t n_relations = 2) {
    if (n_basis == 0) throw ConfigError("rgcn layer " + prefix + ": basis count must be >= 1");
    RgcnLayerParams p;
    p.d_in = d_in;
    p.d_out = d_out;
    p.n_basis = n_basis;
    p.w_self = reg.uniform(prefix + ".w_self", {d_in, d_out}, d_in);
    p.basis = reg.uniform(prefix + ".basis", {n_basis, d_in * d_out}, d_in);
    for (std::size_t r = 0; r < n_relations; ++r)
      p.coeff.push_back(
          reg.uniform(prefix + ".coeff" + std::to_string(r + 1), {1, n_basis}, n_basis));
    return p;
  }

  /// Materializes W_r (1-based relation) through the basis combination, on
  /// the tape so gradients reach both coefficients and bases.
  Tensor relation_weight(int relation) const {
    return reshape(matmul(coeff.at(relation - 1), basis), {d_in, d_out});
  }
};

namespace detail {

// Row-normalized adjacency for one relation: entry (i, j) = 1/|N_i^r| when
// j -> i is an edge of that relation. Constant wrt the tape.
inline Tensor relation_adjacency(const CorefGraph& g, int relation) {
  Tensor a = Tensor::zeros({g.node_count, g.node_count});
  for (const CorefGraph::Edge& e : g.edges) {
    if (e.relation != relation) continue;
    a(e.dst, e.src) = 1.0 / static_cast<double>(g.in_degree[e.dst][relation - 1]);
  }
  return a;
}

}  // namespace detail

/// h_i' = relu(W_0^T h_i + sum_r sum_{j in N_i^r} (1/|N_i^r|) W_r^T h_j).
/// Nodes with no in-neighbors under a relation skip that relation's sum.
inline Tensor rgcn_layer(const CorefGraph& g, const Tensor& h, const RgcnLayerParams& p) {
  if (h.rank() != 2 || h.rows() != g.node_count || h.cols() != p.d_in)
    throw ShapeError("rgcn_layer: features " + shape_str(h.shape()) + " do not match " +
                     std::to_string(g.node_count) + " nodes of width " + std::to_string(p.d_in));
  Tensor out = matmul(h, p.w_self);
  for (int r = 1; r <= static_cast<int>(p.coeff.size()); ++r) {
    Tensor adj = detail::relation_adjacency(g, r);
    out = add(out, matmul(adj, matmul(h, p.relation_weight(r))));
  }
  return relu(out);
}

/// Fusion head per E = FC(E_prLM || E_gnn): feature-wise concatenation
/// followed by a learned linear map back to the language-model width.
struct FuseParams {
  Tensor w;  // (d + d_gnn) x d
  Tensor b;  // d

  static FuseParams create(ParamRegistry& reg, const std::string& prefix, std::size_t d,
                           std::size_t d_gnn) {
    FuseParams p;
    p.w = reg.uniform(prefix + ".w", {d + d_gnn, d}, d + d_gnn);
    p.b = reg.zeros(prefix + ".b", {d});
    return p;
  }
};

inline Tensor fuse(const Tensor& e_prlm, const Tensor& e_gnn, const FuseParams& p) {
  if (e_prlm.rows() != e_gnn.rows())
    throw ShapeError("fuse: row counts disagree: " + shape_str(e_prlm.shape()) + " vs " +
                     shape_str(e_gnn.shape()));
  return linear(concat_lastdim(e_prlm, e_gnn), p.w, p.b);
}

}  // namespace corefqa
