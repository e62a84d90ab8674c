#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace clusterpath {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Cluster assignment, one entry per sample.
using Labels = std::vector<int>;

/// Undirected edge stored once with tail < head. The incidence column of the
/// edge carries +sqrt(weight) at the tail and -sqrt(weight) at the head.
struct Edge {
  int tail = 0;
  int head = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct DegreeInfo {
  Vector degrees;       // D_ii = sum_j Phi_ij
  double volume = 0.0;  // trace(D)
};

/// Parameters of the block-model affinity graph: every within-block pair is an
/// edge with probability p_within, every between-block pair with p_between.
struct SbmParams {
  int n = 0;
  double p_within = 0.0;
  double p_between = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class KnnRule {
  Union,   // edge if either endpoint selects the other
  Mutual,  // edge only if both endpoints select each other
};

/// Symmetric, nonnegatively weighted graph on n samples, stored as a sorted
/// sparse edge list. Immutable after construction.
class AffinityGraph {
 public:
  struct Neighbor {
    int node;
    std::size_t edge;
  };

  AffinityGraph() = default;

  /// Edges may be given in either orientation; they are normalized to
  /// tail < head and sorted. Self-loops, duplicates, out-of-range endpoints
  /// and non-positive or non-finite weights are rejected.
  AffinityGraph(int n, std::vector<Edge> edges);

  int num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(std::size_t index) const { return edges_.at(index); }

  /// Position of edge {j, k} in edges(), in either orientation.
  std::optional<std::size_t> edge_index(int j, int k) const;
  bool has_edge(int j, int k) const { return edge_index(j, k).has_value(); }

  /// Phi_jk, zero for non-edges.
  double weight(int j, int k) const;

  std::span<const Neighbor> neighbors(int node) const { return adjacency_.at(node); }

  DegreeInfo degrees() const;
  double max_weight() const;
  bool is_unweighted() const;

  /// Dense Phi.
  Matrix adjacency() const;
  /// Dense L = D - Phi.
  Matrix laplacian() const;

  /// Same topology with every weight multiplied by c > 0.
  AffinityGraph scaled(double c) const;
  /// Relabels node i as permutation[i].
  AffinityGraph permuted(std::span<const int> permutation) const;

  friend bool operator==(const AffinityGraph& a, const AffinityGraph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

// Construction ---------------------------------------------------------------

/// Unweighted k-nearest-neighbor graph on the rows of X. Distance ties are
/// broken by the smaller index.
AffinityGraph knn_graph(const Matrix& X, int k, KnnRule rule = KnnRule::Union);

/// Unweighted graph with an edge iff ||X_i - X_j||_2 <= radius.
AffinityGraph epsilon_graph(const Matrix& X, double radius);

/// Retains the edges of `base` with weights exp(-tau ||X_i - X_j||^2).
AffinityGraph gaussian_weights(const Matrix& X, double tau, const AffinityGraph& base);

AffinityGraph complete_graph(int n);

/// Independent Bernoulli edges with probability p_within for same-label pairs
/// and p_between otherwise. Labels must form equally sized blocks.
AffinityGraph sbm_graph(const SbmParams& params, const Labels& labels);

/// Two cliques on {0..n/2-1} and {n/2..n-1} joined by the bridges
/// (i, i + n/2) for i < bridges.
AffinityGraph bridge_oracle_graph(int n, int bridges);

/// Balanced labels 0..blocks-1 in contiguous runs.
Labels block_labels(int n, int blocks);

// Structure ------------------------------------------------------------------

bool is_connected(const AffinityGraph& g);
bool is_bipartite(const AffinityGraph& g);

/// Component labels of the subgraph keeping only edges with keep[e] true.
/// Labels are numbered in order of first appearance by node index.
Labels connected_components(const AffinityGraph& g, const std::vector<bool>& keep);
Labels connected_components(const AffinityGraph& g);

int count_blocks(const Labels& labels);

// Incidence operators --------------------------------------------------------

/// F^T U: row e(j,k) equals sqrt(Phi_jk) (U_j - U_k).
Matrix incidence_apply(const AffinityGraph& g, const Matrix& U);

/// F Y for an |E| x p matrix Y (adjoint of incidence_apply).
Matrix incidence_adjoint(const AffinityGraph& g, const Matrix& Y);

}  // namespace clusterpath
