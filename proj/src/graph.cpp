#include "clusterpath/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <string>

#include "clusterpath/errors.hpp"

namespace clusterpath {

namespace {

bool edge_less(const Edge& a, const Edge& b) {
  return a.tail != b.tail ? a.tail < b.tail : a.head < b.head;
}

void require_finite_rows(const Matrix& X) {
  if (X.rows() == 0) throw InvalidArgument("data matrix has no rows");
  if (!X.allFinite()) throw InvalidArgument("data matrix contains non-finite entries");
}

Matrix squared_distances(const Matrix& X) {
  const Eigen::Index n = X.rows();
  Matrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (X.row(i) - X.row(j)).squaredNorm();
    }
  }
  return d;
}

}  // namespace

void SbmParams::validate() const {
  if (n < 2) throw InvalidArgument("SBM requires n >= 2");
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(p_within) || !in_unit(p_between)) {
    throw InvalidArgument("SBM edge probabilities must lie in [0, 1]");
  }
}

AffinityGraph::AffinityGraph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
  if (n < 0) throw InvalidArgument("node count must be nonnegative");
  for (Edge& e : edges_) {
    if (e.tail < 0 || e.head < 0 || e.tail >= n || e.head >= n) {
      throw InvalidArgument("edge endpoint out of range: (" + std::to_string(e.tail) + ", " +
                            std::to_string(e.head) + ")");
    }
    if (e.tail == e.head) throw InvalidArgument("self-loop at node " + std::to_string(e.tail));
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw InvalidArgument("edge weights must be finite and strictly positive");
    }
    if (e.tail > e.head) std::swap(e.tail, e.head);
  }
  std::sort(edges_.begin(), edges_.end(), edge_less);
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i].tail == edges_[i - 1].tail && edges_[i].head == edges_[i - 1].head) {
      throw InvalidArgument("duplicate edge (" + std::to_string(edges_[i].tail) + ", " +
                            std::to_string(edges_[i].head) + ")");
    }
  }
  adjacency_.resize(static_cast<std::size_t>(n));
  for (std::size_t idx = 0; idx < edges_.size(); ++idx) {
    adjacency_[edges_[idx].tail].push_back({edges_[idx].head, idx});
    adjacency_[edges_[idx].head].push_back({edges_[idx].tail, idx});
  }
}

std::optional<std::size_t> AffinityGraph::edge_index(int j, int k) const {
  if (j > k) std::swap(j, k);
  const Edge probe{j, k, 1.0};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), probe, edge_less);
  if (it == edges_.end() || it->tail != j || it->head != k) return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

double AffinityGraph::weight(int j, int k) const {
  auto idx = edge_index(j, k);
  return idx ? edges_[*idx].weight : 0.0;
}

DegreeInfo AffinityGraph::degrees() const {
  DegreeInfo info;
  info.degrees = Vector::Zero(n_);
  for (const Edge& e : edges_) {
    info.degrees[e.tail] += e.weight;
    info.degrees[e.head] += e.weight;
  }
  info.volume = info.degrees.sum();
  return info;
}

double AffinityGraph::max_weight() const {
  double w = 0.0;
  for (const Edge& e : edges_) w = std::max(w, e.weight);
  return w;
}

bool AffinityGraph::is_unweighted() const {
  return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.weight == 1.0; });
}

Matrix AffinityGraph::adjacency() const {
  Matrix phi = Matrix::Zero(n_, n_);
  for (const Edge& e : edges_) phi(e.tail, e.head) = phi(e.head, e.tail) = e.weight;
  return phi;
}

Matrix AffinityGraph::laplacian() const {
  Matrix L = Matrix::Zero(n_, n_);
  for (const Edge& e : edges_) {
    L(e.tail, e.head) -= e.weight;
    L(e.head, e.tail) -= e.weight;
    L(e.tail, e.tail) += e.weight;
    L(e.head, e.head) += e.weight;
  }
  return L;
}

AffinityGraph AffinityGraph::scaled(double c) const {
  if (!(c > 0.0)) throw InvalidArgument("weight scale must be positive");
  std::vector<Edge> out = edges_;
  for (Edge& e : out) e.weight *= c;
  return AffinityGraph(n_, std::move(out));
}

AffinityGraph AffinityGraph::permuted(std::span<const int> permutation) const {
  if (permutation.size() != static_cast<std::size_t>(n_)) {
    throw InvalidArgument("permutation length does not match node count");
  }
  std::vector<bool> seen(n_, false);
  for (int p : permutation) {
    if (p < 0 || p >= n_ || seen[p]) throw InvalidArgument("not a permutation");
    seen[p] = true;
  }
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (const Edge& e : edges_) out.push_back({permutation[e.tail], permutation[e.head], e.weight});
  return AffinityGraph(n_, std::move(out));
}

AffinityGraph knn_graph(const Matrix& X, int k, KnnRule rule) {
  require_finite_rows(X);
  const int n = static_cast<int>(X.rows());
  if (k < 1 || k > n - 1) {
    throw InvalidArgument("k must lie in [1, n-1], got k=" + std::to_string(k));
  }
  const Matrix d = squared_distances(X);
  // selected(i, j): j is among the k nearest neighbors of i
  std::vector<std::vector<bool>> selected(n, std::vector<bool>(n, false));
  std::vector<int> order(n - 1);
  for (int i = 0; i < n; ++i) {
    int pos = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i) order[pos++] = j;
    }
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      return d(i, a) != d(i, b) ? d(i, a) < d(i, b) : a < b;
    });
    for (int m = 0; m < k; ++m) selected[i][order[m]] = true;
  }
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool keep = rule == KnnRule::Union ? (selected[i][j] || selected[j][i])
                                               : (selected[i][j] && selected[j][i]);
      if (keep) edges.push_back({i, j, 1.0});
    }
  }
  return AffinityGraph(n, std::move(edges));
}

AffinityGraph epsilon_graph(const Matrix& X, double radius) {
  require_finite_rows(X);
  if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
  const int n = static_cast<int>(X.rows());
  const double r2 = radius * radius;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((X.row(i) - X.row(j)).squaredNorm() <= r2) edges.push_back({i, j, 1.0});
    }
  }
  return AffinityGraph(n, std::move(edges));
}

AffinityGraph gaussian_weights(const Matrix& X, double tau, const AffinityGraph& base) {
  require_finite_rows(X);
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidArgument("tau must be finite and >= 0");
  if (X.rows() != base.num_nodes()) {
    throw InvalidArgument("data rows do not match graph node count");
  }
  std::vector<Edge> edges(base.edges().begin(), base.edges().end());
  for (Edge& e : edges) {
    e.weight = std::exp(-tau * (X.row(e.tail) - X.row(e.head)).squaredNorm());
    if (!(e.weight > 0.0)) {
      throw InvalidArgument("Gaussian weight underflows to zero; reduce tau");
    }
  }
  return AffinityGraph(base.num_nodes(), std::move(edges));
}

AffinityGraph complete_graph(int n) {
  if (n < 2) throw InvalidArgument("complete graph requires n >= 2");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j, 1.0});
  }
  return AffinityGraph(n, std::move(edges));
}

AffinityGraph sbm_graph(const SbmParams& params, const Labels& labels) {
  params.validate();
  if (labels.size() != static_cast<std::size_t>(params.n)) {
    throw InvalidArgument("label count does not match SBM node count");
  }
  std::map<int, int> sizes;
  for (int l : labels) ++sizes[l];
  for (const auto& [label, size] : sizes) {
    if (size != sizes.begin()->second) {
      throw InvalidArgument("SBM labels must form equally sized blocks");
    }
  }
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Edge> edges;
  for (int i = 0; i < params.n; ++i) {
    for (int j = i + 1; j < params.n; ++j) {
      const double p = labels[i] == labels[j] ? params.p_within : params.p_between;
      if (unif(rng) < p) edges.push_back({i, j, 1.0});
    }
  }
  return AffinityGraph(params.n, std::move(edges));
}

AffinityGraph bridge_oracle_graph(int n, int bridges) {
  if (n < 6 || n % 2 != 0) throw InvalidArgument("bridge oracle graph requires even n >= 6");
  const int half = n / 2;
  if (bridges < 1 || bridges > half) throw InvalidArgument("bridge count must lie in [1, n/2]");
  std::vector<Edge> edges;
  for (int offset : {0, half}) {
    for (int i = 0; i < half; ++i) {
      for (int j = i + 1; j < half; ++j) edges.push_back({offset + i, offset + j, 1.0});
    }
  }
  for (int i = 0; i < bridges; ++i) edges.push_back({i, i + half, 1.0});
  return AffinityGraph(n, std::move(edges));
}

Labels block_labels(int n, int blocks) {
  if (blocks < 1 || n % blocks != 0) {
    throw InvalidArgument("n must be divisible by the block count");
  }
  Labels labels(n);
  const int size = n / blocks;
  for (int i = 0; i < n; ++i) labels[i] = i / size;
  return labels;
}

Labels connected_components(const AffinityGraph& g, const std::vector<bool>& keep) {
  if (keep.size() != g.num_edges()) throw InvalidArgument("edge mask has wrong length");
  const int n = g.num_nodes();
  Labels label(n, -1);
  int next = 0;
  std::queue<int> frontier;
  for (int start = 0; start < n; ++start) {
    if (label[start] >= 0) continue;
    label[start] = next;
    frontier.push(start);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (const auto& nb : g.neighbors(u)) {
        if (keep[nb.edge] && label[nb.node] < 0) {
          label[nb.node] = next;
          frontier.push(nb.node);
        }
      }
    }
    ++next;
  }
  return label;
}

Labels connected_components(const AffinityGraph& g) {
  return connected_components(g, std::vector<bool>(g.num_edges(), true));
}

bool is_connected(const AffinityGraph& g) {
  if (g.num_nodes() == 0) return false;
  const Labels comp = connected_components(g);
  return std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
}

bool is_bipartite(const AffinityGraph& g) {
  const int n = g.num_nodes();
  std::vector<int> color(n, -1);
  std::queue<int> frontier;
  for (int start = 0; start < n; ++start) {
    if (color[start] >= 0) continue;
    color[start] = 0;
    frontier.push(start);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (const auto& nb : g.neighbors(u)) {
        if (color[nb.node] < 0) {
          color[nb.node] = 1 - color[u];
          frontier.push(nb.node);
        } else if (color[nb.node] == color[u]) {
          return false;
        }
      }
    }
  }
  return true;
}

int count_blocks(const Labels& labels) {
  std::vector<int> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  return static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

Matrix incidence_apply(const AffinityGraph& g, const Matrix& U) {
  if (U.rows() != g.num_nodes()) throw InvalidArgument("incidence_apply: row count mismatch");
  Matrix out(static_cast<Eigen::Index>(g.num_edges()), U.cols());
  const auto edges = g.edges();
  for (std::size_t idx = 0; idx < edges.size(); ++idx) {
    const Edge& e = edges[idx];
    out.row(idx) = std::sqrt(e.weight) * (U.row(e.tail) - U.row(e.head));
  }
  return out;
}

Matrix incidence_adjoint(const AffinityGraph& g, const Matrix& Y) {
  if (Y.rows() != static_cast<Eigen::Index>(g.num_edges())) {
    throw InvalidArgument("incidence_adjoint: row count mismatch");
  }
  Matrix out = Matrix::Zero(g.num_nodes(), Y.cols());
  const auto edges = g.edges();
  for (std::size_t idx = 0; idx < edges.size(); ++idx) {
    const Edge& e = edges[idx];
    const double s = std::sqrt(e.weight);
    out.row(e.tail) += s * Y.row(idx);
    out.row(e.head) -= s * Y.row(idx);
  }
  return out;
}

}  // namespace clusterpath
