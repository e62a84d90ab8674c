#pragma once

#include <optional>

#include "clusterpath/graph.hpp"

namespace clusterpath {

enum class PinvMethod {
  RankCompletion,  // (L + J/n)^{-1} - J/n, exact for connected graphs
  Eigen,           // symmetric eigendecomposition, small eigenvalues dropped
};

/// Laplacian, its Moore-Penrose pseudoinverse, the graph volume and the
/// spectral gap 1 - lambda_2 of the walk matrix D^{-1} Phi.
struct SpectralBundle {
  Matrix laplacian;
  Matrix laplacian_pinv;
  double volume = 0.0;
  double spectral_gap = 0.0;
};

/// Expected first-passage times H (H_ii = 0) and commute times C = H + H^T of
/// the natural random walk.
struct WalkTimes {
  Matrix hitting;
  Matrix commute;
};

/// Throws InvalidGraph unless g is connected.
void require_connected(const AffinityGraph& g, const char* context);

Matrix laplacian_pinv(const AffinityGraph& g, PinvMethod method = PinvMethod::RankCompletion);

SpectralBundle make_spectral_bundle(const AffinityGraph& g,
                                    PinvMethod method = PinvMethod::RankCompletion);

/// Row e(tail, head) of F^dagger for the edge oriented tail -> head:
/// sqrt(Phi) (L^dagger_{., tail} - L^dagger_{., head}).
Vector fdagger_row(const AffinityGraph& g, const SpectralBundle& bundle, int tail, int head);

/// Full |E| x n pseudoinverse F^dagger = F^T L^dagger.
Matrix fdagger_matrix(const AffinityGraph& g, const SpectralBundle& bundle);

/// F^dagger Y computed as F^T (L^dagger Y) without forming F^dagger.
Matrix fdagger_apply(const AffinityGraph& g, const SpectralBundle& bundle, const Matrix& Y);

/// ||F^dagger_{e .}||_2 for every edge, in edge order.
Vector fdagger_row_norms(const AffinityGraph& g, const SpectralBundle& bundle);

WalkTimes hitting_times(const AffinityGraph& g);

/// (e_j - e_k)^T L^dagger (e_j - e_k).
double effective_resistance(const SpectralBundle& bundle, int j, int k);

/// 1 - lambda_2 with lambda_2 the second-largest (signed) eigenvalue of D^{-1} Phi.
double spectral_gap(const AffinityGraph& g);

/// Eigenvalues of D^{-1} Phi in descending order.
Vector walk_spectrum(const AffinityGraph& g);

/// Hitting-time concentration check: for all i != j,
/// |H_ij / vol - 1 / D_jj| <= 2 (1 / (1 - lambda_2) + 1) max(Phi) / min(D)^2.
struct HittingConcentrationReport {
  double max_deviation = 0.0;  // max over i != j of the left-hand side
  double bound = 0.0;          // the right-hand side
  double lambda2 = 0.0;
  bool violated = false;
};

/// Throws BipartiteGraph on bipartite input.
HittingConcentrationReport luxburg_bound_check(const AffinityGraph& g, const WalkTimes& times,
                                               const SpectralBundle& bundle);

/// Entrywise F^dagger bounds in terms of inverse degrees and the maximal
/// hitting-time deviation. The endpoint bound is applied to both endpoints,
/// the head through the reversed orientation.
struct EntryBoundReport {
  double max_deviation = 0.0;  // max_{l != m} |H_lm / vol - 1 / D_mm|
  double min_slack_interior = 0.0;
  double min_slack_endpoint = 0.0;
  std::size_t checked = 0;
  bool violated = false;
};

EntryBoundReport fdagger_entry_bounds_check(const AffinityGraph& g, const SpectralBundle& bundle,
                                            const WalkTimes& times);

/// Closed forms of ||L^dagger_{.j} - L^dagger_{.k}||^2 on bridge_oracle_graph(n, k)
/// for its four edge classes. Classes that do not occur for (n, k) are empty.
struct BridgeOracleNorms {
  std::optional<double> unbridged_pair;  // clique edge, neither end bridged; needs k <= n/2 - 2
  std::optional<double> mixed_pair;      // clique edge, exactly one end bridged; needs k < n/2
  std::optional<double> bridged_pair;    // clique edge, both ends bridged; needs k >= 2
  double bridge = 0.0;                   // edge between the cliques
};

BridgeOracleNorms bridge_oracle_closed_form(int n, int bridges);

enum class BridgeEdgeClass { UnbridgedPair, MixedPair, BridgedPair, Bridge };

BridgeEdgeClass classify_bridge_oracle_edge(int n, int bridges, const Edge& e);

}  // namespace clusterpath
