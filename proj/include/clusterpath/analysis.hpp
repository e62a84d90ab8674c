#pragma once

#include <string>
#include <vector>

#include "clusterpath/graph.hpp"
#include "clusterpath/spectral.hpp"

namespace clusterpath {

/// Mixture of point masses plus noise: row i of X is c_{label_i} + E_i.
struct MixtureSpec {
  Matrix centers;  // m x p
  Vector probs;    // membership probabilities, sums to one
  double sigma = 1.0;

  void validate() const;
  /// max_{a,b} ||c_a - c_b||_2
  double diameter() const;
};

/// Quantities entering the finite-sample bounds for one (graph, U, E) triple.
struct DiagnosticsReport {
  double oracle_term = 0.0;
  double fdagger_e_max = 0.0;
  std::size_t between_edges = 0;
  double theorem_rhs = 0.0;
  double crude_rhs = 0.0;
  double gamma_threshold = 0.0;  // sqrt(p) ||F^dagger E||_max
  double penalty_sum = 0.0;      // sum sqrt(Phi_ij) ||U_i - U_j||_2
};

/// ||F^dagger E||_max
double fdagger_e_max(const AffinityGraph& g, const SpectralBundle& bundle, const Matrix& E);

/// (1/n) ||F^dagger E||_max * sum_{(i,j)} sqrt(Phi_ij) ||U_i - U_j||_2
double oracle_term(const AffinityGraph& g, const SpectralBundle& bundle, const Matrix& U_true,
                   const Matrix& E);

/// c1 sigma^2 (1/n + log(np)/(np)) + (2 gamma / (np)) * penalty_sum
double theorem_bound_rhs(double sigma, int n, int p, double gamma, double penalty_sum,
                         double c1 = 1.0);

/// Complete unweighted graph specialization at gamma = 4 sigma sqrt(p log(np)) / n:
/// c1 sigma^2 (1/n + log(np)/(np)) + 8 sigma sqrt(log(np)/p) diam.
double complete_graph_bound_rhs(double sigma, int n, int p, double diameter, double c1 = 1.0);
double complete_graph_gamma(double sigma, int n, int p);

/// 3 sigma |I| sqrt(log(np)/n) diam
double crude_bound_rhs(double sigma, int n, int p, std::size_t between_count, double diameter);

struct BetweenEdges {
  std::size_t count = 0;
  std::vector<Edge> edges;
};

BetweenEdges between_cluster_edges(const AffinityGraph& g, const Labels& labels);

struct DiagnosticsInputs {
  double sigma = 1.0;
  double diameter = 0.0;
  double c1 = 1.0;
};

/// Evaluates every report field; the theorem bound uses gamma = gamma_threshold.
DiagnosticsReport diagnose(const AffinityGraph& g, const SpectralBundle& bundle,
                           const Matrix& U_true, const Matrix& E, const Labels& labels,
                           const DiagnosticsInputs& inputs);

/// Adjusted Rand index. Returns 1 when both partitions are trivial in the
/// same way and the chance-corrected denominator vanishes.
double ari(const Labels& a, const Labels& b);

/// ||U_true - U_hat||_F^2 / (np)
double mse(const Matrix& U_true, const Matrix& U_hat);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Median of a non-empty sample.
double median(std::vector<double> values);

}  // namespace clusterpath
