#pragma once

#include <map>
#include <optional>
#include <vector>

#include "clusterpath/graph.hpp"

namespace clusterpath {

/// Clusterpath objective
///   gamma * sum_{(i,j) in E} sqrt(Phi_ij) ||U_i - U_j||_2 + 1/2 ||U - X||_F^2.
struct ClusterProblem {
  Matrix data;
  AffinityGraph graph;
  double gamma = 0.0;

  void validate() const;
};

struct SolverOptions {
  double tol = 1e-6;    // on residuals relative to ||F^T X|| and ||X - mean(X)||
  int max_iter = 100000;
  double rho = 1.0;
  bool adapt_rho = true;
  double balance_ratio = 10.0;  // rho doubles/halves when one residual dominates by this
  int adapt_interval = 10;
};

/// Converged ADMM state for one gamma.
struct Solution {
  double gamma = 0.0;
  Matrix centroids;   // U_hat; rows of each fused block are averaged
  Matrix edge_diffs;  // V, one row per edge; exact zeros mark fusions
  Matrix duals;       // Z with ||Z_e|| <= gamma, Z_e = gamma V_e / ||V_e|| off fusions
  Labels partition;
  int cluster_count = 0;
  double primal_residual = 0.0;  // ||F^T U - V|| / ||F^T X||
  double dual_residual = 0.0;    // ||rho F (V - V_prev)|| / ||X - mean(X)||
  double kkt_residual = 0.0;     // max of the two
  double objective = 0.0;
  int iterations = 0;
  double rho = 0.0;
};

/// sum_{(i,j) in E} sqrt(Phi_ij) ||U_i - U_j||_2
double fusion_penalty(const AffinityGraph& g, const Matrix& U);

double objective(const ClusterProblem& problem, const Matrix& U);

/// Components of the subgraph formed by edges whose difference row is exactly zero.
Labels extract_clusters(const Matrix& edge_diffs, const AffinityGraph& g);

/// ADMM on the split V_e = sqrt(Phi_jk)(U_j - U_k). Holds X, the graph and a
/// cache of Cholesky factors of I + rho L; successive solve() calls warm-start
/// from the previous solution.
class AdmmSolver {
 public:
  AdmmSolver(Matrix data, AffinityGraph graph, SolverOptions options = {});

  Solution solve(double gamma);
  /// Drops the warm-start state (cached factorizations are kept).
  void reset();

  const Matrix& data() const { return data_; }
  const AffinityGraph& graph() const { return graph_; }
  const SolverOptions& options() const { return options_; }

 private:
  const Eigen::LLT<Matrix>& factor_for(int rho_exponent);
  double rho_of(int exponent) const;
  Solution trivial_solution(double gamma) const;
  Solution finish(double gamma, double primal, double dual, int iterations) const;

  Matrix data_;
  AffinityGraph graph_;
  SolverOptions options_;
  Matrix laplacian_;
  std::vector<int> tails_;
  std::vector<int> heads_;
  std::vector<double> sqrt_weights_;
  double edge_scale_ = 0.0;  // ||F^T X||_F
  double node_scale_ = 0.0;  // ||X - mean(X)||_F

  std::map<int, Eigen::LLT<Matrix>> factors_;
  bool warm_ = false;
  double last_gamma_ = 0.0;
  int rho_exponent_ = 0;
  // Edge-indexed iterates are row-major so each edge's p entries are contiguous.
  using EdgeMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Matrix U_;
  EdgeMatrix V_;
  EdgeMatrix Z_;
};

/// Cold-started solve.
Solution solve(const ClusterProblem& problem, const SolverOptions& options = {});

struct GammaSearchOptions {
  double gamma0 = 0.0;  // 0 selects max_i ||X_i - mean|| / sum_j sqrt(Phi_ij), or 1 if that vanishes
  int max_doublings = 60;
  int bisection_steps = 10;
};

struct GammaSearchResult {
  double gamma = 0.0;
  Solution solution;  // the single-block solution found at gamma
};

/// Smallest tested gamma (doubling from gamma0, then bisection) at which the
/// partition has a single block.
GammaSearchResult gamma_search_solution(AdmmSolver& solver, const GammaSearchOptions& options = {});
double gamma_search(AdmmSolver& solver, const GammaSearchOptions& options = {});
double gamma_search(const Matrix& X, const AffinityGraph& g, const SolverOptions& solver_options = {},
                    const GammaSearchOptions& options = {});

/// Automatic starting point used by gamma_search when gamma0 == 0.
double default_gamma0(const Matrix& X, const AffinityGraph& g);

struct GridSpec {
  std::vector<double> gammas;   // explicit ascending grid; may be empty when auto_gamma_max
  bool auto_gamma_max = false;  // search gamma_max; geometric grid if gammas is empty, else appended
  int num_points = 40;
  double min_ratio = 1e-3;      // geometric grid spans [gamma_max * min_ratio, gamma_max]
  GammaSearchOptions search;
};

/// Ascending geometric grid of `points` values ending at gamma_max.
std::vector<double> geometric_grid(double gamma_max, int points, double min_ratio);

struct PathPoint {
  double gamma = 0.0;
  Matrix centroids;
  Labels partition;
  int cluster_count = 0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct PathSolution {
  std::vector<PathPoint> points;
  std::optional<double> fused_at;   // first grid gamma with a single cluster
  std::optional<double> gamma_max;  // gamma_search result when requested
};

PathSolution solve_path(AdmmSolver& solver, const GridSpec& grid);
PathSolution solve_path(const Matrix& X, const AffinityGraph& g, const GridSpec& grid,
                        const SolverOptions& options = {});

}  // namespace clusterpath
