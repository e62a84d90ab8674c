#include "clusterpath/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clusterpath/errors.hpp"
#include "clusterpath/spectral.hpp"

namespace clusterpath {

namespace {

constexpr int kMaxRhoExponent = 40;

// Hot loops of one ADMM iteration. Node matrices are column-major (n x p),
// edge matrices row-major (m x p). P > 0 fixes the column count at compile time.
struct EdgeLoops {
  Eigen::Index n;
  Eigen::Index p;
  const int* tails;
  const int* heads;
  const double* sw;
  std::size_t m;

  // out += F (rho V - Z)
  template <int P>
  void adjoint_impl(double rho, const double* v, const double* z, double* out) const {
    const Eigen::Index cols = P > 0 ? P : p;
    for (std::size_t e = 0; e < m; ++e) {
      const double s = sw[e];
      double* t = out + tails[e];
      double* h = out + heads[e];
      for (Eigen::Index c = 0; c < cols; ++c) {
        const double d = s * (rho * v[e * cols + c] - z[e * cols + c]);
        t[c * n] += d;
        h[c * n] -= d;
      }
    }
  }

  // V <- group soft-threshold of F^T U + Z / rho; Z <- Z + rho (F^T U - V);
  // dv += F (V - V_prev). Returns ||F^T U - V||^2.
  template <int P>
  double shrink_impl(double threshold, double rho, const double* u, double* v, double* z,
                     double* dv) const {
    const Eigen::Index cols = P > 0 ? P : p;
    constexpr int kBuf = P > 0 ? P : 1;
    double a_fixed[kBuf];
    double w_fixed[kBuf];
    std::vector<double> a_dyn(P > 0 ? 0 : cols);
    std::vector<double> w_dyn(P > 0 ? 0 : cols);
    double* a = P > 0 ? a_fixed : a_dyn.data();
    double* w = P > 0 ? w_fixed : w_dyn.data();
    const double inv_rho = 1.0 / rho;
    double primal_sq = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      const double s = sw[e];
      const Eigen::Index t = tails[e];
      const Eigen::Index h = heads[e];
      double* ve = v + e * cols;
      double* ze = z + e * cols;
      double norm_sq = 0.0;
      for (Eigen::Index c = 0; c < cols; ++c) {
        a[c] = s * (u[t + c * n] - u[h + c * n]);
        w[c] = a[c] + ze[c] * inv_rho;
        norm_sq += w[c] * w[c];
      }
      const double norm = std::sqrt(norm_sq);
      const double keep = norm > threshold ? 1.0 - threshold / norm : 0.0;
      for (Eigen::Index c = 0; c < cols; ++c) {
        const double v_new = keep == 0.0 ? 0.0 : keep * w[c];
        const double res = a[c] - v_new;
        const double step = s * (v_new - ve[c]);
        dv[t + c * n] += step;
        dv[h + c * n] -= step;
        ve[c] = v_new;
        // Z + rho (a - v_new) with Z = rho (w - a).
        ze[c] = rho * (w[c] - v_new);
        primal_sq += res * res;
      }
    }
    return primal_sq;
  }

  void adjoint(double rho, const double* v, const double* z, double* out) const {
    if (p == 1) return adjoint_impl<1>(rho, v, z, out);
    if (p == 2) return adjoint_impl<2>(rho, v, z, out);
    adjoint_impl<0>(rho, v, z, out);
  }

  double shrink(double threshold, double rho, const double* u, double* v, double* z,
                double* dv) const {
    if (p == 1) return shrink_impl<1>(threshold, rho, u, v, z, dv);
    if (p == 2) return shrink_impl<2>(threshold, rho, u, v, z, dv);
    return shrink_impl<0>(threshold, rho, u, v, z, dv);
  }
};


Matrix block_means(const Matrix& U, const Labels& partition, int blocks) {
  Matrix sums = Matrix::Zero(blocks, U.cols());
  Vector counts = Vector::Zero(blocks);
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    sums.row(partition[i]) += U.row(i);
    counts[partition[i]] += 1.0;
  }
  Matrix out(U.rows(), U.cols());
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    out.row(i) = sums.row(partition[i]) / counts[partition[i]];
  }
  return out;
}

}  // namespace

void ClusterProblem::validate() const {
  if (data.rows() != graph.num_nodes()) {
    throw InvalidArgument("data has " + std::to_string(data.rows()) + " rows but graph has " +
                          std::to_string(graph.num_nodes()) + " nodes");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("gamma must be finite and nonnegative");
  }
}

double fusion_penalty(const AffinityGraph& g, const Matrix& U) {
  if (U.rows() != g.num_nodes()) throw InvalidArgument("fusion_penalty: row count mismatch");
  double total = 0.0;
  for (const Edge& e : g.edges()) {
    total += std::sqrt(e.weight) * (U.row(e.tail) - U.row(e.head)).norm();
  }
  return total;
}

double objective(const ClusterProblem& problem, const Matrix& U) {
  problem.validate();
  if (U.rows() != problem.data.rows() || U.cols() != problem.data.cols()) {
    throw InvalidArgument("objective: centroid matrix shape does not match data");
  }
  return problem.gamma * fusion_penalty(problem.graph, U) + 0.5 * (U - problem.data).squaredNorm();
}

Labels extract_clusters(const Matrix& edge_diffs, const AffinityGraph& g) {
  if (edge_diffs.rows() != static_cast<Eigen::Index>(g.num_edges())) {
    throw InvalidArgument("extract_clusters: one difference row per edge expected");
  }
  std::vector<bool> fused(g.num_edges());
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    fused[e] = (edge_diffs.row(static_cast<Eigen::Index>(e)).array() == 0.0).all();
  }
  return connected_components(g, fused);
}

AdmmSolver::AdmmSolver(Matrix data, AffinityGraph graph, SolverOptions options)
    : data_(std::move(data)), graph_(std::move(graph)), options_(options) {
  if (data_.rows() != graph_.num_nodes()) {
    throw InvalidArgument("data rows do not match graph node count");
  }
  if (!data_.allFinite()) throw InvalidArgument("data contains non-finite entries");
  if (!(options_.tol > 0.0) || options_.max_iter < 1 || !(options_.rho > 0.0)) {
    throw InvalidArgument("solver options: tol, max_iter and rho must be positive");
  }
  require_connected(graph_, "solve");
  laplacian_ = graph_.laplacian();
  for (const Edge& e : graph_.edges()) {
    tails_.push_back(e.tail);
    heads_.push_back(e.head);
    sqrt_weights_.push_back(std::sqrt(e.weight));
  }
  edge_scale_ = incidence_apply(graph_, data_).norm();
  node_scale_ = (data_.rowwise() - data_.colwise().mean()).norm();
}

double AdmmSolver::rho_of(int exponent) const { return std::ldexp(options_.rho, exponent); }

const Eigen::LLT<Matrix>& AdmmSolver::factor_for(int exponent) {
  auto it = factors_.find(exponent);
  if (it == factors_.end()) {
    Matrix system = rho_of(exponent) * laplacian_;
    system.diagonal().array() += 1.0;
    it = factors_.emplace(exponent, Eigen::LLT<Matrix>(system)).first;
  }
  return it->second;
}

void AdmmSolver::reset() {
  warm_ = false;
  last_gamma_ = 0.0;
  rho_exponent_ = 0;
}

Solution AdmmSolver::trivial_solution(double gamma) const {
  // U = X is optimal at gamma = 0, and for identical rows at every gamma.
  Solution sol;
  sol.gamma = gamma;
  sol.centroids = data_;
  sol.edge_diffs = incidence_apply(graph_, data_);
  sol.duals = Matrix::Zero(sol.edge_diffs.rows(), data_.cols());
  sol.partition = extract_clusters(sol.edge_diffs, graph_);
  sol.cluster_count = count_blocks(sol.partition);
  sol.objective = gamma * fusion_penalty(graph_, data_);
  sol.rho = rho_of(rho_exponent_);
  return sol;
}

Solution AdmmSolver::finish(double gamma, double primal, double dual, int iterations) const {
  Solution sol;
  sol.gamma = gamma;
  sol.edge_diffs = V_;
  sol.duals = Z_;
  sol.partition = extract_clusters(V_, graph_);
  sol.cluster_count = count_blocks(sol.partition);
  sol.centroids = block_means(U_, sol.partition, sol.cluster_count);
  sol.primal_residual = primal;
  sol.dual_residual = dual;
  sol.kkt_residual = std::max(primal, dual);
  sol.objective =
      gamma * fusion_penalty(graph_, sol.centroids) + 0.5 * (sol.centroids - data_).squaredNorm();
  sol.iterations = iterations;
  sol.rho = rho_of(rho_exponent_);
  return sol;
}

Solution AdmmSolver::solve(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("gamma must be finite and nonnegative");
  }
  const Eigen::Index n = data_.rows();
  const Eigen::Index p = data_.cols();
  const std::size_t m = tails_.size();

  if (gamma == 0.0 || node_scale_ == 0.0) {
    Solution sol = trivial_solution(gamma);
    U_ = sol.centroids;
    V_ = sol.edge_diffs;
    Z_ = sol.duals;
    warm_ = true;
    last_gamma_ = gamma;
    return sol;
  }

  if (!warm_) {
    U_ = data_;
    V_ = incidence_apply(graph_, data_);
    Z_ = Matrix::Zero(static_cast<Eigen::Index>(m), p);
    rho_exponent_ = 0;
  } else if (last_gamma_ > 0.0) {
    // Keep the warm-start dual feasible for the new threshold.
    Z_ *= gamma / last_gamma_;
  } else {
    Z_.setZero();
  }
  warm_ = true;
  last_gamma_ = gamma;

  Matrix rhs(n, p);
  Matrix node_buf(n, p);
  double primal = 0.0;
  double dual = 0.0;
  const EdgeLoops loops{n, p, tails_.data(), heads_.data(), sqrt_weights_.data(), m};

  for (int iter = 1; iter <= options_.max_iter; ++iter) {
    const double rho = rho_of(rho_exponent_);
    const Eigen::LLT<Matrix>& llt = factor_for(rho_exponent_);

    // U-update: (I + rho L) U = X + F (rho V - Z)
    rhs = data_;
    loops.adjoint(rho, V_.data(), Z_.data(), rhs.data());
    U_ = llt.solve(rhs);

    node_buf.setZero();
    const double primal_sq =
        loops.shrink(gamma / rho, rho, U_.data(), V_.data(), Z_.data(), node_buf.data());

    primal = std::sqrt(primal_sq) / edge_scale_;
    dual = rho * node_buf.norm() / node_scale_;

    if (primal <= options_.tol && dual <= options_.tol) {
      return finish(gamma, primal, dual, iter);
    }

    if (options_.adapt_rho && iter % options_.adapt_interval == 0) {
      if (primal > options_.balance_ratio * dual && rho_exponent_ < kMaxRhoExponent) {
        ++rho_exponent_;
      } else if (dual > options_.balance_ratio * primal && rho_exponent_ > -kMaxRhoExponent) {
        --rho_exponent_;
      }
    }
  }
  throw SolverError("ADMM did not converge within " + std::to_string(options_.max_iter) +
                        " iterations at gamma=" + std::to_string(gamma),
                    gamma, primal, dual, options_.max_iter);
}

Solution solve(const ClusterProblem& problem, const SolverOptions& options) {
  problem.validate();
  AdmmSolver solver(problem.data, problem.graph, options);
  return solver.solve(problem.gamma);
}

double default_gamma0(const Matrix& X, const AffinityGraph& g) {
  // Fusion of the whole sample forces gamma * sum_j sqrt(Phi_ij) >= ||X_i - mean|| for every i.
  if (X.rows() != g.num_nodes()) throw InvalidArgument("data rows do not match graph node count");
  const Eigen::RowVectorXd mean = X.colwise().mean();
  Vector strength = Vector::Zero(g.num_nodes());
  for (const Edge& e : g.edges()) {
    strength[e.tail] += std::sqrt(e.weight);
    strength[e.head] += std::sqrt(e.weight);
  }
  double lower = 0.0;
  for (int i = 0; i < g.num_nodes(); ++i) {
    if (strength[i] > 0.0) lower = std::max(lower, (X.row(i) - mean).norm() / strength[i]);
  }
  return lower > 0.0 ? lower : 1.0;
}

GammaSearchResult gamma_search_solution(AdmmSolver& solver, const GammaSearchOptions& options) {
  double gamma0 = options.gamma0;
  if (gamma0 == 0.0) gamma0 = default_gamma0(solver.data(), solver.graph());
  if (!(gamma0 > 0.0)) throw InvalidArgument("gamma_search: gamma0 must be positive");
  GammaSearchResult best;
  auto fused = [&](double gamma) {
    Solution sol = solver.solve(gamma);
    if (sol.cluster_count != 1) return false;
    best.gamma = gamma;
    best.solution = std::move(sol);
    return true;
  };

  solver.reset();
  if (fused(gamma0)) return best;
  double lo = gamma0;
  double hi = 0.0;
  for (int i = 0; i < options.max_doublings; ++i) {
    const double candidate = 2.0 * lo;
    if (fused(candidate)) {
      hi = candidate;
      break;
    }
    lo = candidate;
  }
  if (hi == 0.0) {
    throw SolverError("gamma_search: no single-cluster solution after " +
                          std::to_string(options.max_doublings) + " doublings",
                      lo, 0.0, 0.0, 0);
  }
  for (int i = 0; i < options.bisection_steps; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (fused(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return best;
}

double gamma_search(AdmmSolver& solver, const GammaSearchOptions& options) {
  return gamma_search_solution(solver, options).gamma;
}

double gamma_search(const Matrix& X, const AffinityGraph& g, const SolverOptions& solver_options,
                    const GammaSearchOptions& options) {
  AdmmSolver solver(X, g, solver_options);
  return gamma_search(solver, options);
}

std::vector<double> geometric_grid(double gamma_max, int points, double min_ratio) {
  if (!(gamma_max > 0.0)) throw InvalidArgument("geometric grid needs gamma_max > 0");
  if (points < 1) throw InvalidArgument("geometric grid needs at least one point");
  if (!(min_ratio > 0.0) || min_ratio > 1.0) throw InvalidArgument("min_ratio must lie in (0, 1]");
  std::vector<double> grid(points);
  if (points == 1) {
    grid[0] = gamma_max;
    return grid;
  }
  const double log_lo = std::log(gamma_max * min_ratio);
  const double log_hi = std::log(gamma_max);
  for (int i = 0; i < points; ++i) {
    grid[i] = std::exp(log_lo + (log_hi - log_lo) * i / (points - 1));
  }
  grid.back() = gamma_max;
  return grid;
}

PathSolution solve_path(AdmmSolver& solver, const GridSpec& spec) {
  PathSolution path;
  std::vector<double> grid = spec.gammas;
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw InvalidArgument("gamma grid must be ascending");
  }
  if (std::any_of(grid.begin(), grid.end(), [](double g) { return !(g >= 0.0); })) {
    throw InvalidArgument("gamma grid values must be nonnegative");
  }
  std::optional<GammaSearchResult> search;
  if (spec.auto_gamma_max) {
    search = gamma_search_solution(solver, spec.search);
    const double gamma_max = search->gamma;
    path.gamma_max = gamma_max;
    if (grid.empty()) {
      grid = geometric_grid(gamma_max, spec.num_points, spec.min_ratio);
    } else if (gamma_max > grid.back()) {
      grid.push_back(gamma_max);
    }
  }
  if (grid.empty()) throw InvalidArgument("empty gamma grid");

  solver.reset();
  path.points.reserve(grid.size());
  for (double gamma : grid) {
    // At gamma_max the fusion is marginal, so keep the solution that
    // certified it instead of re-solving from a different start.
    Solution sol = search && gamma == search->gamma ? search->solution : solver.solve(gamma);
    PathPoint point;
    point.gamma = gamma;
    point.centroids = std::move(sol.centroids);
    point.partition = std::move(sol.partition);
    point.cluster_count = sol.cluster_count;
    point.objective = sol.objective;
    point.kkt_residual = sol.kkt_residual;
    point.iterations = sol.iterations;
    if (!path.fused_at && point.cluster_count == 1) path.fused_at = gamma;
    path.points.push_back(std::move(point));
  }
  return path;
}

PathSolution solve_path(const Matrix& X, const AffinityGraph& g, const GridSpec& grid,
                        const SolverOptions& options) {
  AdmmSolver solver(X, g, options);
  return solve_path(solver, grid);
}

}  // namespace clusterpath
