#include "clusterpath/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "clusterpath/errors.hpp"

namespace clusterpath {

namespace {

// Entry checks compare quantities of order 1/n; this absorbs rounding only.
constexpr double kBoundSlackTolerance = 1e-12;

}  // namespace

void require_connected(const AffinityGraph& g, const char* context) {
  if (!is_connected(g)) {
    throw InvalidGraph(std::string(context) + ": affinity graph is not connected");
  }
}

Matrix laplacian_pinv(const AffinityGraph& g, PinvMethod method) {
  require_connected(g, "laplacian_pinv");
  const int n = g.num_nodes();
  const Matrix L = g.laplacian();
  Matrix pinv;
  if (method == PinvMethod::RankCompletion) {
    const Matrix J = Matrix::Constant(n, n, 1.0 / n);
    Eigen::LLT<Matrix> llt(L + J);
    if (llt.info() != Eigen::Success) {
      throw InvalidGraph("laplacian_pinv: L + J/n is not positive definite");
    }
    pinv = llt.solve(Matrix::Identity(n, n)) - J;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(L);
    const Vector& values = eig.eigenvalues();
    const double cutoff = 1e-10 * std::max(1.0, values.cwiseAbs().maxCoeff());
    pinv = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      if (values[i] > cutoff) {
        pinv.noalias() += (1.0 / values[i]) * eig.eigenvectors().col(i) *
                          eig.eigenvectors().col(i).transpose();
      }
    }
  }
  return 0.5 * (pinv + pinv.transpose());
}

SpectralBundle make_spectral_bundle(const AffinityGraph& g, PinvMethod method) {
  SpectralBundle bundle;
  bundle.laplacian = g.laplacian();
  bundle.laplacian_pinv = laplacian_pinv(g, method);
  bundle.volume = g.degrees().volume;
  bundle.spectral_gap = spectral_gap(g);
  return bundle;
}

Vector fdagger_row(const AffinityGraph& g, const SpectralBundle& bundle, int tail, int head) {
  if (!g.has_edge(tail, head)) {
    throw InvalidGraph("fdagger_row: no edge (" + std::to_string(tail) + ", " +
                       std::to_string(head) + ")");
  }
  const double s = std::sqrt(g.weight(tail, head));
  return s * (bundle.laplacian_pinv.col(tail) - bundle.laplacian_pinv.col(head));
}

Matrix fdagger_matrix(const AffinityGraph& g, const SpectralBundle& bundle) {
  require_connected(g, "fdagger_matrix");
  // L^dagger is symmetric, so F^T L^dagger has rows sqrt(w)(L^dagger_tail - L^dagger_head).
  return incidence_apply(g, bundle.laplacian_pinv);
}

Matrix fdagger_apply(const AffinityGraph& g, const SpectralBundle& bundle, const Matrix& Y) {
  if (Y.rows() != g.num_nodes()) throw InvalidArgument("fdagger_apply: row count mismatch");
  return incidence_apply(g, bundle.laplacian_pinv * Y);
}

Vector fdagger_row_norms(const AffinityGraph& g, const SpectralBundle& bundle) {
  return fdagger_matrix(g, bundle).rowwise().norm();
}

WalkTimes hitting_times(const AffinityGraph& g) {
  require_connected(g, "hitting_times");
  const int n = g.num_nodes();
  const Matrix L = g.laplacian();
  const Vector d = g.degrees().degrees;
  WalkTimes times;
  times.hitting = Matrix::Zero(n, n);
  if (n == 1) {
    times.commute = times.hitting;
    return times;
  }
  // For target j: (D - Phi) restricted to V \ {j} times h equals the degrees,
  // which is (I - P) h = 1 scaled row-wise by D.
  std::vector<int> keep(n - 1);
  Matrix reduced(n - 1, n - 1);
  Vector rhs(n - 1);
  for (int target = 0; target < n; ++target) {
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      if (i != target) keep[pos++] = i;
    }
    for (int a = 0; a < n - 1; ++a) {
      rhs[a] = d[keep[a]];
      for (int b = 0; b < n - 1; ++b) reduced(a, b) = L(keep[a], keep[b]);
    }
    Eigen::LLT<Matrix> llt(reduced);
    if (llt.info() != Eigen::Success) {
      throw InvalidGraph("hitting_times: reduced Laplacian is singular");
    }
    const Vector h = llt.solve(rhs);
    for (int a = 0; a < n - 1; ++a) times.hitting(keep[a], target) = h[a];
  }
  times.commute = times.hitting + times.hitting.transpose();
  return times;
}

double effective_resistance(const SpectralBundle& bundle, int j, int k) {
  const Eigen::Index n = bundle.laplacian_pinv.rows();
  if (j < 0 || k < 0 || j >= n || k >= n) throw InvalidArgument("node index out of range");
  if (j == k) throw InvalidArgument("effective_resistance requires distinct nodes");
  const Matrix& P = bundle.laplacian_pinv;
  return std::max(0.0, P(j, j) + P(k, k) - 2.0 * P(j, k));
}

Vector walk_spectrum(const AffinityGraph& g) {
  const int n = g.num_nodes();
  const Vector d = g.degrees().degrees;
  for (int i = 0; i < n; ++i) {
    if (!(d[i] > 0.0)) throw InvalidGraph("node " + std::to_string(i) + " has zero degree");
  }
  const Vector inv_sqrt = d.cwiseSqrt().cwiseInverse();
  const Matrix S = inv_sqrt.asDiagonal() * g.adjacency() * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().reverse();
}

double spectral_gap(const AffinityGraph& g) {
  if (g.num_nodes() < 2) throw InvalidGraph("spectral_gap requires at least two nodes");
  return 1.0 - walk_spectrum(g)[1];
}

namespace {

void require_not_bipartite(const AffinityGraph& g, const char* context) {
  if (is_bipartite(g)) {
    throw BipartiteGraph(std::string(context) +
                         ": hitting-time concentration requires a non-bipartite graph");
  }
}

double max_hitting_deviation(const WalkTimes& times, const Vector& d, double volume) {
  const Eigen::Index n = d.size();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) worst = std::max(worst, std::abs(times.hitting(i, j) / volume - 1.0 / d[j]));
    }
  }
  return worst;
}

}  // namespace

HittingConcentrationReport luxburg_bound_check(const AffinityGraph& g, const WalkTimes& times,
                                               const SpectralBundle& bundle) {
  require_connected(g, "luxburg_bound_check");
  require_not_bipartite(g, "luxburg_bound_check");
  const Vector d = g.degrees().degrees;
  HittingConcentrationReport report;
  report.lambda2 = 1.0 - bundle.spectral_gap;
  report.max_deviation = max_hitting_deviation(times, d, bundle.volume);
  const double dmin = d.minCoeff();
  report.bound = 2.0 * (1.0 / bundle.spectral_gap + 1.0) * g.max_weight() / (dmin * dmin);
  report.violated = report.max_deviation > report.bound * (1.0 + kBoundSlackTolerance);
  return report;
}

EntryBoundReport fdagger_entry_bounds_check(const AffinityGraph& g, const SpectralBundle& bundle,
                                            const WalkTimes& times) {
  require_connected(g, "fdagger_entry_bounds_check");
  require_not_bipartite(g, "fdagger_entry_bounds_check");
  const int n = g.num_nodes();
  const Vector d = g.degrees().degrees;
  EntryBoundReport report;
  report.max_deviation = max_hitting_deviation(times, d, bundle.volume);
  report.min_slack_interior = std::numeric_limits<double>::infinity();
  report.min_slack_endpoint = std::numeric_limits<double>::infinity();
  const double eta2 = 2.0 * report.max_deviation;
  const Matrix fdag = fdagger_matrix(g, bundle);
  const auto edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const int j = edges[e].tail;
    const int k = edges[e].head;
    const double s = std::sqrt(edges[e].weight);
    const double interior = s * (std::abs(1.0 / d[k] - 1.0 / d[j]) / n + eta2);
    const double at_tail = s * (1.0 / d[j] + 1.0 / (n * d[k]) + eta2);
    const double at_head = s * (1.0 / d[k] + 1.0 / (n * d[j]) + eta2);
    for (int i = 0; i < n; ++i) {
      const double value = std::abs(fdag(e, i));
      if (i == j || i == k) {
        const double slack = (i == j ? at_tail : at_head) - value;
        report.min_slack_endpoint = std::min(report.min_slack_endpoint, slack);
      } else {
        report.min_slack_interior = std::min(report.min_slack_interior, interior - value);
      }
      ++report.checked;
    }
  }
  report.violated = std::min(report.min_slack_interior, report.min_slack_endpoint) <
                    -kBoundSlackTolerance;
  return report;
}

BridgeOracleNorms bridge_oracle_closed_form(int n, int bridges) {
  if (n < 6 || n % 2 != 0) throw InvalidArgument("bridge oracle graph requires even n >= 6");
  if (bridges < 1 || bridges > n / 2) throw InvalidArgument("bridge count must lie in [1, n/2]");
  const double nn = n;
  const double k = bridges;
  const double n4 = (nn + 4.0) * (nn + 4.0);
  BridgeOracleNorms out;
  if (bridges < n / 2) {
    out.mixed_pair = (16.0 * k * (nn + 2.0) + nn * n4 + 8.0 * k * k * (nn * nn + 6.0 * nn + 12.0)) /
                     (k * k * nn * nn * n4);
  }
  out.bridge = (-32.0 * k + 32.0 * k * k + nn * n4) / (4.0 * k * k * n4);
  if (bridges >= 2) out.bridged_pair = 8.0 * (nn * nn + 4.0 * nn + 8.0) / (nn * nn * n4);
  if (bridges <= n / 2 - 2) out.unbridged_pair = 8.0 / (nn * nn);
  return out;
}

BridgeEdgeClass classify_bridge_oracle_edge(int n, int bridges, const Edge& e) {
  const int half = n / 2;
  const bool same_side = (e.tail < half) == (e.head < half);
  if (!same_side) return BridgeEdgeClass::Bridge;
  const int bridged = (e.tail % half < bridges) + (e.head % half < bridges);
  switch (bridged) {
    case 0:
      return BridgeEdgeClass::UnbridgedPair;
    case 1:
      return BridgeEdgeClass::MixedPair;
    default:
      return BridgeEdgeClass::BridgedPair;
  }
}

}  // namespace clusterpath
