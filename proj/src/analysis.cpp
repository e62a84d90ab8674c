#include "clusterpath/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "clusterpath/errors.hpp"
#include "clusterpath/solver.hpp"

namespace clusterpath {

namespace {

void require_dims(int n, int p) {
  if (n <= 0 || p <= 0) throw InvalidArgument("n and p must be positive");
}

void require_nonnegative(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw InvalidArgument(std::string(name) + " must be finite and nonnegative");
  }
}

double noise_term(double sigma, int n, int p, double c1) {
  const double np = static_cast<double>(n) * p;
  return c1 * sigma * sigma * (1.0 / n + std::log(np) / np);
}

double pairs(double count) { return 0.5 * count * (count - 1.0); }

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

void MixtureSpec::validate() const {
  if (centers.rows() < 1 || centers.cols() < 1) throw InvalidArgument("mixture needs centers");
  if (probs.size() != centers.rows()) {
    throw InvalidArgument("one membership probability per center expected");
  }
  if ((probs.array() < 0.0).any() || !probs.allFinite()) {
    throw InvalidArgument("membership probabilities must be nonnegative");
  }
  if (std::abs(probs.sum() - 1.0) > 1e-9) {
    throw InvalidArgument("membership probabilities must sum to one");
  }
  require_nonnegative(sigma, "sigma");
}

double MixtureSpec::diameter() const {
  double diam = 0.0;
  for (Eigen::Index a = 0; a < centers.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < centers.rows(); ++b) {
      diam = std::max(diam, (centers.row(a) - centers.row(b)).norm());
    }
  }
  return diam;
}

double fdagger_e_max(const AffinityGraph& g, const SpectralBundle& bundle, const Matrix& E) {
  require_connected(g, "fdagger_e_max");
  if (E.rows() != g.num_nodes()) throw InvalidArgument("noise rows do not match node count");
  const Matrix product = fdagger_apply(g, bundle, E);
  return product.size() == 0 ? 0.0 : product.cwiseAbs().maxCoeff();
}

double oracle_term(const AffinityGraph& g, const SpectralBundle& bundle, const Matrix& U_true,
                   const Matrix& E) {
  if (U_true.rows() != E.rows() || U_true.cols() != E.cols()) {
    throw InvalidArgument("oracle_term: U and E shapes differ");
  }
  const double penalty = fusion_penalty(g, U_true);
  if (penalty == 0.0) {
    require_connected(g, "oracle_term");
    return 0.0;
  }
  return fdagger_e_max(g, bundle, E) * penalty / g.num_nodes();
}

double theorem_bound_rhs(double sigma, int n, int p, double gamma, double penalty_sum, double c1) {
  require_dims(n, p);
  require_nonnegative(sigma, "sigma");
  require_nonnegative(gamma, "gamma");
  require_nonnegative(penalty_sum, "penalty_sum");
  const double np = static_cast<double>(n) * p;
  return noise_term(sigma, n, p, c1) + 2.0 * gamma / np * penalty_sum;
}

double complete_graph_gamma(double sigma, int n, int p) {
  require_dims(n, p);
  require_nonnegative(sigma, "sigma");
  return 4.0 * sigma * std::sqrt(p * std::log(static_cast<double>(n) * p)) / n;
}

double complete_graph_bound_rhs(double sigma, int n, int p, double diameter, double c1) {
  require_dims(n, p);
  require_nonnegative(sigma, "sigma");
  require_nonnegative(diameter, "diameter");
  const double np = static_cast<double>(n) * p;
  return noise_term(sigma, n, p, c1) + 8.0 * sigma * std::sqrt(std::log(np) / p) * diameter;
}

double crude_bound_rhs(double sigma, int n, int p, std::size_t between_count, double diameter) {
  require_dims(n, p);
  require_nonnegative(sigma, "sigma");
  require_nonnegative(diameter, "diameter");
  const double np = static_cast<double>(n) * p;
  return 3.0 * sigma * static_cast<double>(between_count) * std::sqrt(std::log(np) / n) * diameter;
}

BetweenEdges between_cluster_edges(const AffinityGraph& g, const Labels& labels) {
  if (labels.size() != static_cast<std::size_t>(g.num_nodes())) {
    throw InvalidArgument("one label per node expected");
  }
  BetweenEdges out;
  for (const Edge& e : g.edges()) {
    if (labels[e.tail] != labels[e.head]) out.edges.push_back(e);
  }
  out.count = out.edges.size();
  return out;
}

DiagnosticsReport diagnose(const AffinityGraph& g, const SpectralBundle& bundle,
                           const Matrix& U_true, const Matrix& E, const Labels& labels,
                           const DiagnosticsInputs& inputs) {
  const int n = g.num_nodes();
  const int p = static_cast<int>(E.cols());
  DiagnosticsReport report;
  report.fdagger_e_max = fdagger_e_max(g, bundle, E);
  report.penalty_sum = fusion_penalty(g, U_true);
  report.oracle_term = report.fdagger_e_max * report.penalty_sum / n;
  report.between_edges = between_cluster_edges(g, labels).count;
  report.gamma_threshold = std::sqrt(static_cast<double>(p)) * report.fdagger_e_max;
  report.theorem_rhs =
      theorem_bound_rhs(inputs.sigma, n, p, report.gamma_threshold, report.penalty_sum, inputs.c1);
  report.crude_rhs = crude_bound_rhs(inputs.sigma, n, p, report.between_edges, inputs.diameter);
  return report;
}

double ari(const Labels& a, const Labels& b) {
  if (a.size() != b.size()) throw InvalidArgument("ari: labelings differ in length");
  if (a.empty()) throw InvalidArgument("ari: empty labelings");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0;
  for (const auto& [key, count] : joint) index += pairs(count);
  double sum_rows = 0.0;
  for (const auto& [key, count] : rows) sum_rows += pairs(count);
  double sum_cols = 0.0;
  for (const auto& [key, count] : cols) sum_cols += pairs(count);
  const double expected = sum_rows * sum_cols / pairs(static_cast<double>(a.size()));
  const double maximum = 0.5 * (sum_rows + sum_cols);
  const double denom = maximum - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

double mse(const Matrix& U_true, const Matrix& U_hat) {
  if (U_true.rows() != U_hat.rows() || U_true.cols() != U_hat.cols()) {
    throw InvalidArgument("mse: shapes differ");
  }
  if (U_true.size() == 0) throw InvalidArgument("mse: empty matrices");
  return (U_true - U_hat).squaredNorm() / static_cast<double>(U_true.size());
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidArgument("spearman: samples differ in length");
  if (x.size() < 2) throw InvalidArgument("spearman: need at least two observations");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double mean = 0.5 * static_cast<double>(x.size() + 1);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace clusterpath
