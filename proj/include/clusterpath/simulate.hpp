#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "clusterpath/analysis.hpp"
#include "clusterpath/graph.hpp"
#include "clusterpath/solver.hpp"

namespace clusterpath {

/// X = U + E with U rows drawn from the mixture centers.
struct Dataset {
  Matrix X;
  Matrix U;
  Matrix E;
  Labels labels;
};

/// SplitMix64 mix of (master, stream); gives each trial an independent RNG
/// stream so serial and parallel runs agree.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Labels i.i.d. from spec.probs, Gaussian noise N(0, sigma^2 I) per row.
Dataset generate_mixture(const MixtureSpec& spec, int n, std::uint64_t seed);

/// Exactly `per_center` samples of every center in seeded random order.
Dataset balanced_mixture(const MixtureSpec& spec, int per_center, std::uint64_t seed);

/// Centers (+-sqrt2, +-sqrt2), equal weights, unit noise.
MixtureSpec four_center_spec();
/// 100 x 2 sample with 25 draws per center of four_center_spec().
Dataset four_center_dataset(std::uint64_t seed);

/// Three unit-variance bivariate normals on a triangle of side 4.
MixtureSpec three_component_spec();
/// 60 x 2 sample with 20 draws per component of three_component_spec().
Dataset three_component_dataset(std::uint64_t seed);

enum class Construction { Knn, Sbm };

struct TrialRecord {
  Construction construction = Construction::Knn;
  int trial = 0;
  int k = 0;                // k-NN only
  double p_within = 0.0;    // SBM only
  double p_between = 0.0;   // SBM only
  int replicate = 0;        // SBM only
  std::uint64_t seed = 0;   // dataset seed (k-NN) or graph seed (SBM)
  std::size_t num_edges = 0;
  double oracle_term = 0.0;
  double fdagger_e_max = 0.0;
  std::size_t between_edges = 0;
  double spectral_gap = 0.0;
  double best_ari = 0.0;
  double best_mse = 0.0;
  double gamma_at_best_ari = 0.0;
  double gamma_at_best_mse = 0.0;
};

/// Graph that could not be evaluated (disconnected or solver failure).
struct SkippedGraph {
  Construction construction = Construction::Knn;
  int trial = 0;
  int k = 0;
  double p_within = 0.0;
  double p_between = 0.0;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::string reason;
};

struct ExperimentResult {
  std::vector<TrialRecord> records;
  std::vector<SkippedGraph> skipped;
};

struct ExperimentOptions {
  SolverOptions solver;
  int grid_points = 40;
  double grid_min_ratio = 1e-3;
  int jobs = 1;
};

/// Diagnostics plus the best-ARI and best-MSE points of the full path.
TrialRecord evaluate_graph(const Dataset& data, const AffinityGraph& g,
                           const ExperimentOptions& options);

ExperimentResult run_knn_trials(int n_trials, const std::vector<int>& k_range,
                                std::uint64_t seed, const ExperimentOptions& options = {});

/// Block-model graphs over the labels of each four-center dataset (one block
/// per center, within-pair edges when labels agree).
ExperimentResult run_sbm_trials(int n_trials, const std::vector<double>& pw_grid,
                                const std::vector<double>& pb_grid, int replicates,
                                std::uint64_t seed, const ExperimentOptions& options = {});

/// Monte Carlo check of
///   P(||F^dagger E||_max >= sqrt(8 sigma^2 log(np) max_e Phi_e ||F^dagger_e||^2)) <= 2/(np).
struct ConcentrationReport {
  int replicates = 0;
  std::size_t exceedances = 0;
  double frequency = 0.0;
  double nominal = 0.0;  // 2 / (np)
  double allowed = 0.0;  // nominal plus three binomial standard errors
  double threshold = 0.0;  // last threshold evaluated (fixed graph: the only one)
  double max_statistic = 0.0;
  bool pass = false;
};

ConcentrationReport monte_carlo_fdagger_concentration(const AffinityGraph& g, int p, double sigma,
                                                      int n_rep, std::uint64_t seed);

/// Random graph family independent of E: a fresh graph per replicate.
using GraphFamily = std::function<AffinityGraph(std::mt19937_64&)>;
ConcentrationReport monte_carlo_fdagger_concentration(const GraphFamily& family, int p,
                                                      double sigma, int n_rep, std::uint64_t seed);

enum class HeatmapMetric { BestMse, BestAri };

struct HeatmapOptions {
  int x_bins = 20;
  int y_bins = 20;
  HeatmapMetric metric = HeatmapMetric::BestMse;
  double trim_top_quantile = 0.0;  // drop records whose oracle term is above this upper quantile
};

/// One cell of the (oracle term, metric) histogram. median_metric is the
/// median metric over the whole oracle-term column the cell belongs to.
struct HeatmapCell {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double y_lo = 0.0;
  double y_hi = 0.0;
  std::size_t count = 0;
  double median_metric = 0.0;
};

std::vector<HeatmapCell> heatmap_bins(const std::vector<TrialRecord>& records,
                                      const HeatmapOptions& options);

std::string construction_name(Construction c);

void write_trial_records(std::ostream& out, const std::vector<TrialRecord>& records);
void write_skipped(std::ostream& out, const std::vector<SkippedGraph>& skipped);
void write_heatmap(std::ostream& out, const std::vector<HeatmapCell>& cells);

}  // namespace clusterpath
