#include "clusterpath/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include "clusterpath/errors.hpp"
#include "clusterpath/io.hpp"
#include "clusterpath/spectral.hpp"

namespace clusterpath {

namespace {

Matrix gaussian_noise(int n, int p, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix E(n, p);
  // Row-major fill keeps the draw order independent of Eigen's storage.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) E(i, j) = sigma * normal(rng);
  }
  return E;
}

Dataset assemble(const MixtureSpec& spec, Labels labels, std::mt19937_64& rng) {
  const int n = static_cast<int>(labels.size());
  const int p = static_cast<int>(spec.centers.cols());
  Dataset data;
  data.U.resize(n, p);
  for (int i = 0; i < n; ++i) data.U.row(i) = spec.centers.row(labels[i]);
  data.E = gaussian_noise(n, p, spec.sigma, rng);
  data.X = data.U + data.E;
  data.labels = std::move(labels);
  return data;
}

// Runs fn(trial) for every trial index over `jobs` workers; results are
// stored by index so the output order never depends on scheduling.
template <typename Result, typename Fn>
std::vector<Result> run_indexed(int count, int jobs, Fn fn) {
  std::vector<Result> results(static_cast<std::size_t>(count));
  const int workers = std::max(1, std::min(jobs, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < count; i = next++) results[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

ExperimentResult flatten(std::vector<ExperimentResult> parts) {
  ExperimentResult out;
  for (auto& part : parts) {
    out.records.insert(out.records.end(), part.records.begin(), part.records.end());
    out.skipped.insert(out.skipped.end(), part.skipped.begin(), part.skipped.end());
  }
  return out;
}

double metric_of(const TrialRecord& r, HeatmapMetric metric) {
  return metric == HeatmapMetric::BestMse ? r.best_mse : r.best_ari;
}

int bin_of(double value, double lo, double hi, int bins) {
  if (hi <= lo) return 0;
  const int b = static_cast<int>(std::floor((value - lo) / (hi - lo) * bins));
  return std::clamp(b, 0, bins - 1);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Dataset generate_mixture(const MixtureSpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw InvalidArgument("sample size must be positive");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(spec.probs.data(), spec.probs.data() + spec.probs.size());
  Labels labels(n);
  for (int& l : labels) l = pick(rng);
  return assemble(spec, std::move(labels), rng);
}

Dataset balanced_mixture(const MixtureSpec& spec, int per_center, std::uint64_t seed) {
  spec.validate();
  if (per_center < 1) throw InvalidArgument("per_center must be positive");
  const int m = static_cast<int>(spec.centers.rows());
  Labels labels(static_cast<std::size_t>(m) * per_center);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i) / per_center;
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  return assemble(spec, std::move(labels), rng);
}

MixtureSpec four_center_spec() {
  const double s = std::sqrt(2.0);
  MixtureSpec spec;
  spec.centers.resize(4, 2);
  spec.centers << s, s, -s, s, s, -s, -s, -s;
  spec.probs = Vector::Constant(4, 0.25);
  spec.sigma = 1.0;
  return spec;
}

Dataset four_center_dataset(std::uint64_t seed) { return balanced_mixture(four_center_spec(), 25, seed); }

MixtureSpec three_component_spec() {
  MixtureSpec spec;
  spec.centers.resize(3, 2);
  spec.centers << 0.0, 0.0, 4.0, 0.0, 2.0, 2.0 * std::sqrt(3.0);
  spec.probs = Vector::Constant(3, 1.0 / 3.0);
  spec.sigma = 1.0;
  return spec;
}

Dataset three_component_dataset(std::uint64_t seed) {
  return balanced_mixture(three_component_spec(), 20, seed);
}

TrialRecord evaluate_graph(const Dataset& data, const AffinityGraph& g,
                           const ExperimentOptions& options) {
  const SpectralBundle bundle = make_spectral_bundle(g);
  TrialRecord rec;
  rec.num_edges = g.num_edges();
  rec.fdagger_e_max = fdagger_e_max(g, bundle, data.E);
  rec.oracle_term = rec.fdagger_e_max * fusion_penalty(g, data.U) / g.num_nodes();
  rec.between_edges = between_cluster_edges(g, data.labels).count;
  rec.spectral_gap = bundle.spectral_gap;

  GridSpec grid;
  grid.auto_gamma_max = true;
  grid.num_points = options.grid_points;
  grid.min_ratio = options.grid_min_ratio;
  AdmmSolver solver(data.X, g, options.solver);
  const PathSolution path = solve_path(solver, grid);

  rec.best_ari = -std::numeric_limits<double>::infinity();
  rec.best_mse = std::numeric_limits<double>::infinity();
  for (const PathPoint& pt : path.points) {
    const double a = ari(data.labels, pt.partition);
    const double m = mse(data.U, pt.centroids);
    if (a > rec.best_ari) {
      rec.best_ari = a;
      rec.gamma_at_best_ari = pt.gamma;
    }
    if (m < rec.best_mse) {
      rec.best_mse = m;
      rec.gamma_at_best_mse = pt.gamma;
    }
  }
  return rec;
}

ExperimentResult run_knn_trials(int n_trials, const std::vector<int>& k_range, std::uint64_t seed,
                                const ExperimentOptions& options) {
  if (n_trials < 0) throw InvalidArgument("trial count must be nonnegative");
  for (int k : k_range) {
    if (k < 2 || k > 99) throw InvalidArgument("k must lie in [2, n-1] = [2, 99]");
  }
  auto one_trial = [&](int trial) {
    ExperimentResult out;
    const std::uint64_t trial_seed = derive_seed(seed, static_cast<std::uint64_t>(trial));
    const Dataset data = four_center_dataset(trial_seed);
    for (int k : k_range) {
      const AffinityGraph g = knn_graph(data.X, k);
      SkippedGraph skip{Construction::Knn, trial, k, 0.0, 0.0, 0, trial_seed, {}};
      if (!is_connected(g)) {
        skip.reason = "disconnected";
        out.skipped.push_back(skip);
        continue;
      }
      try {
        TrialRecord rec = evaluate_graph(data, g, options);
        rec.construction = Construction::Knn;
        rec.trial = trial;
        rec.k = k;
        rec.seed = trial_seed;
        out.records.push_back(rec);
      } catch (const SolverError& e) {
        skip.reason = e.what();
        out.skipped.push_back(skip);
      }
    }
    return out;
  };
  return flatten(run_indexed<ExperimentResult>(n_trials, options.jobs, one_trial));
}

ExperimentResult run_sbm_trials(int n_trials, const std::vector<double>& pw_grid,
                                const std::vector<double>& pb_grid, int replicates,
                                std::uint64_t seed, const ExperimentOptions& options) {
  if (n_trials < 0 || replicates < 0) throw InvalidArgument("counts must be nonnegative");
  auto in_grid = [](double p) { return p > 0.0 && p <= 1.0; };
  if (!std::all_of(pw_grid.begin(), pw_grid.end(), in_grid) ||
      !std::all_of(pb_grid.begin(), pb_grid.end(), in_grid)) {
    throw InvalidArgument("SBM probabilities must lie in (0, 1]");
  }
  auto one_trial = [&](int trial) {
    ExperimentResult out;
    const std::uint64_t trial_seed = derive_seed(seed, static_cast<std::uint64_t>(trial));
    const Dataset data = four_center_dataset(trial_seed);
    std::uint64_t stream = 0;
    for (double pw : pw_grid) {
      for (double pb : pb_grid) {
        for (int rep = 0; rep < replicates; ++rep) {
          const std::uint64_t graph_seed = derive_seed(trial_seed, ++stream);
          const SbmParams params{static_cast<int>(data.X.rows()), pw, pb, graph_seed};
          const AffinityGraph g = sbm_graph(params, data.labels);
          SkippedGraph skip{Construction::Sbm, trial, 0, pw, pb, rep, graph_seed, {}};
          if (!is_connected(g)) {
            skip.reason = "disconnected";
            out.skipped.push_back(skip);
            continue;
          }
          try {
            TrialRecord rec = evaluate_graph(data, g, options);
            rec.construction = Construction::Sbm;
            rec.trial = trial;
            rec.p_within = pw;
            rec.p_between = pb;
            rec.replicate = rep;
            rec.seed = graph_seed;
            out.records.push_back(rec);
          } catch (const SolverError& e) {
            skip.reason = e.what();
            out.skipped.push_back(skip);
          }
        }
      }
    }
    return out;
  };
  return flatten(run_indexed<ExperimentResult>(n_trials, options.jobs, one_trial));
}

namespace {

ConcentrationReport finalize(ConcentrationReport report, int n, int p) {
  const double np = static_cast<double>(n) * p;
  report.nominal = 2.0 / np;
  report.frequency = static_cast<double>(report.exceedances) / report.replicates;
  report.allowed =
      report.nominal + 3.0 * std::sqrt(report.nominal * (1.0 - report.nominal) / report.replicates);
  report.pass = report.frequency <= report.allowed;
  return report;
}

double concentration_threshold(const AffinityGraph& g, const SpectralBundle& bundle, int p,
                               double sigma) {
  const Matrix fdag = fdagger_matrix(g, bundle);
  double worst = 0.0;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    worst = std::max(worst, g.edge(e).weight * fdag.row(static_cast<Eigen::Index>(e)).squaredNorm());
  }
  const double np = static_cast<double>(g.num_nodes()) * p;
  return std::sqrt(8.0 * sigma * sigma * std::log(np) * worst);
}

}  // namespace

ConcentrationReport monte_carlo_fdagger_concentration(const AffinityGraph& g, int p, double sigma,
                                                      int n_rep, std::uint64_t seed) {
  if (p < 1 || n_rep < 1 || !(sigma >= 0.0)) {
    throw InvalidArgument("concentration check needs p >= 1, n_rep >= 1, sigma >= 0");
  }
  const SpectralBundle bundle = make_spectral_bundle(g);
  ConcentrationReport report;
  report.replicates = n_rep;
  report.threshold = concentration_threshold(g, bundle, p, sigma);
  std::mt19937_64 rng(seed);
  for (int r = 0; r < n_rep; ++r) {
    const Matrix E = gaussian_noise(g.num_nodes(), p, sigma, rng);
    const double stat = fdagger_e_max(g, bundle, E);
    report.max_statistic = std::max(report.max_statistic, stat);
    if (stat > report.threshold) ++report.exceedances;
  }
  return finalize(report, g.num_nodes(), p);
}

ConcentrationReport monte_carlo_fdagger_concentration(const GraphFamily& family, int p,
                                                      double sigma, int n_rep, std::uint64_t seed) {
  if (p < 1 || n_rep < 1 || !(sigma >= 0.0)) {
    throw InvalidArgument("concentration check needs p >= 1, n_rep >= 1, sigma >= 0");
  }
  ConcentrationReport report;
  report.replicates = n_rep;
  std::mt19937_64 graph_rng(derive_seed(seed, 0));
  std::mt19937_64 noise_rng(derive_seed(seed, 1));
  int n = 0;
  for (int r = 0; r < n_rep; ++r) {
    const AffinityGraph g = family(graph_rng);
    if (n != 0 && g.num_nodes() != n) throw InvalidArgument("graph family must keep n fixed");
    n = g.num_nodes();
    const SpectralBundle bundle = make_spectral_bundle(g);
    report.threshold = concentration_threshold(g, bundle, p, sigma);
    const Matrix E = gaussian_noise(n, p, sigma, noise_rng);
    const double stat = fdagger_e_max(g, bundle, E);
    report.max_statistic = std::max(report.max_statistic, stat);
    if (stat > report.threshold) ++report.exceedances;
  }
  return finalize(report, n, p);
}

std::vector<HeatmapCell> heatmap_bins(const std::vector<TrialRecord>& records,
                                      const HeatmapOptions& options) {
  if (records.empty()) throw InvalidArgument("heatmap_bins: no records");
  if (options.x_bins < 1 || options.y_bins < 1) throw InvalidArgument("bin counts must be positive");
  if (!(options.trim_top_quantile >= 0.0) || options.trim_top_quantile >= 1.0) {
    throw InvalidArgument("trim quantile must lie in [0, 1)");
  }
  std::vector<const TrialRecord*> kept;
  kept.reserve(records.size());
  for (const TrialRecord& r : records) kept.push_back(&r);
  if (options.trim_top_quantile > 0.0) {
    // Drop the records with the floor(q * N) largest oracle terms.
    const auto drop = static_cast<std::size_t>(
        std::floor(options.trim_top_quantile * static_cast<double>(records.size())));
    std::stable_sort(kept.begin(), kept.end(), [](const TrialRecord* a, const TrialRecord* b) {
      return a->oracle_term < b->oracle_term;
    });
    kept.resize(kept.size() - std::min(drop, kept.size() - 1));
  }
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  double y_lo = x_lo;
  double y_hi = -x_lo;
  for (const TrialRecord* r : kept) {
    x_lo = std::min(x_lo, r->oracle_term);
    x_hi = std::max(x_hi, r->oracle_term);
    y_lo = std::min(y_lo, metric_of(*r, options.metric));
    y_hi = std::max(y_hi, metric_of(*r, options.metric));
  }
  const int nx = options.x_bins;
  const int ny = options.y_bins;
  std::vector<std::size_t> counts(static_cast<std::size_t>(nx) * ny, 0);
  std::vector<std::vector<double>> columns(nx);
  for (const TrialRecord* r : kept) {
    const double y = metric_of(*r, options.metric);
    const int bx = bin_of(r->oracle_term, x_lo, x_hi, nx);
    const int by = bin_of(y, y_lo, y_hi, ny);
    ++counts[static_cast<std::size_t>(bx) * ny + by];
    columns[bx].push_back(y);
  }
  const double dx = x_hi > x_lo ? (x_hi - x_lo) / nx : 0.0;
  const double dy = y_hi > y_lo ? (y_hi - y_lo) / ny : 0.0;
  std::vector<HeatmapCell> cells;
  cells.reserve(counts.size());
  for (int bx = 0; bx < nx; ++bx) {
    const double column_median =
        columns[bx].empty() ? std::numeric_limits<double>::quiet_NaN() : median(columns[bx]);
    for (int by = 0; by < ny; ++by) {
      HeatmapCell cell;
      cell.x_lo = x_lo + dx * bx;
      cell.x_hi = bx == nx - 1 ? x_hi : x_lo + dx * (bx + 1);
      cell.y_lo = y_lo + dy * by;
      cell.y_hi = by == ny - 1 ? y_hi : y_lo + dy * (by + 1);
      cell.count = counts[static_cast<std::size_t>(bx) * ny + by];
      cell.median_metric = column_median;
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string construction_name(Construction c) { return c == Construction::Knn ? "knn" : "sbm"; }

void write_trial_records(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << "construction,trial,k,p_within,p_between,replicate,seed,num_edges,oracle_term,"
         "fdagger_e_max,between_edges,spectral_gap,best_ari,best_mse,gamma_at_best_ari,"
         "gamma_at_best_mse\n";
  for (const TrialRecord& r : records) {
    out << construction_name(r.construction) << ',' << r.trial << ',' << r.k << ','
        << format_double(r.p_within) << ',' << format_double(r.p_between) << ',' << r.replicate
        << ',' << r.seed << ',' << r.num_edges << ',' << format_double(r.oracle_term) << ','
        << format_double(r.fdagger_e_max) << ',' << r.between_edges << ','
        << format_double(r.spectral_gap) << ',' << format_double(r.best_ari) << ','
        << format_double(r.best_mse) << ',' << format_double(r.gamma_at_best_ari) << ','
        << format_double(r.gamma_at_best_mse) << '\n';
  }
}

void write_skipped(std::ostream& out, const std::vector<SkippedGraph>& skipped) {
  out << "construction,trial,k,p_within,p_between,replicate,seed,reason\n";
  for (const SkippedGraph& s : skipped) {
    std::string reason = s.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    out << construction_name(s.construction) << ',' << s.trial << ',' << s.k << ','
        << format_double(s.p_within) << ',' << format_double(s.p_between) << ',' << s.replicate
        << ',' << s.seed << ',' << reason << '\n';
  }
}

void write_heatmap(std::ostream& out, const std::vector<HeatmapCell>& cells) {
  out << "x_lo,x_hi,y_lo,y_hi,count,median_metric\n";
  for (const HeatmapCell& c : cells) {
    out << format_double(c.x_lo) << ',' << format_double(c.x_hi) << ',' << format_double(c.y_lo)
        << ',' << format_double(c.y_hi) << ',' << c.count << ',' << format_double(c.median_metric)
        << '\n';
  }
}

}  // namespace clusterpath
