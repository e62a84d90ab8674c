// Command-line front end: data generation, graph construction, diagnostics,
// path solving, experiments and bound verification.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clusterpath/analysis.hpp"
#include "clusterpath/errors.hpp"
#include "clusterpath/graph.hpp"
#include "clusterpath/io.hpp"
#include "clusterpath/simulate.hpp"
#include "clusterpath/solver.hpp"
#include "clusterpath/spectral.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace clusterpath;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvalidGraph = 2;
constexpr int kExitSolver = 3;
constexpr int kExitBoundFailed = 4;

// Reads {"<subcommand>": {"<option>": value, ...}, ...}. Arrays become
// repeated option values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    throw CLI::ConversionError("JSON config export is not supported");
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json root;
    try {
      root = json::parse(input);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [command, options] : root.items()) {
      if (!options.is_object()) {
        throw CLI::ConversionError("config section '" + command + "' must be an object");
      }
      for (const auto& [name, value] : options.items()) {
        CLI::ConfigItem item;
        item.parents = {command};
        item.name = name;
        if (value.is_array()) {
          for (const auto& v : value) item.inputs.push_back(scalar(v));
        } else {
          item.inputs.push_back(scalar(value));
        }
        items.push_back(std::move(item));
      }
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("unsupported config value " + v.dump());
  }
};

// Binds an option to a variable and remembers how to echo its resolved value.
class Options {
 public:
  explicit Options(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* add(const std::string& name, T& var, const std::string& help) {
    echo_.emplace_back(name, [&var] { return json(var); });
    return app_->add_option("--" + name, var, help);
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    echo_.emplace_back(name, [&var] { return json(var); });
    return app_->add_flag("--" + name, var, help);
  }

  json resolved() const {
    json section = json::object();
    for (const auto& [name, get] : echo_) section[name] = get();
    json root;
    root[app_->get_name()] = section;
    return root;
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<json()>>> echo_;
};

void log(const std::string& msg) { std::cerr << "clusterpath: " << msg << '\n'; }

void write_config(const fs::path& path, const Options& opts) {
  write_text(path, opts.resolved().dump(2));
}

Dataset read_dataset(const fs::path& dir) {
  Dataset d;
  d.X = read_matrix_csv(dir / "X.csv");
  d.U = read_matrix_csv(dir / "U.csv");
  d.E = read_matrix_csv(dir / "E.csv");
  d.labels = read_labels(dir / "labels.csv");
  if (d.U.rows() != d.X.rows() || d.E.rows() != d.X.rows() || d.U.cols() != d.X.cols() ||
      d.E.cols() != d.X.cols() || d.labels.size() != static_cast<std::size_t>(d.X.rows())) {
    throw IoError("dataset files in " + dir.string() + " disagree in shape");
  }
  return d;
}

double row_diameter(const Matrix& U) {
  double diam = 0.0;
  for (Eigen::Index a = 0; a < U.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < U.rows(); ++b) diam = std::max(diam, (U.row(a) - U.row(b)).norm());
  }
  return diam;
}

json status(bool pass) { return pass ? "PASS" : "FAIL"; }

// gen-data ---------------------------------------------------------------------

struct GenDataConfig {
  std::string preset = "four-center";
  std::uint64_t seed = 0;
  double sigma = -1.0;
  int per_center = 0;
  int n = 0;
  std::string centers_file;
  std::vector<double> probs;
  std::string out_dir = "data";
};

int run_gen_data(const GenDataConfig& c, const Options& opts) {
  MixtureSpec spec;
  if (c.preset == "four-center") {
    spec = four_center_spec();
  } else if (c.preset == "three-component") {
    spec = three_component_spec();
  } else if (c.preset == "custom") {
    if (c.centers_file.empty()) throw InvalidArgument("--centers-file is required with --preset custom");
    spec.centers = read_matrix_csv(c.centers_file);
    const auto m = spec.centers.rows();
    if (c.probs.empty()) {
      spec.probs = Vector::Constant(m, 1.0 / static_cast<double>(m));
    } else {
      spec.probs = Eigen::Map<const Vector>(c.probs.data(), static_cast<Eigen::Index>(c.probs.size()));
    }
    spec.sigma = 1.0;
  } else {
    throw InvalidArgument("unknown preset '" + c.preset + "'");
  }
  if (c.sigma >= 0.0) spec.sigma = c.sigma;

  Dataset data;
  if (c.n > 0) {
    data = generate_mixture(spec, c.n, c.seed);
  } else {
    const int per = c.per_center > 0 ? c.per_center : (c.preset == "three-component" ? 20 : 25);
    data = balanced_mixture(spec, per, c.seed);
  }
  const fs::path out = c.out_dir;
  write_matrix_csv(out / "X.csv", data.X);
  write_matrix_csv(out / "U.csv", data.U);
  write_matrix_csv(out / "E.csv", data.E);
  write_labels(out / "labels.csv", data.labels);
  write_config(out / "config.json", opts);
  log("wrote " + std::to_string(data.X.rows()) + "x" + std::to_string(data.X.cols()) +
      " dataset to " + out.string());
  return kExitOk;
}

// build-graph ------------------------------------------------------------------

struct BuildGraphConfig {
  std::string method = "knn";
  std::string data;
  std::string labels;
  int k = 5;
  double radius = 1.0;
  double tau = 0.0;
  int n = 0;
  int bridges = 1;
  double pw = 0.5;
  double pb = 0.1;
  std::uint64_t seed = 0;
  std::string out = "graph.tsv";
};

int run_build_graph(const BuildGraphConfig& c, const Options& opts) {
  auto need_data = [&] {
    if (c.data.empty()) throw InvalidArgument("--data is required for method " + c.method);
    return read_matrix_csv(c.data);
  };
  AffinityGraph g;
  Matrix X;
  if (c.method == "knn" || c.method == "mutual-knn") {
    X = need_data();
    g = knn_graph(X, c.k, c.method == "knn" ? KnnRule::Union : KnnRule::Mutual);
  } else if (c.method == "epsilon") {
    X = need_data();
    g = epsilon_graph(X, c.radius);
  } else if (c.method == "complete") {
    const int n = c.n > 0 ? c.n : static_cast<int>(need_data().rows());
    g = complete_graph(n);
  } else if (c.method == "sbm") {
    if (c.labels.empty()) throw InvalidArgument("--labels is required for method sbm");
    const Labels labels = read_labels(c.labels);
    g = sbm_graph({static_cast<int>(labels.size()), c.pw, c.pb, c.seed}, labels);
  } else if (c.method == "bridge") {
    g = bridge_oracle_graph(c.n, c.bridges);
  } else {
    throw InvalidArgument("unknown graph method '" + c.method + "'");
  }
  if (c.tau > 0.0) {
    if (X.size() == 0) X = need_data();
    g = gaussian_weights(X, c.tau, g);
  }
  write_graph_tsv(c.out, g);
  write_config(c.out + ".config.json", opts);
  log("wrote graph with " + std::to_string(g.num_nodes()) + " nodes, " +
      std::to_string(g.num_edges()) + " edges" + (is_connected(g) ? "" : " (disconnected)"));
  return kExitOk;
}

// diagnose ---------------------------------------------------------------------

struct DiagnoseConfig {
  std::string dataset;
  std::string graph;
  double sigma = 1.0;
  double diameter = -1.0;
  double c1 = 1.0;
  bool dump_matrices = false;
  std::string out_dir = "diagnostics";
};

int run_diagnose(const DiagnoseConfig& c, const Options& opts) {
  const Dataset data = read_dataset(c.dataset);
  const AffinityGraph g = read_graph_tsv(c.graph);
  if (g.num_nodes() != data.X.rows()) throw IoError("graph and dataset disagree in node count");
  require_connected(g, "diagnose");
  const SpectralBundle bundle = make_spectral_bundle(g);
  DiagnosticsInputs inputs;
  inputs.sigma = c.sigma;
  inputs.c1 = c.c1;
  inputs.diameter = c.diameter >= 0.0 ? c.diameter : row_diameter(data.U);
  const DiagnosticsReport report = diagnose(g, bundle, data.U, data.E, data.labels, inputs);

  const Vector norms = fdagger_row_norms(g, bundle);
  json edges = json::array();
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& edge = g.edge(e);
    json row;
    row["edge"] = {edge.tail, edge.head};
    row["fdagger_norm"] = norms[static_cast<Eigen::Index>(e)];
    row["resistance"] = effective_resistance(bundle, edge.tail, edge.head);
    edges.push_back(row);
  }
  const fs::path out = c.out_dir;
  write_text(out / "diagnostics.json", diagnostics_json(report));
  write_text(out / "edges.json", edges.dump(2));
  if (c.dump_matrices) {
    write_matrix_csv(out / "laplacian_pinv.csv", bundle.laplacian_pinv);
    write_matrix_csv(out / "fdagger.csv", fdagger_matrix(g, bundle));
  }
  write_config(out / "config.json", opts);
  std::cout << diagnostics_json(report) << '\n';
  return kExitOk;
}

// solve-path -------------------------------------------------------------------

struct SolvePathConfig {
  std::string data;
  std::string graph;
  std::vector<double> gamma;
  bool auto_gamma_max = false;
  int points = 40;
  double min_ratio = 1e-3;
  double tol = 1e-6;
  int max_iter = 100000;
  bool dump_centroids = false;
  std::string out_dir = "path";
};

int run_solve_path(const SolvePathConfig& c, const Options& opts) {
  const Matrix X = read_matrix_csv(c.data);
  const AffinityGraph g = read_graph_tsv(c.graph);
  if (g.num_nodes() != X.rows()) throw IoError("graph and data disagree in node count");
  GridSpec grid;
  grid.gammas = c.gamma;
  grid.auto_gamma_max = c.auto_gamma_max;
  grid.num_points = c.points;
  grid.min_ratio = c.min_ratio;
  if (grid.gammas.empty() && !grid.auto_gamma_max) {
    throw InvalidArgument("give --gamma values or --auto-gamma-max");
  }
  SolverOptions sopts;
  sopts.tol = c.tol;
  sopts.max_iter = c.max_iter;
  const PathSolution path = solve_path(X, g, grid, sopts);

  const fs::path out = c.out_dir;
  std::ostringstream csv;
  write_path_csv(csv, path);
  write_text(out / "path.csv", csv.str());
  if (c.dump_centroids) write_path_centroids(out / "centroids", path);
  write_config(out / "config.json", opts);
  if (path.gamma_max) log("gamma_max = " + format_double(*path.gamma_max));
  log("solved " + std::to_string(path.points.size()) + " grid points");
  return kExitOk;
}

// experiment -------------------------------------------------------------------

struct ExperimentConfig {
  std::string mode = "knn";
  int trials = 1;
  std::vector<int> k;
  int k_min = 2;
  int k_max = 99;
  std::vector<double> pw{0.25};
  std::vector<double> pb{0.02};
  int replicates = 10;
  std::uint64_t seed = 0;
  int jobs = 1;
  int grid_points = 40;
  double grid_min_ratio = 1e-3;
  double tol = 1e-6;
  int x_bins = 20;
  int y_bins = 20;
  std::string metric = "mse";
  double trim_top_quantile = 0.0;
  std::string out_dir = "experiment";
};

int run_experiment(const ExperimentConfig& c, const Options& opts) {
  ExperimentOptions eopts;
  eopts.jobs = c.jobs;
  eopts.grid_points = c.grid_points;
  eopts.grid_min_ratio = c.grid_min_ratio;
  eopts.solver.tol = c.tol;
  ExperimentResult result;
  if (c.mode == "knn") {
    std::vector<int> ks = c.k;
    if (ks.empty()) {
      for (int k = c.k_min; k <= c.k_max; ++k) ks.push_back(k);
    }
    result = run_knn_trials(c.trials, ks, c.seed, eopts);
  } else if (c.mode == "sbm") {
    result = run_sbm_trials(c.trials, c.pw, c.pb, c.replicates, c.seed, eopts);
  } else {
    throw InvalidArgument("unknown experiment mode '" + c.mode + "'");
  }
  for (const SkippedGraph& s : result.skipped) {
    log("skipped " + construction_name(s.construction) + " trial " + std::to_string(s.trial) +
        ": " + s.reason);
  }
  const fs::path out = c.out_dir;
  std::ostringstream records;
  write_trial_records(records, result.records);
  write_text(out / "records.csv", records.str());
  std::ostringstream skipped;
  write_skipped(skipped, result.skipped);
  write_text(out / "skipped.csv", skipped.str());
  if (!result.records.empty()) {
    HeatmapOptions hopts;
    hopts.x_bins = c.x_bins;
    hopts.y_bins = c.y_bins;
    if (c.metric == "mse") {
      hopts.metric = HeatmapMetric::BestMse;
    } else if (c.metric == "ari") {
      hopts.metric = HeatmapMetric::BestAri;
    } else {
      throw InvalidArgument("unknown heatmap metric '" + c.metric + "'");
    }
    hopts.trim_top_quantile = c.trim_top_quantile;
    std::ostringstream heat;
    write_heatmap(heat, heatmap_bins(result.records, hopts));
    write_text(out / "heatmap.csv", heat.str());
  }
  write_config(out / "config.json", opts);
  log(std::to_string(result.records.size()) + " records, " +
      std::to_string(result.skipped.size()) + " skipped");
  return kExitOk;
}

// verify-bounds ----------------------------------------------------------------

struct VerifyConfig {
  std::string graph = "suite";
  std::string graph_file;
  int n = 10;
  int k = 3;
  double pw = 0.5;
  double pb = 0.1;
  std::uint64_t seed = 1;
  int mc_reps = 2000;
  int p = 2;
  double sigma = 1.0;
  std::string out;
};

struct NamedGraph {
  std::string name;
  AffinityGraph graph;
  std::optional<std::pair<int, int>> bridge;  // (n, k) when closed forms apply
};

AffinityGraph connected_sbm(int n, double pw, double pb, std::uint64_t seed) {
  const Labels labels = block_labels(n, 2);
  for (std::uint64_t s = seed; s < seed + 1000; ++s) {
    AffinityGraph g = sbm_graph({n, pw, pb, s}, labels);
    if (is_connected(g) && !is_bipartite(g)) return g;
  }
  throw InvalidGraph("no connected non-bipartite SBM draw within 1000 seeds");
}

json check_graph(const NamedGraph& ng, const VerifyConfig& c, bool& all_pass) {
  const AffinityGraph& g = ng.graph;
  json out;
  out["name"] = ng.name;
  out["n"] = g.num_nodes();
  out["edges"] = g.num_edges();
  if (!is_connected(g)) {
    out["skipped"] = "graph is disconnected";
    return out;
  }
  const SpectralBundle bundle = make_spectral_bundle(g);
  out["spectral_gap"] = bundle.spectral_gap;
  json checks = json::object();

  if (is_bipartite(g)) {
    checks["hitting_concentration"] = {{"skipped", "bipartite graph: the walk bound needs lambda_2 < 1 strictly away from -1"}};
    checks["fdagger_entries"] = checks["hitting_concentration"];
  } else {
    const WalkTimes times = hitting_times(g);
    const HittingConcentrationReport h = luxburg_bound_check(g, times, bundle);
    checks["hitting_concentration"] = {{"status", status(!h.violated)},
                                       {"max_deviation", h.max_deviation},
                                       {"bound", h.bound},
                                       {"slack", h.bound - h.max_deviation},
                                       {"lambda2", h.lambda2}};
    const EntryBoundReport e = fdagger_entry_bounds_check(g, bundle, times);
    checks["fdagger_entries"] = {{"status", status(!e.violated)},
                                 {"min_slack_interior", e.min_slack_interior},
                                 {"min_slack_endpoint", e.min_slack_endpoint},
                                 {"checked", e.checked}};
    all_pass = all_pass && !h.violated && !e.violated;
  }

  if (g.is_unweighted()) {
    const double fmax = fdagger_matrix(g, bundle).cwiseAbs().maxCoeff();
    const bool pass = fmax <= 1.0 + 1e-8;
    checks["fdagger_max_entry"] = {{"status", status(pass)}, {"value", fmax}, {"bound", 1.0}};
    all_pass = all_pass && pass;
  }

  const ConcentrationReport mc = monte_carlo_fdagger_concentration(g, c.p, c.sigma, c.mc_reps, c.seed);
  checks["noise_concentration"] = {{"status", status(mc.pass)},
                                   {"replicates", mc.replicates},
                                   {"exceedances", mc.exceedances},
                                   {"frequency", mc.frequency},
                                   {"allowed", mc.allowed},
                                   {"threshold", mc.threshold},
                                   {"max_statistic", mc.max_statistic}};
  all_pass = all_pass && mc.pass;

  if (ng.bridge) {
    const auto [n, k] = *ng.bridge;
    const BridgeOracleNorms closed = bridge_oracle_closed_form(n, k);
    double worst = 0.0;
    for (const Edge& e : g.edges()) {
      const Vector d = bundle.laplacian_pinv.col(e.tail) - bundle.laplacian_pinv.col(e.head);
      double expected = 0.0;
      switch (classify_bridge_oracle_edge(n, k, e)) {
        case BridgeEdgeClass::UnbridgedPair: expected = *closed.unbridged_pair; break;
        case BridgeEdgeClass::MixedPair: expected = *closed.mixed_pair; break;
        case BridgeEdgeClass::BridgedPair: expected = *closed.bridged_pair; break;
        case BridgeEdgeClass::Bridge: expected = closed.bridge; break;
      }
      worst = std::max(worst, std::abs(d.squaredNorm() - expected));
    }
    const bool pass = worst <= 1e-8;
    checks["bridge_closed_form"] = {{"status", status(pass)}, {"max_abs_diff", worst}};
    all_pass = all_pass && pass;
  }
  out["checks"] = checks;
  return out;
}

int run_verify_bounds(const VerifyConfig& c, const Options& opts) {
  std::vector<NamedGraph> graphs;
  if (c.graph == "suite") {
    graphs.push_back({"complete(10)", complete_graph(10), std::nullopt});
    graphs.push_back({"bridge(10,3)", bridge_oracle_graph(10, 3), std::pair{10, 3}});
    graphs.push_back({"bridge(12,4)", bridge_oracle_graph(12, 4), std::pair{12, 4}});
    graphs.push_back({"sbm(50,0.5,0.1)", connected_sbm(50, 0.5, 0.1, c.seed), std::nullopt});
  } else if (c.graph == "complete") {
    graphs.push_back({"complete(" + std::to_string(c.n) + ")", complete_graph(c.n), std::nullopt});
  } else if (c.graph == "bridge") {
    graphs.push_back({"bridge(" + std::to_string(c.n) + "," + std::to_string(c.k) + ")",
                      bridge_oracle_graph(c.n, c.k), std::pair{c.n, c.k}});
  } else if (c.graph == "sbm") {
    graphs.push_back({"sbm", connected_sbm(c.n, c.pw, c.pb, c.seed), std::nullopt});
  } else if (c.graph == "file") {
    if (c.graph_file.empty()) throw InvalidArgument("--graph-file is required with --graph file");
    graphs.push_back({c.graph_file, read_graph_tsv(c.graph_file), std::nullopt});
  } else {
    throw InvalidArgument("unknown graph family '" + c.graph + "'");
  }
  bool all_pass = true;
  json report;
  report["graphs"] = json::array();
  for (const NamedGraph& ng : graphs) report["graphs"].push_back(check_graph(ng, c, all_pass));
  report["status"] = status(all_pass);
  const std::string text = report.dump(2);
  if (c.out.empty()) {
    std::cout << text << '\n';
  } else {
    write_text(c.out, text);
    write_config(c.out + ".config.json", opts);
  }
  return all_pass ? kExitOk : kExitBoundFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex clustering along the regularization path with affinity-graph diagnostics"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with per-command option values; flags take precedence");

  GenDataConfig gen;
  Options gen_opts(app.add_subcommand("gen-data", "Sample a Gaussian mixture dataset"));
  gen_opts.add("preset", gen.preset, "four-center, three-component or custom")
      ->capture_default_str();
  gen_opts.add("seed", gen.seed, "RNG seed")->capture_default_str();
  gen_opts.add("sigma", gen.sigma, "Noise level (negative keeps the preset's)");
  gen_opts.add("per-center", gen.per_center, "Balanced draws per center (0 keeps the preset's)");
  gen_opts.add("n", gen.n, "Sample size with i.i.d. labels (0 selects balanced sampling)");
  gen_opts.add("centers-file", gen.centers_file, "CSV of centers for --preset custom");
  gen_opts.add("probs", gen.probs, "Membership probabilities for --preset custom");
  gen_opts.add("out-dir", gen.out_dir, "Output directory")->capture_default_str();

  BuildGraphConfig bg;
  Options bg_opts(app.add_subcommand("build-graph", "Construct an affinity graph"));
  bg_opts.add("method", bg.method, "knn, mutual-knn, epsilon, complete, sbm or bridge")
      ->capture_default_str();
  bg_opts.add("data", bg.data, "Data matrix CSV");
  bg_opts.add("labels", bg.labels, "Label file (sbm)");
  bg_opts.add("k", bg.k, "Neighbor count")->capture_default_str();
  bg_opts.add("radius", bg.radius, "Epsilon-graph radius")->capture_default_str();
  bg_opts.add("tau", bg.tau, "Gaussian kernel bandwidth applied to the edges (0 keeps unit weights)");
  bg_opts.add("n", bg.n, "Node count (complete, bridge)");
  bg_opts.add("bridges", bg.bridges, "Bridge count (bridge)")->capture_default_str();
  bg_opts.add("pw", bg.pw, "Within-block edge probability (sbm)")->capture_default_str();
  bg_opts.add("pb", bg.pb, "Between-block edge probability (sbm)")->capture_default_str();
  bg_opts.add("seed", bg.seed, "RNG seed (sbm)")->capture_default_str();
  bg_opts.add("out", bg.out, "Output graph TSV")->capture_default_str();

  DiagnoseConfig dg;
  Options dg_opts(app.add_subcommand("diagnose", "Oracle term, bound values and per-edge F-dagger norms"));
  dg_opts.add("dataset", dg.dataset, "Directory with X.csv, U.csv, E.csv, labels.csv")->required();
  dg_opts.add("graph", dg.graph, "Graph TSV")->required();
  dg_opts.add("sigma", dg.sigma, "Noise level")->capture_default_str();
  dg_opts.add("diameter", dg.diameter, "Center diameter (negative: computed from U)");
  dg_opts.add("c1", dg.c1, "Constant of the theorem bound")->capture_default_str();
  dg_opts.flag("dump-matrices", dg.dump_matrices, "Also write L-dagger and F-dagger as CSV");
  dg_opts.add("out-dir", dg.out_dir, "Output directory")->capture_default_str();

  SolvePathConfig sp;
  Options sp_opts(app.add_subcommand("solve-path", "Solve the clusterpath problem over a gamma grid"));
  sp_opts.add("data", sp.data, "Data matrix CSV")->required();
  sp_opts.add("graph", sp.graph, "Graph TSV")->required();
  sp_opts.add("gamma", sp.gamma, "Explicit ascending gamma grid");
  sp_opts.flag("auto-gamma-max", sp.auto_gamma_max, "Search the fusion gamma and extend the grid to it");
  sp_opts.add("points", sp.points, "Geometric grid size with --auto-gamma-max")->capture_default_str();
  sp_opts.add("min-ratio", sp.min_ratio, "Smallest grid gamma over gamma_max")->capture_default_str();
  sp_opts.add("tol", sp.tol, "Relative residual tolerance")->capture_default_str();
  sp_opts.add("max-iter", sp.max_iter, "ADMM iteration cap")->capture_default_str();
  sp_opts.flag("dump-centroids", sp.dump_centroids, "Write centroids/centroids_<i>.csv");
  sp_opts.add("out-dir", sp.out_dir, "Output directory")->capture_default_str();

  ExperimentConfig ex;
  Options ex_opts(app.add_subcommand("experiment", "Simulation trials over k-NN or block-model graphs"));
  ex_opts.add("mode", ex.mode, "knn or sbm")->capture_default_str();
  ex_opts.add("trials", ex.trials, "Number of datasets")->capture_default_str();
  ex_opts.add("k", ex.k, "Explicit k values (knn)");
  ex_opts.add("k-min", ex.k_min, "Smallest k when --k is absent")->capture_default_str();
  ex_opts.add("k-max", ex.k_max, "Largest k when --k is absent")->capture_default_str();
  ex_opts.add("pw", ex.pw, "Within-block probabilities (sbm)");
  ex_opts.add("pb", ex.pb, "Between-block probabilities (sbm)");
  ex_opts.add("replicates", ex.replicates, "Graphs per (pw, pb) and trial")->capture_default_str();
  ex_opts.add("seed", ex.seed, "Master seed")->capture_default_str();
  ex_opts.add("jobs", ex.jobs, "Worker threads across trials")
      ->envname("CLUSTERPATH_JOBS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ex_opts.add("grid-points", ex.grid_points, "Gamma grid size")->capture_default_str();
  ex_opts.add("grid-min-ratio", ex.grid_min_ratio, "Smallest grid gamma over gamma_max")
      ->capture_default_str();
  ex_opts.add("tol", ex.tol, "Relative residual tolerance")->capture_default_str();
  ex_opts.add("x-bins", ex.x_bins, "Heatmap oracle-term bins")->capture_default_str();
  ex_opts.add("y-bins", ex.y_bins, "Heatmap metric bins")->capture_default_str();
  ex_opts.add("metric", ex.metric, "Heatmap metric: mse or ari")->capture_default_str();
  ex_opts.add("trim-top-quantile", ex.trim_top_quantile,
              "Drop records in this upper quantile of the oracle term before binning");
  ex_opts.add("out-dir", ex.out_dir, "Output directory")->capture_default_str();

  VerifyConfig vb;
  Options vb_opts(app.add_subcommand("verify-bounds", "Check the random-walk, entrywise and noise bounds"));
  vb_opts.add("graph", vb.graph, "suite, complete, bridge, sbm or file")->capture_default_str();
  vb_opts.add("graph-file", vb.graph_file, "Graph TSV with --graph file");
  vb_opts.add("n", vb.n, "Node count")->capture_default_str();
  vb_opts.add("k", vb.k, "Bridge count")->capture_default_str();
  vb_opts.add("pw", vb.pw, "Within-block probability (sbm)")->capture_default_str();
  vb_opts.add("pb", vb.pb, "Between-block probability (sbm)")->capture_default_str();
  vb_opts.add("seed", vb.seed, "RNG seed")->capture_default_str();
  vb_opts.add("mc-reps", vb.mc_reps, "Monte Carlo replicates")->capture_default_str();
  vb_opts.add("p", vb.p, "Noise columns in the Monte Carlo check")->capture_default_str();
  vb_opts.add("sigma", vb.sigma, "Noise level in the Monte Carlo check")->capture_default_str();
  vb_opts.add("out", vb.out, "Report path (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_opts.app()->parsed()) return run_gen_data(gen, gen_opts);
    if (bg_opts.app()->parsed()) return run_build_graph(bg, bg_opts);
    if (dg_opts.app()->parsed()) return run_diagnose(dg, dg_opts);
    if (sp_opts.app()->parsed()) return run_solve_path(sp, sp_opts);
    if (ex_opts.app()->parsed()) return run_experiment(ex, ex_opts);
    if (vb_opts.app()->parsed()) return run_verify_bounds(vb, vb_opts);
  } catch (const InvalidGraph& e) {
    log(std::string("invalid graph: ") + e.what());
    return kExitInvalidGraph;
  } catch (const SolverError& e) {
    log(std::string("solver failure: ") + e.what());
    return kExitSolver;
  } catch (const Error& e) {
    log(e.what());
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    log(e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
