#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clusterpath/graph.hpp"
#include "clusterpath/io.hpp"

using namespace clusterpath;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "clusterpath_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs the CLI with the given arguments in the scratch directory; returns the exit code.
int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + work_dir().string() + "' && " + env + " '" CLI_PATH "' " + args +
                          " > last_stdout.txt 2> last_stderr.txt";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& path) { return json::parse(slurp(path)); }

std::size_t data_lines(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  std::getline(in, line);  // header
  while (std::getline(in, line)) n += line.empty() ? 0 : 1;
  return n;
}

}  // namespace

TEST_CASE("gen-data") {
  const fs::path w = work_dir();
  REQUIRE(run("gen-data --preset four-center --seed 7 --out-dir gd7") == 0);
  const Matrix X = read_matrix_csv(w / "gd7/X.csv");
  CHECK(X.rows() == 100);
  CHECK(X.cols() == 2);
  CHECK(read_matrix_csv(w / "gd7/U.csv").rows() == 100);
  CHECK(read_labels(w / "gd7/labels.csv").size() == 100);
  CHECK(read_json(w / "gd7/config.json")["gen-data"]["seed"] == 7);

  REQUIRE(run("gen-data --preset four-center --seed 7 --out-dir gd7b") == 0);
  for (const char* f : {"X.csv", "U.csv", "E.csv", "labels.csv"}) {
    CHECK(slurp(w / "gd7" / f) == slurp(w / "gd7b" / f));
  }

  REQUIRE(run("gen-data --preset four-center --seed 7 --sigma 0 --out-dir gd0") == 0);
  CHECK(slurp(w / "gd0/X.csv") == slurp(w / "gd0/U.csv"));
}

TEST_CASE("build-graph and diagnose") {
  const fs::path w = work_dir();
  REQUIRE(run("gen-data --preset four-center --seed 3 --out-dir d3") == 0);
  REQUIRE(run("build-graph --method complete --n 100 --out complete.tsv") == 0);
  REQUIRE(run("diagnose --dataset d3 --graph complete.tsv --out-dir diag") == 0);
  const json edges = read_json(w / "diag/edges.json");
  CHECK(edges.size() == 4950);
  double worst = 0.0;
  for (const json& e : edges) {
    worst = std::max(worst, std::abs(e["fdagger_norm"].get<double>() - std::sqrt(2.0) / 100.0));
  }
  CHECK(worst <= 1e-10);
  const json diag = read_json(w / "diag/diagnostics.json");
  CHECK(diag.contains("oracle_term"));
  CHECK(diag["between_edges"] == 3750);

  // One-cluster labels: U constant.
  fs::create_directories(w / "one");
  for (const char* f : {"X.csv", "E.csv"}) fs::copy_file(w / "d3" / f, w / "one" / f);
  write_matrix_csv(w / "one/U.csv", Matrix::Zero(100, 2));
  write_labels(w / "one/labels.csv", Labels(100, 0));
  REQUIRE(run("diagnose --dataset one --graph complete.tsv --out-dir diag1") == 0);
  CHECK(read_json(w / "diag1/diagnostics.json")["oracle_term"] == 0.0);

  CHECK(run("diagnose --dataset nowhere --graph complete.tsv --out-dir x") == 1);
  write_graph_tsv(w / "split.tsv", AffinityGraph(100, {{0, 1, 1.0}}));
  CHECK(run("diagnose --dataset d3 --graph split.tsv --out-dir x") == 2);

  REQUIRE(run("build-graph --method knn --data d3/X.csv --k 5 --out knn5.tsv") == 0);
  CHECK(read_graph_tsv(w / "knn5.tsv") == knn_graph(read_matrix_csv(w / "d3/X.csv"), 5));
  CHECK(read_json(w / "knn5.tsv.config.json")["build-graph"]["k"] == 5);
}

TEST_CASE("solve-path") {
  const fs::path w = work_dir();
  REQUIRE(run("gen-data --preset four-center --seed 4 --out-dir d4") == 0);
  REQUIRE(run("build-graph --method knn --data d4/X.csv --k 10 --out k10.tsv") == 0);

  REQUIRE(run("solve-path --data d4/X.csv --graph k10.tsv --gamma 0 --dump-centroids --out-dir sp0") == 0);
  CHECK(data_lines(w / "sp0/path.csv") == 1);
  CHECK(read_matrix_csv(w / "sp0/centroids/centroids_0.csv") == read_matrix_csv(w / "d4/X.csv"));

  REQUIRE(run("solve-path --data d4/X.csv --graph k10.tsv --auto-gamma-max --points 12 --out-dir spa") == 0);
  std::ifstream in(w / "spa/path.csv");
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  std::istringstream fields(last);
  std::string gamma, clusters;
  std::getline(fields, gamma, ',');
  std::getline(fields, clusters, ',');
  CHECK(clusters == "1");

  REQUIRE(run("solve-path --data d4/X.csv --graph k10.tsv --auto-gamma-max --points 12 --out-dir spb") == 0);
  CHECK(slurp(w / "spa/path.csv") == slurp(w / "spb/path.csv"));

  CHECK(run("solve-path --data d4/X.csv --graph k10.tsv --gamma 0.5 --max-iter 2 --tol 1e-14 --out-dir spf") == 3);
  CHECK(run("solve-path --data missing.csv --graph k10.tsv --gamma 0.5 --out-dir spf") == 1);
}

TEST_CASE("config file precedence") {
  const fs::path w = work_dir();
  REQUIRE(run("gen-data --preset four-center --seed 5 --out-dir d5") == 0);
  REQUIRE(run("build-graph --method knn --data d5/X.csv --k 8 --out k8.tsv") == 0);
  std::ofstream(w / "cfg.json") << R"({"solve-path": {"points": 5, "tol": 1e-7, "auto-gamma-max": true}})";
  REQUIRE(run("--config cfg.json solve-path --data d5/X.csv --graph k8.tsv --points 7 --out-dir spc") == 0);
  const json cfg = read_json(w / "spc/config.json")["solve-path"];
  CHECK(cfg["points"] == 7);
  CHECK(cfg["tol"].get<double>() == 1e-7);
  CHECK(cfg["auto-gamma-max"] == true);
  CHECK(data_lines(w / "spc/path.csv") == 7);

  std::ofstream(w / "bad.json") << "{not json";
  CHECK(run("--config bad.json solve-path --data d5/X.csv --graph k8.tsv --out-dir x") == 1);
}

TEST_CASE("experiment") {
  const fs::path w = work_dir();
  REQUIRE(run("experiment --mode knn --trials 1 --k 99 --grid-points 5 --out-dir ek") == 0);
  CHECK(data_lines(w / "ek/records.csv") == 1);
  CHECK(fs::exists(w / "ek/heatmap.csv"));

  REQUIRE(run("experiment --mode sbm --pw 0.25 --pb 0.25 --replicates 1 --trials 1 --grid-points 5 --out-dir es") == 0);
  CHECK(data_lines(w / "es/records.csv") == 1);

  REQUIRE(run("experiment --mode knn --trials 2 --k-min 30 --k-max 99 --grid-points 3 --jobs 4 "
              "--x-bins 5 --y-bins 5 --out-dir full") == 0);
  REQUIRE(run("experiment --mode knn --trials 2 --k-min 30 --k-max 99 --grid-points 3 --jobs 4 "
              "--x-bins 5 --y-bins 5 --trim-top-quantile 0.005 --out-dir trimmed") == 0);
  auto heat_total = [](const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::size_t total = 0;
    while (std::getline(in, line)) {
      std::istringstream f(line);
      std::string cell;
      for (int i = 0; i < 5; ++i) std::getline(f, cell, ',');
      total += std::stoul(cell);
    }
    return total;
  };
  const std::size_t records = data_lines(w / "full/records.csv");
  CHECK(records == 140);
  CHECK(heat_total(w / "full/heatmap.csv") == records);
  CHECK(heat_total(w / "trimmed/heatmap.csv") == records - 0);  // floor(0.005 * 140) = 0
  REQUIRE(run("experiment --mode knn --trials 3 --k-min 30 --k-max 99 --grid-points 3 --jobs 4 "
              "--x-bins 5 --y-bins 5 --trim-top-quantile 0.005 --out-dir trimmed3") == 0);
  CHECK(heat_total(w / "trimmed3/heatmap.csv") == 210 - 1);
  // Parallel and serial results agree byte for byte.
  REQUIRE(run("experiment --mode knn --trials 2 --k-min 30 --k-max 99 --grid-points 3 --jobs 1 "
              "--x-bins 5 --y-bins 5 --out-dir serial") == 0);
  CHECK(slurp(w / "serial/records.csv") == slurp(w / "full/records.csv"));

  REQUIRE(run("experiment --mode knn --trials 1 --k 99 --grid-points 3 --out-dir ej", "CLUSTERPATH_JOBS=3") == 0);
  CHECK(read_json(w / "ej/config.json")["experiment"]["jobs"] == 3);
  REQUIRE(run("experiment --mode knn --trials 1 --k 99 --grid-points 3 --jobs 2 --out-dir ej2",
              "CLUSTERPATH_JOBS=3") == 0);
  CHECK(read_json(w / "ej2/config.json")["experiment"]["jobs"] == 2);

  CHECK(run("experiment --mode knn --trials 1 --k 100 --out-dir bad") == 1);
}

TEST_CASE("verify-bounds") {
  const fs::path w = work_dir();
  REQUIRE(run("verify-bounds --out suite.json") == 0);
  const json suite = read_json(w / "suite.json");
  CHECK(suite["status"] == "PASS");
  CHECK(suite["graphs"].size() == 4);

  REQUIRE(run("verify-bounds --graph bridge --n 10 --k 3 --out bridge.json") == 0);
  const json bridge = read_json(w / "bridge.json")["graphs"][0]["checks"]["bridge_closed_form"];
  CHECK(bridge["status"] == "PASS");
  CHECK(bridge["max_abs_diff"].get<double>() <= 1e-8);

  write_graph_tsv(w / "path.tsv", AffinityGraph(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}}));
  REQUIRE(run("verify-bounds --graph file --graph-file path.tsv --out bip.json") == 0);
  const json bip = read_json(w / "bip.json")["graphs"][0]["checks"];
  CHECK(bip["hitting_concentration"]["skipped"].get<std::string>().find("bipartite") != std::string::npos);
  CHECK(bip["fdagger_entries"].contains("skipped"));
}

TEST_CASE("usage errors") {
  CHECK(run("") == 1);
  CHECK(run("no-such-command") == 1);
  CHECK(run("gen-data --seed notanumber") == 1);
  CHECK(run("--help") == 0);
}
