#include "clusterpath/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "clusterpath/errors.hpp"

namespace clusterpath {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& token, const std::string& where) {
  const std::string t = trim(token);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw IoError("malformed number '" + token + "' in " + where);
  }
  return value;
}

long parse_int(const std::string& token, const std::string& where) {
  const std::string t = trim(token);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw IoError("malformed integer '" + token + "' in " + where);
  }
  return value;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Matrix read_matrix_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::vector<double> row;
    for (const std::string& field : split(line, ',')) row.push_back(parse_double(field, where));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("ragged CSV row at " + where);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path.string() + " contains no rows");
  Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  }
  return M;
}

void write_matrix_csv(std::ostream& out, const Matrix& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
}

void write_matrix_csv(const fs::path& path, const Matrix& M) {
  std::ofstream out = open_out(path);
  write_matrix_csv(out, M);
}

Labels read_labels(const fs::path& path) {
  std::ifstream in = open_in(path);
  Labels labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    labels.push_back(static_cast<int>(parse_int(line, path.string() + ":" + std::to_string(line_no))));
  }
  return labels;
}

void write_labels(const fs::path& path, const Labels& labels) {
  std::ofstream out = open_out(path);
  for (int l : labels) out << l << '\n';
}

AffinityGraph parse_graph_tsv(std::istream& in) {
  std::string line;
  long n = -1;
  std::vector<Edge> edges;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    const std::string where = "graph line " + std::to_string(line_no);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto pos = t.find("n=");
      if (n < 0 && pos != std::string::npos) n = parse_int(t.substr(pos + 2), where);
      continue;
    }
    if (n < 0) throw IoError("graph file lacks '# n=<n>' header before " + where);
    const auto fields = split(t, '\t');
    if (fields.size() != 3) throw IoError("expected j<TAB>k<TAB>weight at " + where);
    const long j = parse_int(fields[0], where);
    const long k = parse_int(fields[1], where);
    if (j >= k) throw IoError("edge endpoints must satisfy j < k at " + where);
    edges.push_back({static_cast<int>(j), static_cast<int>(k), parse_double(fields[2], where)});
  }
  if (n < 0) throw IoError("graph file lacks '# n=<n>' header");
  try {
    return AffinityGraph(static_cast<int>(n), std::move(edges));
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("invalid graph file: ") + e.what());
  }
}

AffinityGraph read_graph_tsv(const fs::path& path) {
  std::ifstream in = open_in(path);
  return parse_graph_tsv(in);
}

void write_graph_tsv(std::ostream& out, const AffinityGraph& g) {
  out << "# n=" << g.num_nodes() << '\n';
  for (const Edge& e : g.edges()) {
    out << e.tail << '\t' << e.head << '\t' << format_double(e.weight) << '\n';
  }
}

void write_graph_tsv(const fs::path& path, const AffinityGraph& g) {
  std::ofstream out = open_out(path);
  write_graph_tsv(out, g);
}

void write_path_csv(std::ostream& out, const PathSolution& path) {
  out << "gamma,cluster_count,objective,kkt_residual\n";
  for (const PathPoint& pt : path.points) {
    out << format_double(pt.gamma) << ',' << pt.cluster_count << ',' << format_double(pt.objective)
        << ',' << format_double(pt.kkt_residual) << '\n';
  }
}

void write_path_centroids(const fs::path& dir, const PathSolution& path) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    write_matrix_csv(dir / ("centroids_" + std::to_string(i) + ".csv"), path.points[i].centroids);
  }
}

std::string diagnostics_json(const DiagnosticsReport& r) {
  nlohmann::ordered_json j;
  j["oracle_term"] = r.oracle_term;
  j["fdagger_e_max"] = r.fdagger_e_max;
  j["between_edges"] = r.between_edges;
  j["theorem_rhs"] = r.theorem_rhs;
  j["crude_rhs"] = r.crude_rhs;
  j["gamma_threshold"] = r.gamma_threshold;
  j["penalty_sum"] = r.penalty_sum;
  return j.dump(2);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

}  // namespace clusterpath
