#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "clusterpath/analysis.hpp"
#include "clusterpath/graph.hpp"
#include "clusterpath/solver.hpp"

namespace clusterpath {

/// Shortest-roundtrip-safe decimal: 17 significant digits.
std::string format_double(double value);

/// CSV, one row per sample, no header.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& M);
void write_matrix_csv(std::ostream& out, const Matrix& M);

/// One integer label per line.
Labels read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const Labels& labels);

/// "# n=<n>" header, then "j<TAB>k<TAB>weight" lines with 0-based j < k.
AffinityGraph read_graph_tsv(const std::filesystem::path& path);
AffinityGraph parse_graph_tsv(std::istream& in);
void write_graph_tsv(const std::filesystem::path& path, const AffinityGraph& g);
void write_graph_tsv(std::ostream& out, const AffinityGraph& g);

/// Columns gamma, cluster_count, objective, kkt_residual.
void write_path_csv(std::ostream& out, const PathSolution& path);

/// Writes <dir>/centroids_<index>.csv for every path point.
void write_path_centroids(const std::filesystem::path& dir, const PathSolution& path);

/// DiagnosticsReport as a JSON object with snake_case field keys.
std::string diagnostics_json(const DiagnosticsReport& report);

/// Writes text to path, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace clusterpath
