#pragma once

#include <stdexcept>
#include <string>

namespace clusterpath {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on a scalar or shape argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The affinity graph does not satisfy a structural requirement
/// (connectivity, non-bipartiteness, edge existence).
class InvalidGraph : public Error {
 public:
  using Error::Error;
};

/// Raised where a random-walk bound requires a non-bipartite graph.
class BipartiteGraph : public InvalidGraph {
 public:
  using InvalidGraph::InvalidGraph;
};

/// ADMM did not reach the requested tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double gamma, double primal_residual,
              double dual_residual, int iterations)
      : Error(what),
        gamma_(gamma),
        primal_residual_(primal_residual),
        dual_residual_(dual_residual),
        iterations_(iterations) {}

  double gamma() const { return gamma_; }
  double primal_residual() const { return primal_residual_; }
  double dual_residual() const { return dual_residual_; }
  int iterations() const { return iterations_; }

 private:
  double gamma_;
  double primal_residual_;
  double dual_residual_;
  int iterations_;
};

/// File could not be read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace clusterpath
