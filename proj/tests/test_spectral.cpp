#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "clusterpath/errors.hpp"
#include "clusterpath/spectral.hpp"
#include "test_support.hpp"

using namespace clusterpath;
using clusterpath::testing::dense_incidence;
using clusterpath::testing::random_connected_graph;
using clusterpath::testing::random_matrix;
using clusterpath::testing::svd_pinv;

namespace {

AffinityGraph path3() { return AffinityGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}}); }

AffinityGraph star4() { return AffinityGraph(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}}); }

// Mean first-passage time i -> j from simulated walks, with its standard error.
std::pair<double, double> simulate_hitting(const AffinityGraph& g, int from, int to, int walks,
                                           std::mt19937_64& rng) {
  std::vector<std::discrete_distribution<int>> step;
  for (int v = 0; v < g.num_nodes(); ++v) {
    std::vector<double> w;
    for (const auto& nb : g.neighbors(v)) w.push_back(g.edge(nb.edge).weight);
    step.emplace_back(w.begin(), w.end());
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int w = 0; w < walks; ++w) {
    int at = from;
    double steps = 0.0;
    while (at != to) {
      at = g.neighbors(at)[step[at](rng)].node;
      steps += 1.0;
    }
    sum += steps;
    sum_sq += steps * steps;
  }
  const double mean = sum / walks;
  const double var = sum_sq / walks - mean * mean;
  return {mean, std::sqrt(var / walks)};
}

}  // namespace

TEST_CASE("laplacian_pinv") {
  SUBCASE("single edge: L^dagger = L / 4") {
    const AffinityGraph g(2, {{0, 1, 1.0}});
    CHECK((laplacian_pinv(g) - g.laplacian() / 4.0).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("path graph annihilates the ones vector") {
    CHECK((laplacian_pinv(path3()) * Vector::Ones(3)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("unbridged clique pair on the bridge graph: 8 / n^2") {
    const SpectralBundle b = make_spectral_bundle(bridge_oracle_graph(10, 3));
    // Nodes 3 and 4 are the unbridged pair in the first clique.
    const double sq = (b.laplacian_pinv.col(3) - b.laplacian_pinv.col(4)).squaredNorm();
    CHECK(sq == doctest::Approx(0.08).epsilon(1e-12));
  }
  SUBCASE("Moore-Penrose identities and agreement with an SVD oracle") {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 20; ++rep) {
      const AffinityGraph g = random_connected_graph(rng, 5 + rep, 0.35, rep % 2 == 0);
      const Matrix L = g.laplacian();
      const Matrix P = laplacian_pinv(g);
      CHECK((L * P * L - L).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((P * L * P - P).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((P * Vector::Ones(g.num_nodes())).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((P - svd_pinv(L)).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((P - laplacian_pinv(g, PinvMethod::Eigen)).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
  SUBCASE("disconnected graph") {
    CHECK_THROWS_AS(laplacian_pinv(AffinityGraph(3, {{0, 1, 1.0}})), InvalidGraph);
  }
  SUBCASE("bundle invariants") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 10; ++rep) {
      const SpectralBundle b = make_spectral_bundle(random_connected_graph(rng, 12, 0.3));
      CHECK(b.spectral_gap > 0.0);
      CHECK(b.spectral_gap <= 2.0);
    }
  }
}

TEST_CASE("fdagger_row") {
  SUBCASE("single edge") {
    const AffinityGraph g(2, {{0, 1, 1.0}});
    const Vector row = fdagger_row(g, make_spectral_bundle(g), 0, 1);
    CHECK(row[0] == doctest::Approx(0.5));
    CHECK(row[1] == doctest::Approx(-0.5));
    CHECK(row.norm() == doctest::Approx(std::sqrt(2.0) / 2.0));
  }
  SUBCASE("complete graph rows have norm sqrt(2)/n") {
    for (int n : {3, 7, 20}) {
      const AffinityGraph g = complete_graph(n);
      const Vector norms = fdagger_row_norms(g, make_spectral_bundle(g));
      CHECK((norms.array() - std::sqrt(2.0) / n).abs().maxCoeff() <= 1e-10);
    }
  }
  SUBCASE("mixed clique edge on bridge_oracle_graph(10, 3)") {
    const AffinityGraph g = bridge_oracle_graph(10, 3);
    const SpectralBundle b = make_spectral_bundle(g);
    const Vector row = fdagger_row(g, b, 0, 4);  // node 0 bridged, node 4 not
    const double closed = *bridge_oracle_closed_form(10, 3).mixed_pair;
    CHECK(closed == doctest::Approx(14920.0 / 176400.0).epsilon(1e-14));
    CHECK(std::abs(row.squaredNorm() - closed) <= 1e-10);
    CHECK(std::abs(row.sum()) <= 1e-12);
  }
  SUBCASE("orientation only flips the sign") {
    std::mt19937_64 rng(8);
    const AffinityGraph g = random_connected_graph(rng, 10, 0.4, true);
    const SpectralBundle b = make_spectral_bundle(g);
    for (const Edge& e : g.edges()) {
      const Vector fwd = fdagger_row(g, b, e.tail, e.head);
      const Vector rev = fdagger_row(g, b, e.head, e.tail);
      CHECK((fwd + rev).cwiseAbs().maxCoeff() <= 1e-14);
      CHECK(fwd.norm() == doctest::Approx(rev.norm()).epsilon(1e-14));
    }
  }
  SUBCASE("missing edge") {
    const AffinityGraph g = path3();
    CHECK_THROWS_AS(fdagger_row(g, make_spectral_bundle(g), 0, 2), InvalidGraph);
  }
}

TEST_CASE("fdagger_matrix") {
  SUBCASE("complete graph n = 3 is F^T / 3") {
    const AffinityGraph g = complete_graph(3);
    const Matrix fd = fdagger_matrix(g, make_spectral_bundle(g));
    CHECK((fd - dense_incidence(g).transpose() / 3.0).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("star graph rows sum to zero") {
    const AffinityGraph g = star4();
    const Matrix fd = fdagger_matrix(g, make_spectral_bundle(g));
    CHECK(fd.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("properties on random connected graphs") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 100; ++rep) {
      std::uniform_int_distribution<int> size(4, 40);
      const int n = size(rng);
      const bool weighted = rep % 3 == 0;
      const AffinityGraph g = random_connected_graph(rng, n, 0.25, weighted);
      const SpectralBundle b = make_spectral_bundle(g);
      const Matrix fd = fdagger_matrix(g, b);
      const Matrix F = dense_incidence(g);
      // Independent route: SVD pseudoinverse of the dense incidence matrix.
      CHECK((fd - svd_pinv(F)).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK(fd.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-8 * n);
      // F^dagger F is the projection I - J/n onto the complement of the ones vector.
      const Matrix proj = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
      CHECK((fd.transpose() * F.transpose() - proj).cwiseAbs().maxCoeff() <= 1e-8);
      if (!weighted) CHECK(fd.cwiseAbs().maxCoeff() <= 1.0 + 1e-8);
      // fdagger_apply agrees with the materialized matrix.
      const Matrix Y = random_matrix(rng, n, 2);
      CHECK((fdagger_apply(g, b, Y) - fd * Y).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("null space projection") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const AffinityGraph g = random_connected_graph(rng, 6 + rep, 0.3, rep % 2 == 1);
    const int n = g.num_nodes();
    const SpectralBundle b = make_spectral_bundle(g);
    const Matrix U = random_matrix(rng, n, 3);
    // F^dagger^T (F^T U) reproduces U minus its column means.
    const Matrix back = fdagger_matrix(g, b).transpose() * incidence_apply(g, U);
    const Matrix mean = Matrix::Constant(n, n, 1.0 / n) * U;
    CHECK((U - back - mean).norm() <= 1e-8 * U.norm());
  }
}

TEST_CASE("hitting_times") {
  SUBCASE("single edge") {
    const WalkTimes t = hitting_times(AffinityGraph(2, {{0, 1, 1.0}}));
    CHECK(t.hitting(0, 1) == doctest::Approx(1.0));
    CHECK(t.hitting(1, 0) == doctest::Approx(1.0));
    CHECK(t.commute(0, 1) == doctest::Approx(2.0));
    CHECK(t.hitting(0, 0) == 0.0);
  }
  SUBCASE("path graph against simulated walks") {
    const AffinityGraph g = path3();
    const WalkTimes t = hitting_times(g);
    CHECK(t.hitting(0, 2) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(t.commute(0, 2) == doctest::Approx(8.0).epsilon(1e-12));
    const SpectralBundle b = make_spectral_bundle(g);
    CHECK(b.volume * effective_resistance(b, 0, 2) == doctest::Approx(8.0).epsilon(1e-12));
    std::mt19937_64 rng(99);
    const auto [mean, se] = simulate_hitting(g, 0, 2, 1000000, rng);
    CHECK(std::abs(mean - 4.0) <= 0.01 * 4.0);
    CHECK(std::abs(mean - 4.0) <= 4.0 * se);
  }
  SUBCASE("small weighted graphs against simulated walks, 3 standard errors") {
    std::mt19937_64 rng(31);
    int outside = 0;
    int total = 0;
    for (int rep = 0; rep < 6; ++rep) {
      const AffinityGraph g = random_connected_graph(rng, 4 + rep % 5, 0.5, true);
      const WalkTimes t = hitting_times(g);
      for (int i = 0; i < g.num_nodes(); ++i) {
        const int j = (i + 1) % g.num_nodes();
        const auto [mean, se] = simulate_hitting(g, i, j, 20000, rng);
        outside += std::abs(mean - t.hitting(i, j)) > 3.0 * se ? 1 : 0;
        ++total;
      }
    }
    // A 3-sigma band holds for ~99.7% of estimates; allow one stray.
    CHECK(outside <= 1);
    CHECK(total >= 30);
  }
  SUBCASE("commute time equals volume times effective resistance") {
    std::mt19937_64 rng(41);
    for (int rep = 0; rep < 20; ++rep) {
      const AffinityGraph g = random_connected_graph(rng, 5 + rep, 0.3, true);
      const WalkTimes t = hitting_times(g);
      const SpectralBundle b = make_spectral_bundle(g);
      CHECK((t.hitting.array() >= -1e-12).all());
      CHECK((t.commute - t.commute.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
      for (int j = 0; j < g.num_nodes(); ++j) {
        for (int k = j + 1; k < g.num_nodes(); ++k) {
          const Vector e = Vector::Unit(g.num_nodes(), j) - Vector::Unit(g.num_nodes(), k);
          const double rhs = b.volume * e.dot(b.laplacian_pinv * e);
          CHECK(std::abs(t.commute(j, k) - rhs) <= 1e-6 * std::max(1.0, rhs));
        }
      }
    }
  }
  SUBCASE("disconnected") {
    CHECK_THROWS_AS(hitting_times(AffinityGraph(3, {{0, 1, 1.0}})), InvalidGraph);
  }
}

TEST_CASE("F^dagger rows from commute times") {
  std::mt19937_64 rng(43);
  for (int rep = 0; rep < 10; ++rep) {
    const AffinityGraph g = random_connected_graph(rng, 6 + rep, 0.35, true);
    const int n = g.num_nodes();
    const SpectralBundle b = make_spectral_bundle(g);
    const WalkTimes t = hitting_times(g);
    const Matrix center = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
    for (const Edge& e : g.edges()) {
      const Vector expected = std::sqrt(e.weight) / (2.0 * b.volume) * center *
                              (t.commute.col(e.head) - t.commute.col(e.tail));
      CHECK((fdagger_row(g, b, e.tail, e.head) - expected).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("effective_resistance") {
  const AffinityGraph one(2, {{0, 1, 1.0}});
  CHECK(effective_resistance(make_spectral_bundle(one), 0, 1) == doctest::Approx(1.0));
  CHECK(effective_resistance(make_spectral_bundle(path3()), 0, 2) == doctest::Approx(2.0));
  for (int n : {4, 9}) {
    const SpectralBundle b = make_spectral_bundle(complete_graph(n));
    CHECK(effective_resistance(b, 0, n - 1) == doctest::Approx(2.0 / n).epsilon(1e-12));
  }
  CHECK_THROWS_AS(effective_resistance(make_spectral_bundle(path3()), 1, 1), InvalidArgument);

  // Adjacent nodes of unweighted graphs: F^dagger_{e,j} - F^dagger_{e,k} = R_jk in [0, 1].
  std::mt19937_64 rng(47);
  for (int rep = 0; rep < 10; ++rep) {
    const AffinityGraph g = random_connected_graph(rng, 8 + rep, 0.3);
    const SpectralBundle b = make_spectral_bundle(g);
    for (const Edge& e : g.edges()) {
      const Vector row = fdagger_row(g, b, e.tail, e.head);
      const double r = effective_resistance(b, e.tail, e.head);
      CHECK(std::abs(row[e.tail] - row[e.head] - r) <= 1e-10);
      CHECK(r >= 0.0);
      CHECK(r <= 1.0 + 1e-10);
    }
  }
}

TEST_CASE("spectral_gap") {
  CHECK(spectral_gap(complete_graph(4)) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(spectral_gap(complete_graph(11)) == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(spectral_gap(AffinityGraph(2, {{0, 1, 1.0}})) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(spectral_gap(AffinityGraph(3, {{0, 1, 1.0}})), InvalidGraph);

  // Oracle: general eigensolver on the non-symmetric walk matrix D^{-1} Phi.
  for (const AffinityGraph& g : {bridge_oracle_graph(10, 3), bridge_oracle_graph(14, 2)}) {
    const Matrix P = g.degrees().degrees.cwiseInverse().asDiagonal() * g.adjacency();
    Eigen::EigenSolver<Matrix> eig(P, false);
    std::vector<double> values;
    for (Eigen::Index i = 0; i < P.rows(); ++i) values.push_back(eig.eigenvalues()[i].real());
    std::sort(values.rbegin(), values.rend());
    const double gap = spectral_gap(g);
    CHECK(gap > 0.0);
    CHECK(gap < 2.0);
    CHECK(std::abs(gap - (1.0 - values[1])) <= 1e-10);
  }
}

TEST_CASE("hitting-time concentration check") {
  SUBCASE("complete graph and bridge graph: no violations, LHS recomputed independently") {
    for (const AffinityGraph& g : {complete_graph(10), bridge_oracle_graph(10, 3)}) {
      const SpectralBundle b = make_spectral_bundle(g);
      const WalkTimes t = hitting_times(g);
      const HittingConcentrationReport r = luxburg_bound_check(g, t, b);
      CHECK_FALSE(r.violated);
      const Vector d = g.degrees().degrees;
      double lhs = 0.0;
      for (int i = 0; i < g.num_nodes(); ++i) {
        for (int j = 0; j < g.num_nodes(); ++j) {
          if (i != j) lhs = std::max(lhs, std::abs(t.hitting(i, j) / b.volume - 1.0 / d[j]));
        }
      }
      CHECK(r.max_deviation == doctest::Approx(lhs).epsilon(1e-12));
      const double lambda2 = walk_spectrum(g)[1];
      const double rhs = 2.0 * (1.0 / (1.0 - lambda2) + 1.0) * 1.0 / (d.minCoeff() * d.minCoeff());
      CHECK(r.bound == doctest::Approx(rhs).epsilon(1e-12));
      CHECK(lhs <= rhs);
    }
  }
  SUBCASE("bipartite input is rejected") {
    const AffinityGraph g(2, {{0, 1, 1.0}});
    CHECK_THROWS_AS(luxburg_bound_check(g, hitting_times(g), make_spectral_bundle(g)),
                    BipartiteGraph);
    CHECK_THROWS_AS(fdagger_entry_bounds_check(g, make_spectral_bundle(g), hitting_times(g)),
                    BipartiteGraph);
  }
}

TEST_CASE("entrywise F^dagger bounds") {
  std::vector<AffinityGraph> graphs{complete_graph(6), bridge_oracle_graph(12, 4)};
  const Labels labels = block_labels(50, 2);
  for (std::uint64_t seed = 1;; ++seed) {
    const AffinityGraph g = sbm_graph({50, 0.5, 0.1, seed}, labels);
    if (is_connected(g) && !is_bipartite(g)) {
      graphs.push_back(g);
      break;
    }
  }
  for (const AffinityGraph& g : graphs) {
    const SpectralBundle b = make_spectral_bundle(g);
    const EntryBoundReport r = fdagger_entry_bounds_check(g, b, hitting_times(g));
    CHECK_FALSE(r.violated);
    CHECK(r.checked == g.num_edges() * static_cast<std::size_t>(g.num_nodes()));
    CHECK(r.min_slack_interior >= 0.0);
    CHECK(r.min_slack_endpoint >= 0.0);
  }
}

TEST_CASE("bridge graph closed forms against the numeric pseudoinverse") {
  for (const auto& [n, k] : std::vector<std::pair<int, int>>{
           {6, 1}, {10, 1}, {10, 3}, {10, 5}, {12, 4}, {14, 2}, {20, 5}, {30, 4}, {30, 15}}) {
    const AffinityGraph g = bridge_oracle_graph(n, k);
    const SpectralBundle b = make_spectral_bundle(g);
    const BridgeOracleNorms closed = bridge_oracle_closed_form(n, k);
    CHECK(closed.unbridged_pair.has_value() == (k <= n / 2 - 2));
    CHECK(closed.bridged_pair.has_value() == (k >= 2));
    CHECK(closed.mixed_pair.has_value() == (k < n / 2));
    for (const Edge& e : g.edges()) {
      const double numeric = (b.laplacian_pinv.col(e.tail) - b.laplacian_pinv.col(e.head)).squaredNorm();
      double expected = 0.0;
      switch (classify_bridge_oracle_edge(n, k, e)) {
        case BridgeEdgeClass::UnbridgedPair: expected = closed.unbridged_pair.value(); break;
        case BridgeEdgeClass::MixedPair: expected = closed.mixed_pair.value(); break;
        case BridgeEdgeClass::BridgedPair: expected = closed.bridged_pair.value(); break;
        case BridgeEdgeClass::Bridge: expected = closed.bridge; break;
      }
      CHECK(std::abs(numeric - expected) <= 1e-10);
    }
    // The maximal row norm is always attained on a bridge.
    const Vector norms = fdagger_row_norms(g, b);
    Eigen::Index arg = 0;
    norms.maxCoeff(&arg);
    CHECK(classify_bridge_oracle_edge(n, k, g.edge(static_cast<std::size_t>(arg))) ==
          BridgeEdgeClass::Bridge);
  }
  CHECK_THROWS_AS(bridge_oracle_closed_form(7, 1), InvalidArgument);
  CHECK_THROWS_AS(bridge_oracle_closed_form(10, 6), InvalidArgument);
}
