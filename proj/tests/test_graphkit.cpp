#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "rescomp/error.hpp"
#include "rescomp/graphkit.hpp"

using namespace rescomp;
using namespace rescomp::graphkit;

namespace {

void check_weight_invariants(const WeightMatrix& w) {
  const Matrix& a = w.entries();
  for (int i = 0; i < w.n(); ++i) {
    CHECK(a(i, i) == 0.0);
    CHECK(std::abs(a.row(i).sum() - 1.0) <= 1e-10);
    CHECK(std::abs(a.col(i).sum() - 1.0) <= 1e-10);
  }
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(a.minCoeff() >= 0.0);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kPrecondition;
}

Topology random_graph(int n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int u = 1; u <= n; ++u)
    for (int v = u + 1; v <= n; ++v)
      if (coin(rng)) edges.push_back({u, v});
  return Topology(n, edges);
}

}  // namespace

TEST_CASE("topology rejects loops, duplicates and out-of-range endpoints") {
  CHECK_THROWS_AS(Topology(3, {{1, 1}}), Error);
  CHECK_THROWS_AS(Topology(3, {{1, 2}, {2, 1}}), Error);
  CHECK_THROWS_AS(Topology(3, {{1, 4}}), Error);
  const Topology t(4, {{3, 4}, {1, 2}});
  CHECK(t.edges().front() == Edge{1, 2});
  CHECK(t.degrees() == std::vector<int>{1, 1, 1, 1});
  CHECK_FALSE(t.connected());
}

TEST_CASE("gen_regular on four nodes of degree two is C4") {
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const Topology t = gen_regular(4, 2, seed);
    CHECK(t.edge_count() == 4);
    CHECK(t.regular_degree() == 2);
    CHECK(t.connected());
    for (int u = 1; u <= 4; ++u) CHECK(t.neighbors()[u - 1].size() == 2);
  }
}

TEST_CASE("gen_regular parity error") {
  try {
    gen_regular(5, 3, 0);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kPrecondition);
    CHECK(std::string(e.what()).find("parity") != std::string::npos);
  }
}

TEST_CASE("gen_regular 3-regular on 100 nodes") {
  const Topology t = gen_regular(100, 3, 7);
  CHECK(t.edge_count() == 150);
  std::vector<int> deg(101, 0);
  for (const auto& e : t.edges()) {
    ++deg[e.u];
    ++deg[e.v];
  }
  for (int u = 1; u <= 100; ++u) CHECK(deg[u] == 3);
  CHECK(oracle::connected(100, t.edges()));
  CHECK(gen_regular(100, 3, 7) == t);
  CHECK_FALSE(gen_regular(100, 3, 8) == t);
}

TEST_CASE("gen_regular degree histogram across sizes") {
  for (int n : {6, 10, 31, 50})
    for (int delta : {2, 3, 4, 5}) {
      if (n * delta % 2) continue;
      const Topology t = gen_regular(n, delta, static_cast<std::uint64_t>(n * 10 + delta));
      for (int d : t.degrees()) CHECK(d == delta);
      CHECK(oracle::connected(n, t.edges()));
    }
}

TEST_CASE("gen_regular argument checks") {
  CHECK(kind_of([] { gen_regular(2, 1, 0); }) == ErrorKind::kPrecondition);
  CHECK(kind_of([] { gen_regular(6, 6, 0); }) == ErrorKind::kPrecondition);
  // 1-regular graphs on more than two nodes are never connected.
  CHECK(kind_of([] { gen_regular(6, 1, 0, {5}); }) == ErrorKind::kGeneration);
}

TEST_CASE("uniform_weights") {
  const WeightMatrix c4 = uniform_weights(cycle_graph(4));
  const Topology cycle = cycle_graph(4);
  for (const auto& e : cycle.edges()) CHECK(c4(e.u, e.v) == 0.5);
  check_weight_invariants(c4);
  const WeightMatrix w3 = uniform_weights(gen_regular(20, 3, 1));
  const Topology support = w3.support();
  for (const auto& e : support.edges()) CHECK(w3(e.u, e.v) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  check_weight_invariants(w3);
  try {
    uniform_weights(path_graph(3));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("reweigh") != std::string::npos);
  }
}

TEST_CASE("reweigh") {
  const WeightMatrix c4 = reweigh(cycle_graph(4));
  CHECK((c4.entries() - uniform_weights(cycle_graph(4)).entries()).cwiseAbs().maxCoeff() <= 1e-10);
  for (int delta : {3, 4, 6}) {
    const Topology t = gen_regular(16, delta, 3);
    CHECK((reweigh(t).entries() - uniform_weights(t).entries()).cwiseAbs().maxCoeff() <= 1e-10);
  }
  try {
    reweigh(star_graph(3));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInfeasible);
    CHECK(std::string(e.what()).find("infeasible pattern") != std::string::npos);
  }
  CHECK(kind_of([] { reweigh(path_graph(4)); }) == ErrorKind::kInfeasible);
}

TEST_CASE("reweigh keeps support on non-regular feasible patterns") {
  const Topology base = gen_regular(12, 4, 5);
  const Edge drop[] = {base.edges()[0], base.edges().back()};
  const Topology t = remove_edges(base, drop);
  REQUIRE(t.connected());
  const WeightMatrix w = reweigh(t);
  check_weight_invariants(w);
  CHECK(w.support() == t);
}

TEST_CASE("weight matrix validation") {
  Matrix a = uniform_weights(cycle_graph(4)).entries();
  a(0, 1) += 1e-6;
  CHECK_THROWS_AS(WeightMatrix::from_matrix(a), Error);
  Matrix b = Matrix::Zero(4, 4);
  b(0, 1) = b(1, 0) = b(2, 3) = b(3, 2) = 1.0;
  CHECK_THROWS_AS(WeightMatrix::from_matrix(b), Error);  // disconnected
  Matrix c = Matrix::Constant(3, 3, 1.0 / 3);
  CHECK_THROWS_AS(WeightMatrix::from_matrix(c), Error);  // diagonal
}

TEST_CASE("apply_malicious on C4") {
  const WeightMatrix w = uniform_weights(cycle_graph(4));
  const int mal[] = {4};
  const auto op = apply_malicious(w, mal);
  CHECK(op.r() == 3);
  CHECK(op.m() == 1);
  for (int j = 0; j < 4; ++j) CHECK(op.entries()(3, j) == (j == 3 ? 1.0 : 0.0));
  CHECK(op.w12().col(0) == Vector::Map(std::vector<double>{0.5, 0.0, 0.5}.data(), 3));
  CHECK(kind_of([&] { apply_malicious(w, std::span<const int>{}); }) == ErrorKind::kPrecondition);
  const int all[] = {1, 2, 3, 4};
  CHECK(kind_of([&] { apply_malicious(w, all); }) == ErrorKind::kPrecondition);
}

TEST_CASE("apply_malicious keeps regular rows bit-exact") {
  const WeightMatrix w = uniform_weights(gen_regular(100, 3, 7));
  const int mal[] = {58, 17};
  const auto op = apply_malicious(w, mal);
  CHECK(op.malicious() == std::vector<int>{58, 17});
  const Matrix expect = oracle::operated(w.entries(), {58, 17});
  CHECK(op.entries() == expect);
  int basis_rows = 0;
  for (int i = 0; i < 100; ++i) {
    if (op.is_malicious(i + 1)) {
      ++basis_rows;
      CHECK(op.entries().row(i).sum() == 1.0);
    } else {
      CHECK(op.entries().row(i) == w.entries().row(i));
    }
  }
  CHECK(basis_rows == 2);
  // Block layout after permutation.
  const Matrix& p = op.permuted();
  CHECK(p.bottomLeftCorner(2, 98).isZero(0.0));
  CHECK(p.bottomRightCorner(2, 2) == Matrix::Identity(2, 2));
  CHECK(p.topLeftCorner(98, 98) == op.w11());
  CHECK(p.topRightCorner(98, 2) == op.w12());
  const Matrix back = op.to_labels(op.permuted());
  CHECK(back == op.entries());
  for (int label : op.regular()) CHECK(back.row(label - 1) == w.entries().row(label - 1));
}

TEST_CASE("label round trip") {
  const WeightMatrix w = uniform_weights(gen_regular(10, 3, 2));
  const int mal[] = {7, 2};
  const auto op = apply_malicious(w, mal);
  Vector v(10);
  for (int i = 0; i < 10; ++i) v(i) = i + 1;
  const Vector internal = op.to_internal(v);
  for (int k = 0; k < 10; ++k) CHECK(internal(k) == op.order()[k]);
  CHECK(op.to_labels(internal) == v);
}

TEST_CASE("max_matching named graphs") {
  const auto c4 = max_matching(cycle_graph(4));
  CHECK(c4.is_perfect);
  CHECK(c4.edges == std::vector<Edge>{{1, 2}, {3, 4}});
  const auto c5 = max_matching(cycle_graph(5));
  CHECK(c5.edges.size() == 2);
  CHECK_FALSE(c5.is_perfect);
  const Topology pg = petersen_graph();
  CHECK(pg.edge_count() == 15);
  CHECK(pg.regular_degree() == 3);
  const auto pm = max_matching(pg);
  CHECK(pm.edges.size() == 5);
  CHECK(pm.is_perfect);
  CHECK(oracle::max_matching_size(10, pg.edges()) == 5);
}

TEST_CASE("max_matching equals exhaustive search on small graphs") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  while (checked < 300) {
    const int n = 3 + static_cast<int>(rng() % 7);
    const Topology t = random_graph(n, 0.45, rng);
    if (t.edge_count() > 12) continue;
    const auto m = max_matching(t);
    CHECK(oracle::is_matching(m.edges, n));
    for (const auto& e : m.edges) CHECK(t.has_edge(e));
    CHECK(static_cast<int>(m.edges.size()) == oracle::max_matching_size(n, t.edges()));
    CHECK(m.is_perfect == (2 * static_cast<int>(m.edges.size()) == n));
    ++checked;
  }
}

TEST_CASE("remove_edges") {
  const Topology c4 = cycle_graph(4);
  const Edge one[] = {{1, 2}};
  const Topology p = remove_edges(c4, one);
  CHECK(p.degrees() == std::vector<int>{1, 1, 2, 2});
  CHECK(p.connected());
  CHECK(c4.edge_count() == 4);
  CHECK(remove_edges(c4, std::span<const Edge>{}) == c4);
  const Edge bad[] = {{1, 3}};
  try {
    remove_edges(c4, bad);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("(1,3)") != std::string::npos);
  }
  const Topology g = gen_regular(12, 4, 11);
  const auto m = max_matching(g);
  REQUIRE(m.is_perfect);
  CHECK(m.edges.size() == 6);
  CHECK(remove_edges(g, m.edges).regular_degree() == 3);
}

TEST_CASE("edge list and weights round trip") {
  const Topology t = gen_regular(14, 4, 4);
  std::stringstream ss;
  write_edge_list(ss, t);
  CHECK(ss.str().rfind("n 14\n", 0) == 0);
  CHECK(read_edge_list(ss) == t);
  const WeightMatrix w = reweigh(remove_edges(t, std::vector<Edge>{t.edges()[3]}));
  std::stringstream ws;
  write_weights_csv(ws, w);
  CHECK(read_weights_csv(ws).entries() == w.entries());
  std::stringstream bad("n 3\n1 5\n");
  CHECK_THROWS_AS(read_edge_list(bad), Error);
}
