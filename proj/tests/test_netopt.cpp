#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "rescomp/analysis.hpp"
#include "rescomp/error.hpp"
#include "rescomp/netopt.hpp"

using namespace rescomp;
using namespace rescomp::netopt;
using graphkit::uniform_weights;

namespace {

oracle::Objective objective(const Metric& m) {
  return {m.kind == Metric::Kind::kConsensusError, m.lambda, m.d, m.horizon};
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

}  // namespace

TEST_CASE("vertex-transitive graphs pick node 1") {
  for (const auto& t : {graphkit::cycle_graph(7), graphkit::petersen_graph(), graphkit::complete_graph(5)}) {
    const auto w = uniform_weights(t);
    CHECK(worst_case_node(w, Metric::consensus_error(0.3, 10.0)).node == 1);
    CHECK(worst_case_node(w, Metric::controllability_index(0.3)).node == 1);
  }
}

TEST_CASE("worst case node matches a rescan") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto w = uniform_weights(graphkit::gen_regular(20, 3, seed));
    for (const auto& m : {Metric::consensus_error(0.2, 10.0), Metric::controllability_index(0.4, 7)}) {
      const auto got = worst_case_node(w, m);
      const auto want = oracle::worst_node(w.entries(), objective(m));
      CHECK(got.node == want.node);
      CHECK(std::abs(got.value - want.value) <= 1e-9 * want.value);
      CHECK(got.value == evaluate_metric(w, m, got.node));
    }
  }
}

TEST_CASE("error and controllability may pick different nodes") {
  // Two K4 lobes bridged through node 5.
  std::vector<graphkit::Edge> edges;
  for (int base : {1, 6})
    for (int u = base; u < base + 4; ++u)
      for (int v = u + 1; v < base + 4; ++v) edges.push_back({u, v});
  for (int u : {1, 2, 6, 7}) edges.push_back(graphkit::make_edge(u, 5));
  const auto w = graphkit::reweigh(graphkit::Topology(9, edges));
  const auto pe = worst_case_node(w, Metric::consensus_error(0.5, 10.0));
  const auto pc = worst_case_node(w, Metric::controllability_index(0.5));
  MESSAGE("consensus error picks " << pe.node << ", controllability picks " << pc.node);
  CHECK(pe.node == oracle::worst_node(w.entries(), {true, 0.5, 10.0, 0}).node);
  CHECK(pc.node == oracle::worst_node(w.entries(), {false, 0.5, 0.0, 0}).node);
}

TEST_CASE("greedy with no removals") {
  const auto w = uniform_weights(graphkit::gen_regular(12, 4, 1));
  const auto trace = greedy_edge_removal(w, 0, Metric::consensus_error(0.7, 10.0));
  CHECK(trace.steps.empty());
  CHECK(trace.final_topology == trace.initial);
  CHECK(trace.final_weights.entries() == w.entries());
  CHECK(trace.initial_value == worst_case_node(w, Metric::consensus_error(0.7, 10.0)).value);
}

TEST_CASE("greedy matches exhaustive per-step argmin") {
  for (std::uint64_t seed : {3ULL, 4ULL}) {
    const auto w = uniform_weights(graphkit::gen_regular(12, 4, seed));
    for (const auto& metric : {Metric::consensus_error(0.7, 10.0), Metric::controllability_index(0.7)}) {
      const auto trace = greedy_edge_removal(w, 4, metric);
      REQUIRE(trace.steps.size() == 4);
      graphkit::Topology t = trace.initial;
      std::vector<int> removed(12, 0);
      for (const auto& step : trace.steps) {
        const auto want = oracle::best_removal(t, removed, objective(metric));
        REQUIRE(want.has_value());
        CHECK(step.edge == want->edge);
        CHECK(step.worst_node == want->worst.node);
        CHECK(std::abs(step.metric_value - want->worst.value) <= 1e-9 * want->worst.value);
        const graphkit::Edge drop[] = {step.edge};
        t = graphkit::remove_edges(t, drop);
        removed[step.edge.u - 1] = removed[step.edge.v - 1] = 1;
        CHECK(t.connected());
        CHECK(step.n_edges == static_cast<int>(t.edge_count()));
      }
      CHECK(t == trace.final_topology);
      for (int deg : trace.final_topology.degrees()) CHECK((deg == 3 || deg == 4));
      for (int c : trace.removal_counts) CHECK(c <= 1);
    }
  }
}

TEST_CASE("greedy errors") {
  const auto p = uniform_weights(graphkit::petersen_graph());
  CHECK(kind_of([&] { greedy_edge_removal(p, -1, Metric::consensus_error(0.5, 0.0)); }) == ErrorKind::kPrecondition);
  CHECK(kind_of([&] { greedy_edge_removal(p, 1, Metric::consensus_error(0.0, 0.0)); }) == ErrorKind::kPrecondition);
  const graphkit::Edge drop[] = {{1, 2}};
  const auto irregular = graphkit::reweigh(graphkit::remove_edges(graphkit::complete_graph(5), drop));
  CHECK(kind_of([&] { greedy_edge_removal(irregular, 1, Metric::consensus_error(0.5, 0.0)); }) ==
        ErrorKind::kPrecondition);
  // Every removal from a cycle leaves a path, which has no feasible weights.
  try {
    greedy_edge_removal(uniform_weights(graphkit::cycle_graph(6)), 1, Metric::consensus_error(0.5, 0.0));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInfeasible);
    CHECK(std::string(e.what()).find("0 of 1") != std::string::npos);
  }
}

TEST_CASE("greedy logs skipped candidates") {
  const auto trace = greedy_edge_removal(uniform_weights(graphkit::gen_regular(10, 3, 2)), 2,
                                         Metric::controllability_index(0.5));
  for (const auto& s : trace.skipped) {
    CHECK((s.reason == "disconnects" || s.reason == "infeasible-weights"));
    CHECK(s.step >= 1);
  }
  std::stringstream ss;
  write_trace_csv(ss, trace);
  std::string header, first;
  std::getline(ss, header);
  std::getline(ss, first);
  CHECK(header == "step,edge_u,edge_v,worst_node,metric_value,n_edges");
  CHECK(first.rfind("0,0,0,", 0) == 0);
}

TEST_CASE("matching prune") {
  CHECK(kind_of([] { matching_prune(uniform_weights(graphkit::cycle_graph(4))); }) == ErrorKind::kInfeasible);
  const auto w = uniform_weights(graphkit::gen_regular(50, 4, 9));
  const auto pruned = matching_prune(w);
  const auto t = pruned.support();
  CHECK(t.regular_degree() == 3);
  CHECK(t.edge_count() == 75);
  CHECK((pruned.entries() - uniform_weights(t).entries()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(kind_of([] { matching_prune(uniform_weights(graphkit::cycle_graph(5))); }) == ErrorKind::kInfeasible);
}

TEST_CASE("degree sweep") {
  SweepOptions opt;
  opt.n = 16;
  opt.degrees = {4};
  opt.trials = 3;
  opt.seed = 5;
  const auto rows = degree_sweep(opt);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].degree == 4);
  CHECK(rows[0].trials == 3);
  CHECK(rows[0].avg_worst_error > 0.0);
  CHECK(rows[0].avg_worst_contr_index > 0.0);
  const auto again = degree_sweep(opt);
  CHECK(again[0].avg_worst_error == rows[0].avg_worst_error);
  CHECK(again[0].avg_worst_contr_index == rows[0].avg_worst_contr_index);
  std::stringstream ss;
  write_sweep_csv(ss, rows);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "degree,avg_worst_error,avg_worst_contr_index,trials");
  opt.degrees = {3};
  opt.n = 15;
  CHECK_THROWS_AS(degree_sweep(opt), Error);
}

TEST_CASE("subset enumeration") {
  const auto s = enumerate_subsets(10, 2, 100);
  CHECK(s.size() == 45);
  CHECK(s.front() == std::vector<int>{1, 2});
  CHECK(s.back() == std::vector<int>{9, 10});
  try {
    enumerate_subsets(100, 4, 100000);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("m_count = 1") != std::string::npos);
  }
}

TEST_CASE("worst-case lambda on a vertex-transitive graph") {
  const auto w = uniform_weights(graphkit::petersen_graph());
  const auto got = worst_case_lambda(w, 1, 10.0);
  const int one[] = {1};
  const auto opt = analysis::optimize_lambda(graphkit::apply_malicious(w, one), 10.0);
  CHECK(std::abs(got.lambda - opt.lambda_star) <= 1e-5);
  CHECK(got.worst_subset == std::vector<int>{1});
}

TEST_CASE("worst-case lambda matches brute force for two adversaries") {
  const auto w = uniform_weights(graphkit::gen_regular(10, 3, 4));
  const auto got = worst_case_lambda(w, 2, 10.0);
  CHECK(got.lambda > 0.0);
  CHECK(got.lambda < 1.0);
  double best_l = 0.0, best_v = 1e300;
  for (int k = 1; k < 2000; ++k) {
    const double l = k / 2000.0;
    double env = 0.0;
    for (int a = 1; a <= 10; ++a)
      for (int b = a + 1; b <= 10; ++b) env = std::max(env, oracle::error(w.entries(), {a, b}, l, 10.0));
    if (env < best_v) {
      best_v = env;
      best_l = l;
    }
  }
  CHECK(std::abs(got.lambda - best_l) <= 1e-3);
  CHECK(got.value <= best_v + 1e-9);
  CHECK(got.value == doctest::Approx(oracle::error(w.entries(), got.worst_subset, got.lambda, 10.0)).epsilon(1e-10));
}
