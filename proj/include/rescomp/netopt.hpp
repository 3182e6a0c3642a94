#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rescomp/graphkit.hpp"

namespace rescomp::netopt {

using graphkit::Edge;
using graphkit::Topology;
using graphkit::WeightMatrix;

// Objective of the worst-case design problems: the adversary picks the node that
// maximizes the metric, the designer minimizes that maximum.
struct Metric {
  enum class Kind { kConsensusError, kControllabilityIndex };

  Kind kind = Kind::kConsensusError;
  double lambda = 0.5;
  double d = 0.0;   // consensus error only
  int horizon = 0;  // controllability index only; <= 0 means K = R

  static Metric consensus_error(double lambda, double d) { return {Kind::kConsensusError, lambda, d, 0}; }
  static Metric controllability_index(double lambda, int horizon = 0) {
    return {Kind::kControllabilityIndex, lambda, 0.0, horizon};
  }
  void validate() const;
};

std::string to_string(Metric::Kind kind);

// Metric value with `node` as the single malicious agent.
double evaluate_metric(const WeightMatrix& w, const Metric& metric, int node);

struct WorstCase {
  int node = 0;
  double value = 0.0;
};

// Scans every node as the malicious candidate; near-ties (relative 1e-9) go to the
// lowest label.
WorstCase worst_case_node(const WeightMatrix& w, const Metric& metric);

struct RemovalStep {
  Edge edge;
  double metric_value = 0.0;  // worst case after the removal
  int worst_node = 0;
  int n_edges = 0;  // edges left after the removal
};

struct SkippedCandidate {
  int step = 0;
  Edge edge;
  std::string reason;  // "disconnects" or "infeasible-weights"
};

struct RemovalTrace {
  Topology initial;
  Topology final_topology;
  WeightMatrix final_weights;
  double initial_value = 0.0;
  int initial_worst_node = 0;
  std::vector<RemovalStep> steps;
  std::vector<int> removal_counts;  // per node, index = label - 1
  std::vector<SkippedCandidate> skipped;
};

// Candidate edges have both endpoints untouched so far; each step removes the one
// minimizing the worst-case metric after reweighing (near-ties, relative 1e-9: smallest edge).
RemovalTrace greedy_edge_removal(const WeightMatrix& w, int e_rm, const Metric& metric);

// Removes a perfect matching from a regular graph and reweighs.
WeightMatrix matching_prune(const WeightMatrix& w);

struct SweepRow {
  int degree = 0;
  double avg_worst_error = 0.0;
  double avg_worst_contr_index = 0.0;
  int trials = 0;
};

struct SweepOptions {
  int n = 100;
  std::vector<int> degrees;
  int trials = 10;
  double lambda = 0.1;
  double d = 100.0;
  int horizon = 0;  // <= 0 means K = R
  std::uint64_t seed = 0;
};

std::vector<SweepRow> degree_sweep(const SweepOptions& options);

struct WorstCaseLambda {
  double lambda = 0.0;
  std::vector<int> worst_subset;
  double value = 0.0;  // max_M e_R at lambda
};

// min over lambda of max over |M| = m_count of e_R.
WorstCaseLambda worst_case_lambda(const WeightMatrix& w, int m_count, double d, long long subset_limit = 100000,
                                  int grid_size = 100, double tol = 1e-6);

// All size-k subsets of 1..n in lexicographic order (throws past `limit`).
std::vector<std::vector<int>> enumerate_subsets(int n, int k, long long limit);

// "step,edge_u,edge_v,worst_node,metric_value,n_edges"; step 0 is the initial graph.
void write_trace_csv(std::ostream& os, const RemovalTrace& trace);
// "degree,avg_worst_error,avg_worst_contr_index,trials"
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace rescomp::netopt
