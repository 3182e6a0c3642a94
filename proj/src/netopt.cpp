#include "rescomp/netopt.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <tuple>

#include "rescomp/analysis.hpp"
#include "rescomp/control.hpp"
#include "rescomp/error.hpp"
#include "rescomp/parallel.hpp"
#include "rescomp/scalar_search.hpp"

namespace rescomp::netopt {

namespace {

constexpr double kTieTolerance = 1e-9;

bool clearly_greater(double candidate, double incumbent) {
  return candidate > incumbent + kTieTolerance * std::max(1.0, std::abs(incumbent));
}

bool clearly_less(double candidate, double incumbent) {
  return candidate < incumbent - kTieTolerance * std::max(1.0, std::abs(incumbent));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t a, std::uint32_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), a, b};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

void Metric::validate() const {
  require(lambda > 0.0 && lambda <= 1.0, "metric lambda must lie in (0, 1]");
  require(d >= 0.0 && std::isfinite(d), "metric d must be finite and >= 0");
}

std::string to_string(Metric::Kind kind) {
  return kind == Metric::Kind::kConsensusError ? "consensus_error" : "controllability_index";
}

double evaluate_metric(const WeightMatrix& w, const Metric& metric, int node) {
  const int malicious[] = {node};
  const auto op = graphkit::apply_malicious(w, malicious);
  if (metric.kind == Metric::Kind::kConsensusError) return analysis::error_closed_form(op, metric.lambda, metric.d);
  return control::controllability_index(op, metric.lambda, node, metric.horizon);
}

WorstCase worst_case_node(const WeightMatrix& w, const Metric& metric) {
  metric.validate();
  const auto values = parallel_map(static_cast<std::size_t>(w.n()),
                                   [&](std::size_t k) { return evaluate_metric(w, metric, static_cast<int>(k) + 1); });
  WorstCase best{1, values[0]};
  for (int k = 1; k < w.n(); ++k) {
    if (clearly_greater(values[k], best.value)) best = {k + 1, values[k]};
  }
  return best;
}

RemovalTrace greedy_edge_removal(const WeightMatrix& w, int e_rm, const Metric& metric) {
  metric.validate();
  require(e_rm >= 0, "number of edges to remove must be >= 0");
  const Topology initial = w.support();
  if (!initial.regular_degree()) fail(ErrorKind::kPrecondition, "greedy edge removal needs a regular input graph");

  const WorstCase start = worst_case_node(w, metric);
  RemovalTrace trace{initial, initial, w, start.value, start.node, {}, std::vector<int>(initial.n(), 0), {}};

  for (int step = 1; step <= e_rm; ++step) {
    std::vector<Edge> candidates;
    for (const auto& e : trace.final_topology.edges())
      if (trace.removal_counts[e.u - 1] == 0 && trace.removal_counts[e.v - 1] == 0) candidates.push_back(e);

    struct Outcome {
      bool usable = false;
      std::string reason;
      WorstCase worst;
    };
    const auto outcomes = parallel_map(candidates.size(), [&](std::size_t k) {
      Outcome o;
      const Edge drop[] = {candidates[k]};
      const Topology t = graphkit::remove_edges(trace.final_topology, drop);
      if (!t.connected()) {
        o.reason = "disconnects";
        return o;
      }
      try {
        o.worst = worst_case_node(graphkit::reweigh(t), metric);
        o.usable = true;
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::kInfeasible) throw;
        o.reason = "infeasible-weights";
      }
      return o;
    });

    std::size_t chosen = candidates.size();
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (!outcomes[k].usable) {
        trace.skipped.push_back({step, candidates[k], outcomes[k].reason});
        continue;
      }
      if (chosen == candidates.size() || clearly_less(outcomes[k].worst.value, outcomes[chosen].worst.value)) chosen = k;
    }
    if (chosen == candidates.size()) {
      fail(ErrorKind::kInfeasible, "greedy edge removal: candidate set exhausted after " + std::to_string(step - 1) +
                                       " of " + std::to_string(e_rm) + " removals");
    }
    const Edge e = candidates[chosen];
    const Edge drop[] = {e};
    trace.final_topology = graphkit::remove_edges(trace.final_topology, drop);
    trace.final_weights = graphkit::reweigh(trace.final_topology);
    ++trace.removal_counts[e.u - 1];
    ++trace.removal_counts[e.v - 1];
    trace.steps.push_back({e, outcomes[chosen].worst.value, outcomes[chosen].worst.node,
                           static_cast<int>(trace.final_topology.edge_count())});
  }
  return trace;
}

WeightMatrix matching_prune(const WeightMatrix& w) {
  const Topology t = w.support();
  const auto delta = t.regular_degree();
  if (!delta) fail(ErrorKind::kPrecondition, "matching prune needs a regular graph");
  const auto matching = graphkit::max_matching(t);
  if (!matching.is_perfect) fail(ErrorKind::kInfeasible, "graph admits no perfect matching");
  const Topology pruned = graphkit::remove_edges(t, matching.edges);
  if (!pruned.connected()) fail(ErrorKind::kInfeasible, "removing the perfect matching disconnects the graph");
  return graphkit::reweigh(pruned);
}

std::vector<SweepRow> degree_sweep(const SweepOptions& options) {
  require(options.trials >= 1, "degree sweep needs at least one trial");
  require(!options.degrees.empty(), "degree sweep needs at least one degree");
  const Metric err = Metric::consensus_error(options.lambda, options.d);
  const Metric contr = Metric::controllability_index(options.lambda, options.horizon);
  err.validate();

  std::vector<SweepRow> rows;
  for (int delta : options.degrees) {
    require(delta >= 2 && delta < options.n && (options.n * delta) % 2 == 0,
            "degree " + std::to_string(delta) + " infeasible for n = " + std::to_string(options.n));
    const auto samples = parallel_map(static_cast<std::size_t>(options.trials), [&](std::size_t t) {
      const auto seed = derive_seed(options.seed, static_cast<std::uint32_t>(delta), static_cast<std::uint32_t>(t));
      const auto w = graphkit::uniform_weights(graphkit::gen_regular(options.n, delta, seed));
      return std::pair{worst_case_node(w, err).value, worst_case_node(w, contr).value};
    });
    SweepRow row{delta, 0.0, 0.0, options.trials};
    for (const auto& [e, c] : samples) {
      row.avg_worst_error += e;
      row.avg_worst_contr_index += c;
    }
    row.avg_worst_error /= options.trials;
    row.avg_worst_contr_index /= options.trials;
    rows.push_back(row);
  }
  return rows;
}

std::vector<std::vector<int>> enumerate_subsets(int n, int k, long long limit) {
  require(k >= 1 && k < n, "subset size must satisfy 1 <= k < n");
  long double count = 1.0L;
  for (int i = 1; i <= k; ++i) count = count * (n - k + i) / i;
  if (count > static_cast<long double>(limit)) {
    fail(ErrorKind::kPrecondition, "worst-case search over " + std::to_string(static_cast<long long>(count)) +
                                       " subsets exceeds the budget of " + std::to_string(limit) +
                                       "; use m_count = 1 or a smaller graph");
  }
  std::vector<std::vector<int>> out;
  std::vector<int> cur(k);
  for (int i = 0; i < k; ++i) cur[i] = i + 1;
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == n - k + i + 1) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

WorstCaseLambda worst_case_lambda(const WeightMatrix& w, int m_count, double d, long long subset_limit,
                                  int grid_size, double tol) {
  require(d >= 0.0, "d must be >= 0");
  require(grid_size >= 16, "worst_case_lambda needs grid_size >= 16");
  const auto subsets = enumerate_subsets(w.n(), m_count, subset_limit);
  std::vector<graphkit::OperatedWeights> ops;
  ops.reserve(subsets.size());
  for (const auto& s : subsets) ops.push_back(graphkit::apply_malicious(w, s));

  // Upper envelope over adversary placements, with the lexicographically first maximizer.
  auto envelope = [&](double lambda) {
    const auto values =
        parallel_map(ops.size(), [&](std::size_t k) { return analysis::error_closed_form(ops[k], lambda, d); });
    std::size_t arg = 0;
    for (std::size_t k = 1; k < values.size(); ++k)
      if (clearly_greater(values[k], values[arg])) arg = k;
    return std::pair{values[arg], arg};
  };

  const auto grid = analysis::lambda_grid(grid_size);
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double v = envelope(grid[k]).first;
    if (v < best_value) {
      best_value = v;
      best = k;
    }
  }
  const double lo = grid[best == 0 ? 0 : best - 1];
  const double hi = grid[std::min(best + 1, grid.size() - 1)];
  double lambda = golden_section_minimize([&](double l) { return envelope(l).first; }, lo, hi, tol);
  auto [value, arg] = envelope(lambda);
  if (value > best_value) {
    lambda = grid[best];
    std::tie(value, arg) = envelope(lambda);
  }
  return {lambda, subsets[arg], value};
}

void write_trace_csv(std::ostream& os, const RemovalTrace& trace) {
  const auto precision = os.precision();
  os << "step,edge_u,edge_v,worst_node,metric_value,n_edges\n" << std::setprecision(17);
  os << 0 << ",0,0," << trace.initial_worst_node << ',' << trace.initial_value << ',' << trace.initial.edge_count()
     << '\n';
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const auto& s = trace.steps[k];
    os << k + 1 << ',' << s.edge.u << ',' << s.edge.v << ',' << s.worst_node << ',' << s.metric_value << ','
       << s.n_edges << '\n';
  }
  os.precision(precision);
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  const auto precision = os.precision();
  os << "degree,avg_worst_error,avg_worst_contr_index,trials\n" << std::setprecision(17);
  for (const auto& r : rows)
    os << r.degree << ',' << r.avg_worst_error << ',' << r.avg_worst_contr_index << ',' << r.trials << '\n';
  os.precision(precision);
}

}  // namespace rescomp::netopt
