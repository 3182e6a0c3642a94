#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "rescomp/graphkit.hpp"

namespace rescomp::app {

using graphkit::WeightMatrix;

// Graph section of a config: {"type": "regular", "n", "degree", "seed"}, a named
// graph ({"type": "cycle" | "path" | "complete" | "star" | "petersen", "n"}) or
// {"type": "edge_list", "path"}. Regular graphs get uniform weights, others reweigh().
WeightMatrix load_graph(const nlohmann::json& spec, std::uint64_t seed, const std::filesystem::path& base_dir);

// FJ at lambda*, plain consensus and W-MSR run from the same corrupted priors.
struct CompareOptions {
  std::vector<int> malicious;
  double d = 10.0;
  int trials = 20;
  int horizon = 500;
  int f = -1;  // < 0 means f = |M|
  int grid_size = 400;
  std::uint64_t seed = 0;
};

struct CompareResult {
  double lambda_star = 0.0;
  int f = 0;
  // Per trial: regular consensus error after `horizon` steps.
  std::vector<double> consensus_error, fj_error, wmsr_error;
  // Per step, averaged over trials: error and network cost for each method.
  std::vector<std::array<double, 6>> mean_trajectory;
  double mean_consensus = 0.0, mean_fj = 0.0, mean_wmsr = 0.0;
};

CompareResult run_compare(const WeightMatrix& w, const CompareOptions& options);

// "step,consensus_error,consensus_cost,fj_error,fj_cost,wmsr_error,wmsr_cost"
void write_compare_trajectory_csv(std::ostream& os, const CompareResult& r);
// "trial,consensus_error,fj_error,wmsr_error"
void write_compare_trials_csv(std::ostream& os, const CompareResult& r);

// `size` distinct labels in 1..n drawn from seed, sorted.
std::vector<int> sample_nodes(int n, int size, std::uint64_t seed);

}  // namespace rescomp::app
