#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"

#include "rescomp/graphkit.hpp"

namespace rescomp::dynamics {

using graphkit::OperatedWeights;
using graphkit::WeightMatrix;

// Who is malicious, how noisy their priors are, and the prior variances.
struct Scenario {
  int n = 0;
  std::vector<int> malicious;  // 1-based labels
  double d = 0.0;              // variance of the additive noise on malicious priors
  Vector variances;            // per-node prior variance, user labels; empty means all 1
  std::uint64_t seed = 0;

  std::vector<int> regular() const;
  Vector prior_variances() const;  // variances or ones
  void validate() const;

  static Scenario unit(int n, std::vector<int> malicious, double d, std::uint64_t seed = 0);
};

nlohmann::json to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j, int n);

// L = lambda (I - (1 - lambda) W')^{-1}, stored in internal [R | M] order.
struct SteadyOperator {
  double lambda = 1.0;
  Matrix matrix;  // n x n, internal order
  Matrix l11;     // R x R
  Matrix l12;     // R x M
};

SteadyOperator steady_operator(const OperatedWeights& w, double lambda);

struct Trajectory {
  std::vector<Vector> states;  // states[k] = x(k), user labels; states[0] = initial
  bool converged = false;
  int steps = 0;
  Vector terminal;
};

struct SimulationOptions {
  int horizon = 100000;
  double tol = 1e-10;
};

// x_i(k+1) = lambda theta_i + (1 - lambda) sum_j W_ij x_j(k) on regular nodes;
// malicious coordinates stay at their prior.
Trajectory simulate_fj(const OperatedWeights& w, const Vector& priors, double lambda, SimulationOptions options = {});
// No malicious agents.
Trajectory simulate_fj(const WeightMatrix& w, const Vector& priors, double lambda, SimulationOptions options = {});

// Maximizer of -lambda (x_i - theta_i)^2 - (1 - lambda) sum_j W_ij (x_i - x_j)^2.
double best_response(int node, const Vector& x, const Vector& priors, double lambda, const WeightMatrix& w);

// W-MSR baseline: every regular node drops up to f neighbour values strictly above
// its own (largest first) and up to f strictly below (smallest first), then takes
// the plain mean of the retained neighbours and itself.
Trajectory simulate_wmsr(const WeightMatrix& w, const Vector& initial, std::span<const int> malicious, int f,
                         SimulationOptions options = {});

// sum_{i in R} (x_i - mean_{j in R} theta_j)^2
double regular_error(const Vector& x, std::span<const int> regular, const Vector& priors);

struct Estimate {
  double mean = 0.0;
  double standard_error = 0.0;
  int trials = 0;
};

// Samples N(0, sigma_i^2) priors and N(0, d) noise, maps the corrupted priors through
// the exact steady state and averages the regular consensus error.
Estimate monte_carlo_error(const OperatedWeights& w, double lambda, const Scenario& sc, int trials);

// Header "step,node_1,...,node_n".
void write_trajectory_csv(std::ostream& os, const Trajectory& t);

}  // namespace rescomp::dynamics
